"""CLI interface for randworlds."""

from __future__ import annotations

import hashlib
import json
from collections.abc import Iterator
from contextlib import ExitStack, contextmanager
from datetime import UTC, datetime
from pathlib import Path
from typing import Any

import click
from pydantic import BaseModel, ConfigDict, TypeAdapter
from pydantic import ValidationError as ConfigError
from rich.console import Console
from rich.markup import escape

from randworlds import __version__
from randworlds.api import DEFAULT_N, DEFAULT_SAMPLES, BeliefMethod, Reasoner
from randworlds.dsl import parse_kb, parse_query
from randworlds.errors import (
    KBParseError,
    KBValidationError,
    RandWorldsError,
    UnknownSymbolError,
    UnsatisfiableKBError,
)
from randworlds.formatters import ReportFormatter
from randworlds.irr import IrrConfig, sweep_prop1
from randworlds.logging_config import configure_logging, get_logger
from randworlds.models import KnowledgeBase, ToleranceSpec, to_fraction, validate_kb
from randworlds.naf import GammaFamily, NafConfig, OutcomeModel, naf_audit, sweep_prop2
from randworlds.worlds import DEFAULT_BUDGET

logger = get_logger()

EXIT_RUNTIME = 1
EXIT_PARSE = 2
EXIT_VALIDATION = 3
EXIT_UNSATISFIABLE = 4
EXIT_COUNTEREXAMPLE = 5

_GAMMA_FAMILY = TypeAdapter(GammaFamily)

# Module-level console for error messages (stderr to keep stdout clean for data)
_console = Console(stderr=True)


def _error(message: str) -> None:
    """Print an error message to stderr using Rich. Always shown, even with --quiet."""
    _console.print(f"[bold red]Error:[/bold red] {escape(message)}", highlight=False)


def _info(ctx: click.Context, message: str) -> None:
    if not ctx.obj.get("quiet"):
        _console.print(message, highlight=False)


class RunManifest(BaseModel):
    """What produced a report: command, hashed inputs, seed, schedule, version and time."""

    model_config = ConfigDict(frozen=True)

    command: str
    inputs: dict[str, str]
    seed: int | None = None
    schedule: str | None = None
    version: str = __version__
    timestamp: str | None = None


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _manifest(
    ctx: click.Context,
    command: str,
    inputs: list[Path],
    seed: int | None = None,
    schedule: str | None = None,
) -> dict[str, Any]:
    timestamp = None if ctx.obj.get("no_timestamp") else datetime.now(UTC).isoformat(timespec="seconds")
    manifest = RunManifest(
        command=command,
        inputs={str(p): _sha256(p) for p in inputs},
        seed=seed,
        schedule=schedule,
        timestamp=timestamp,
    )
    return manifest.model_dump(mode="json")


@contextmanager
def _exit_codes() -> Iterator[None]:
    """Map library errors to documented exit codes."""
    try:
        yield
    except KBParseError as e:
        for err in e.errors:
            expected = f" (expected {', '.join(err.expected)})" if err.expected else ""
            _error(f"line {err.span.line}, column {err.span.column}: {err.message}{expected}")
        raise click.exceptions.Exit(EXIT_PARSE) from e
    except (KBValidationError, UnknownSymbolError, ConfigError) as e:
        _error(str(e))
        raise click.exceptions.Exit(EXIT_VALIDATION) from e
    except json.JSONDecodeError as e:
        _error(f"Invalid JSON: {e}")
        raise click.exceptions.Exit(EXIT_PARSE) from e
    except UnsatisfiableKBError as e:
        _error(str(e))
        raise click.exceptions.Exit(EXIT_UNSATISFIABLE) from e
    except (RandWorldsError, ValueError, OSError) as e:
        _error(str(e))
        raise click.exceptions.Exit(EXIT_RUNTIME) from e


@contextmanager
def _formatter(ctx: click.Context, output: Path | None) -> Iterator[ReportFormatter]:
    with ExitStack() as stack:
        if output is None:
            yield ReportFormatter()
            return
        handle = stack.enter_context(output.open("w", encoding="utf-8", newline=""))
        yield ReportFormatter(file=handle)
    _info(ctx, f"Wrote {output}")


def _load_kb(path: Path) -> KnowledgeBase:
    logger.info(f"Reading {path}")
    return parse_kb(path.read_text(encoding="utf-8"))


def _parse_taus(text: str) -> ToleranceSpec:
    try:
        return ToleranceSpec(taus=tuple(to_fraction(t) for t in text.split(";")))
    except (ValueError, ConfigError) as e:
        raise click.BadParameter(f"Invalid tolerance '{text}'. Expected e.g. '0.1', '1/20' or '0.1;0.05'") from e


def _output_options(formats: list[str]) -> Any:
    def decorate(f: Any) -> Any:
        f = click.option(
            "--output",
            "-o",
            type=click.Path(dir_okay=False, writable=True, path_type=Path),
            default=None,
            help="Write the report to this file instead of stdout",
        )(f)
        return click.option(
            "--format",
            "--out",
            "output_format",
            type=click.Choice(formats, case_sensitive=False),
            default="text",
            help=f"Output format ({', '.join(formats)})",
        )(f)

    return decorate


_budget_option = click.option(
    "--budget",
    type=click.IntRange(min=1),
    default=DEFAULT_BUDGET,
    envvar="RANDWORLDS_BUDGET",
    show_default=True,
    help="Maximum DP transitions per exact count (env: RANDWORLDS_BUDGET)",
)
_workers_option = click.option(
    "--workers",
    type=click.IntRange(min=1),
    default=1,
    show_default=True,
    help="Worker processes for exact counting",
)
_seed_option = click.option("--seed", type=int, default=0, show_default=True, help="Seed for all randomness")


@click.group()
@click.version_option(version=__version__)
@click.option("--quiet", "-q", is_flag=True, help="Suppress informational messages")
@click.option("--verbose", "-v", is_flag=True, help="Enable verbose logging (INFO level - files, methods, schedule)")
@click.option("--debug", is_flag=True, help="Enable debug logging (requires --verbose, shows engine internals)")
@click.option("--no-timestamp", is_flag=True, help="Omit the timestamp from report manifests")
@click.pass_context
def main(ctx: click.Context, quiet: bool, verbose: bool, debug: bool, no_timestamp: bool) -> None:
    """randworlds - Degrees of belief by the random-worlds method"""
    if quiet and (verbose or debug):
        raise click.UsageError("--quiet cannot be used with --verbose or --debug")

    if debug and not verbose:
        raise click.UsageError("--debug requires --verbose")

    ctx.ensure_object(dict)
    ctx.obj["quiet"] = quiet
    ctx.obj["verbose"] = verbose
    ctx.obj["debug"] = debug
    ctx.obj["no_timestamp"] = no_timestamp

    configure_logging(verbose=verbose, debug=debug)


@main.command()
@click.argument("kb_path", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option(
    "--format",
    "output_format",
    type=click.Choice(["text", "json"], case_sensitive=False),
    default="text",
    help="Output format (text or json)",
)
def validate(kb_path: Path, output_format: str) -> None:
    """
    Parse and validate a knowledge base file.

    KB_PATH: A .rwkb file

    Exit status is 0 when the KB is valid, 2 on syntax errors and 3 on
    validation errors.

    Examples:

      randworlds validate data/mistress.rwkb

      randworlds validate my.rwkb --format json
    """
    formatter = ReportFormatter()
    with _exit_codes():
        try:
            kb = _load_kb(kb_path)
        except KBValidationError as e:
            formatter.format_validation(e.report, str(kb_path), output_format)
            raise click.exceptions.Exit(EXIT_VALIDATION) from e
        formatter.format_validation(validate_kb(kb), str(kb_path), output_format)


@main.command()
@click.argument("kb_path", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.argument("query")
@click.option(
    "--method",
    type=click.Choice([m.value for m in BeliefMethod], case_sensitive=False),
    default=BeliefMethod.AUTO.value,
    show_default=True,
    help="auto: direct inference, then exact counting (never sampling)",
)
@click.option("-N", "--N", "n", type=click.IntRange(min=1), default=DEFAULT_N, show_default=True, help="Domain size")
@click.option("--tau", default="1/10", show_default=True, help="Tolerance, or ';'-separated tolerance vector")
@click.option("--samples", type=click.IntRange(min=1), default=DEFAULT_SAMPLES, show_default=True, help="Monte Carlo samples")
@_seed_option
@_budget_option
@_workers_option
@_output_options(["text", "json", "csv"])
@click.pass_context
def belief(
    ctx: click.Context,
    kb_path: Path,
    query: str,
    method: str,
    n: int,
    tau: str,
    samples: int,
    seed: int,
    budget: int,
    workers: int,
    output_format: str,
    output: Path | None,
) -> None:
    """
    Compute the degree of belief in QUERY given the knowledge base.

    KB_PATH: A .rwkb file

    QUERY: Ground literals about one constant (e.g., "Murderer(Jane)")

    Examples:

      randworlds belief data/mistress.rwkb "Murderer(Jane)"

      randworlds belief data/mistress.rwkb "Murderer(Jane)" --method exact -N 8 --tau 0.1

      randworlds belief data/striking.rwkb "Copy(xd)" --method mc --samples 50000 --format json
    """
    taus = _parse_taus(tau)
    with _exit_codes():
        kb = _load_kb(kb_path)
        parsed = parse_query(query, kb)
        outcome = Reasoner(budget=budget, workers=workers, seed=seed).belief(
            kb, parsed, method=method, n=n, tau=taus, samples=samples
        )
        manifest = _manifest(ctx, "belief", [kb_path], seed=seed)
        with _formatter(ctx, output) as formatter:
            formatter.format_belief(outcome, output_format, manifest)


@main.command()
@click.argument("kb_path", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.argument("query")
@click.option(
    "--schedule",
    default=None,
    help="Comma-separated N:tau points, e.g. '10:0.2,20:0.1' (default: N in 10..80, tau = max(1/50, 2/N))",
)
@_budget_option
@_workers_option
@_output_options(["text", "json", "csv"])
@click.pass_context
def converge(
    ctx: click.Context,
    kb_path: Path,
    query: str,
    schedule: str | None,
    budget: int,
    workers: int,
    output_format: str,
    output: Path | None,
) -> None:
    """
    Track the exact belief in QUERY as N grows and tau shrinks.

    Points where the KB is unsatisfiable or the budget runs out are flagged
    and the schedule continues.

    Examples:

      randworlds converge data/mistress.rwkb "Murderer(Jane)"

      randworlds converge data/logic.rwkb "Copy(xd)" --schedule 5:0.2,10:0.1 --format csv
    """
    with _exit_codes():
        kb = _load_kb(kb_path)
        parsed = parse_query(query, kb)
        reasoner = Reasoner(budget=budget, workers=workers)
        report = reasoner.converge(kb, parsed, schedule)
        manifest = _manifest(ctx, "converge", [kb_path], schedule=schedule or "default")
        with _formatter(ctx, output) as formatter:
            formatter.format_convergence(report, output_format, manifest)


def _read_json(path: Path) -> dict[str, Any]:
    data = json.loads(path.read_text(encoding="utf-8"))
    if not isinstance(data, dict):
        raise ValueError(f"{path}: expected a JSON object")
    return data


@main.command()
@click.argument("kind", type=click.Choice(["mistress", "irr", "naf"], case_sensitive=False))
@click.argument("config_path", required=False, type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--check", is_flag=True, help="Exit with status 5 when any check finds a counterexample")
@click.option("--sweep", type=click.IntRange(min=1), default=None, help="Run a seeded random sweep of this many cases")
@_seed_option
@_output_options(["text", "json", "csv"])
@click.pass_context
def scenario(
    ctx: click.Context,
    kind: str,
    config_path: Path | None,
    check: bool,
    sweep: int | None,
    seed: int,
    output_format: str,
    output: Path | None,
) -> None:
    """
    Analyze one of the built-in scenarios.

    KIND: mistress, irr (inverse ratio rule) or naf (near-access-free models)

    CONFIG_PATH: JSON configuration (irr and naf). A naf file holding only an
    outcome model runs the audit alone.

    Examples:

      randworlds scenario mistress

      randworlds scenario irr data/irr_grid.json --check

      randworlds scenario irr --sweep 1000 --seed 7

      randworlds scenario naf data/naf_config.json --format json

      randworlds scenario naf data/naf_outcomes.json --format csv
    """
    inputs = [config_path] if config_path else []
    reasoner = Reasoner(seed=seed)
    with _exit_codes():
        if kind == "mistress":
            rows = reasoner.mistress()
            manifest = _manifest(ctx, "scenario mistress", inputs)
            with _formatter(ctx, output) as formatter:
                formatter.format_mistress(rows, output_format, manifest)
            return

        if kind == "irr":
            if sweep is not None:
                result: Any = sweep_prop1(sweep, seed)
                manifest = _manifest(ctx, "scenario irr --sweep", inputs, seed=seed)
                with _formatter(ctx, output) as formatter:
                    formatter.format_sweep(result, output_format, manifest)
            else:
                if config_path is None:
                    raise click.UsageError("scenario irr needs CONFIG_PATH or --sweep")
                result = reasoner.irr(IrrConfig.model_validate(_read_json(config_path)))
                manifest = _manifest(ctx, "scenario irr", inputs)
                with _formatter(ctx, output) as formatter:
                    formatter.format_irr(result, output_format, manifest)
        else:
            data = _read_json(config_path) if config_path else {}
            spec = _GAMMA_FAMILY.validate_python(data.get("gamma_spec", GammaFamily.EXP))
            if sweep is not None:
                result = sweep_prop2(sweep, seed, spec)
                manifest = _manifest(ctx, "scenario naf --sweep", inputs, seed=seed)
                with _formatter(ctx, output) as formatter:
                    formatter.format_prop2(result, output_format, manifest)
            elif "outcomes" in data:
                result = naf_audit(OutcomeModel.model_validate(data), spec)
                manifest = _manifest(ctx, "scenario naf", inputs)
                with _formatter(ctx, output) as formatter:
                    formatter.format_audit(result, output_format, manifest)
            else:
                if config_path is None:
                    raise click.UsageError("scenario naf needs CONFIG_PATH or --sweep")
                model_data = data.pop("outcome_model", None)
                model = OutcomeModel.model_validate(model_data) if model_data is not None else None
                result = reasoner.naf(NafConfig.model_validate(data), model)
                manifest = _manifest(ctx, "scenario naf", inputs)
                with _formatter(ctx, output) as formatter:
                    formatter.format_naf(result, output_format, manifest)

        if check and not result.ok:
            _error("Counterexample found")
            raise click.exceptions.Exit(EXIT_COUNTEREXAMPLE)


if __name__ == "__main__":
    main()
