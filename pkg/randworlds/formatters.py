"""Output formatters for belief reports (Rich tables, JSON and CSV)."""

from __future__ import annotations

import csv
import json
import sys
from collections.abc import Sequence
from typing import TYPE_CHECKING, Any, TextIO

from rich.console import Console
from rich.table import Table

from randworlds.convergence import ConvergenceAnalyzer

if TYPE_CHECKING:
    from randworlds.api import BeliefOutcome, IrrAnalysis, MistressRow, NafAnalysis
    from randworlds.convergence import ConvergenceReport
    from randworlds.inference import DirectInferenceResult
    from randworlds.irr import Prop1Sweep
    from randworlds.models import ValidationReport
    from randworlds.naf import AuditReport, Prop2Report

BELIEF_CSV_COLUMNS = [
    "query",
    "method",
    "N",
    "tau",
    "belief_num",
    "belief_den",
    "belief_decimal",
    "lower",
    "upper",
    "half_width",
]
MISTRESS_CSV_COLUMNS = ["variant", "belief", "lower", "upper", "justification", "reference_class"]
IRR_CSV_COLUMNS = ["i", "j", "alpha", "beta", "belief", "resolved", "exceeds_threshold", "min_sim", "min_ev", "ok"]
SWEEP_CSV_COLUMNS = ["k", "n", "m", "threshold", "counterexamples", "ok"]
PROP2_CSV_COLUMNS = ["epsilon", "delta", "gamma", "ok"]
NAF_CSV_COLUMNS = ["level", "alpha_prime", "gamma", "bound", "access_lower", "access_upper", "copy_lower", "copy_upper"]
AUDIT_CSV_COLUMNS = [
    "outcome",
    "level",
    "p_with_access",
    "p_without_access",
    "posterior",
    "ceiling",
    "level_within_ceiling",
]


def _interval(result: DirectInferenceResult) -> str:
    if result.is_point:
        return str(result.lower)
    return f"[{result.lower}, {result.upper}]"


def _flag(value: bool) -> str:
    return "true" if value else "false"


def _optional(value: object | None) -> str:
    return "" if value is None else str(value)


class ReportFormatter:
    """Formatter for reports; writes to ``file`` or stdout."""

    def __init__(self, file: TextIO | None = None) -> None:
        self._file = file
        # Wide console so long formulas never wrap
        self.console: Console = Console(width=500, file=file)

    def _write(self, text: str) -> None:
        # Plain write, not console.print: Rich markup processing would corrupt JSON and CSV
        (self._file or sys.stdout).write(text + "\n")

    def _print_json(self, data: dict[str, Any], manifest: dict[str, Any] | None = None) -> None:
        if manifest is not None:
            data = {**data, "manifest": manifest}
        self._write(json.dumps(data, indent=2, sort_keys=True, ensure_ascii=False))

    def _print_csv(self, columns: Sequence[str], rows: list[dict[str, str]]) -> None:
        out = self._file or sys.stdout
        writer = csv.DictWriter(out, fieldnames=list(columns), lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)

    def format_validation(self, report: ValidationReport, source: str, output_format: str = "text") -> None:
        """
        Format and print a validation report.

        Args:
            report: ValidationReport from validate_kb
            source: File the KB came from
            output_format: 'text' or 'json'
        """
        if output_format == "json":
            self._print_json({"source": source, **report.to_dict()})
            return
        if report.ok:
            self.console.print(f"[green]{source}: valid[/green]")
            return
        table = Table(title=f"{source}: {len(report.violations)} violation(s)", header_style="bold red", box=None)
        table.add_column("Kind", style="yellow", no_wrap=True)
        table.add_column("Location", style="cyan", no_wrap=True)
        table.add_column("Line", style="dim", no_wrap=True)
        table.add_column("Message", no_wrap=True)
        for v in report.violations:
            line = f"{v.span.line}:{v.span.column}" if v.span else "-"
            table.add_row(v.kind.value, v.location or "-", line, v.message)
        self.console.print(table)

    def format_belief(
        self,
        outcome: BeliefOutcome,
        output_format: str = "text",
        manifest: dict[str, Any] | None = None,
    ) -> None:
        """
        Format and print a degree of belief.

        Args:
            outcome: BeliefOutcome from Reasoner.belief
            output_format: 'text', 'json' or 'csv'
            manifest: Run manifest embedded in JSON output
        """
        if output_format == "json":
            self._print_json(outcome.to_dict(), manifest)
        elif output_format == "csv":
            self._print_csv(BELIEF_CSV_COLUMNS, [self._belief_row(outcome)])
        else:
            self._print_belief_table(outcome)

    @staticmethod
    def _belief_row(outcome: BeliefOutcome) -> dict[str, str]:
        estimate = outcome.estimate
        lower = upper = estimate.value
        if outcome.direct is not None:
            lower, upper = outcome.direct.interval
        return {
            "query": outcome.query,
            "method": estimate.method.value,
            "N": str(estimate.n) if estimate.n is not None else "",
            "tau": ";".join(str(t) for t in estimate.taus),
            "belief_num": str(estimate.value.numerator),
            "belief_den": str(estimate.value.denominator),
            "belief_decimal": f"{estimate.decimal:.10f}",
            "lower": str(lower),
            "upper": str(upper),
            "half_width": f"{estimate.half_width:.6f}" if estimate.half_width is not None else "",
        }

    def _print_belief_table(self, outcome: BeliefOutcome) -> None:
        estimate = outcome.estimate
        table = Table(show_header=True, header_style="bold magenta", box=None)
        table.add_column("Field", style="cyan", width=20, no_wrap=True)
        table.add_column("Value", style="white", no_wrap=True)
        table.add_row("Query", outcome.query)
        table.add_row("Belief", f"{estimate.value} [dim](~{estimate.decimal:.6f})[/dim]")
        table.add_row("Method", estimate.method.value)
        if outcome.direct is not None:
            table.add_row("Interval", _interval(outcome.direct))
            table.add_row("Justification", outcome.direct.justification.value)
            if outcome.direct.reference_class:
                table.add_row("Reference class", outcome.direct.reference_class)
        if estimate.n is not None:
            table.add_row("N", str(estimate.n))
            table.add_row("Tolerance", ";".join(str(t) for t in estimate.taus))
        if estimate.model_count is not None:
            table.add_row("Worlds (KB)", f"{len(str(estimate.model_count))}-digit count")
        if estimate.half_width is not None:
            table.add_row("95% half-width", f"{estimate.half_width:.6f}")
            table.add_row("Acceptance", f"{estimate.accepted:,} of {estimate.samples:,}")
        if outcome.fallback_reason:
            table.add_row("Fallback", outcome.fallback_reason)
        self.console.print(table)

    def format_convergence(
        self,
        report: ConvergenceReport,
        output_format: str = "text",
        manifest: dict[str, Any] | None = None,
    ) -> None:
        """Format and print a convergence report ('text', 'json' or 'csv')."""
        if output_format == "json":
            self._print_json(report.to_dict(), manifest)
            return
        rows = ConvergenceAnalyzer.csv_rows(report)
        if output_format == "csv":
            self._print_csv(ConvergenceAnalyzer.CSV_COLUMNS, rows)
            return

        table = Table(title=f"Convergence of {report.query}", header_style="bold cyan", box=None)
        table.add_column("N", style="dim", justify="right", no_wrap=True)
        table.add_column("tau", style="yellow", no_wrap=True)
        table.add_column("Belief", style="green", no_wrap=True)
        table.add_column("Decimal", justify="right", no_wrap=True)
        table.add_column("Digits", style="dim", justify="right", no_wrap=True)
        table.add_column("Status", no_wrap=True)
        for row in rows:
            value = f"{row['belief_num']}/{row['belief_den']}" if row["belief_num"] else "-"
            status = row["status"] if row["status"] == "ok" else f"[red]{row['status']}[/red]"
            table.add_row(
                row["N"], row["tau"], value, row["belief_decimal"] or "-", row["model_count_digits"] or "-", status
            )
        self.console.print(table)
        if report.limit_estimate is not None:
            self.console.print(f"\nLast value: {report.limit_estimate} (~{float(report.limit_estimate):.6f})")
        if report.final_delta is not None:
            self.console.print(f"Final delta: {float(report.final_delta):+.6f}")
        self.console.print(f"Monotone: {report.monotone}   Shrinking deltas: {report.cauchy}")
        self.console.print(f"[dim]{report.note}[/dim]")

    def format_mistress(
        self,
        rows: list[MistressRow],
        output_format: str = "text",
        manifest: dict[str, Any] | None = None,
    ) -> None:
        if output_format == "json":
            self._print_json(
                {"variants": [{"variant": r.variant.value, **r.result.to_dict()} for r in rows]}, manifest
            )
            return
        if output_format == "csv":
            self._print_csv(
                MISTRESS_CSV_COLUMNS,
                [
                    {
                        "variant": r.variant.value,
                        "belief": str(r.result.estimate),
                        "lower": str(r.result.lower),
                        "upper": str(r.result.upper),
                        "justification": r.result.justification.value,
                        "reference_class": _optional(r.result.reference_class),
                    }
                    for r in rows
                ],
            )
            return
        table = Table(title="Murderer(Jane)", header_style="bold cyan", box=None)
        table.add_column("Variant", style="cyan", no_wrap=True)
        table.add_column("Belief", style="green", no_wrap=True)
        table.add_column("Interval", no_wrap=True)
        table.add_column("Reference class", style="magenta", no_wrap=True)
        for r in rows:
            table.add_row(r.variant.value, str(r.result.estimate), _interval(r.result), r.result.reference_class or "-")
        self.console.print(table)

    def format_irr(
        self,
        analysis: IrrAnalysis,
        output_format: str = "text",
        manifest: dict[str, Any] | None = None,
    ) -> None:
        """Print the least-index tables, per-case beliefs and the inverse ratio verdict."""
        if output_format == "json":
            self._print_json(analysis.to_dict(), manifest)
            return
        report = analysis.report
        config = report.config
        if output_format == "csv":
            self._print_csv(IRR_CSV_COLUMNS, self._irr_rows(analysis))
            return
        self.console.print(f"\n[bold cyan]=== Inverse ratio rule (lambda = {config.threshold}) ===[/bold cyan]\n")

        cases = Table(show_header=True, header_style="bold cyan", box=None)
        cases.add_column("Level i", justify="right", no_wrap=True)
        for j in range(1, config.m + 1):
            cases.add_column(f"EA_{j}", justify="right", no_wrap=True)
        by_index = {(c.i, c.j): c for c in analysis.cases}
        for i in range(1, config.n + 1):
            cells = []
            for j in range(1, config.m + 1):
                case = by_index[(i, j)]
                style = "green" if case.exceeds_threshold else "dim"
                cells.append(f"[{style}]{case.belief}[/{style}]")
            cases.add_row(str(i), *cells)
        self.console.print(cases)

        self.console.print("\nLeast similarity level per evidence category (n+1: none)")
        for j, index in report.min_sim.items():
            self.console.print(f"  j={j}: {index}")
        self.console.print("Least evidence category per similarity level (m+1: none)")
        for i, index in report.min_ev.items():
            self.console.print(f"  i={i}: {index}")
        self._print_verdict(analysis.ok, f"{len(report.counterexamples)} counterexample(s)")

    @staticmethod
    def _irr_rows(analysis: IrrAnalysis) -> list[dict[str, str]]:
        report = analysis.report
        config = report.config
        return [
            {
                "i": str(case.i),
                "j": str(case.j),
                "alpha": str(config.alphas[case.i - 1]),
                "beta": str(config.betas[case.i - 1][case.j - 1]),
                "belief": str(case.belief),
                "resolved": str(case.resolved),
                "exceeds_threshold": _flag(case.exceeds_threshold),
                "min_sim": str(report.min_sim[case.j]),
                "min_ev": str(report.min_ev[case.i]),
                "ok": _flag(report.ok and case.belief == case.resolved),
            }
            for case in analysis.cases
        ]

    def format_sweep(self, sweep: Prop1Sweep, output_format: str = "text", manifest: dict[str, Any] | None = None) -> None:
        if output_format == "json":
            self._print_json(sweep.to_dict(), manifest)
            return
        if output_format == "csv":
            rows = [
                {
                    "k": str(case.k),
                    "n": str(case.n),
                    "m": str(case.m),
                    "threshold": str(case.threshold),
                    "counterexamples": str(case.counterexamples),
                    "ok": _flag(case.ok),
                }
                for case in sweep.cases
            ]
            self._print_csv(SWEEP_CSV_COLUMNS, rows)
            return
        self.console.print(f"Checked {sweep.count} random configurations (seed {sweep.seed})")
        self._print_verdict(sweep.ok, f"{len(sweep.failures)} failing configuration(s)")

    def format_prop2(self, report: Prop2Report, output_format: str = "text", manifest: dict[str, Any] | None = None) -> None:
        if output_format == "json":
            self._print_json(report.to_dict(), manifest)
            return
        if output_format == "csv":
            failing = {(v.epsilon, v.delta) for v in report.violations}
            rows = [
                {
                    "epsilon": str(p.epsilon),
                    "delta": str(p.delta),
                    "gamma": str(p.gamma),
                    "ok": _flag((p.epsilon, p.delta) not in failing),
                }
                for p in report.grid
            ]
            self._print_csv(PROP2_CSV_COLUMNS, rows)
            return
        self._print_prop2(report)

    def _print_prop2(self, report: Prop2Report) -> None:
        self.console.print(f"\nGamma checks ({report.gamma_spec.value}): {report.points} grid points")
        equalities = ", ".join(str(d) for d in report.equality_deltas) or "none"
        self.console.print(f"  Gamma == delta at delta in {{{equalities}}}")
        for v in report.violations[:20]:
            self.console.print(f"  [red]{v.kind}[/red] at epsilon={v.epsilon}, delta={v.delta}: {v.detail}")
        self._print_verdict(report.ok, f"{len(report.violations)} violation(s)")

    def format_naf(self, analysis: NafAnalysis, output_format: str = "text", manifest: dict[str, Any] | None = None) -> None:
        """Print copying bounds per level, the Gamma checks and the audit when present."""
        if output_format == "json":
            self._print_json(analysis.to_dict(), manifest)
            return
        config = analysis.config
        if output_format == "csv":
            rows = [
                {
                    "level": str(level.level),
                    "alpha_prime": str(config.alpha_primes[level.level - 1]),
                    "gamma": str(analysis.gamma),
                    "bound": str(level.bound),
                    "access_lower": str(level.access_interval[0]),
                    "access_upper": str(level.access_interval[1]),
                    "copy_lower": str(level.copy_interval[0]),
                    "copy_upper": str(level.copy_interval[1]),
                }
                for level in analysis.levels
            ]
            self._print_csv(NAF_CSV_COLUMNS, rows)
            return
        self.console.print(
            f"\n[bold cyan]=== NAF bounds (epsilon = {config.epsilon}, delta = {config.delta}, "
            f"gamma = {config.gamma_spec.value}) ===[/bold cyan]\n"
        )
        self.console.print(f"Gamma(epsilon, delta) = {analysis.gamma} (~{float(analysis.gamma):.6f})\n")
        table = Table(show_header=True, header_style="bold cyan", box=None)
        table.add_column("Level", justify="right", no_wrap=True)
        table.add_column("alpha'", no_wrap=True)
        table.add_column("Copy bound", style="green", no_wrap=True)
        table.add_column("Access interval", no_wrap=True)
        table.add_column("Copy interval", no_wrap=True)
        for level in analysis.levels:
            table.add_row(
                str(level.level),
                str(config.alpha_primes[level.level - 1]),
                f"{level.bound} (~{float(level.bound):.4f})",
                f"[{level.access_interval[0]}, {level.access_interval[1]}]",
                f"[{level.copy_interval[0]}, {level.copy_interval[1]}]",
            )
        self.console.print(table)
        self._print_prop2(analysis.prop2)
        if analysis.audit is not None:
            self._print_audit(analysis.audit)

    def format_audit(self, report: AuditReport, output_format: str = "text", manifest: dict[str, Any] | None = None) -> None:
        if output_format == "json":
            self._print_json(report.to_dict(), manifest)
            return
        if output_format == "csv":
            within = {level.level: level.within_ceiling for level in report.levels}
            rows = [
                {
                    "outcome": o.outcome,
                    "level": str(o.level),
                    "p_with_access": str(o.p_with_access),
                    "p_without_access": str(o.p_without_access),
                    "posterior": _optional(o.posterior),
                    "ceiling": str(report.ceiling),
                    "level_within_ceiling": _flag(within[o.level]),
                }
                for o in report.outcomes
            ]
            self._print_csv(AUDIT_CSV_COLUMNS, rows)
            return
        self._print_audit(report)

    def _print_audit(self, report: AuditReport) -> None:
        self.console.print("\n[bold cyan]=== Outcome model audit ===[/bold cyan]\n")
        self.console.print(f"gamma* = {report.gamma_star}   epsilon* ~ {float(report.epsilon_star):.6f}")
        self.console.print(f"Posterior ceiling at prior {report.prior_access}: {report.ceiling}")
        outcome = "unbounded" if report.outcome_gamma is None else str(report.outcome_gamma)
        self.console.print(f"Largest per-outcome ratio: {outcome}\n")
        table = Table(show_header=True, header_style="bold cyan", box=None)
        table.add_column("Level", justify="right", no_wrap=True)
        table.add_column("P(s | access)", no_wrap=True)
        table.add_column("P(s | no access)", no_wrap=True)
        table.add_column("Ratio", no_wrap=True)
        table.add_column("Posterior", style="green", no_wrap=True)
        table.add_column("Within", justify="center", no_wrap=True)
        for level in report.levels:
            table.add_row(
                str(level.level),
                str(level.p_with_access),
                str(level.p_without_access),
                str(level.ratio) if level.ratio is not None else "-",
                str(level.posterior) if level.posterior is not None else "-",
                "✓" if level.within_ceiling else "[red]✗[/red]",
            )
        self.console.print(table)
        self._print_verdict(report.ok, "posterior above the ceiling")

    def _print_verdict(self, ok: bool, failure: str) -> None:
        if ok:
            self.console.print("\n[green]All checks pass[/green]")
        else:
            self.console.print(f"\n[red]Check failed: {failure}[/red]")
