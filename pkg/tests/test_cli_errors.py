"""
CLI error handling and exit status tests.

Tests cover:
- Flag validation and conflicts
- Exit codes for syntax, validation, unsatisfiability and runtime errors
- Option parsing failures
- Scenario configuration errors
- --check on counterexamples
"""

import json
from fractions import Fraction
from unittest.mock import patch

import pytest
from click.testing import CliRunner

from randworlds.cli import (
    EXIT_COUNTEREXAMPLE,
    EXIT_PARSE,
    EXIT_RUNTIME,
    EXIT_UNSATISFIABLE,
    EXIT_VALIDATION,
    _error,
    main,
)
from randworlds.irr import EvidenceGrid, IrrConfig, Prop1Sweep, check_prop1

BARE_KB = "pred Access; pred Copy; const xd; rule forall x: Copy(x) => Access(x);\n"


@pytest.fixture
def runner() -> CliRunner:
    return CliRunner(env={"COLUMNS": "200"})


@pytest.fixture
def write_file(tmp_path):
    """Write text to a file under tmp_path and return its path as a string."""

    def write(name: str, text: str) -> str:
        path = tmp_path / name
        path.write_text(text)
        return str(path)

    return write


class TestMainCommand:
    """Tests for main command with flags."""

    def test_quiet_and_verbose_conflict(self, runner, data_dir):
        """Test that --quiet and --verbose cannot be used together."""
        result = runner.invoke(main, ["--quiet", "--verbose", "validate", str(data_dir / "logic.rwkb")])

        assert result.exit_code == 2
        assert "cannot be used with" in result.output

    def test_quiet_and_debug_conflict(self, runner, data_dir):
        """Test that --quiet and --debug cannot be used together."""
        result = runner.invoke(main, ["--quiet", "--debug", "validate", str(data_dir / "logic.rwkb")])

        assert result.exit_code == 2
        assert "cannot be used with" in result.output

    def test_debug_requires_verbose(self, runner, data_dir):
        """Test that --debug requires --verbose."""
        result = runner.invoke(main, ["--debug", "validate", str(data_dir / "logic.rwkb")])

        assert result.exit_code == 2
        assert "--debug requires --verbose" in result.output

    def test_verbose_with_debug(self, runner, data_dir):
        """Test that --verbose --debug runs normally."""
        result = runner.invoke(main, ["--verbose", "--debug", "validate", str(data_dir / "logic.rwkb")])

        assert result.exit_code == 0
        assert "valid" in result.output


class TestKnowledgeBaseErrors:
    """Tests for syntax and validation failures."""

    def test_syntax_error_position(self, runner, write_file):
        """A missing semicolon is reported at the next statement with exit 2."""
        path = write_file("broken.rwkb", "pred A\nconst c;\n")
        result = runner.invoke(main, ["validate", path])

        assert result.exit_code == EXIT_PARSE
        assert "Error:" in result.output
        assert "line 2, column 1" in result.output
        assert "SEMICOLON" in result.output

    def test_every_broken_statement_reported(self, runner, write_file):
        path = write_file("broken.rwkb", "pred A;\npred ;\nconst ;\nconst c;\n")
        result = runner.invoke(main, ["validate", path])

        assert result.exit_code == EXIT_PARSE
        assert "line 2," in result.output
        assert "line 3," in result.output

    def test_validation_table(self, runner, write_file):
        """Undeclared symbols are listed with their kind and exit 3."""
        path = write_file("invalid.rwkb", "pred A;\nconst c;\nfact B(d);\n")
        result = runner.invoke(main, ["validate", path])

        assert result.exit_code == EXIT_VALIDATION
        assert "undeclared_predicate" in result.output
        assert "undeclared_constant" in result.output
        assert "fact:0" in result.output

    def test_validation_json(self, runner, write_file):
        """JSON validation output stays parseable on failure."""
        path = write_file("invalid.rwkb", "pred A;\nstat ||A(x)||x ~= 3/2;\n")
        result = runner.invoke(main, ["validate", path, "--format", "json"])

        assert result.exit_code == EXIT_VALIDATION
        data = json.loads(result.output)
        assert data["ok"] is False
        (violation,) = [v for v in data["violations"] if v["kind"] == "value_out_of_range"]
        assert violation["span"]["line"] == 2

    def test_invalid_kb_in_belief(self, runner, write_file):
        path = write_file("invalid.rwkb", "pred A; const c; fact A(c); fact not A(c);\n")
        result = runner.invoke(main, ["belief", path, "A(c)"])

        assert result.exit_code == EXIT_VALIDATION
        assert "Error:" in result.output

    def test_missing_file(self, runner):
        """Click rejects paths that do not exist."""
        result = runner.invoke(main, ["validate", "no-such-file.rwkb"])

        assert result.exit_code == 2
        assert "does not exist" in result.output


class TestBeliefErrors:
    """Tests for belief command failures."""

    def test_unknown_predicate_in_query(self, runner, data_dir):
        result = runner.invoke(main, ["belief", str(data_dir / "mistress.rwkb"), "Guilty(Jane)"])

        assert result.exit_code == EXIT_VALIDATION
        assert "Unknown predicate" in result.output

    def test_query_syntax_error(self, runner, data_dir):
        result = runner.invoke(main, ["belief", str(data_dir / "mistress.rwkb"), "Murderer(Jane"])

        assert result.exit_code == EXIT_PARSE
        assert "Error:" in result.output

    def test_unsatisfiable(self, runner, data_dir):
        """No world of size 2 fits a 3/5 proportion within 1/100."""
        result = runner.invoke(
            main,
            ["belief", str(data_dir / "mistress.rwkb"), "Murderer(Jane)", "--method", "exact", "-N", "2", "--tau", "0.01"],
        )

        assert result.exit_code == EXIT_UNSATISFIABLE
        assert "N=2" in result.output

    def test_zero_acceptance(self, runner, data_dir):
        result = runner.invoke(
            main,
            [
                "belief",
                str(data_dir / "mistress.rwkb"),
                "Murderer(Jane)",
                "--method",
                "mc",
                "-N",
                "2",
                "--tau",
                "0.01",
                "--samples",
                "500",
            ],
        )

        assert result.exit_code == EXIT_RUNTIME
        assert "Error:" in result.output

    def test_direct_not_applicable(self, runner, write_file):
        """--method direct never falls back to counting."""
        path = write_file("bare.rwkb", BARE_KB)
        result = runner.invoke(main, ["belief", path, "Copy(xd)", "--method", "direct"])

        assert result.exit_code == EXIT_RUNTIME
        assert "Error:" in result.output

    def test_budget_option(self, runner, data_dir):
        result = runner.invoke(
            main, ["belief", str(data_dir / "mistress.rwkb"), "Murderer(Jane)", "--method", "exact", "--budget", "1"]
        )

        assert result.exit_code == EXIT_RUNTIME
        assert "RANDWORLDS_BUDGET" in result.output

    def test_budget_from_environment(self, runner, data_dir):
        """RANDWORLDS_BUDGET sets the default budget."""
        result = runner.invoke(
            main,
            ["belief", str(data_dir / "mistress.rwkb"), "Murderer(Jane)", "--method", "exact"],
            env={"RANDWORLDS_BUDGET": "1"},
        )

        assert result.exit_code == EXIT_RUNTIME

    @pytest.mark.parametrize("tau", ["abc", "0", "-0.1", "0.1;x"])
    def test_invalid_tolerance(self, runner, data_dir, tau):
        result = runner.invoke(main, ["belief", str(data_dir / "mistress.rwkb"), "Murderer(Jane)", "--tau", tau])

        assert result.exit_code == 2
        assert "Invalid tolerance" in result.output

    def test_invalid_workers(self, runner, data_dir):
        result = runner.invoke(main, ["belief", str(data_dir / "mistress.rwkb"), "Murderer(Jane)", "--workers", "0"])

        assert result.exit_code == 2

    def test_invalid_method(self, runner, data_dir):
        result = runner.invoke(main, ["belief", str(data_dir / "mistress.rwkb"), "Murderer(Jane)", "--method", "guess"])

        assert result.exit_code == 2


class TestConvergeErrors:
    def test_malformed_schedule(self, runner, data_dir):
        result = runner.invoke(main, ["converge", str(data_dir / "mistress.rwkb"), "Murderer(Jane)", "--schedule", "10"])

        assert result.exit_code == EXIT_RUNTIME
        assert "Invalid schedule point" in result.output

    def test_budget_refusals_do_not_fail(self, runner, data_dir):
        """Points over budget are flagged; the command still succeeds."""
        result = runner.invoke(
            main,
            ["converge", str(data_dir / "mistress.rwkb"), "Murderer(Jane)", "--schedule", "4:0.2", "--budget", "1"],
        )

        assert result.exit_code == 0
        assert "budget" in result.output


class TestScenarioErrors:
    """Tests for scenario configuration failures."""

    @pytest.mark.parametrize("kind", ["irr", "naf"])
    def test_config_required(self, runner, kind):
        result = runner.invoke(main, ["scenario", kind])

        assert result.exit_code == 2
        assert "needs CONFIG_PATH" in result.output

    def test_invalid_json(self, runner, write_file):
        path = write_file("grid.json", "{not json")
        result = runner.invoke(main, ["scenario", "irr", path])

        assert result.exit_code == EXIT_PARSE
        assert "Invalid JSON" in result.output

    def test_json_must_be_object(self, runner, write_file):
        path = write_file("grid.json", "[1, 2]")
        result = runner.invoke(main, ["scenario", "irr", path])

        assert result.exit_code == EXIT_RUNTIME
        assert "expected a JSON object" in result.output

    def test_non_monotone_grid(self, runner, write_file):
        """Grids whose beliefs fall with stronger inputs are rejected with exit 3."""
        path = write_file("grid.json", json.dumps({"alphas": ["1/2", "1/5"], "betas": [["1/2"], ["1/2"]]}))
        result = runner.invoke(main, ["scenario", "irr", path])

        assert result.exit_code == EXIT_VALIDATION

    @pytest.mark.parametrize("extra", [[], ["--sweep", "5"]])
    def test_unknown_gamma_family(self, runner, write_file, extra):
        """An unknown gamma family is a config violation, on every naf path."""
        path = write_file("naf.json", json.dumps({"epsilon": 1, "delta": "1/2", "gamma_spec": "cubic"}))
        result = runner.invoke(main, ["scenario", "naf", path, *extra])

        assert result.exit_code == EXIT_VALIDATION
        assert "linear" in result.output

    def test_unknown_gamma_family_in_audit(self, runner, data_dir, write_file):
        model = json.loads((data_dir / "naf_outcomes.json").read_text())
        path = write_file("outcomes.json", json.dumps({**model, "gamma_spec": "cubic"}))
        result = runner.invoke(main, ["scenario", "naf", path])

        assert result.exit_code == EXIT_VALIDATION

    def test_epsilon_past_exp_range(self, runner, write_file):
        config = {"epsilon": 800, "delta": "1/2", "gamma_spec": "exp", "alpha_primes": ["1/2"]}
        path = write_file("naf.json", json.dumps(config))
        result = runner.invoke(main, ["scenario", "naf", path])

        assert result.exit_code == EXIT_VALIDATION
        assert "at most 709" in result.output

    def test_unbounded_outcome_ratio(self, runner, write_file):
        model = {
            "outcomes": ["z1", "z2"],
            "p_with_access": {"z1": 1, "z2": 0},
            "p_without_access": {"z1": 0, "z2": 1},
            "similarity_level": {"z1": 1, "z2": 0},
            "prior_access": "1/2",
        }
        path = write_file("outcomes.json", json.dumps(model))
        result = runner.invoke(main, ["scenario", "naf", path])

        assert result.exit_code == EXIT_RUNTIME
        assert "Error:" in result.output


class TestCheckFlag:
    """--check turns counterexamples into exit status 5."""

    @pytest.fixture
    def failing_sweep(self, data_dir) -> Prop1Sweep:
        grid = IrrConfig.model_validate(json.loads((data_dir / "irr_grid.json").read_text()))
        betas = EvidenceGrid.model_construct(((Fraction(4, 5), Fraction(1, 5)),) * 3)
        report = check_prop1(grid.model_copy(update={"betas": betas}))
        return Prop1Sweep(count=1, seed=0, failures=(report,))

    def test_counterexample_exit_code(self, runner, failing_sweep):
        with patch("randworlds.cli.sweep_prop1", return_value=failing_sweep):
            result = runner.invoke(main, ["scenario", "irr", "--sweep", "1", "--check"])

        assert result.exit_code == EXIT_COUNTEREXAMPLE
        assert "Check failed" in result.output
        assert "Counterexample found" in result.output

    def test_without_check_reports_only(self, runner, failing_sweep):
        with patch("randworlds.cli.sweep_prop1", return_value=failing_sweep):
            result = runner.invoke(main, ["scenario", "irr", "--sweep", "1"])

        assert result.exit_code == 0
        assert "Check failed" in result.output


class TestErrorHelper:
    def test_error_writes_to_stderr(self, capsys):
        """Test that _error prints a marked message to stderr."""
        _error("something broke")

        captured = capsys.readouterr()
        assert "Error:" in captured.err
        assert "something broke" in captured.err
        assert captured.out == ""
