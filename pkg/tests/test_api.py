"""Tests for the high-level Reasoner API."""

import json
from fractions import Fraction

import pytest

from randworlds import Reasoner, parse_kb, parse_query
from randworlds.api import BeliefMethod, IrrAnalysis
from randworlds.errors import IterationBudgetExceededError, NotApplicableError, UnsatisfiableKBError
from randworlds.inference import Justification
from randworlds.irr import IrrConfig
from randworlds.naf import NafConfig, OutcomeModel
from randworlds.scenarios import MistressVariant, build_logic_kb, build_mistress_kb, build_striking_kb
from randworlds.worlds import Method

BARE_KB = "pred Access; pred Copy; const xd; rule forall x: Copy(x) => Access(x);"


@pytest.fixture
def reasoner() -> Reasoner:
    return Reasoner()


class TestBelief:
    """Tests for Reasoner.belief."""

    def test_auto_uses_direct_inference(self, reasoner, copy_query):
        outcome = reasoner.belief(build_striking_kb("9/10", "4/5"), copy_query)
        assert outcome.estimate.method is Method.DIRECT
        assert outcome.estimate.value == Fraction(18, 25)
        assert outcome.direct.justification is Justification.PRODUCT
        assert outcome.fallback_reason is None

    def test_auto_logical_zero(self, reasoner, copy_query):
        outcome = reasoner.belief(build_logic_kb(), copy_query)
        assert outcome.estimate.value == 0
        assert outcome.direct.justification is Justification.LOGICAL_ZERO

    def test_auto_falls_back_to_exact(self, reasoner, copy_query):
        """A KB without statistics is counted at the requested N."""
        kb = parse_kb(BARE_KB)
        outcome = reasoner.belief(kb, copy_query, n=3)
        assert outcome.requested is BeliefMethod.AUTO
        assert outcome.estimate.method is Method.EXACT
        assert outcome.estimate.value == Fraction(1, 3)
        assert outcome.estimate.model_count == 27
        assert outcome.fallback_reason
        assert outcome.direct is None

    def test_direct_raises(self, reasoner, copy_query):
        with pytest.raises(NotApplicableError):
            reasoner.belief(parse_kb(BARE_KB), copy_query, method="direct")

    def test_exact_ignores_closed_form(self, reasoner, murderer_query):
        outcome = reasoner.belief(build_mistress_kb(), murderer_query, method=BeliefMethod.EXACT, n=8, tau="1/10")
        assert outcome.estimate.method is Method.EXACT
        assert outcome.estimate.n == 8
        assert outcome.estimate.taus == (Fraction(1, 10),)
        assert outcome.direct is None

    def test_exact_unsatisfiable(self, reasoner, murderer_query):
        with pytest.raises(UnsatisfiableKBError):
            reasoner.belief(build_mistress_kb(), murderer_query, method="exact", n=2, tau="1/100")

    def test_exact_budget(self, murderer_query):
        with pytest.raises(IterationBudgetExceededError):
            Reasoner(budget=1).belief(build_mistress_kb(), murderer_query, method="exact", n=5)

    def test_monte_carlo_is_seeded(self, murderer_query):
        kb = build_mistress_kb()
        first = Reasoner(seed=5).belief(kb, murderer_query, method="mc", n=8, samples=3000)
        second = Reasoner(seed=5).belief(kb, murderer_query, method="mc", n=8, samples=3000)
        assert first.estimate.method is Method.MONTE_CARLO
        assert first == second

    def test_to_dict(self, reasoner, murderer_query):
        data = reasoner.belief(build_mistress_kb(), murderer_query).to_dict()
        assert data["query"] == "Murderer(Jane)"
        assert data["requested"] == "auto"
        assert data["estimate"]["value"] == "3/5"
        assert data["estimate"]["decimal"] == pytest.approx(0.6)
        json.dumps(data)

    def test_parsed_query(self, reasoner, data_dir):
        kb = parse_kb((data_dir / "probative.rwkb").read_text())
        outcome = reasoner.belief(kb, parse_query("Copy(xd)", kb))
        assert outcome.estimate.value == Fraction(9, 10)


class TestConverge:
    def test_schedule_text(self, reasoner, copy_query):
        report = reasoner.converge(build_logic_kb(), copy_query, "3:0.2,4:0.1")
        assert [p.n for p in report.points] == [3, 4]
        assert report.limit_estimate == 0

    def test_budget_passed_through(self, murderer_query):
        report = Reasoner(budget=1).converge(build_mistress_kb(), murderer_query, "4:0.2")
        assert report.points[0].status == "budget_exceeded"


class TestScenarios:
    """Tests for the scenario analyzers."""

    def test_mistress(self, reasoner):
        rows = reasoner.mistress()
        assert [r.variant for r in rows] == list(MistressVariant)
        assert [r.result.estimate for r in rows] == [
            Fraction(3, 5),
            Fraction(3, 5),
            Fraction(1, 20),
            Fraction(49, 50),
        ]

    def test_irr(self, reasoner, data_dir):
        config = IrrConfig.model_validate(json.loads((data_dir / "irr_grid.json").read_text()))
        analysis = reasoner.irr(config)
        assert isinstance(analysis, IrrAnalysis)
        assert analysis.ok
        assert len(analysis.cases) == config.n * config.m
        assert all(c.belief == c.resolved for c in analysis.cases)
        strong = {(c.i, c.j) for c in analysis.cases if c.exceeds_threshold}
        assert strong == {(3, 2)}
        assert analysis.to_dict()["ok"] is True

    def test_naf(self, reasoner):
        config = NafConfig(epsilon=1, delta="1/2", gamma_spec="exp2", alpha_primes=("1/2", "9/10"))
        analysis = reasoner.naf(config)
        assert analysis.gamma == Fraction(2, 3)
        assert [level.bound for level in analysis.levels] == [Fraction(1, 3), Fraction(3, 5)]
        assert all(level.copy_interval == (0, level.bound) for level in analysis.levels)
        assert all(level.access_interval == (0, Fraction(2, 3)) for level in analysis.levels)
        assert analysis.prop2.ok
        assert analysis.audit is None
        assert analysis.ok

    def test_naf_folded(self, reasoner):
        config = NafConfig(epsilon=1, delta="1/2", gamma_spec="exp2", alpha_primes=("1/2",), fold_generated=True)
        analysis = reasoner.naf(config)
        assert analysis.levels[0].copy_interval == (0, Fraction(1, 3))

    def test_naf_with_audit(self, reasoner, data_dir):
        data = json.loads((data_dir / "naf_config.json").read_text())
        model = OutcomeModel.model_validate(data.pop("outcome_model"))
        analysis = reasoner.naf(NafConfig.model_validate(data), model)
        assert analysis.audit is not None
        assert analysis.audit.ok
        assert analysis.to_dict()["audit"]["ok"] is True
