"""
Tests for near-access-free models.

Tests cover:
- gamma families and the access ceiling Gamma(epsilon, delta)
- NAF knowledge bases and per-level copying bounds
- Grid checks of Gamma's range, boundary equality and monotonicity
- Outcome-model audits and the forward ratio check
"""

import json
import math
from fractions import Fraction

import numpy as np
import pytest
from pydantic import ValidationError

from randworlds.errors import UnboundedRatioError
from randworlds.models import Relation, to_fraction, validate_kb
from randworlds.naf import (
    GENERATED,
    Gamma,
    GammaFamily,
    NafConfig,
    OutcomeModel,
    build_naf_case,
    build_naf_kb,
    ceiling,
    check_prop2,
    forward_bound_check,
    naf_audit,
    naf_copy_bound,
    naf_copy_bounds,
    random_outcome_model,
    sweep_prop2,
)
from randworlds.scenarios import DEFENDANT


@pytest.fixture
def config() -> NafConfig:
    return NafConfig(epsilon=1, delta="1/2", gamma_spec="exp2", alpha_primes=("1/2", "9/10"))


@pytest.fixture
def outcome_model(data_dir) -> OutcomeModel:
    """Two outcomes; z1 reaches similarity level 1, z2 none."""
    return OutcomeModel.model_validate(json.loads((data_dir / "naf_outcomes.json").read_text()))


class TestGammaFamily:
    """Tests for gamma families."""

    def test_exact_values(self):
        assert GammaFamily.LINEAR.gamma(Fraction(3, 5)) == Fraction(8, 5)
        assert GammaFamily.EXP2.gamma(3) == 8

    def test_exp_uses_float(self):
        assert float(GammaFamily.EXP.gamma(1)) == pytest.approx(math.e)

    def test_inverse(self):
        assert GammaFamily.LINEAR.gamma_inverse(Fraction(8, 5)) == Fraction(3, 5)
        assert GammaFamily.EXP2.gamma_inverse(8) == 3
        assert float(GammaFamily.EXP2.gamma_inverse(3)) == pytest.approx(math.log2(3))
        assert float(GammaFamily.EXP.gamma_inverse(2)) == pytest.approx(math.log(2))

    @pytest.mark.parametrize("family", [GammaFamily.EXP, GammaFamily.EXP2])
    def test_tiny_epsilon_stays_above_one(self, family):
        epsilon = Fraction(1, 10**20)
        assert family.gamma(epsilon) > 1
        assert Gamma(epsilon, "1/2", family) > Fraction(1, 2)

    @pytest.mark.parametrize(("family", "epsilon"), [("exp", 710), ("exp", 10**6), ("exp2", "2047/2")])
    def test_epsilon_above_limit(self, family, epsilon):
        with pytest.raises(ValueError, match="at most"):
            GammaFamily(family).gamma(to_fraction(epsilon))

    def test_limits(self):
        assert GammaFamily.EXP.epsilon_limit == 709
        assert GammaFamily.LINEAR.epsilon_limit is None
        assert GammaFamily.LINEAR.gamma(10**6) == 10**6 + 1

    def test_inverse_below_one(self):
        with pytest.raises(ValueError):
            GammaFamily.EXP.gamma_inverse(Fraction(1, 2))


class TestGamma:
    """Tests for the access ceiling."""

    def test_exp2_value(self):
        assert Gamma(1, "1/2", "exp2") == Fraction(2, 3)

    def test_linear_value(self):
        assert Gamma("3/5", "1/2", "linear") == Fraction(8, 13)

    def test_exp_value(self):
        assert float(Gamma(1, "1/2")) == pytest.approx(math.e / (1 + math.e))

    @pytest.mark.parametrize("delta", [0, 1])
    def test_boundary_deltas(self, delta):
        assert Gamma(2, delta, "exp2") == delta

    def test_ceiling_at_gamma_one(self):
        assert ceiling(1, Fraction(3, 10)) == Fraction(3, 10)

    @pytest.mark.parametrize(("epsilon", "delta"), [(0, "1/2"), (-1, "1/2"), (1, "-0.1"), (1, "1.1")])
    def test_invalid_arguments(self, epsilon, delta):
        with pytest.raises(ValueError):
            Gamma(epsilon, delta)


class TestNafConfig:
    def test_gamma_property(self, config):
        assert config.gamma == Fraction(2, 3)
        assert config.n == 2

    @pytest.mark.parametrize(
        "fields",
        [
            {"epsilon": 0, "delta": "1/2", "alpha_primes": ["1/2"]},
            {"epsilon": 1, "delta": "3/2", "alpha_primes": ["1/2"]},
            {"epsilon": 1, "delta": "1/2", "alpha_primes": []},
            {"epsilon": 1, "delta": "1/2", "alpha_primes": ["9/10", "1/2"]},
            {"epsilon": 1, "delta": "1/2", "alpha_primes": ["1/2"], "gamma_spec": "cubic"},
            {"epsilon": 800, "delta": "1/2", "alpha_primes": ["1/2"], "gamma_spec": "exp"},
        ],
    )
    def test_invalid(self, fields):
        with pytest.raises(ValidationError):
            NafConfig.model_validate(fields)


class TestNafKb:
    """Tests for NAF knowledge bases."""

    def test_statistics(self, config):
        kb = build_naf_kb(config)
        assert validate_kb(kb).ok
        assert len(kb.constraints) == 2 * config.n + 1
        assert [c.value for c in kb.constraints[:2]] == [Fraction(1, 2), Fraction(9, 10)]
        ceilings = kb.constraints[2:4]
        assert {c.relation for c in ceilings} == {Relation.AT_MOST}
        assert {c.value for c in ceilings} == {Fraction(2, 3)}
        assert kb.constraints[-1].value == Fraction(1, 2)
        assert kb.constraints[-1].condition.predicates == (GENERATED,)

    def test_generated_is_curried(self, config):
        curried = {p.name: p.curried_from for p in build_naf_kb(config).predicates}
        assert curried[GENERATED] == "Generated(x, M)"

    def test_case_facts(self, config):
        kb = build_naf_case(config, 1)
        assert kb.facts_for(DEFENDANT).predicates == ("Similar_1", "Similar_2", GENERATED)

    def test_folded(self, config):
        folded = config.model_copy(update={"fold_generated": True})
        kb = build_naf_case(folded, 2)
        assert GENERATED not in kb.predicate_names
        assert kb.constraints[-1].condition.is_truth
        assert kb.facts_for(DEFENDANT).predicates == ("Similar_2",)

    def test_level_checked(self, config):
        with pytest.raises(ValueError):
            build_naf_case(config, 3)

    def test_copy_bounds(self, config):
        assert naf_copy_bounds(config) == [Fraction(1, 3), Fraction(3, 5)]
        assert naf_copy_bound(config, 2) == Fraction(9, 10) * config.gamma


class TestCheckProp2:
    """Tests for the Gamma grid checks."""

    @pytest.mark.parametrize("spec", list(GammaFamily))
    def test_grid_passes(self, spec):
        report = check_prop2(["1/4", "1/2", 1, 2, 3], [0, "1/10", "1/2", "9/10", 1], spec)
        assert report.ok
        assert report.points == 25
        assert report.equality_deltas == (Fraction(0), Fraction(1))

    def test_broken_gamma_is_flagged(self, monkeypatch):
        monkeypatch.setattr("randworlds.naf.Gamma", lambda epsilon, delta, spec: Fraction(delta))
        report = check_prop2([1], [0, "1/2", 1], "exp2")
        assert not report.ok
        assert [v.kind for v in report.violations] == ["equality"]
        assert report.violations[0].delta == Fraction(1, 2)

    def test_sweep(self):
        report = sweep_prop2(50, seed=0)
        assert report.ok
        assert report.points >= 50
        assert report.to_dict()["ok"] is True

    def test_sweep_is_seeded(self):
        assert sweep_prop2(20, seed=9, gamma_spec="linear") == sweep_prop2(20, seed=9, gamma_spec="linear")


class TestOutcomeModel:
    """Tests for outcome-model validation."""

    def test_floats_become_exact(self, outcome_model):
        assert outcome_model.p_with_access["z1"] == Fraction(4, 5)
        assert outcome_model.levels == [0, 1]
        assert outcome_model.level_probability(1, access=False) == Fraction(1, 2)

    @pytest.mark.parametrize(
        "update",
        [
            {"p_with_access": {"z1": "0.7", "z2": "0.2"}},
            {"p_without_access": {"z1": "0.5"}},
            {"similarity_level": {"z1": 1, "z2": -1}},
            {"prior_access": "1.5"},
            {"outcomes": ["z1", "z1"]},
            {"p_with_access": {"z1": "1.2", "z2": "-0.2"}},
        ],
    )
    def test_invalid(self, outcome_model, update):
        data = {**outcome_model.model_dump(mode="json"), **update}
        with pytest.raises(ValidationError):
            OutcomeModel.model_validate(data)


class TestAudit:
    """Tests for naf_audit and forward_bound_check."""

    def test_shipped_model(self, outcome_model):
        report = naf_audit(outcome_model, "linear")
        assert report.gamma_star == Fraction(8, 5)
        assert report.epsilon_star == Fraction(3, 5)
        assert report.ceiling == Fraction(8, 13)
        assert report.outcome_gamma == Fraction(8, 5)
        posteriors = {level.level: level.posterior for level in report.levels}
        assert posteriors == {0: Fraction(2, 7), 1: Fraction(8, 13)}
        assert report.ok

    def test_ceiling_matches_gamma(self, outcome_model):
        report = naf_audit(outcome_model, "linear")
        assert report.ceiling == Gamma(report.epsilon_star, outcome_model.prior_access, "linear")

    def test_unbounded_ratio(self):
        model = OutcomeModel(
            outcomes=("z1", "z2"),
            p_with_access={"z1": 1, "z2": 0},
            p_without_access={"z1": 0, "z2": 1},
            similarity_level={"z1": 1, "z2": 0},
            prior_access="1/2",
        )
        with pytest.raises(UnboundedRatioError) as exc_info:
            naf_audit(model)
        assert exc_info.value.level == 1

    def test_impossible_level(self):
        model = OutcomeModel(
            outcomes=("z1", "z2", "z3"),
            p_with_access={"z1": "1/2", "z2": "1/2", "z3": 0},
            p_without_access={"z1": "1/4", "z2": "3/4", "z3": 0},
            similarity_level={"z1": 1, "z2": 0, "z3": 2},
            prior_access="1/3",
        )
        report = naf_audit(model, "exp2")
        (impossible,) = [level for level in report.levels if level.level == 2]
        assert impossible.ratio is None and impossible.posterior is None
        assert report.gamma_star == 2
        assert report.epsilon_star == 1
        assert report.ok

    def test_forward_check(self, outcome_model):
        assert forward_bound_check(outcome_model, "3/5", "linear").ok
        report = forward_bound_check(outcome_model, "1/2", "linear")
        assert report.failed_levels == [1]
        assert report.to_dict()["ok"] is False

    def test_random_models(self):
        for seed in range(30):
            model = random_outcome_model(np.random.default_rng(seed))
            assert all(p > 0 for p in model.p_without_access.values())
            report = naf_audit(model, "linear")
            assert report.ok
            assert forward_bound_check(model, report.epsilon_star, "linear").ok
