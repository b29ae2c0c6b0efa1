"""
Tests for world counting and Monte Carlo estimation.

The grouped counter is checked against brute-force enumeration on tiny
vocabularies and domains, and against a closed-form sum for the
murdering-mistress knowledge base.
"""

from fractions import Fraction
from math import comb

import numpy as np
import pytest
from pydantic import ValidationError

from randworlds.dsl import parse_kb
from randworlds.errors import (
    DomainTooSmallError,
    IterationBudgetExceededError,
    UnsatisfiableKBError,
    ZeroAcceptanceError,
)
from randworlds.irr import IrrConfig, build_irr_case
from randworlds.irr import copy_query as irr_copy_query
from randworlds.models import Conjunction, Query, ToleranceSpec
from randworlds.scenarios import (
    MistressVariant,
    build_logic_kb,
    build_mistress_kb,
    build_probative_kb,
    build_striking_kb,
)
from randworlds.worlds import (
    BeliefEstimate,
    Method,
    _window_test,
    belief,
    build_plan,
    count_models,
    count_models_naive,
    sample_belief,
    wilson_half_width,
)

TENTH = ToleranceSpec.uniform("1/10")


def mistress_counts(n: int, tau: Fraction) -> tuple[int, int]:
    """
    Worlds satisfying the basic mistress KB, summed in closed form.

    Jane is fixed inside the reference class (2 profiles each way for
    Murderer, via SmokingGun). A free element is in the class and a
    murderer in 2 profiles, in the class and not a murderer in 2, and
    outside it in 12.
    """
    low, high = Fraction(3, 5) - tau, Fraction(3, 5) + tau
    free = n - 1
    hits = total = 0
    for jane_murderer in (0, 1):
        for c in range(free + 1):
            for t in range(c + 1):
                if not low <= Fraction(t + jane_murderer, c + 1) <= high:
                    continue
                ways = 2 * comb(free, c) * comb(c, t) * 2**t * 2 ** (c - t) * 12 ** (free - c)
                total += ways
                hits += ways * jane_murderer
    return hits, total


def _comb(n: int, k: int) -> int:
    return comb(n, k) if 0 <= k <= n else 0


def striking_counts(
    n: int, tau: Fraction, rho: Fraction = Fraction(9, 10), sigma: Fraction = Fraction(4, 5)
) -> tuple[int, int]:
    """
    Worlds satisfying the striking KB, summed in closed form.

    s elements are Striking (xd among them), a of those have Access and c
    of those Copy. xd is a copier, an accessor that did not copy, or
    neither; each non-striking element takes one of the 3 profiles the
    rule allows.
    """
    hits = total = 0
    for s in range(1, n + 1):
        base = comb(n - 1, s - 1) * 3 ** (n - s)
        for a in range(1, s + 1):
            if not sigma - tau <= Fraction(a, s) <= sigma + tau:
                continue
            for c in range(a + 1):
                if not rho - tau <= Fraction(c, a) <= rho + tau:
                    continue
                copier = _comb(s - 1, a - 1) * _comb(a - 1, c - 1)
                total += base * (copier + _comb(s - 1, a - 1) * _comb(a - 1, c) + _comb(s - 1, a) * comb(a, c))
                hits += base * copier
    return hits, total


TOLERANCE_KB = parse_kb(
    "pred A; pred B; const c;\n"
    "rule forall x: B(x) => A(x);\n"
    "stat ||B(x)||x >=~ 1/3 tol 1;\n"
    "stat ||not B(x) | A(x)||x <=~ 0.25 tol 2;\n"
    "fact A(c);\n"
)

SMALL_IRR = IrrConfig(alphas=("1/2",), betas=(("3/5",),))

ORACLE_CASES = [
    pytest.param(build_logic_kb(), 3, TENTH, Query(constant="xd", target=Conjunction.of("Copy")), id="logic"),
    pytest.param(
        build_logic_kb(no_access=False), 3, TENTH, Query(constant="xd", target=Conjunction.of("Copy")), id="logic-bare"
    ),
    pytest.param(
        build_striking_kb("1/2", "1/2"), 3, ToleranceSpec.uniform("1/5"),
        Query(constant="xd", target=Conjunction.of("Copy")), id="striking",
    ),
    pytest.param(
        build_probative_kb("2/3"), 4, ToleranceSpec.uniform("1/10"),
        Query(constant="xd", target=Conjunction.of("Copy")), id="probative",
    ),
    pytest.param(
        build_mistress_kb(MistressVariant.BASIC), 3, ToleranceSpec.uniform("1/2"),
        Query(constant="Jane", target=Conjunction.of("Murderer")), id="mistress",
    ),
    pytest.param(
        build_mistress_kb(MistressVariant.EXTENDED), 3, ToleranceSpec.uniform("1/2"),
        Query(constant="Jane", target=Conjunction.of("SmokingGun")), id="mistress-extended",
    ),
    pytest.param(
        TOLERANCE_KB, 4, ToleranceSpec(taus=("1/10", "1/5", "1/4")),
        Query(constant="c", target=Conjunction.of("B")), id="tolerance-vector",
    ),
    pytest.param(build_irr_case(SMALL_IRR, 1, 1), 3, ToleranceSpec.uniform("1/5"), irr_copy_query(), id="irr"),
]


class TestCountModels:
    """Grouped counting against brute-force enumeration."""

    @pytest.mark.parametrize(("kb", "n", "taus", "query"), ORACLE_CASES)
    def test_matches_enumeration(self, kb, n, taus, query):
        assert count_models(kb, n, taus) == count_models_naive(kb, n, taus)

    @pytest.mark.parametrize(("kb", "n", "taus", "query"), ORACLE_CASES)
    def test_matches_enumeration_with_query(self, kb, n, taus, query):
        assert count_models(kb, n, taus, query=query) == count_models_naive(kb, n, taus, query=query)

    def test_unconstrained_count(self):
        # xd has a single profile; each other element has the three profiles the rule allows
        assert count_models(build_logic_kb(), 3, TENTH) == 9

    def test_empty_reference_class_is_excluded(self):
        kb = parse_kb("pred A; pred B; stat ||A(x) | B(x)||x ~= 1/2;")
        assert count_models(kb, 1, TENTH) == 0
        # both elements in B, exactly one of them in A
        assert count_models(kb, 2, TENTH) == 2
        assert count_models_naive(kb, 2, TENTH) == 2

    def test_contradictory_query_counts_zero(self):
        query = Query(constant="xd", target=Conjunction.of("Copy"))
        assert count_models(build_logic_kb(), 4, TENTH, query=query) == 0
        assert build_plan(build_logic_kb(), 4, TENTH, query=query) is None

    def test_mistress_closed_form(self):
        kb = build_mistress_kb()
        query = Query(constant="Jane", target=Conjunction.of("Murderer"))
        hits, total = mistress_counts(8, Fraction(1, 10))
        assert count_models(kb, 8, TENTH) == total
        assert count_models(kb, 8, TENTH, query=query) == hits

    @pytest.mark.slow
    def test_mistress_large_domain(self):
        kb = build_mistress_kb()
        query = Query(constant="Jane", target=Conjunction.of("Murderer"))
        hits, total = mistress_counts(60, Fraction(1, 50))
        estimate = belief(kb, query, 60, ToleranceSpec.uniform("1/50"))
        assert (estimate.query_count, estimate.model_count) == (hits, total)
        assert abs(estimate.value - Fraction(3, 5)) <= Fraction(3, 100)

    def test_striking_closed_form(self):
        query = Query(constant="xd", target=Conjunction.of("Copy"))
        hits, total = striking_counts(12, Fraction(1, 10))
        kb = build_striking_kb("9/10", "4/5")
        assert count_models(kb, 12, TENTH) == total
        assert count_models(kb, 12, TENTH, query=query) == hits

    @pytest.mark.slow
    def test_striking_at_forty_sits_below_limit(self):
        """At N = 40 and tau = 1/20 the count ratio is still a few hundredths under rho * sigma."""
        query = Query(constant="xd", target=Conjunction.of("Copy"))
        hits, total = striking_counts(40, Fraction(1, 20))
        estimate = belief(build_striking_kb("9/10", "4/5"), query, 40, ToleranceSpec.uniform("1/20"))
        assert (estimate.query_count, estimate.model_count) == (hits, total)
        # Every admissible world has c / s >= (4/5 - 1/20) * (9/10 - 1/20)
        assert estimate.value >= Fraction(51, 80)
        gap = Fraction(18, 25) - estimate.value
        assert gap != 0
        assert abs(gap) <= Fraction(7, 100)

    def test_workers_agree(self):
        kb = build_mistress_kb(MistressVariant.EXTENDED)
        assert count_models(kb, 7, TENTH, workers=3) == count_models(kb, 7, TENTH)

    def test_domain_too_small(self):
        with pytest.raises(DomainTooSmallError):
            count_models(build_logic_kb(), 0, TENTH)

    def test_budget(self):
        with pytest.raises(IterationBudgetExceededError, match="RANDWORLDS_BUDGET"):
            count_models(build_mistress_kb(), 8, TENTH, budget=1)

    def test_short_tolerance_vector(self):
        with pytest.raises(ValueError, match="No tolerance for index 2"):
            count_models(TOLERANCE_KB, 3, ToleranceSpec(taus=("1/10", "1/10")))


class TestBelief:
    """Tests for exact finite-N beliefs."""

    def test_mistress_belief(self, murderer_query):
        hits, total = mistress_counts(8, Fraction(1, 10))
        estimate = belief(build_mistress_kb(), murderer_query, 8, TENTH)
        assert estimate.value == Fraction(hits, total)
        assert estimate.method is Method.EXACT
        assert (estimate.model_count, estimate.query_count) == (total, hits)
        assert estimate.taus == (Fraction(1, 10),)

    def test_symmetric_predicate_is_half(self):
        query = Query(constant="Jane", target=Conjunction.of("SmokingGun"))
        assert belief(build_mistress_kb(), query, 5, TENTH).value == Fraction(1, 2)

    def test_fact_is_certain(self):
        query = Query(constant="Jane", target=Conjunction.of("Apartment"))
        assert belief(build_mistress_kb(), query, 5, TENTH).value == 1

    def test_logic_belief_is_zero(self, copy_query):
        assert belief(build_logic_kb(), copy_query, 5, TENTH).value == 0

    def test_unsatisfiable(self, murderer_query):
        with pytest.raises(UnsatisfiableKBError, match="N=2") as exc_info:
            belief(build_mistress_kb(), murderer_query, 2, ToleranceSpec.uniform("1/100"))
        assert exc_info.value.taus == (Fraction(1, 100),)

    def test_to_dict(self, murderer_query):
        data = belief(build_mistress_kb(), murderer_query, 4, TENTH).to_dict()
        assert data["method"] == "ExactEnumeration"
        assert isinstance(data["value"], str)
        assert 0 <= data["decimal"] <= 1


class TestSampleBelief:
    """Tests for Monte Carlo estimation."""

    def test_agrees_with_exact(self, murderer_query):
        kb = build_mistress_kb()
        exact = belief(kb, murderer_query, 8, TENTH)
        estimate = sample_belief(kb, murderer_query, 8, TENTH, samples=20_000, seed=3)
        assert estimate.method is Method.MONTE_CARLO
        assert abs(estimate.decimal - exact.decimal) <= 3 * estimate.half_width
        assert 0 < estimate.acceptance_rate <= 1

    def test_seeded_runs_repeat(self, murderer_query):
        kb = build_mistress_kb()
        first = sample_belief(kb, murderer_query, 6, TENTH, samples=5000, seed=11)
        second = sample_belief(kb, murderer_query, 6, TENTH, samples=5000, seed=11)
        assert first == second

    def test_contradicting_query_never_hits(self, copy_query):
        estimate = sample_belief(build_logic_kb(), copy_query, 5, TENTH, samples=1000)
        assert estimate.value == 0
        assert estimate.accepted == 1000

    def test_zero_acceptance(self, murderer_query):
        with pytest.raises(ZeroAcceptanceError):
            sample_belief(build_mistress_kb(), murderer_query, 2, ToleranceSpec.uniform("1/100"), samples=500)

    def test_samples_must_be_positive(self, murderer_query):
        with pytest.raises(ValueError):
            sample_belief(build_mistress_kb(), murderer_query, 5, TENTH, samples=0)


class TestHelpers:
    def test_wilson_half_width(self):
        assert wilson_half_width(50, 100) == pytest.approx(0.09617, abs=1e-4)

    def test_window_test_small_values(self):
        ok = _window_test(Fraction(1, 3), Fraction(2, 3), np.array([3, 0, 3]), np.array([1, 0, 3]))
        assert ok.tolist() == [True, False, False]

    def test_window_test_large_denominators(self):
        low = Fraction(1, 2**62)
        ok = _window_test(low, None, np.array([4, 4]), np.array([3, 0]))
        assert ok.tolist() == [True, False]

    def test_estimate_range_checked(self):
        with pytest.raises(ValidationError):
            BeliefEstimate(value="3/2", method=Method.EXACT)

    def test_monte_carlo_needs_half_width(self):
        with pytest.raises(ValidationError):
            BeliefEstimate(value="1/2", method=Method.MONTE_CARLO)
