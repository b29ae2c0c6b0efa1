"""Near-access-free generative models: the access ceiling and its consequences for copying.

A model M is epsilon-NAF when, for every output event, its probability with
access to the work is at most ``gamma(epsilon)`` times the probability
without access. With prior access probability delta, Bayes' rule caps the
posterior belief in access given any similarity level at

    Gamma(epsilon, delta) = gamma(epsilon) * delta / (1 + delta * (gamma(epsilon) - 1))

and belief in copying at level i by ``alpha'_i * Gamma``.
"""

from __future__ import annotations

import math
from collections.abc import Sequence
from enum import StrEnum
from fractions import Fraction
from typing import Any

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from randworlds.errors import UnboundedRatioError
from randworlds.logging_config import get_logger
from randworlds.models import (
    Conjunction,
    Constant,
    GroundFact,
    KnowledgeBase,
    Literal,
    PredicateSymbol,
    ProportionConstraint,
    Rational,
    Relation,
    UniversalRule,
    to_fraction,
)
from randworlds.scenarios import COPY_IMPLIES_ACCESS, DEFENDANT, facts_about, similar, similarity_level

logger = get_logger()

GENERATED = "Generated"
SWEEP_DENOMINATOR = 100
MAX_SWEEP_EPSILON = 5

# Largest epsilon whose float power stays finite
_EPSILON_LIMITS = {"exp": Fraction(709), "exp2": Fraction(1023)}
# Rational lower bounds on ln(base)
_LOG_BASE_FLOOR = {"exp": Fraction(1), "exp2": Fraction(693, 1000)}


class GammaFamily(StrEnum):
    """Increasing families with gamma(0) = 1 and gamma(epsilon) > 1 for epsilon > 0."""

    EXP = "exp"
    EXP2 = "exp2"
    LINEAR = "linear"

    @property
    def epsilon_limit(self) -> Fraction | None:
        """Largest epsilon the family accepts (None: unbounded)."""
        return _EPSILON_LIMITS.get(self.value)

    def check_epsilon(self, epsilon: Fraction) -> None:
        limit = self.epsilon_limit
        if limit is not None and epsilon > limit:
            raise ValueError(f"epsilon must be at most {limit} for the {self.value} family, got {epsilon}")

    def gamma(self, epsilon: Fraction) -> Fraction:
        """
        gamma(epsilon) as an exact rational.

        ``linear`` is exact everywhere and ``exp2`` for integer epsilon;
        otherwise the float value is carried over at its shortest repr, kept
        at or above the rational lower bound ``1 + epsilon * ln(base)``.

        Raises:
            ValueError: If epsilon exceeds the family's ``epsilon_limit``
        """
        epsilon = to_fraction(epsilon)
        if self is GammaFamily.LINEAR:
            return 1 + epsilon
        self.check_epsilon(epsilon)
        if self is GammaFamily.EXP2 and epsilon.denominator == 1:
            return Fraction(2) ** epsilon.numerator
        base = math.e if self is GammaFamily.EXP else 2.0
        # The float rounds to exactly 1.0 below epsilon ~ 1e-16
        return max(to_fraction(base ** float(epsilon)), 1 + epsilon * _LOG_BASE_FLOOR[self.value])

    def gamma_inverse(self, gamma_value: Fraction) -> Fraction:
        """epsilon with gamma(epsilon) = ``gamma_value`` (exact for ``linear`` and powers of two)."""
        gamma_value = to_fraction(gamma_value)
        if gamma_value < 1:
            raise ValueError(f"gamma must be at least 1, got {gamma_value}")
        if self is GammaFamily.LINEAR:
            return gamma_value - 1
        if self is GammaFamily.EXP2 and gamma_value.denominator == 1:
            exponent = gamma_value.numerator.bit_length() - 1
            if 1 << exponent == gamma_value.numerator:
                return Fraction(exponent)
        if self is GammaFamily.EXP:
            return to_fraction(math.log(gamma_value))
        return to_fraction(math.log2(gamma_value))


def ceiling(gamma_value: Fraction, delta: Fraction) -> Fraction:
    """Posterior access ceiling as a function of the likelihood-ratio bound ``gamma_value``."""
    gamma_value = to_fraction(gamma_value)
    delta = to_fraction(delta)
    return gamma_value * delta / (1 + delta * (gamma_value - 1))


def Gamma(  # noqa: N802
    epsilon: Fraction | str | float,
    delta: Fraction | str | float,
    gamma_spec: GammaFamily | str = GammaFamily.EXP,
) -> Fraction:
    """
    Gamma(epsilon, delta): the largest belief in access that an epsilon-NAF model allows.

    Args:
        epsilon: Positive NAF parameter
        delta: Prior probability of access, in [0, 1]
        gamma_spec: gamma family

    Returns:
        Exact rational value (delta <= Gamma <= 1)
    """
    epsilon = to_fraction(epsilon)
    delta = to_fraction(delta)
    if epsilon <= 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    if not 0 <= delta <= 1:
        raise ValueError(f"delta must lie in [0, 1], got {delta}")
    return ceiling(GammaFamily(gamma_spec).gamma(epsilon), delta)


class NafConfig(BaseModel):
    """
    Parameters of the NAF knowledge base.

    ``fold_generated`` reads the domain as outputs of M: ``Generated`` is
    dropped and the delta statistic becomes unconditional.
    """

    model_config = ConfigDict(frozen=True)

    epsilon: Rational
    delta: Rational
    gamma_spec: GammaFamily = GammaFamily.EXP
    alpha_primes: tuple[Rational, ...] = Field(min_length=1)
    fold_generated: bool = False

    @field_validator("epsilon")
    @classmethod
    def _epsilon_positive(cls, value: Fraction) -> Fraction:
        if value <= 0:
            raise ValueError(f"epsilon must be positive, got {value}")
        return value

    @field_validator("delta")
    @classmethod
    def _delta_range(cls, value: Fraction) -> Fraction:
        if not 0 <= value <= 1:
            raise ValueError(f"delta must lie in [0, 1], got {value}")
        return value

    @field_validator("alpha_primes")
    @classmethod
    def _alphas_monotone(cls, values: tuple[Fraction, ...]) -> tuple[Fraction, ...]:
        for v in values:
            if not 0 <= v <= 1:
                raise ValueError(f"alpha' entries must lie in [0, 1], got {v}")
        for i in range(1, len(values)):
            if values[i] < values[i - 1]:
                raise ValueError(f"alpha' must be nondecreasing (alpha'_{i} > alpha'_{i + 1})")
        return values

    @model_validator(mode="after")
    def _epsilon_in_family_range(self) -> NafConfig:
        self.gamma_spec.check_epsilon(self.epsilon)
        return self

    @property
    def n(self) -> int:
        return len(self.alpha_primes)

    @property
    def gamma(self) -> Fraction:
        """Gamma(epsilon, delta) for this configuration."""
        return Gamma(self.epsilon, self.delta, self.gamma_spec)

    def to_dict(self) -> dict[str, Any]:
        return self.model_dump(mode="json")


def _check_level(config: NafConfig, i: int) -> None:
    if not 1 <= i <= config.n:
        raise ValueError(f"Similarity level {i} outside 1..{config.n}")


def build_naf_kb(config: NafConfig) -> KnowledgeBase:
    """
    Knowledge base for outputs of an epsilon-NAF model M.

    The flag that M is epsilon-NAF holds for the single model considered and
    is folded away. Statistics, in order: ``||Copy | Access & level_i & Generated|| ~= alpha'_i``
    for each i, ``||Access | level_i & Generated|| <=~ Gamma`` for each i, and
    ``||Access | Generated|| ~= delta``.
    """
    n = config.n
    generated = Conjunction() if config.fold_generated else Conjunction.of(GENERATED)
    predicates = [PredicateSymbol(name="Access"), PredicateSymbol(name="Copy")]
    if not config.fold_generated:
        predicates.append(PredicateSymbol(name=GENERATED, curried_from="Generated(x, M)"))
    predicates += [PredicateSymbol(name=similar(i)) for i in range(1, n + 1)]
    rules = [COPY_IMPLIES_ACCESS]
    rules += [
        UniversalRule(antecedent=Conjunction.of(similar(i + 1)), consequent=Conjunction.of(similar(i)))
        for i in range(1, n)
    ]
    gamma = config.gamma
    constraints = [
        ProportionConstraint(
            target=Conjunction.of("Copy"),
            condition=Conjunction.of("Access") & similarity_level(i, n) & generated,
            value=config.alpha_primes[i - 1],
        )
        for i in range(1, n + 1)
    ]
    constraints += [
        ProportionConstraint(
            target=Conjunction.of("Access"),
            condition=similarity_level(i, n) & generated,
            relation=Relation.AT_MOST,
            value=gamma,
        )
        for i in range(1, n + 1)
    ]
    constraints.append(ProportionConstraint(target=Conjunction.of("Access"), condition=generated, value=config.delta))
    return KnowledgeBase(
        predicates=tuple(predicates),
        constants=(Constant(name=DEFENDANT),),
        rules=tuple(rules),
        constraints=tuple(constraints),
    )


def build_naf_case(config: NafConfig, i: int) -> KnowledgeBase:
    """:func:`build_naf_kb` plus the trial facts: maximal similarity level i, generated by M."""
    _check_level(config, i)
    facts = list(facts_about(DEFENDANT, similarity_level(i, config.n)))
    if not config.fold_generated:
        facts.append(GroundFact(constant=DEFENDANT, literal=Literal.pos(GENERATED)))
    return build_naf_kb(config).with_facts(*facts)


def naf_copy_bound(config: NafConfig, i: int) -> Fraction:
    """Upper bound ``alpha'_i * Gamma(epsilon, delta)`` on belief in copying at level i."""
    _check_level(config, i)
    return config.alpha_primes[i - 1] * config.gamma


def naf_copy_bounds(config: NafConfig) -> list[Fraction]:
    return [naf_copy_bound(config, i) for i in range(1, config.n + 1)]


class Prop2Violation(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: str
    epsilon: Rational
    delta: Rational
    detail: str


class GammaPoint(BaseModel):
    model_config = ConfigDict(frozen=True)

    epsilon: Rational
    delta: Rational
    gamma: Rational


class Prop2Report(BaseModel):
    """Findings of the Gamma checks over an (epsilon, delta) grid."""

    model_config = ConfigDict(frozen=True)

    gamma_spec: GammaFamily
    points: int
    equality_deltas: tuple[Rational, ...] = Field(default=(), description="Sampled deltas with Gamma == delta")
    violations: tuple[Prop2Violation, ...] = ()
    grid: tuple[GammaPoint, ...] = Field(default=(), description="Every checked point with its Gamma value")

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_dict(self) -> dict[str, Any]:
        data = self.model_dump(mode="json")
        data["ok"] = self.ok
        return data


def check_prop2(
    epsilons: Sequence[Fraction | str | float],
    deltas: Sequence[Fraction | str | float],
    gamma_spec: GammaFamily | str = GammaFamily.EXP,
) -> Prop2Report:
    """
    Check Gamma on the grid ``epsilons x deltas``.

    Checked exactly: ``delta <= Gamma <= 1``; ``Gamma == delta`` only at
    delta 0 or 1 and always there; Gamma nondecreasing between neighbouring
    grid points in epsilon and in delta. Findings are reported, never raised.
    """
    spec = GammaFamily(gamma_spec)
    eps = sorted({to_fraction(e) for e in epsilons})
    dels = sorted({to_fraction(d) for d in deltas})
    values = {(e, d): Gamma(e, d, spec) for e in eps for d in dels}
    violations: list[Prop2Violation] = []
    equalities: set[Fraction] = set()

    def flag(kind: str, e: Fraction, d: Fraction, detail: str) -> None:
        violations.append(Prop2Violation(kind=kind, epsilon=e, delta=d, detail=detail))

    for (e, d), g in values.items():
        if not d <= g <= 1:
            flag("range", e, d, f"Gamma = {g} outside [delta, 1]")
        if g == d:
            equalities.add(d)
            if d not in (0, 1):
                flag("equality", e, d, "Gamma equals delta strictly inside (0, 1)")
        elif d in (0, 1):
            flag("equality", e, d, f"Gamma = {g} differs from delta at the boundary")
    for d in dels:
        for lo, hi in zip(eps, eps[1:], strict=False):
            if values[(hi, d)] < values[(lo, d)]:
                flag("epsilon_monotone", hi, d, f"Gamma decreases from epsilon {lo} to {hi}")
    for e in eps:
        for lo, hi in zip(dels, dels[1:], strict=False):
            if values[(e, hi)] < values[(e, lo)]:
                flag("delta_monotone", e, hi, f"Gamma decreases from delta {lo} to {hi}")
    return Prop2Report(
        gamma_spec=spec,
        points=len(values),
        equality_deltas=tuple(sorted(equalities)),
        violations=tuple(violations),
        grid=tuple(GammaPoint(epsilon=e, delta=d, gamma=g) for (e, d), g in values.items()),
    )


def sweep_prop2(count: int, seed: int = 0, gamma_spec: GammaFamily | str = GammaFamily.EXP) -> Prop2Report:
    """
    :func:`check_prop2` on a random grid of about ``count`` points.

    Distinct epsilons are drawn from (0, 5] and distinct deltas from [0, 1],
    both on a 1/100 lattice; delta 0 and 1 are always included.
    """
    side = max(2, math.isqrt(max(count - 1, 0)) + 1)
    rng = np.random.default_rng(seed)
    eps_lattice = np.arange(1, MAX_SWEEP_EPSILON * SWEEP_DENOMINATOR + 1)
    delta_lattice = np.arange(0, SWEEP_DENOMINATOR + 1)
    picked_eps = rng.choice(eps_lattice, size=min(side, eps_lattice.size), replace=False)
    picked_deltas = rng.choice(delta_lattice, size=min(side, delta_lattice.size), replace=False)
    epsilons = [Fraction(int(k), SWEEP_DENOMINATOR) for k in picked_eps]
    deltas = [Fraction(int(k), SWEEP_DENOMINATOR) for k in picked_deltas]
    report = check_prop2(epsilons, [*deltas, Fraction(0), Fraction(1)], gamma_spec)
    logger.info(f"Gamma sweep: {report.points} grid points, {len(report.violations)} violation(s)")
    return report


class OutcomeModel(BaseModel):
    """
    Output distribution of a generative model with and without access to the work.

    ``similarity_level`` maps each outcome to its maximal similarity level
    (0 when below every threshold).
    """

    model_config = ConfigDict(frozen=True)

    outcomes: tuple[str, ...] = Field(min_length=1)
    p_with_access: dict[str, Rational]
    p_without_access: dict[str, Rational]
    similarity_level: dict[str, int]
    prior_access: Rational

    @model_validator(mode="after")
    def _distributions(self) -> OutcomeModel:
        names = set(self.outcomes)
        if len(names) != len(self.outcomes):
            raise ValueError("Outcomes must be distinct")
        for label, table in (
            ("p_with_access", self.p_with_access),
            ("p_without_access", self.p_without_access),
            ("similarity_level", self.similarity_level),
        ):
            if set(table) != names:
                raise ValueError(f"{label} must cover exactly the outcomes")
        for label, dist in (("p_with_access", self.p_with_access), ("p_without_access", self.p_without_access)):
            if any(p < 0 for p in dist.values()):
                raise ValueError(f"{label} has a negative probability")
            if sum(dist.values()) != 1:
                raise ValueError(f"{label} sums to {sum(dist.values())}, not 1")
        if any(level < 0 for level in self.similarity_level.values()):
            raise ValueError("Similarity levels must be nonnegative")
        if not 0 <= self.prior_access <= 1:
            raise ValueError(f"prior_access must lie in [0, 1], got {self.prior_access}")
        return self

    @property
    def levels(self) -> list[int]:
        return sorted(set(self.similarity_level.values()))

    def level_probability(self, level: int, access: bool) -> Fraction:
        dist = self.p_with_access if access else self.p_without_access
        return sum((dist[z] for z in self.outcomes if self.similarity_level[z] == level), Fraction(0))


class LevelAudit(BaseModel):
    model_config = ConfigDict(frozen=True)

    level: int
    p_with_access: Rational
    p_without_access: Rational
    ratio: Rational | None = Field(None, description="None when both probabilities vanish")
    posterior: Rational | None = Field(None, description="None when the level has zero probability")
    within_ceiling: bool = True


class OutcomeAudit(BaseModel):
    """Posterior belief in access after observing a single outcome."""

    model_config = ConfigDict(frozen=True)

    outcome: str
    level: int
    p_with_access: Rational
    p_without_access: Rational
    posterior: Rational | None = Field(None, description="None when the outcome has zero probability")


class AuditReport(BaseModel):
    """Smallest gamma the model satisfies on level events, and the resulting posteriors."""

    model_config = ConfigDict(frozen=True)

    gamma_spec: GammaFamily
    prior_access: Rational
    gamma_star: Rational
    epsilon_star: Rational
    ceiling: Rational
    outcome_gamma: Rational | None = Field(None, description="Largest per-outcome ratio; None when unbounded")
    levels: tuple[LevelAudit, ...]
    outcomes: tuple[OutcomeAudit, ...] = ()

    @property
    def ok(self) -> bool:
        return all(level.within_ceiling for level in self.levels)

    def to_dict(self) -> dict[str, Any]:
        data = self.model_dump(mode="json")
        data["ok"] = self.ok
        return data


def _posterior(delta: Fraction, with_p: Fraction, without_p: Fraction) -> Fraction | None:
    evidence_mass = delta * with_p + (1 - delta) * without_p
    return delta * with_p / evidence_mass if evidence_mass else None


def _outcome_gamma(model: OutcomeModel) -> Fraction | None:
    ratios = []
    for z in model.outcomes:
        with_p, without_p = model.p_with_access[z], model.p_without_access[z]
        if without_p == 0:
            if with_p > 0:
                return None
            continue
        ratios.append(with_p / without_p)
    return max(ratios)


def naf_audit(model: OutcomeModel, gamma_spec: GammaFamily | str = GammaFamily.EXP) -> AuditReport:
    """
    Audit an outcome model against the access ceiling.

    ``gamma_star`` is the largest ratio ``P(level | access) / P(level | no access)``
    over similarity levels and ``epsilon_star`` its preimage under the gamma
    family. Each level's posterior belief in access, by Bayes' rule with the
    model's prior, is compared exactly with ``ceiling(gamma_star, prior)``.

    Raises:
        UnboundedRatioError: If a level is possible with access but impossible without
    """
    spec = GammaFamily(gamma_spec)
    delta = model.prior_access
    rows: list[tuple[int, Fraction, Fraction, Fraction | None]] = []
    for level in model.levels:
        with_p = model.level_probability(level, access=True)
        without_p = model.level_probability(level, access=False)
        if without_p == 0 and with_p > 0:
            raise UnboundedRatioError(level)
        rows.append((level, with_p, without_p, with_p / without_p if without_p else None))

    gamma_star = max(r for *_, r in rows if r is not None)
    bound = ceiling(gamma_star, delta)
    audits = []
    for level, with_p, without_p, ratio in rows:
        posterior = _posterior(delta, with_p, without_p)
        audits.append(
            LevelAudit(
                level=level,
                p_with_access=with_p,
                p_without_access=without_p,
                ratio=ratio,
                posterior=posterior,
                within_ceiling=posterior is None or posterior <= bound,
            )
        )
    outcomes = tuple(
        OutcomeAudit(
            outcome=z,
            level=model.similarity_level[z],
            p_with_access=model.p_with_access[z],
            p_without_access=model.p_without_access[z],
            posterior=_posterior(delta, model.p_with_access[z], model.p_without_access[z]),
        )
        for z in model.outcomes
    )
    logger.debug(f"gamma* = {gamma_star}, ceiling = {bound}")
    return AuditReport(
        gamma_spec=spec,
        prior_access=delta,
        gamma_star=gamma_star,
        epsilon_star=spec.gamma_inverse(gamma_star),
        ceiling=bound,
        outcome_gamma=_outcome_gamma(model),
        levels=tuple(audits),
        outcomes=outcomes,
    )


class ForwardLevel(BaseModel):
    model_config = ConfigDict(frozen=True)

    level: int
    p_with_access: Rational
    allowed: Rational
    passed: bool


class ForwardReport(BaseModel):
    """Whether each level event obeys ``P(level | access) <= gamma * P(level | no access)``."""

    model_config = ConfigDict(frozen=True)

    gamma_value: Rational
    levels: tuple[ForwardLevel, ...]

    @property
    def ok(self) -> bool:
        return all(level.passed for level in self.levels)

    @property
    def failed_levels(self) -> list[int]:
        return [level.level for level in self.levels if not level.passed]

    def to_dict(self) -> dict[str, Any]:
        data = self.model_dump(mode="json")
        data["ok"] = self.ok
        return data


def forward_bound_check(
    model: OutcomeModel,
    epsilon: Fraction | str | float,
    gamma_spec: GammaFamily | str = GammaFamily.EXP,
) -> ForwardReport:
    """Check the epsilon-NAF ratio bound on every similarity-level event of ``model``."""
    gamma_value = GammaFamily(gamma_spec).gamma(to_fraction(epsilon))
    levels = []
    for level in model.levels:
        with_p = model.level_probability(level, access=True)
        allowed = gamma_value * model.level_probability(level, access=False)
        levels.append(ForwardLevel(level=level, p_with_access=with_p, allowed=allowed, passed=with_p <= allowed))
    return ForwardReport(gamma_value=gamma_value, levels=tuple(levels))


def random_outcome_model(rng: np.random.Generator, max_outcomes: int = 6, max_level: int = 3) -> OutcomeModel:
    """Random model with strictly positive no-access probabilities on a 1/100 lattice."""
    size = int(rng.integers(1, max_outcomes + 1))

    def distribution(minimum: int) -> list[Fraction]:
        weights = rng.integers(minimum, SWEEP_DENOMINATOR + 1, size=size)
        if not weights.any():
            weights[0] = 1
        total = int(weights.sum())
        return [Fraction(int(w), total) for w in weights]

    outcomes = tuple(f"z{k}" for k in range(1, size + 1))
    with_p = distribution(0)
    without_p = distribution(1)
    levels = rng.integers(0, max_level + 1, size=size)
    return OutcomeModel(
        outcomes=outcomes,
        p_with_access=dict(zip(outcomes, with_p, strict=True)),
        p_without_access=dict(zip(outcomes, without_p, strict=True)),
        similarity_level={z: int(level) for z, level in zip(outcomes, levels, strict=True)},
        prior_access=Fraction(int(rng.integers(0, SWEEP_DENOMINATOR + 1)), SWEEP_DENOMINATOR),
    )
