"""Inverse ratio rule: similarity levels, access evidence, and the least sufficient index.

Copying is established when ``alpha_i * beta_ij`` (copying given access at
similarity level i, times access given level i and evidence category j)
exceeds the threshold. The rule says stronger access evidence never raises
the similarity level needed, and higher similarity never raises the
evidence category needed.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Any

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, RootModel, field_validator, model_validator

from randworlds.logging_config import get_logger
from randworlds.models import (
    Conjunction,
    Constant,
    KnowledgeBase,
    Literal,
    PredicateSymbol,
    ProportionConstraint,
    Query,
    Rational,
    UniversalRule,
)
from randworlds.scenarios import (
    COPY_IMPLIES_ACCESS,
    DEFAULT_THRESHOLD,
    DEFENDANT,
    evidence,
    evidence_category,
    facts_about,
    similar,
    similarity_level,
)

logger = get_logger()

GRID_DENOMINATOR = 100


def _in_unit(values: tuple[Fraction, ...], name: str) -> None:
    for v in values:
        if not 0 <= v <= 1:
            raise ValueError(f"{name} entries must lie in [0, 1], got {v}")


class SimilarityGrid(RootModel[tuple[Rational, ...]]):
    """alpha_1..alpha_n: belief in copying given access at each maximal similarity level."""

    model_config = ConfigDict(frozen=True)

    @field_validator("root")
    @classmethod
    def _monotone(cls, alphas: tuple[Fraction, ...]) -> tuple[Fraction, ...]:
        if not alphas:
            raise ValueError("At least one similarity level is required")
        _in_unit(alphas, "alpha")
        for i in range(1, len(alphas)):
            if alphas[i] < alphas[i - 1]:
                raise ValueError(f"alpha must be nondecreasing (alpha_{i} > alpha_{i + 1})")
        return alphas


class EvidenceGrid(RootModel[tuple[tuple[Rational, ...], ...]]):
    """beta_ij: belief in access given similarity level i and evidence category j."""

    model_config = ConfigDict(frozen=True)

    @field_validator("root")
    @classmethod
    def _monotone(cls, betas: tuple[tuple[Fraction, ...], ...]) -> tuple[tuple[Fraction, ...], ...]:
        if not betas or not betas[0]:
            raise ValueError("At least one similarity level and one evidence category are required")
        width = len(betas[0])
        for i, row in enumerate(betas, start=1):
            if len(row) != width:
                raise ValueError(f"beta row {i} has {len(row)} entries, expected {width}")
            _in_unit(row, "beta")
            for j in range(1, width):
                if row[j] < row[j - 1]:
                    raise ValueError(f"beta must be nondecreasing along row {i}")
        for i in range(1, len(betas)):
            for j in range(width):
                if betas[i][j] < betas[i - 1][j]:
                    raise ValueError(f"beta must be nondecreasing along column {j + 1}")
        return betas


class IrrConfig(BaseModel):
    """Grids plus the standard of proof. JSON: ``{"alphas": [...], "betas": [[...]], "lambda": "1/2"}``."""

    model_config = ConfigDict(frozen=True, populate_by_name=True)

    alphas: SimilarityGrid
    betas: EvidenceGrid
    threshold: Rational = Field(DEFAULT_THRESHOLD, alias="lambda")

    @field_validator("threshold")
    @classmethod
    def _threshold_range(cls, value: Fraction) -> Fraction:
        if not 0 < value < 1:
            raise ValueError(f"lambda must lie in (0, 1), got {value}")
        return value

    @model_validator(mode="after")
    def _shapes(self) -> IrrConfig:
        if len(self.betas.root) != len(self.alphas.root):
            raise ValueError(f"beta has {len(self.betas.root)} rows but there are {self.n} similarity levels")
        return self

    @property
    def n(self) -> int:
        return len(self.alphas.root)

    @property
    def m(self) -> int:
        return len(self.betas.root[0])

    def alpha(self, i: int) -> Fraction:
        return self.alphas.root[i - 1]

    def beta(self, i: int, j: int) -> Fraction:
        return self.betas.root[i - 1][j - 1]

    def to_dict(self) -> dict[str, Any]:
        return self.model_dump(mode="json", by_alias=True)


def _check_indices(config: IrrConfig, i: int, j: int) -> None:
    if not 1 <= i <= config.n:
        raise ValueError(f"Similarity level {i} outside 1..{config.n}")
    if not 1 <= j <= config.m:
        raise ValueError(f"Evidence category {j} outside 1..{config.m}")


def build_irr_kb(config: IrrConfig) -> KnowledgeBase:
    """
    Knowledge base for the inverse ratio rule.

    Rules: copying requires access, and each similarity level implies the one
    below. Statistics: ``||Copy | Access & level_i|| ~= alpha_i`` for every i,
    then ``||Access | level_i & category_j|| ~= beta_ij`` row by row.
    """
    n, m = config.n, config.m
    predicates = [PredicateSymbol(name="Access"), PredicateSymbol(name="Copy")]
    predicates += [PredicateSymbol(name=similar(i)) for i in range(1, n + 1)]
    predicates += [PredicateSymbol(name=evidence(j)) for j in range(1, m + 1)]
    rules = [COPY_IMPLIES_ACCESS]
    rules += [
        UniversalRule(antecedent=Conjunction.of(similar(i + 1)), consequent=Conjunction.of(similar(i)))
        for i in range(1, n)
    ]
    constraints = [
        ProportionConstraint(
            target=Conjunction.of("Copy"),
            condition=Conjunction.of("Access") & similarity_level(i, n),
            value=config.alpha(i),
        )
        for i in range(1, n + 1)
    ]
    constraints += [
        ProportionConstraint(
            target=Conjunction.of("Access"),
            condition=similarity_level(i, n) & evidence_category(j, m),
            value=config.beta(i, j),
        )
        for i in range(1, n + 1)
        for j in range(1, m + 1)
    ]
    return KnowledgeBase(
        predicates=tuple(predicates),
        constants=(Constant(name=DEFENDANT),),
        rules=tuple(rules),
        constraints=tuple(constraints),
    )


def build_irr_case(config: IrrConfig, i: int, j: int) -> KnowledgeBase:
    """:func:`build_irr_kb` plus the trial facts: maximal similarity level i and evidence category j only."""
    _check_indices(config, i, j)
    facts = facts_about(DEFENDANT, similarity_level(i, config.n) & evidence_category(j, config.m))
    return build_irr_kb(config).with_facts(*facts)


def copy_query() -> Query:
    return Query(constant=DEFENDANT, target=Conjunction(literals=(Literal.pos("Copy"),)))


def irr_belief(config: IrrConfig, i: int, j: int) -> Fraction:
    """Limiting belief in copying for case (i, j): ``alpha_i * beta_ij``."""
    _check_indices(config, i, j)
    return config.alpha(i) * config.beta(i, j)


def min_sim_index(config: IrrConfig, j: int) -> int:
    """Least similarity level whose belief strictly exceeds lambda under category j, else n+1."""
    _check_indices(config, 1, j)
    for i in range(1, config.n + 1):
        if irr_belief(config, i, j) > config.threshold:
            return i
    return config.n + 1


def min_ev_index(config: IrrConfig, i: int) -> int:
    """Least evidence category whose belief strictly exceeds lambda at level i, else m+1."""
    _check_indices(config, i, 1)
    for j in range(1, config.m + 1):
        if irr_belief(config, i, j) > config.threshold:
            return j
    return config.m + 1


class Prop1Counterexample(BaseModel):
    """A pair of indices where a stronger input required more of the other."""

    model_config = ConfigDict(frozen=True)

    claim: int = Field(ge=1, le=2, description="1: similarity needed vs evidence; 2: evidence needed vs similarity")
    stronger: int
    weaker: int
    index_at_stronger: int
    index_at_weaker: int


class Prop1Report(BaseModel):
    """Least-index tables and any counterexamples to the inverse ratio rule."""

    model_config = ConfigDict(frozen=True)

    config: IrrConfig
    min_sim: dict[int, int]
    min_ev: dict[int, int]
    counterexamples: tuple[Prop1Counterexample, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.counterexamples

    def to_dict(self) -> dict[str, Any]:
        data = self.model_dump(mode="json", by_alias=True)
        data["ok"] = self.ok
        return data


def check_prop1(config: IrrConfig) -> Prop1Report:
    """
    Verify both halves of the inverse ratio rule for one configuration.

    Claim 1: for categories j >= j', ``min_sim_index(j) <= min_sim_index(j')``.
    Claim 2: for levels i >= i', ``min_ev_index(i) <= min_ev_index(i')``.

    Args:
        config: Grids and threshold

    Returns:
        Prop1Report listing every failing pair (empty when the rule holds)
    """
    min_sim = {j: min_sim_index(config, j) for j in range(1, config.m + 1)}
    min_ev = {i: min_ev_index(config, i) for i in range(1, config.n + 1)}
    counterexamples = [
        Prop1Counterexample(
            claim=1, stronger=j, weaker=jp, index_at_stronger=min_sim[j], index_at_weaker=min_sim[jp]
        )
        for j in min_sim
        for jp in min_sim
        if j > jp and min_sim[j] > min_sim[jp]
    ]
    counterexamples += [
        Prop1Counterexample(claim=2, stronger=i, weaker=ip, index_at_stronger=min_ev[i], index_at_weaker=min_ev[ip])
        for i in min_ev
        for ip in min_ev
        if i > ip and min_ev[i] > min_ev[ip]
    ]
    if counterexamples:
        logger.warning(f"Inverse ratio rule fails in {len(counterexamples)} case(s)")
    return Prop1Report(config=config, min_sim=min_sim, min_ev=min_ev, counterexamples=tuple(counterexamples))


def random_irr_config(rng: np.random.Generator, max_n: int = 6, max_m: int = 6) -> IrrConfig:
    """
    Draw a random valid configuration with entries on a 1/100 lattice.

    Monotonicity is imposed by running maxima along both grid axes; lambda is
    drawn from 1/100..99/100.
    """
    n = int(rng.integers(1, max_n + 1))
    m = int(rng.integers(1, max_m + 1))
    alphas = np.sort(rng.integers(0, GRID_DENOMINATOR + 1, size=n))
    betas = rng.integers(0, GRID_DENOMINATOR + 1, size=(n, m))
    betas = np.maximum.accumulate(np.maximum.accumulate(betas, axis=0), axis=1)
    threshold = int(rng.integers(1, GRID_DENOMINATOR))
    return IrrConfig(
        alphas=tuple(Fraction(int(a), GRID_DENOMINATOR) for a in alphas),
        betas=tuple(tuple(Fraction(int(b), GRID_DENOMINATOR) for b in row) for row in betas),
        threshold=Fraction(threshold, GRID_DENOMINATOR),
    )


class Prop1SweepCase(BaseModel):
    """Outcome of the rule check on the k-th random configuration."""

    model_config = ConfigDict(frozen=True)

    k: int
    n: int
    m: int
    threshold: Rational
    counterexamples: int

    @property
    def ok(self) -> bool:
        return self.counterexamples == 0


class Prop1Sweep(BaseModel):
    model_config = ConfigDict(frozen=True)

    count: int
    seed: int
    failures: tuple[Prop1Report, ...] = ()
    cases: tuple[Prop1SweepCase, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.failures

    def to_dict(self) -> dict[str, Any]:
        return {
            "count": self.count,
            "seed": self.seed,
            "ok": self.ok,
            "failures": [f.to_dict() for f in self.failures],
        }


def sweep_prop1(count: int, seed: int = 0, max_n: int = 6, max_m: int = 6) -> Prop1Sweep:
    """Run :func:`check_prop1` on ``count`` random configurations, config k seeded by ``(seed, k)``."""
    failures = []
    cases = []
    for k in range(count):
        config = random_irr_config(np.random.default_rng([seed, k]), max_n, max_m)
        report = check_prop1(config)
        cases.append(
            Prop1SweepCase(
                k=k, n=config.n, m=config.m, threshold=config.threshold, counterexamples=len(report.counterexamples)
            )
        )
        if not report.ok:
            failures.append(report)
    logger.info(f"Inverse ratio sweep: {count} configurations, {len(failures)} failing")
    return Prop1Sweep(count=count, seed=seed, failures=tuple(failures), cases=tuple(cases))
