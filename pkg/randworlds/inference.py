"""Closed-form degrees of belief by reference-class reasoning.

Three patterns are supported, all decided syntactically from the KB's
rules, facts and statistics (the counting engine is never consulted):

- direct inference from the unique most specific reference class that the
  constant is known to belong to;
- the interval rule: under six structural conditions on a KB, a statistic
  ``a <= ||theta | phi0|| <= b`` about the constant's class bounds the
  belief in ``theta(c)``;
- total probability over a pivot implied by the query, which turns
  ``Pr(xi(c))`` into ``Pr(xi(c) | pivot(c)) * Pr(pivot(c))``.
"""

from __future__ import annotations

from enum import StrEnum
from fractions import Fraction
from typing import Any

from pydantic import BaseModel, ConfigDict, Field, model_validator

from randworlds.errors import (
    AmbiguousReferenceClassesError,
    LemmaConditionsUnmetError,
    MissingRuleError,
    NotApplicableError,
    UnknownSymbolError,
)
from randworlds.logging_config import get_logger
from randworlds.models import (
    Conjunction,
    GroundFact,
    KnowledgeBase,
    ProportionConstraint,
    Query,
    Rational,
    SourceSpan,
)
from randworlds.profiles import ProfileSpace

logger = get_logger()

HALF = Fraction(1, 2)


class Justification(StrEnum):
    MOST_SPECIFIC = "MostSpecificReferenceClass"
    INTERVAL_COROLLARY = "IntervalCorollary"
    PRODUCT = "ProductDecomposition"
    LOGICAL_ZERO = "LogicalZero"
    ENTAILMENT = "Entailment"


class DirectInferenceResult(BaseModel):
    """A limiting degree of belief, as a point or an interval.

    ``estimate`` is the point reported for the result: the value itself for
    point results, and for intervals the point of ``[lower, upper]`` closest
    to 1/2 (the maximum-entropy choice).
    """

    model_config = ConfigDict(frozen=True)

    query: str
    lower: Rational
    upper: Rational
    estimate: Rational
    justification: Justification
    reference_class: str | None = None
    matched_constraints: tuple[int, ...] = ()
    spans: tuple[SourceSpan, ...] = ()
    factors: tuple[DirectInferenceResult, ...] = ()

    @model_validator(mode="after")
    def _ordered(self) -> DirectInferenceResult:
        if not 0 <= self.lower <= self.estimate <= self.upper <= 1:
            raise ValueError(f"Invalid interval [{self.lower}, {self.upper}] with estimate {self.estimate}")
        return self

    @property
    def is_point(self) -> bool:
        return self.lower == self.upper

    @property
    def interval(self) -> tuple[Fraction, Fraction]:
        return self.lower, self.upper

    def to_dict(self) -> dict[str, Any]:
        return self.model_dump(mode="json")


class LemmaRoles(BaseModel):
    """Roles for the interval rule: the constant's class, the intermediate property, the target."""

    model_config = ConfigDict(frozen=True)

    phi0: Conjunction
    theta: Conjunction
    xi: Conjunction

    @model_validator(mode="after")
    def _distinct(self) -> LemmaRoles:
        if self.theta.is_truth or self.xi.is_truth:
            raise ValueError("theta and xi must be nonempty")
        if len({self.phi0, self.theta, self.xi}) != 3:
            raise ValueError("phi0, theta and xi must be distinct")
        return self


class LemmaReport(BaseModel):
    """Outcome of the six structural conditions, in order."""

    model_config = ConfigDict(frozen=True)

    conditions: tuple[bool, bool, bool, bool, bool, bool]
    notes: tuple[str, ...] = Field(default=(), description="Why each failed condition failed")

    @property
    def all_hold(self) -> bool:
        return all(self.conditions)

    @property
    def failed(self) -> list[int]:
        """1-based numbers of the failed conditions."""
        return [i + 1 for i, ok in enumerate(self.conditions) if not ok]

    def to_dict(self) -> dict[str, Any]:
        return {"conditions": list(self.conditions), "all_hold": self.all_hold, "notes": list(self.notes)}


def _clamp_half(lower: Fraction, upper: Fraction) -> Fraction:
    return min(max(HALF, lower), upper)


def _interval(constraint: ProportionConstraint, mirrored: bool = False) -> tuple[Fraction, Fraction]:
    lo, hi = constraint.interval
    return (1 - hi, 1 - lo) if mirrored else (lo, hi)


def _spans(kb: KnowledgeBase, indices: list[int]) -> tuple[SourceSpan, ...]:
    spans = (kb.span_for(f"constraint:{i}") for i in indices)
    return tuple(s for s in spans if s is not None)


def _check_query(kb: KnowledgeBase, space: ProfileSpace, query: Query) -> None:
    if query.constant not in kb.constant_names:
        raise UnknownSymbolError("constant", query.constant)
    space.compile(query.target)


def resolve(kb: KnowledgeBase, query: Query) -> DirectInferenceResult:
    """
    Resolve a query by direct inference from the most specific reference class.

    A statistic matches when the constant's facts entail its condition and,
    inside that condition, its target coincides with the query (or with the
    query's complement, in which case the value is mirrored). Statistics on
    equivalent conditions are intersected; the unique most specific class
    decides.

    Args:
        kb: Knowledge base
        query: Query about one constant

    Returns:
        DirectInferenceResult (LogicalZero, Entailment or MostSpecificReferenceClass)

    Raises:
        NotApplicableError: If no statistic matches or matching statistics conflict
        AmbiguousReferenceClassesError: If two incomparable classes are both most specific
    """
    space = ProfileSpace.of(kb)
    _check_query(kb, space, query)
    known = kb.facts_for(query.constant)
    pool = space.models(known)
    rendered = query.render()
    if not pool:
        raise NotApplicableError(f"Facts about {query.constant} contradict the rules")

    satisfied = space.models(query.target, pool)
    if not satisfied:
        logger.debug(f"{rendered} is refuted by rules and facts")
        return DirectInferenceResult(
            query=rendered, lower=0, upper=0, estimate=0, justification=Justification.LOGICAL_ZERO
        )
    if len(satisfied) == len(pool):
        logger.debug(f"{rendered} is entailed by rules and facts")
        return DirectInferenceResult(
            query=rendered, lower=1, upper=1, estimate=1, justification=Justification.ENTAILMENT
        )

    classes: list[tuple[Conjunction, list[int], Fraction, Fraction]] = []
    for i, constraint in enumerate(kb.constraints):
        if not space.entails(known, constraint.condition):
            continue
        members = space.models(constraint.condition)
        target = set(space.models(constraint.target, members))
        wanted = set(space.models(query.target, members))
        if target == wanted:
            lo, hi = _interval(constraint)
        elif target == set(members) - wanted:
            lo, hi = _interval(constraint, mirrored=True)
        else:
            continue
        for k, (condition, indices, c_lo, c_hi) in enumerate(classes):
            if space.equivalent(condition, constraint.condition):
                classes[k] = (condition, [*indices, i], max(c_lo, lo), min(c_hi, hi))
                break
        else:
            classes.append((constraint.condition, [i], lo, hi))

    if not classes:
        raise NotApplicableError(f"No statistic applies to {rendered}")

    maximal = [
        cls
        for cls in classes
        if not any(
            other is not cls and space.entails(other[0], cls[0]) and not space.entails(cls[0], other[0])
            for other in classes
        )
    ]
    if len(maximal) > 1:
        raise AmbiguousReferenceClassesError([cls[0].render() for cls in maximal])

    condition, indices, lo, hi = maximal[0]
    if lo > hi:
        raise NotApplicableError(f"Statistics on {condition.render()} are mutually inconsistent")
    logger.debug(f"{rendered}: reference class {condition.render()} gives [{lo}, {hi}]")
    return DirectInferenceResult(
        query=rendered,
        lower=lo,
        upper=hi,
        estimate=_clamp_half(lo, hi),
        justification=Justification.MOST_SPECIFIC,
        reference_class=condition.render(),
        matched_constraints=tuple(indices),
        spans=_spans(kb, indices),
    )


def total_probability_split(kb: KnowledgeBase, query: Query, pivot: Conjunction) -> DirectInferenceResult:
    """
    Resolve ``Pr(q) = Pr(q | pivot) * Pr(pivot)`` when the rules make ``q`` imply ``pivot``.

    The other branch vanishes because ``q and not pivot`` is impossible.
    Both factors are resolved with :func:`resolve`; the first with the pivot
    adjoined to the constant's facts.

    Raises:
        MissingRuleError: If the rules do not entail ``query => pivot``
        NotApplicableError: If either factor cannot be resolved
    """
    space = ProfileSpace.of(kb)
    _check_query(kb, space, query)
    if not space.entails(query.target, pivot):
        raise MissingRuleError(f"No rule makes {query.target.render()} imply {pivot.render()}")
    extra = [
        GroundFact(constant=query.constant, literal=lit)
        for lit in pivot.literals
        if GroundFact(constant=query.constant, literal=lit) not in kb.facts
    ]
    given_pivot = resolve(kb.with_facts(*extra), query)
    pivot_belief = resolve(kb, Query(constant=query.constant, target=pivot))
    return DirectInferenceResult(
        query=query.render(),
        lower=given_pivot.lower * pivot_belief.lower,
        upper=given_pivot.upper * pivot_belief.upper,
        estimate=given_pivot.estimate * pivot_belief.estimate,
        justification=Justification.PRODUCT,
        matched_constraints=given_pivot.matched_constraints + pivot_belief.matched_constraints,
        spans=given_pivot.spans + pivot_belief.spans,
        factors=(given_pivot, pivot_belief),
    )


def infer(kb: KnowledgeBase, query: Query) -> DirectInferenceResult:
    """
    Resolve directly, falling back to a split over each rule consequent the query implies.

    Raises:
        NotApplicableError: If neither direct resolution nor any split applies
    """
    try:
        return resolve(kb, query)
    except NotApplicableError as first:
        space = ProfileSpace.of(kb)
        for rule in kb.rules:
            pivot = rule.consequent
            if pivot.is_truth or space.entails(pivot, query.target):
                continue
            if not space.entails(query.target, pivot):
                continue
            try:
                result = total_probability_split(kb, query, pivot)
            except NotApplicableError:
                continue
            logger.debug(f"{query.render()}: resolved by splitting on {pivot.render()}")
            return result
        raise first


def _same(a: Conjunction, b: Conjunction) -> bool:
    return set(a.literals) == set(b.literals)


def _symbols(conj: Conjunction) -> set[str]:
    return set(conj.predicates)


def check_lemma_conditions(kb: KnowledgeBase, query: Query, roles: LemmaRoles) -> LemmaReport:
    """
    Check the six structural conditions of the interval rule.

    1. the constant's facts entail ``phi0``;
    2. the rules entail ``xi => theta``;
    3. for every statistic ``||theta | phi||``, ``phi0`` entails or refutes ``phi``;
    4. for every statistic ``||xi | theta & psi||``, ``phi0`` entails or refutes ``psi``;
    5. symbols of ``theta`` occur only in the rule ``xi => theta``, as targets of
       the statistics in 3, and in the ``theta`` part of the conditions in 4;
    6. symbols of ``xi`` occur only in that rule and as targets of the statistics in 4.

    Never raises for a failed condition.
    """
    space = ProfileSpace.of(kb)
    _check_query(kb, space, query)
    theta_syms = _symbols(roles.theta)
    xi_syms = _symbols(roles.xi)
    notes: list[str] = []

    def theta_target(c: ProportionConstraint) -> bool:
        return _same(c.target, roles.theta)

    def xi_given_theta(c: ProportionConstraint) -> bool:
        return _same(c.target, roles.xi) and c.condition.contains(roles.theta)

    def decided(condition: Conjunction) -> bool:
        return space.entails(roles.phi0, condition) or space.refutes(roles.phi0, condition)

    def linking_rule(rule: Any) -> bool:
        return _same(rule.antecedent, roles.xi) and _same(rule.consequent, roles.theta)

    cond1 = space.entails(kb.facts_for(query.constant), roles.phi0)
    if not cond1:
        notes.append(f"1: facts about {query.constant} do not entail {roles.phi0.render()}")
    cond2 = space.entails(roles.xi, roles.theta)
    if not cond2:
        notes.append(f"2: rules do not entail {roles.xi.render()} => {roles.theta.render()}")

    cond3 = True
    cond4 = True
    for i, c in enumerate(kb.constraints):
        if theta_target(c) and not decided(c.condition):
            cond3 = False
            notes.append(f"3: condition of constraint {i} is neither implied nor excluded by phi0")
        if xi_given_theta(c) and not decided(c.condition.without(roles.theta)):
            cond4 = False
            notes.append(f"4: condition of constraint {i} is neither implied nor excluded by phi0")

    cond5 = True
    cond6 = True
    for i, fact in enumerate(kb.facts):
        if fact.literal.predicate in theta_syms:
            cond5 = False
            notes.append(f"5: fact {i} mentions {fact.literal.predicate}")
        if fact.literal.predicate in xi_syms:
            cond6 = False
            notes.append(f"6: fact {i} mentions {fact.literal.predicate}")
    for i, rule in enumerate(kb.rules):
        mentioned = _symbols(rule.antecedent) | _symbols(rule.consequent)
        if linking_rule(rule):
            continue
        if mentioned & theta_syms:
            cond5 = False
            notes.append(f"5: rule {i} mentions theta")
        if mentioned & xi_syms:
            cond6 = False
            notes.append(f"6: rule {i} mentions xi")
    for i, c in enumerate(kb.constraints):
        target_syms = _symbols(c.target)
        if target_syms & theta_syms and not theta_target(c):
            cond5 = False
            notes.append(f"5: constraint {i} has theta symbols in its target")
        if target_syms & xi_syms and not xi_given_theta(c):
            cond6 = False
            notes.append(f"6: constraint {i} has xi symbols in its target")
        condition_syms = _symbols(c.condition)
        if condition_syms & theta_syms and not (
            xi_given_theta(c) and not _symbols(c.condition.without(roles.theta)) & theta_syms
        ):
            cond5 = False
            notes.append(f"5: constraint {i} has theta symbols in its condition")
        if condition_syms & xi_syms:
            cond6 = False
            notes.append(f"6: constraint {i} has xi symbols in its condition")

    return LemmaReport(conditions=(cond1, cond2, cond3, cond4, cond5, cond6), notes=tuple(notes))


def resolve_interval(kb: KnowledgeBase, query: Query, roles: LemmaRoles) -> DirectInferenceResult:
    """
    Bound ``Pr(theta(c))`` by the statistic on ``||theta | phi0||``.

    Raises:
        LemmaConditionsUnmetError: If any structural condition fails
        NotApplicableError: If the query is not ``theta(c)`` or no statistic on
            ``||theta | phi0||`` exists
    """
    report = check_lemma_conditions(kb, query, roles)
    if not report.all_hold:
        raise LemmaConditionsUnmetError(report.failed)
    if not _same(query.target, roles.theta):
        raise NotApplicableError(f"Query {query.render()} is not theta({query.constant})")
    space = ProfileSpace.of(kb)
    indices = [
        i
        for i, c in enumerate(kb.constraints)
        if _same(c.target, roles.theta) and space.equivalent(c.condition, roles.phi0)
    ]
    if not indices:
        raise NotApplicableError(f"No statistic on ||{roles.theta.render()} | {roles.phi0.render()}||")
    lo = max(kb.constraints[i].interval[0] for i in indices)
    hi = min(kb.constraints[i].interval[1] for i in indices)
    if lo > hi:
        raise NotApplicableError(f"Statistics on {roles.phi0.render()} are mutually inconsistent")
    return DirectInferenceResult(
        query=query.render(),
        lower=lo,
        upper=hi,
        estimate=_clamp_half(lo, hi),
        justification=Justification.INTERVAL_COROLLARY,
        reference_class=roles.phi0.render(),
        matched_constraints=tuple(indices),
        spans=_spans(kb, indices),
    )


DirectInferenceResult.model_rebuild()
