"""Knowledge bases for the murder and copyright scenarios, plus the infringement verdict.

The defendant's work is the constant ``xd``. Binary predicates are curried
against their fixed second argument (``Mistress(x, John)`` becomes
``Mistress``).
"""

from __future__ import annotations

from enum import StrEnum
from fractions import Fraction
from typing import Any

from pydantic import BaseModel, ConfigDict, Field, field_validator

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

DEFENDANT = "xd"
DEFAULT_THRESHOLD = Fraction(1, 2)


class MistressVariant(StrEnum):
    BASIC = "basic"
    EXTENDED = "extended"
    NO_APARTMENT = "no_apartment"
    SMOKING_GUN = "smoking_gun"


def _probability(name: str, value: Any) -> Fraction:
    result = to_fraction(value)
    if not 0 <= result <= 1:
        raise ValueError(f"{name} must lie in [0, 1], got {result}")
    return result


def similar(i: int) -> str:
    return f"Similar_{i}"


def evidence(j: int) -> str:
    return f"EA_{j}"


def similarity_level(i: int, n: int) -> Conjunction:
    """``Similar_i & not Similar_k`` for every k > i: maximal similarity level i."""
    return Conjunction(
        literals=(Literal.pos(similar(i)), *(Literal.neg(similar(k)) for k in range(i + 1, n + 1)))
    )


def evidence_category(j: int, m: int) -> Conjunction:
    """``EA_j & not EA_l`` for every l != j: exactly one category of access evidence."""
    return Conjunction(
        literals=(Literal.pos(evidence(j)), *(Literal.neg(evidence(l)) for l in range(1, m + 1) if l != j))
    )


def facts_about(constant: str, formula: Conjunction) -> tuple[GroundFact, ...]:
    return tuple(GroundFact(constant=constant, literal=lit) for lit in formula.literals)


COPY_IMPLIES_ACCESS = UniversalRule(antecedent=Conjunction.of("Copy"), consequent=Conjunction.of("Access"))


def build_mistress_kb(variant: MistressVariant | str = MistressVariant.BASIC) -> KnowledgeBase:
    """
    The murdering-mistress knowledge bases.

    ``basic`` holds the single statistic that about 60% of mistresses found
    with the body in their apartment are the murderer. ``extended`` adds a
    broad statistic (at most 5% of mistresses) and a narrow one (98% with a
    smoking gun). ``no_apartment`` drops the apartment fact from ``extended``
    and ``smoking_gun`` adds the smoking-gun fact to it.
    """
    variant = MistressVariant(variant)
    predicates = (
        PredicateSymbol(name="Apartment"),
        PredicateSymbol(name="Mistress", curried_from="Mistress(x, John)"),
        PredicateSymbol(name="Murderer", curried_from="Murderer(x, John)"),
        PredicateSymbol(name="SmokingGun"),
    )
    murderer = Conjunction.of("Murderer")
    constraints = [
        ProportionConstraint(target=murderer, condition=Conjunction.of("Apartment", "Mistress"), value="3/5")
    ]
    facts = [
        GroundFact(constant="Jane", literal=Literal.pos("Apartment")),
        GroundFact(constant="Jane", literal=Literal.pos("Mistress")),
    ]
    if variant is not MistressVariant.BASIC:
        constraints += [
            ProportionConstraint(
                target=murderer,
                condition=Conjunction.of("Mistress"),
                relation=Relation.AT_MOST,
                value="1/20",
            ),
            ProportionConstraint(
                target=murderer,
                condition=Conjunction.of("Apartment", "Mistress", "SmokingGun"),
                value="49/50",
            ),
        ]
    if variant is MistressVariant.NO_APARTMENT:
        facts = facts[1:]
    elif variant is MistressVariant.SMOKING_GUN:
        facts.append(GroundFact(constant="Jane", literal=Literal.pos("SmokingGun")))
    return KnowledgeBase(
        predicates=predicates,
        constants=(Constant(name="Jane"),),
        constraints=tuple(constraints),
        facts=tuple(facts),
    )


def build_logic_kb(no_access: bool = True) -> KnowledgeBase:
    """``Copy => Access``, optionally with the fact that the defendant had no access."""
    facts = (GroundFact(constant=DEFENDANT, literal=Literal.neg("Access")),) if no_access else ()
    return KnowledgeBase(
        predicates=(PredicateSymbol(name="Access"), PredicateSymbol(name="Copy")),
        constants=(Constant(name=DEFENDANT),),
        rules=(COPY_IMPLIES_ACCESS,),
        facts=facts,
    )


def build_probative_kb(eta: Fraction | str | float) -> KnowledgeBase:
    """
    Access plus probative similarity: ``||Copy | Access & Probative|| ~= eta``.

    The trial facts ``Access(xd)`` and ``Probative(xd)`` are included.
    """
    eta = _probability("eta", eta)
    return KnowledgeBase(
        predicates=(PredicateSymbol(name="Access"), PredicateSymbol(name="Copy"), PredicateSymbol(name="Probative")),
        constants=(Constant(name=DEFENDANT),),
        rules=(COPY_IMPLIES_ACCESS,),
        constraints=(
            ProportionConstraint(
                target=Conjunction.of("Copy"), condition=Conjunction.of("Access", "Probative"), value=eta
            ),
        ),
        facts=(
            GroundFact(constant=DEFENDANT, literal=Literal.pos("Access")),
            GroundFact(constant=DEFENDANT, literal=Literal.pos("Probative")),
        ),
    )


def build_striking_kb(
    rho: Fraction | str | float,
    sigma: Fraction | str | float,
    no_access: bool = False,
) -> KnowledgeBase:
    """
    Striking similarity supports both access and copying.

    ``||Copy | Access & Striking|| ~= rho`` and ``||Access | Striking|| ~= sigma``
    with the fact ``Striking(xd)``; ``no_access`` adds ``not Access(xd)``.
    """
    rho = _probability("rho", rho)
    sigma = _probability("sigma", sigma)
    facts = [GroundFact(constant=DEFENDANT, literal=Literal.pos("Striking"))]
    if no_access:
        facts.append(GroundFact(constant=DEFENDANT, literal=Literal.neg("Access")))
    return KnowledgeBase(
        predicates=(PredicateSymbol(name="Access"), PredicateSymbol(name="Copy"), PredicateSymbol(name="Striking")),
        constants=(Constant(name=DEFENDANT),),
        rules=(COPY_IMPLIES_ACCESS,),
        constraints=(
            ProportionConstraint(
                target=Conjunction.of("Copy"), condition=Conjunction.of("Access", "Striking"), value=rho
            ),
            ProportionConstraint(target=Conjunction.of("Access"), condition=Conjunction.of("Striking"), value=sigma),
        ),
        facts=tuple(facts),
    )


class VerdictInput(BaseModel):
    """Belief in factual copying, the substantial-similarity finding, and the threshold."""

    model_config = ConfigDict(frozen=True, populate_by_name=True)

    copy_belief: Rational
    substantial: bool
    threshold: Rational = Field(DEFAULT_THRESHOLD, alias="lambda")

    @field_validator("copy_belief")
    @classmethod
    def _belief_range(cls, value: Fraction) -> Fraction:
        if not 0 <= value <= 1:
            raise ValueError(f"copy_belief must lie in [0, 1], got {value}")
        return value

    @field_validator("threshold")
    @classmethod
    def _threshold_range(cls, value: Fraction) -> Fraction:
        if not 0 < value < 1:
            raise ValueError(f"lambda must lie in (0, 1), got {value}")
        return value


def verdict(data: VerdictInput) -> bool:
    """Infringement: belief in copying strictly exceeds the threshold and similarity is substantial."""
    return data.copy_belief > data.threshold and data.substantial
