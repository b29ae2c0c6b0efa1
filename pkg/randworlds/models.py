"""Data models for the single-variable random-worlds knowledge-base fragment.

Every predicate is unary (binary predicates are curried against a fixed
constant when the knowledge base is built), every proportion is over the
single variable ``x``, and all numeric data is held as exact rationals.
"""

from __future__ import annotations

from collections import Counter
from enum import StrEnum
from fractions import Fraction
from typing import Annotated, Any

from pydantic import (
    BaseModel,
    BeforeValidator,
    ConfigDict,
    Field,
    PlainSerializer,
    field_validator,
    model_validator,
)


def to_fraction(value: Any) -> Fraction:
    """Coerce ints, decimal or fraction strings, and floats to an exact Fraction.

    Floats go through their shortest repr, so ``0.6`` becomes ``3/5`` rather
    than the binary expansion.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise ValueError(f"Expected a rational number, got {value!r}")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        return Fraction(repr(value))
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as e:
            raise ValueError(f"Not a rational number: {value!r}") from e
    raise ValueError(f"Expected a rational number, got {value!r}")


def format_rational(value: Fraction) -> str:
    """Render a Fraction as ``"3/5"`` (or ``"1"`` for integers)."""
    return str(value)


Rational = Annotated[
    Fraction,
    BeforeValidator(to_fraction),
    PlainSerializer(format_rational, return_type=str, when_used="json"),
]


class _Frozen(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)


class Relation(StrEnum):
    """Comparison used by a proportion statement."""

    APPROX = "approx"
    AT_MOST = "at_most"
    AT_LEAST = "at_least"

    @property
    def symbol(self) -> str:
        """DSL spelling of the relation."""
        return {"approx": "~=", "at_most": "<=~", "at_least": ">=~"}[self.value]


class SourceSpan(_Frozen):
    """Location of a piece of DSL text (byte offsets plus 1-based line/column)."""

    begin: int = Field(description="Start offset (inclusive)")
    end: int = Field(description="End offset (exclusive)")
    line: int = Field(description="1-based line of the start offset")
    column: int = Field(description="1-based column of the start offset")

    @model_validator(mode="after")
    def _ordered(self) -> SourceSpan:
        if self.begin > self.end:
            raise ValueError(f"Span begin {self.begin} is after end {self.end}")
        return self


class ParseError(_Frozen):
    """A syntax or resolution error found while reading DSL text."""

    span: SourceSpan
    message: str = Field(min_length=1)
    expected: tuple[str, ...] = Field(default=(), description="Tokens that would have been accepted")

    def to_dict(self) -> dict[str, Any]:
        """Convert the error to a dictionary for JSON output."""
        return self.model_dump(mode="json")


class PredicateSymbol(_Frozen):
    """A unary predicate; ``curried_from`` records the binary original, if any."""

    name: str
    curried_from: str | None = Field(None, description="e.g. 'Mistress(x, John)'")


class Constant(_Frozen):
    """A named domain element such as ``Jane`` or the defendant's work ``xd``."""

    name: str


class Literal(_Frozen):
    """A possibly negated unary atom over the proportion variable."""

    predicate: str
    negated: bool = False

    @classmethod
    def pos(cls, predicate: str) -> Literal:
        return cls(predicate=predicate)

    @classmethod
    def neg(cls, predicate: str) -> Literal:
        return cls(predicate=predicate, negated=True)

    def complement(self) -> Literal:
        """The literal with the opposite polarity."""
        return Literal(predicate=self.predicate, negated=not self.negated)

    def render(self, term: str = "x") -> str:
        """Render as ``P(x)`` or ``not P(x)``."""
        atom = f"{self.predicate}({term})"
        return f"not {atom}" if self.negated else atom


class Conjunction(_Frozen):
    """An ordered conjunction of literals; the empty conjunction is truth."""

    literals: tuple[Literal, ...] = ()

    @classmethod
    def of(cls, *items: Literal | str) -> Conjunction:
        """Build a conjunction; plain strings are positive literals."""
        return cls(literals=tuple(Literal.pos(i) if isinstance(i, str) else i for i in items))

    @property
    def is_truth(self) -> bool:
        return not self.literals

    @property
    def predicates(self) -> tuple[str, ...]:
        """Predicate names in literal order (duplicates kept)."""
        return tuple(lit.predicate for lit in self.literals)

    def __and__(self, other: Conjunction) -> Conjunction:
        merged = list(self.literals)
        merged.extend(lit for lit in other.literals if lit not in merged)
        return Conjunction(literals=tuple(merged))

    def without(self, other: Conjunction) -> Conjunction:
        """The literals of this conjunction that do not occur in ``other``."""
        return Conjunction(literals=tuple(lit for lit in self.literals if lit not in other.literals))

    def contains(self, other: Conjunction) -> bool:
        """True iff every literal of ``other`` occurs here."""
        return all(lit in self.literals for lit in other.literals)

    def render(self, term: str = "x") -> str:
        """Render with ``&`` separators, or ``true`` when empty."""
        if self.is_truth:
            return "true"
        return " & ".join(lit.render(term) for lit in self.literals)


class UniversalRule(_Frozen):
    """``forall x: antecedent => consequent``."""

    antecedent: Conjunction = Conjunction()
    consequent: Conjunction = Conjunction()


class ProportionConstraint(_Frozen):
    """``||target | condition||_x  relation  value`` with a tolerance slot."""

    target: Conjunction
    condition: Conjunction = Conjunction()
    relation: Relation = Relation.APPROX
    value: Rational
    tolerance_index: int = 0

    @property
    def interval(self) -> tuple[Fraction, Fraction]:
        """The exact interval the statement asserts once tolerances vanish."""
        if self.relation is Relation.AT_MOST:
            return Fraction(0), self.value
        if self.relation is Relation.AT_LEAST:
            return self.value, Fraction(1)
        return self.value, self.value

    def window(self, tau: Fraction) -> tuple[Fraction | None, Fraction | None]:
        """Closed satisfaction window at tolerance ``tau``; None means unbounded."""
        if self.relation is Relation.AT_MOST:
            return None, self.value + tau
        if self.relation is Relation.AT_LEAST:
            return self.value - tau, None
        return self.value - tau, self.value + tau


class GroundFact(_Frozen):
    """A literal asserted about one constant, e.g. ``Apartment(Jane)``."""

    constant: str
    literal: Literal


class ToleranceSpec(_Frozen):
    """Tolerance vector; entry ``i`` serves constraints with ``tolerance_index == i``.

    A single-entry vector applies to every index.
    """

    taus: tuple[Rational, ...]

    @field_validator("taus")
    @classmethod
    def _positive(cls, taus: tuple[Fraction, ...]) -> tuple[Fraction, ...]:
        if not taus:
            raise ValueError("Tolerance vector must not be empty")
        if any(t <= 0 for t in taus):
            raise ValueError("Every tolerance must be strictly positive")
        return taus

    @classmethod
    def uniform(cls, tau: Fraction | str | float, size: int = 1) -> ToleranceSpec:
        return cls(taus=(to_fraction(tau),) * max(size, 1))

    def tau_for(self, index: int) -> Fraction:
        if len(self.taus) == 1:
            return self.taus[0]
        if not 0 <= index < len(self.taus):
            raise IndexError(f"No tolerance for index {index} (vector has {len(self.taus)})")
        return self.taus[index]

    def render(self) -> str:
        return ";".join(str(t) for t in self.taus)


class Query(_Frozen):
    """A conjunction of literals asserted about one constant, e.g. ``Copy(xd)``."""

    constant: str
    target: Conjunction

    def render(self) -> str:
        return self.target.render(self.constant)


class SourceMap(_Frozen):
    """Spans of DSL elements keyed by ``"<kind>:<index>"`` or ``"<kind>:<name>"``."""

    spans: dict[str, SourceSpan] = Field(default_factory=dict)


def _freeze(value: Any) -> Any:
    if isinstance(value, dict):
        return tuple(sorted((k, _freeze(v)) for k, v in value.items()))
    if isinstance(value, list | tuple):
        return tuple(_freeze(v) for v in value)
    return value


def _name_of(item: Any) -> str:
    return item.name if isinstance(item, BaseModel) else str(item["name"])


class KnowledgeBase(_Frozen):
    """Vocabulary, constants, universal rules, proportion constraints and ground facts.

    Predicates and constants are kept in alphabetical order. Structural
    equality ignores ``source_map``.
    """

    predicates: tuple[PredicateSymbol, ...] = ()
    constants: tuple[Constant, ...] = ()
    rules: tuple[UniversalRule, ...] = ()
    constraints: tuple[ProportionConstraint, ...] = ()
    facts: tuple[GroundFact, ...] = ()
    source_map: SourceMap | None = Field(default=None, exclude=True, repr=False)

    @model_validator(mode="before")
    @classmethod
    def _canonical_order(cls, data: Any) -> Any:
        if isinstance(data, dict):
            data = dict(data)
            for key in ("predicates", "constants"):
                if key in data and data[key] is not None:
                    data[key] = sorted(data[key], key=_name_of)
        return data

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, KnowledgeBase):
            return NotImplemented
        return self.model_dump() == other.model_dump()

    def __hash__(self) -> int:
        return hash(_freeze(self.model_dump()))

    @property
    def predicate_names(self) -> tuple[str, ...]:
        return tuple(p.name for p in self.predicates)

    @property
    def constant_names(self) -> tuple[str, ...]:
        return tuple(c.name for c in self.constants)

    def facts_for(self, constant: str) -> Conjunction:
        """Conjunction of every literal asserted about ``constant``."""
        return Conjunction(literals=tuple(f.literal for f in self.facts if f.constant == constant))

    def with_facts(self, *facts: GroundFact) -> KnowledgeBase:
        return self.model_copy(update={"facts": self.facts + facts, "source_map": None})

    def with_constraints(self, *constraints: ProportionConstraint) -> KnowledgeBase:
        return self.model_copy(
            update={"constraints": self.constraints + constraints, "source_map": None}
        )

    def without_facts(self, constant: str, predicate: str) -> KnowledgeBase:
        """Drop every fact about ``predicate`` for ``constant``."""
        kept = tuple(
            f for f in self.facts if not (f.constant == constant and f.literal.predicate == predicate)
        )
        return self.model_copy(update={"facts": kept, "source_map": None})

    def span_for(self, key: str) -> SourceSpan | None:
        """Source span of an element (e.g. ``"constraint:2"``) when parsed from text."""
        if self.source_map is None:
            return None
        return self.source_map.spans.get(key)

    def to_dict(self) -> dict[str, Any]:
        """Convert the knowledge base to a JSON-ready dictionary."""
        return self.model_dump(mode="json")


class ViolationKind(StrEnum):
    UNDECLARED_PREDICATE = "undeclared_predicate"
    UNDECLARED_CONSTANT = "undeclared_constant"
    DUPLICATE_DECLARATION = "duplicate_declaration"
    CONTRADICTORY_FACTS = "contradictory_facts"
    VALUE_OUT_OF_RANGE = "value_out_of_range"
    REPEATED_PREDICATE = "repeated_predicate"
    EMPTY_RULE = "empty_rule"
    BAD_TOLERANCE_INDEX = "bad_tolerance_index"


class Violation(_Frozen):
    """One well-formedness problem found by :func:`validate_kb`."""

    kind: ViolationKind
    message: str
    location: str | None = Field(None, description="Element key such as 'constraint:2'")
    span: SourceSpan | None = None


class ValidationReport(_Frozen):
    """Result of :func:`validate_kb`; an empty violation list means well-formed."""

    violations: tuple[Violation, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def of_kind(self, kind: ViolationKind) -> list[Violation]:
        return [v for v in self.violations if v.kind is kind]

    def to_dict(self) -> dict[str, Any]:
        return {"ok": self.ok, "violations": [v.model_dump(mode="json") for v in self.violations]}


def validate_kb(kb: KnowledgeBase) -> ValidationReport:
    """
    Check a knowledge base for well-formedness.

    Reports undeclared or duplicated symbols, contradictory facts, values
    outside [0, 1], predicates repeated inside one conjunction, rules with
    both sides empty, and negative tolerance indices. Never raises.

    Args:
        kb: Knowledge base to check

    Returns:
        ValidationReport listing every violation found
    """
    violations: list[Violation] = []

    def add(kind: ViolationKind, message: str, location: str | None, span_key: str | None = None) -> None:
        span = kb.span_for(span_key or location) if location else None
        violations.append(Violation(kind=kind, message=message, location=location, span=span))

    for kind, prefix, names in (
        ("predicate", "pred", kb.predicate_names),
        ("constant", "const", kb.constant_names),
    ):
        for name, count in Counter(names).items():
            if count > 1:
                add(ViolationKind.DUPLICATE_DECLARATION, f"{kind} {name} declared {count} times", f"{prefix}:{name}")

    declared = set(kb.predicate_names)
    constants = set(kb.constant_names)

    def check_conjunction(conj: Conjunction, location: str) -> None:
        for name in conj.predicates:
            if name not in declared:
                add(ViolationKind.UNDECLARED_PREDICATE, f"undeclared predicate {name} in {location}", location)
        for name, count in Counter(conj.predicates).items():
            if count > 1:
                add(ViolationKind.REPEATED_PREDICATE, f"predicate {name} appears {count} times in one conjunction ({location})", location)

    for i, rule in enumerate(kb.rules):
        location = f"rule:{i}"
        if rule.antecedent.is_truth and rule.consequent.is_truth:
            add(ViolationKind.EMPTY_RULE, f"rule {i} has both sides empty", location)
        check_conjunction(rule.antecedent, location)
        check_conjunction(rule.consequent, location)

    for i, constraint in enumerate(kb.constraints):
        location = f"constraint:{i}"
        check_conjunction(constraint.target, location)
        check_conjunction(constraint.condition, location)
        if not 0 <= constraint.value <= 1:
            add(
                ViolationKind.VALUE_OUT_OF_RANGE,
                f"value {constraint.value} of constraint {i} is outside [0, 1]",
                location,
                f"{location}:value",
            )
        if constraint.tolerance_index < 0:
            add(ViolationKind.BAD_TOLERANCE_INDEX, f"negative tolerance index in constraint {i}", location)

    asserted: dict[tuple[str, str], set[bool]] = {}
    for i, fact in enumerate(kb.facts):
        location = f"fact:{i}"
        if fact.constant not in constants:
            add(ViolationKind.UNDECLARED_CONSTANT, f"undeclared constant {fact.constant} in {location}", location)
        if fact.literal.predicate not in declared:
            add(ViolationKind.UNDECLARED_PREDICATE, f"undeclared predicate {fact.literal.predicate} in {location}", location)
        polarities = asserted.setdefault((fact.constant, fact.literal.predicate), set())
        polarities.add(not fact.literal.negated)
        if len(polarities) == 2 and not any(
            v.kind is ViolationKind.CONTRADICTORY_FACTS and v.message.startswith(f"{fact.literal.predicate}({fact.constant})")
            for v in violations
        ):
            add(
                ViolationKind.CONTRADICTORY_FACTS,
                f"{fact.literal.predicate}({fact.constant}) is asserted both true and false",
                location,
            )

    return ValidationReport(violations=tuple(violations))
