"""Exception hierarchy for randworlds.

Report-valued operations (validation, interval-rule conditions, IRR and NAF checks) never
raise for their findings; everything here signals that an operation could not
produce its result.
"""

from __future__ import annotations

from typing import TYPE_CHECKING

if TYPE_CHECKING:
    from fractions import Fraction

    from randworlds.models import ParseError, ValidationReport


class RandWorldsError(Exception):
    """Base class for all randworlds errors."""


class ProfileCapExceededError(RandWorldsError):
    """The vocabulary is too large to enumerate atom profiles."""

    def __init__(self, size: int, cap: int) -> None:
        super().__init__(f"Vocabulary has {size} predicates; profile enumeration is capped at {cap}")
        self.size = size
        self.cap = cap


class UnknownSymbolError(RandWorldsError):
    """A formula or query mentions a predicate or constant that is not declared."""

    def __init__(self, kind: str, name: str) -> None:
        super().__init__(f"Unknown {kind}: {name}")
        self.kind = kind
        self.name = name


class KBParseError(RandWorldsError):
    """The knowledge-base text is not syntactically valid."""

    def __init__(self, errors: list[ParseError]) -> None:
        first = errors[0]
        super().__init__(
            f"line {first.span.line}, column {first.span.column}: {first.message}"
            + (f" ({len(errors) - 1} more)" if len(errors) > 1 else "")
        )
        self.errors = errors


class KBValidationError(RandWorldsError):
    """The knowledge base parsed, but is not well-formed."""

    def __init__(self, report: ValidationReport) -> None:
        messages = "; ".join(v.message for v in report.violations)
        super().__init__(f"Knowledge base is invalid: {messages}")
        self.report = report


class DomainTooSmallError(RandWorldsError):
    """The domain cannot hold one distinct element per constant."""

    def __init__(self, n: int, constants: int) -> None:
        super().__init__(f"Domain size {n} is smaller than the number of constants ({constants})")
        self.n = n
        self.constants = constants


class UnsatisfiableKBError(RandWorldsError):
    """No world of the given size satisfies the knowledge base at the given tolerances."""

    def __init__(self, n: int, taus: tuple[Fraction, ...]) -> None:
        rendered = ", ".join(str(t) for t in taus)
        super().__init__(
            f"No world satisfies the knowledge base at N={n}, tau=({rendered}); "
            f"proportions at this size are multiples of 1/{n}, try a looser tolerance"
        )
        self.n = n
        self.taus = taus


class IterationBudgetExceededError(RandWorldsError):
    """Exact counting would exceed the configured iteration budget."""

    def __init__(self, budget: int) -> None:
        super().__init__(
            f"Exact counting exceeded the iteration budget of {budget:,} steps; "
            "use Monte Carlo sampling (--method mc) or raise RANDWORLDS_BUDGET"
        )
        self.budget = budget


class ZeroAcceptanceError(RandWorldsError):
    """Monte Carlo sampling accepted no world."""

    def __init__(self, samples: int) -> None:
        super().__init__(f"None of {samples:,} sampled worlds satisfied the knowledge base")
        self.samples = samples


class NotApplicableError(RandWorldsError):
    """Direct inference cannot resolve the query; fall back to enumeration."""


class AmbiguousReferenceClassesError(NotApplicableError):
    """Two incomparable reference classes both match the query constant."""

    def __init__(self, conditions: list[str]) -> None:
        super().__init__("Incomparable most-specific reference classes: " + " vs ".join(conditions))
        self.conditions = conditions


class MissingRuleError(RandWorldsError):
    """Total-probability decomposition needs a rule query => pivot."""


class LemmaConditionsUnmetError(RandWorldsError):
    """The interval corollary does not apply because a lemma condition fails."""

    def __init__(self, failed: list[int]) -> None:
        super().__init__("Lemma conditions not satisfied: " + ", ".join(str(i) for i in failed))
        self.failed = failed


class UnboundedRatioError(RandWorldsError):
    """An outcome event is possible with access but impossible without it."""

    def __init__(self, level: int) -> None:
        super().__init__(
            f"Similarity level {level} has zero probability without access but positive "
            "probability with access; no finite epsilon satisfies NAF"
        )
        self.level = level
