"""Atom profiles: truth assignments to every predicate of a vocabulary.

A profile is stored as a bitmask where bit ``i`` is the truth value of the
``i``-th predicate in alphabetical order. In the single-variable unary
fragment, an element's profile decides every formula about it, so
entailment between conjunctions under the universal rules reduces to a
check over the feasible profiles.
"""

from __future__ import annotations

from collections.abc import Iterable, Sequence

from pydantic import BaseModel, ConfigDict

from randworlds.errors import ProfileCapExceededError, UnknownSymbolError
from randworlds.logging_config import get_logger
from randworlds.models import Conjunction, KnowledgeBase, UniversalRule

logger = get_logger()

PROFILE_CAP = 16


class AtomProfile(BaseModel):
    """Truth assignment over a vocabulary, backed by a bitmask."""

    model_config = ConfigDict(frozen=True)

    predicates: tuple[str, ...]
    mask: int

    def holds(self, predicate: str) -> bool:
        """Truth value of ``predicate`` under this profile."""
        try:
            index = self.predicates.index(predicate)
        except ValueError:
            raise UnknownSymbolError("predicate", predicate) from None
        return bool(self.mask >> index & 1)

    def as_dict(self) -> dict[str, bool]:
        return {p: bool(self.mask >> i & 1) for i, p in enumerate(self.predicates)}

    def render(self) -> str:
        if not self.predicates:
            return "{}"
        return "{" + ", ".join(f"{p}:{'T' if v else 'F'}" for p, v in self.as_dict().items()) + "}"


def _names(vocab: KnowledgeBase | Iterable[str]) -> tuple[str, ...]:
    if isinstance(vocab, KnowledgeBase):
        return vocab.predicate_names
    return tuple(sorted(vocab))


def atom_profiles(vocab: KnowledgeBase | Iterable[str], cap: int = PROFILE_CAP) -> list[AtomProfile]:
    """
    Enumerate all 2^k truth assignments over a vocabulary.

    Profiles come in binary-counter order: profile ``m`` assigns predicate
    ``i`` (alphabetical) the value of bit ``i`` of ``m``.

    Args:
        vocab: Knowledge base or iterable of predicate names
        cap: Largest vocabulary size accepted

    Returns:
        List of 2^k AtomProfile objects

    Raises:
        ProfileCapExceededError: If the vocabulary has more than ``cap`` predicates
    """
    names = _names(vocab)
    if len(names) > cap:
        raise ProfileCapExceededError(len(names), cap)
    return [AtomProfile(predicates=names, mask=m) for m in range(1 << len(names))]


def satisfies(profile: AtomProfile, formula: Conjunction) -> bool:
    """True iff every literal of ``formula`` holds under ``profile``."""
    return all(profile.holds(lit.predicate) != lit.negated for lit in formula.literals)


class ProfileSpace:
    """Feasible atom profiles of a knowledge base, with compiled formula tests.

    Conjunctions compile to a ``(care, value)`` mask pair: a profile ``m``
    satisfies the conjunction iff ``m & care == value``.
    """

    def __init__(
        self,
        predicates: Sequence[str],
        rules: Sequence[UniversalRule] = (),
        cap: int = PROFILE_CAP,
    ) -> None:
        self.predicates = tuple(sorted(predicates))
        if len(self.predicates) > cap:
            raise ProfileCapExceededError(len(self.predicates), cap)
        self.index = {p: i for i, p in enumerate(self.predicates)}
        self.rules = tuple(rules)
        compiled = [(self.compile(r.antecedent), self.compile(r.consequent)) for r in self.rules]
        self.feasible: tuple[int, ...] = tuple(
            m
            for m in range(1 << len(self.predicates))
            if all(m & ac != av or m & cc == cv for (ac, av), (cc, cv) in compiled)
        )
        logger.debug(
            f"{len(self.feasible)} of {1 << len(self.predicates)} profiles satisfy "
            f"{len(self.rules)} rule(s)"
        )

    @classmethod
    def of(cls, kb: KnowledgeBase, cap: int = PROFILE_CAP) -> ProfileSpace:
        return cls(kb.predicate_names, kb.rules, cap)

    def compile(self, formula: Conjunction) -> tuple[int, int]:
        """Compile a conjunction to its ``(care, value)`` masks."""
        care = value = 0
        for lit in formula.literals:
            try:
                bit = 1 << self.index[lit.predicate]
            except KeyError:
                raise UnknownSymbolError("predicate", lit.predicate) from None
            care |= bit
            if not lit.negated:
                value |= bit
        return care, value

    def profile(self, mask: int) -> AtomProfile:
        return AtomProfile(predicates=self.predicates, mask=mask)

    def models(self, formula: Conjunction, within: Iterable[int] | None = None) -> list[int]:
        """Feasible profiles (or profiles of ``within``) satisfying ``formula``."""
        care, value = self.compile(formula)
        pool = self.feasible if within is None else within
        return [m for m in pool if m & care == value]

    def consistent(self, formula: Conjunction) -> bool:
        """True iff some feasible profile satisfies ``formula``."""
        return bool(self.models(formula))

    def entails(self, premise: Conjunction, conclusion: Conjunction) -> bool:
        """Decide ``rules |- forall x (premise => conclusion)``."""
        care, value = self.compile(conclusion)
        return all(m & care == value for m in self.models(premise))

    def refutes(self, premise: Conjunction, conclusion: Conjunction) -> bool:
        """Decide ``rules |- forall x (premise => not conclusion)``."""
        care, value = self.compile(conclusion)
        return not any(m & care == value for m in self.models(premise))

    def equivalent(self, a: Conjunction, b: Conjunction, within: Conjunction | None = None) -> bool:
        """True iff ``a`` and ``b`` hold on the same feasible profiles (of ``within``)."""
        pool = self.feasible if within is None else self.models(within)
        return set(self.models(a, pool)) == set(self.models(b, pool))


def feasible_profiles(kb: KnowledgeBase, cap: int = PROFILE_CAP) -> list[AtomProfile]:
    """
    Profiles satisfying every universal rule of ``kb``, in canonical order.

    Args:
        kb: Knowledge base whose rules filter the profiles
        cap: Largest vocabulary size accepted

    Returns:
        Subset of :func:`atom_profiles` for the KB's vocabulary
    """
    space = ProfileSpace.of(kb, cap)
    return [space.profile(m) for m in space.feasible]
