"""Degree-of-belief computation by counting possible worlds.

A world of size N assigns an atom profile to each of N domain elements.
Every constant denotes its own fixed element, and the remaining N - |C|
elements are free. A world satisfies the knowledge base when every element
satisfies the universal rules, every constant satisfies its facts, and for
every proportion constraint ``||t | c||_x`` the reference class is nonempty
and the observed proportion lies in the constraint's closed window.

Exact counting groups feasible profiles by their signature (for each
constraint: outside the condition, in it without the target, in both) and
runs a dynamic program over groups. The state holds the number of free
elements placed so far and the (condition, target) counts of every
constraint still open; a constraint is checked and dropped from the state
once the last group touching it has been placed.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter, defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from enum import StrEnum
from fractions import Fraction
from typing import Any

import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator

from randworlds.errors import (
    DomainTooSmallError,
    IterationBudgetExceededError,
    UnknownSymbolError,
    UnsatisfiableKBError,
    ZeroAcceptanceError,
)
from randworlds.logging_config import get_logger
from randworlds.models import Conjunction, KnowledgeBase, ProportionConstraint, Query, Rational, ToleranceSpec
from randworlds.profiles import PROFILE_CAP, ProfileSpace

logger = get_logger()

DEFAULT_BUDGET = 10**8
MC_SHARD_SIZE = 4096
WILSON_Z = 1.959963984540054


class Method(StrEnum):
    """How a degree of belief was obtained."""

    EXACT = "ExactEnumeration"
    MONTE_CARLO = "MonteCarlo"
    DIRECT = "DirectInference"


class BeliefEstimate(BaseModel):
    """A finite-N degree of belief with its provenance.

    ``model_count`` is the number of worlds satisfying the KB (the
    denominator); ``query_count`` those also satisfying the query.
    Monte Carlo estimates carry a 95% Wilson half-width instead.
    """

    model_config = ConfigDict(frozen=True)

    value: Rational
    method: Method
    n: int | None = None
    taus: tuple[Rational, ...] = ()
    model_count: int | None = None
    query_count: int | None = None
    half_width: float | None = None
    samples: int | None = None
    accepted: int | None = None
    acceptance_rate: float | None = None

    @model_validator(mode="after")
    def _check(self) -> BeliefEstimate:
        if not 0 <= self.value <= 1:
            raise ValueError(f"Belief {self.value} is outside [0, 1]")
        if self.method is Method.MONTE_CARLO and not (self.half_width and self.half_width > 0):
            raise ValueError("Monte Carlo estimates need a positive half-width")
        return self

    @property
    def decimal(self) -> float:
        return float(self.value)

    def to_dict(self) -> dict[str, Any]:
        data = self.model_dump(mode="json")
        data["decimal"] = self.decimal
        return data


def _check_domain(kb: KnowledgeBase, n: int) -> None:
    if n < 1 or n < len(kb.constants):
        raise DomainTooSmallError(n, len(kb.constants))


def _constant_literals(kb: KnowledgeBase, query: Query | None) -> list[Conjunction]:
    """Per-constant conjunction of facts, with the query adjoined to its constant."""
    names = kb.constant_names
    if query is not None and query.constant not in names:
        raise UnknownSymbolError("constant", query.constant)
    result = []
    for name in names:
        known = kb.facts_for(name)
        if query is not None and query.constant == name:
            known = known & query.target
        result.append(known)
    return result


def _window_bounds(constraint: ProportionConstraint, tau: Fraction, n: int) -> tuple[tuple[int, int], ...]:
    """For each reference-class size c in 0..n, the allowed target counts [lo, hi]."""
    low, high = constraint.window(tau)
    bounds = [(1, 0)]
    for c in range(1, n + 1):
        lo = 0 if low is None else max(0, math.ceil(low * c))
        hi = c if high is None else min(c, math.floor(high * c))
        bounds.append((lo, hi))
    return tuple(bounds)


def _taus_for(kb: KnowledgeBase, taus: ToleranceSpec) -> list[Fraction]:
    try:
        return [taus.tau_for(c.tolerance_index) for c in kb.constraints]
    except IndexError as e:
        raise ValueError(str(e)) from e


@dataclass(frozen=True)
class CountPlan:
    """Everything the grouped counter needs, as plain picklable data."""

    free: int
    weights: tuple[int, ...]
    deltas: tuple[tuple[int, ...], ...]
    closing: tuple[tuple[int, ...], ...]
    closed_upfront: tuple[int, ...]
    bounds: tuple[tuple[tuple[int, int], ...], ...]
    neutral: int
    initial: tuple[tuple[tuple[int, ...], int], ...]

    @property
    def groups(self) -> int:
        return len(self.weights)


def _order_groups(touches: list[frozenset[int]]) -> list[int]:
    """Greedy group order keeping as few constraints open as possible."""
    remaining = list(range(len(touches)))
    pending: Counter[int] = Counter(s for t in touches for s in t)
    opened: set[int] = set()
    order: list[int] = []
    while remaining:

        def cost(g: int) -> tuple[int, int, int]:
            after = opened | touches[g]
            closes = {s for s in touches[g] if pending[s] == 1}
            return (len(after - closes), len(touches[g] - opened), g)

        best = min(remaining, key=cost)
        remaining.remove(best)
        order.append(best)
        opened |= touches[best]
        for s in touches[best]:
            pending[s] -= 1
            if pending[s] == 0:
                opened.discard(s)
    return order


def build_plan(
    kb: KnowledgeBase,
    n: int,
    taus: ToleranceSpec,
    query: Query | None = None,
    cap: int = PROFILE_CAP,
) -> CountPlan | None:
    """
    Compile a KB into a grouped counting plan.

    Returns None when some constant has no profile consistent with its facts
    (the count is then zero).
    """
    _check_domain(kb, n)
    space = ProfileSpace.of(kb, cap)
    constraints = kb.constraints
    compiled = [(space.compile(c.condition), space.compile(c.target)) for c in constraints]

    def signature(mask: int) -> tuple[int, ...]:
        sig = []
        for (cc, cv), (tc, tv) in compiled:
            if mask & cc != cv:
                sig.append(0)
            else:
                sig.append(2 if mask & tc == tv else 1)
        return tuple(sig)

    def delta(sig: tuple[int, ...]) -> tuple[int, ...]:
        out: list[int] = []
        for code in sig:
            out.extend((1 if code else 0, 1 if code == 2 else 0))
        return tuple(out)

    initial: Counter[tuple[int, ...]] = Counter({(0,) * (2 * len(constraints)): 1})
    for known in _constant_literals(kb, query):
        options = Counter(delta(signature(m)) for m in space.models(known))
        if not options:
            return None
        combined: Counter[tuple[int, ...]] = Counter()
        for stats, weight in initial.items():
            for inc, count in options.items():
                combined[tuple(a + b for a, b in zip(stats, inc, strict=True))] += weight * count
        initial = combined

    groups = Counter(signature(m) for m in space.feasible)
    neutral_sig = (0,) * len(constraints)
    neutral = groups.pop(neutral_sig, 0)
    sigs = sorted(groups)
    touches = [frozenset(s for s, code in enumerate(sig) if code) for sig in sigs]
    order = _order_groups(touches)
    sigs = [sigs[g] for g in order]
    touches = [touches[g] for g in order]

    last_touch: dict[int, int] = {}
    for g, touched in enumerate(touches):
        for s in touched:
            last_touch[s] = g
    closing = tuple(tuple(sorted(s for s, g in last_touch.items() if g == i)) for i in range(len(sigs)))
    closed_upfront = tuple(s for s in range(len(constraints)) if s not in last_touch)

    tau_values = _taus_for(kb, taus)
    bounds = tuple(_window_bounds(c, t, n) for c, t in zip(constraints, tau_values, strict=True))
    logger.debug(
        f"Plan: {len(space.feasible)} feasible profiles, {len(sigs)} signature groups, "
        f"neutral weight {neutral}, {len(initial)} constant placements"
    )
    return CountPlan(
        free=n - len(kb.constants),
        weights=tuple(groups[s] for s in sigs),
        deltas=tuple(delta(s) for s in sigs),
        closing=closing,
        closed_upfront=closed_upfront,
        bounds=bounds,
        neutral=neutral,
        initial=tuple(sorted(initial.items())),
    )


def _close(
    states: dict[tuple[int, ...], int],
    constraints: tuple[int, ...],
    bounds: tuple[tuple[tuple[int, int], ...], ...],
) -> dict[tuple[int, ...], int]:
    if not constraints:
        return states
    closed: dict[tuple[int, ...], int] = defaultdict(int)
    for key, weight in states.items():
        state = list(key)
        ok = True
        for s in constraints:
            c, t = state[1 + 2 * s], state[2 + 2 * s]
            lo, hi = bounds[s][c]
            if not lo <= t <= hi:
                ok = False
                break
            state[1 + 2 * s] = state[2 + 2 * s] = 0
        if ok:
            closed[tuple(state)] += weight
    return closed


def run_plan(plan: CountPlan, budget: int = DEFAULT_BUDGET, first_counts: tuple[int, ...] | None = None) -> int:
    """
    Execute a counting plan.

    Args:
        plan: Plan from :func:`build_plan`
        budget: Maximum number of DP transitions
        first_counts: Restrict the first group's element count to these values
            (used to split work across processes)

    Returns:
        Exact number of satisfying worlds (restricted to ``first_counts``)

    Raises:
        IterationBudgetExceededError: If more than ``budget`` transitions are needed
    """
    states: dict[tuple[int, ...], int] = defaultdict(int)
    for stats, weight in plan.initial:
        states[(0, *stats)] += weight
    states = _close(states, plan.closed_upfront, plan.bounds)

    transitions = 0
    for g, (weight, delta) in enumerate(zip(plan.weights, plan.deltas, strict=True)):
        powers = [weight**k for k in range(plan.free + 1)]
        active = [i for i, d in enumerate(delta) if d]
        nxt: dict[tuple[int, ...], int] = defaultdict(int)
        for key, count in states.items():
            used = key[0]
            rest = plan.free - used
            choices: Any = range(rest + 1)
            if g == 0 and first_counts is not None:
                choices = [k for k in first_counts if k <= rest]
            for k in choices:
                transitions += 1
                if transitions > budget:
                    raise IterationBudgetExceededError(budget)
                state = list(key)
                state[0] = used + k
                for i in active:
                    state[1 + i] += k
                nxt[tuple(state)] += count * math.comb(rest, k) * powers[k]
        states = _close(nxt, plan.closing[g], plan.bounds)
        logger.debug(f"Group {g + 1}/{plan.groups}: {len(states)} states, {transitions} transitions")

    return sum(count * plan.neutral ** (plan.free - key[0]) for key, count in states.items())


def _run_partition(args: tuple[CountPlan, int, tuple[int, ...]]) -> int:
    plan, budget, counts = args
    return run_plan(plan, budget, counts)


def count_models(
    kb: KnowledgeBase,
    n: int,
    taus: ToleranceSpec,
    query: Query | None = None,
    budget: int = DEFAULT_BUDGET,
    workers: int = 1,
) -> int:
    """
    Count the worlds of size ``n`` satisfying ``kb`` (and ``query``, if given).

    Args:
        kb: Knowledge base
        n: Domain size, at least the number of constants
        taus: Tolerance vector for the proportion windows
        query: Optional query adjoined to its constant's facts
        budget: Maximum number of DP transitions (per worker)
        workers: Processes sharing the first group's element counts

    Returns:
        Exact world count (arbitrary-precision integer)

    Raises:
        DomainTooSmallError: If ``n`` is smaller than the number of constants
        IterationBudgetExceededError: If the DP exceeds ``budget`` transitions
    """
    plan = build_plan(kb, n, taus, query)
    if plan is None:
        return 0
    if workers <= 1 or not plan.weights or plan.free == 0:
        return run_plan(plan, budget)
    parts = [tuple(range(r, plan.free + 1, workers)) for r in range(workers)]
    parts = [p for p in parts if p]
    logger.debug(f"Counting with {len(parts)} worker processes")
    with ProcessPoolExecutor(max_workers=len(parts)) as pool:
        return sum(pool.map(_run_partition, [(plan, budget, p) for p in parts]))


def count_models_naive(
    kb: KnowledgeBase,
    n: int,
    taus: ToleranceSpec,
    query: Query | None = None,
) -> int:
    """
    Count satisfying worlds by enumerating all 2^(kN) of them one by one.

    Only usable for tiny vocabularies and domains; serves as the reference
    the grouped counter is tested against.
    """
    _check_domain(kb, n)
    space = ProfileSpace.of(kb)
    k = len(space.predicates)
    rules = [(space.compile(r.antecedent), space.compile(r.consequent)) for r in kb.rules]
    known = [space.compile(c) for c in _constant_literals(kb, query)]
    tau_values = _taus_for(kb, taus)
    stats = [
        (space.compile(c.condition), space.compile(c.target), c.window(t))
        for c, t in zip(kb.constraints, tau_values, strict=True)
    ]

    def element_ok(mask: int, position: int) -> bool:
        for (ac, av), (cc, cv) in rules:
            if mask & ac == av and mask & cc != cv:
                return False
        if position < len(known):
            care, value = known[position]
            return mask & care == value
        return True

    total = 0
    for world in itertools.product(range(1 << k), repeat=n):
        if not all(element_ok(m, i) for i, m in enumerate(world)):
            continue
        ok = True
        for (cc, cv), (tc, tv), (low, high) in stats:
            members = [m for m in world if m & cc == cv]
            if not members:
                ok = False
                break
            proportion = Fraction(sum(1 for m in members if m & tc == tv), len(members))
            if (low is not None and proportion < low) or (high is not None and proportion > high):
                ok = False
                break
        if ok:
            total += 1
    return total


def belief(
    kb: KnowledgeBase,
    query: Query,
    n: int,
    taus: ToleranceSpec,
    budget: int = DEFAULT_BUDGET,
    workers: int = 1,
) -> BeliefEstimate:
    """
    Exact finite-N degree of belief: count(kb and query) / count(kb).

    Raises:
        UnsatisfiableKBError: If no world of size ``n`` satisfies ``kb``
    """
    denominator = count_models(kb, n, taus, budget=budget, workers=workers)
    if denominator == 0:
        raise UnsatisfiableKBError(n, taus.taus)
    numerator = count_models(kb, n, taus, query=query, budget=budget, workers=workers)
    logger.info(f"N={n}: {numerator} of {denominator} worlds satisfy {query.render()}")
    return BeliefEstimate(
        value=Fraction(numerator, denominator),
        method=Method.EXACT,
        n=n,
        taus=taus.taus,
        model_count=denominator,
        query_count=numerator,
    )


def wilson_half_width(hits: int, trials: int, z: float = WILSON_Z) -> float:
    """Half-width of the Wilson score interval for ``hits`` successes in ``trials``."""
    p = hits / trials
    z2 = z * z
    return z * math.sqrt(p * (1 - p) / trials + z2 / (4 * trials * trials)) / (1 + z2 / trials)


def _window_test(low: Fraction | None, high: Fraction | None, c: np.ndarray, t: np.ndarray) -> np.ndarray:
    ok = c > 0
    widest = max((abs(b.numerator) + b.denominator for b in (low, high) if b is not None), default=0)
    if widest * (int(c.max(initial=0)) + 1) >= 2**62:
        # exact Python integers once int64 products could overflow
        c, t = c.astype(object), t.astype(object)
    if low is not None:
        ok &= np.asarray(t * low.denominator >= low.numerator * c, dtype=bool)
    if high is not None:
        ok &= np.asarray(t * high.denominator <= high.numerator * c, dtype=bool)
    return ok


def sample_belief(
    kb: KnowledgeBase,
    query: Query,
    n: int,
    taus: ToleranceSpec,
    samples: int,
    seed: int = 0,
    shard_size: int = MC_SHARD_SIZE,
) -> BeliefEstimate:
    """
    Monte Carlo estimate of the finite-N belief.

    Worlds are drawn uniformly among those satisfying the rules and facts
    (each free element gets a uniform feasible profile, each constant a
    uniform profile consistent with its facts) and rejected unless every
    proportion constraint holds. Shard ``i`` uses the generator seeded with
    ``(seed, i)``, so results depend only on ``seed`` and ``samples``.

    Raises:
        ZeroAcceptanceError: If no sampled world satisfies the constraints
    """
    if samples < 1:
        raise ValueError("samples must be at least 1")
    _check_domain(kb, n)
    space = ProfileSpace.of(kb)
    feasible = np.array(space.feasible, dtype=np.int64)
    allowed = [np.array(space.models(c), dtype=np.int64) for c in _constant_literals(kb, None)]
    if feasible.size == 0 or any(a.size == 0 for a in allowed):
        raise ZeroAcceptanceError(samples)
    position = kb.constant_names.index(query.constant) if query.constant in kb.constant_names else None
    if position is None:
        raise UnknownSymbolError("constant", query.constant)
    q_care, q_value = space.compile(query.target)
    tau_values = _taus_for(kb, taus)
    tests = [
        (space.compile(c.condition), space.compile(c.target), c.window(t))
        for c, t in zip(kb.constraints, tau_values, strict=True)
    ]
    free = n - len(allowed)

    accepted = hits = 0
    for shard, start in enumerate(range(0, samples, shard_size)):
        size = min(shard_size, samples - start)
        rng = np.random.default_rng([seed, shard])
        columns = [a[rng.integers(0, a.size, size=size)] for a in allowed]
        worlds = np.column_stack([*columns, feasible[rng.integers(0, feasible.size, size=(size, free))]])
        ok = np.ones(size, dtype=bool)
        for (cc, cv), (tc, tv), (low, high) in tests:
            members = (worlds & cc) == cv
            c = members.sum(axis=1)
            t = (members & ((worlds & tc) == tv)).sum(axis=1)
            ok &= _window_test(low, high, c, t)
        hit = ok & ((worlds[:, position] & q_care) == q_value)
        accepted += int(ok.sum())
        hits += int(hit.sum())
        logger.debug(f"Shard {shard}: accepted {int(ok.sum())} of {size}")

    if accepted == 0:
        raise ZeroAcceptanceError(samples)
    logger.info(f"Monte Carlo N={n}: {hits} hits among {accepted} accepted of {samples} samples")
    return BeliefEstimate(
        value=Fraction(hits, accepted),
        method=Method.MONTE_CARLO,
        n=n,
        taus=taus.taus,
        half_width=wilson_half_width(hits, accepted),
        samples=samples,
        accepted=accepted,
        acceptance_rate=accepted / samples,
    )
