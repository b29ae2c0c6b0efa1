"""High-level Python API for random-worlds degrees of belief.

Example usage::

    from randworlds import Reasoner, parse_kb, parse_query

    kb = parse_kb(open("data/mistress.rwkb").read())
    query = parse_query("Murderer(Jane)", kb)

    reasoner = Reasoner()

    # Closed form first, counting worlds when no statistic applies
    outcome = reasoner.belief(kb, query)
    print(outcome.estimate.value, outcome.estimate.method)

    # Exact finite-N belief
    outcome = reasoner.belief(kb, query, method="exact", n=20, tau="1/10")

    # Convergence along the default schedule
    report = reasoner.converge(kb, query)
    print(report.limit_estimate)
"""

from __future__ import annotations

from enum import StrEnum
from fractions import Fraction
from typing import Any

from pydantic import BaseModel, ConfigDict

from randworlds.convergence import ConvergenceAnalyzer, ConvergenceReport, ConvergenceSchedule
from randworlds.errors import MissingRuleError, NotApplicableError
from randworlds.inference import DirectInferenceResult, LemmaRoles, infer, resolve, resolve_interval
from randworlds.irr import IrrConfig, Prop1Report, build_irr_case, check_prop1, copy_query, irr_belief
from randworlds.logging_config import get_logger
from randworlds.models import Conjunction, KnowledgeBase, Query, Rational, ToleranceSpec
from randworlds.naf import (
    AuditReport,
    NafConfig,
    OutcomeModel,
    Prop2Report,
    build_naf_case,
    check_prop2,
    naf_audit,
    naf_copy_bound,
)
from randworlds.scenarios import DEFENDANT, MistressVariant, build_mistress_kb, similarity_level
from randworlds.worlds import DEFAULT_BUDGET, BeliefEstimate, Method, belief, sample_belief

logger = get_logger()

DEFAULT_N = 20
DEFAULT_TAU = Fraction(1, 10)
DEFAULT_SAMPLES = 20_000


class BeliefMethod(StrEnum):
    AUTO = "auto"
    DIRECT = "direct"
    EXACT = "exact"
    MC = "mc"


class BeliefOutcome(BaseModel):
    """A degree of belief together with the path that produced it."""

    model_config = ConfigDict(frozen=True)

    query: str
    requested: BeliefMethod
    estimate: BeliefEstimate
    direct: DirectInferenceResult | None = None
    fallback_reason: str | None = None

    def to_dict(self) -> dict[str, Any]:
        data = self.model_dump(mode="json")
        data["estimate"] = self.estimate.to_dict()
        return data


class MistressRow(BaseModel):
    model_config = ConfigDict(frozen=True)

    variant: MistressVariant
    result: DirectInferenceResult


class IrrCase(BaseModel):
    """Closed-form belief for one (level, category) case next to the resolver's value."""

    model_config = ConfigDict(frozen=True)

    i: int
    j: int
    belief: Rational
    resolved: Rational
    exceeds_threshold: bool


class IrrAnalysis(BaseModel):
    model_config = ConfigDict(frozen=True)

    report: Prop1Report
    cases: tuple[IrrCase, ...]

    @property
    def ok(self) -> bool:
        return self.report.ok and all(c.belief == c.resolved for c in self.cases)

    def to_dict(self) -> dict[str, Any]:
        data = {"prop1": self.report.to_dict(), "cases": [c.model_dump(mode="json") for c in self.cases]}
        data["ok"] = self.ok
        return data


class NafLevel(BaseModel):
    """Bound on belief in copying at one level, and the interval the resolver derives."""

    model_config = ConfigDict(frozen=True)

    level: int
    bound: Rational
    access_interval: tuple[Rational, Rational]
    copy_interval: tuple[Rational, Rational]


class NafAnalysis(BaseModel):
    model_config = ConfigDict(frozen=True)

    config: NafConfig
    gamma: Rational
    levels: tuple[NafLevel, ...]
    prop2: Prop2Report
    audit: AuditReport | None = None

    @property
    def ok(self) -> bool:
        consistent = all(level.copy_interval[1] == level.bound for level in self.levels)
        return consistent and self.prop2.ok and (self.audit is None or self.audit.ok)

    def to_dict(self) -> dict[str, Any]:
        data: dict[str, Any] = {
            "config": self.config.to_dict(),
            "gamma": str(self.gamma),
            "levels": [level.model_dump(mode="json") for level in self.levels],
            "prop2": self.prop2.to_dict(),
            "audit": self.audit.to_dict() if self.audit else None,
        }
        data["ok"] = self.ok
        return data


class Reasoner:
    """Entry point tying direct inference, world counting and the scenario analyzers together.

    ``budget`` caps DP transitions per exact count, ``workers`` sets the
    process count for exact counting, and ``seed`` drives Monte Carlo.
    """

    def __init__(self, budget: int = DEFAULT_BUDGET, workers: int = 1, seed: int = 0) -> None:
        self.budget = budget
        self.workers = workers
        self.seed = seed

    def belief(
        self,
        kb: KnowledgeBase,
        query: Query,
        method: BeliefMethod | str = BeliefMethod.AUTO,
        n: int = DEFAULT_N,
        tau: ToleranceSpec | Fraction | str | float = DEFAULT_TAU,
        samples: int = DEFAULT_SAMPLES,
    ) -> BeliefOutcome:
        """
        Degree of belief in ``query`` given ``kb``.

        ``auto`` tries direct inference, then exact counting at ``n``; it
        never falls back to sampling.

        Args:
            kb: Knowledge base
            query: Query about one constant
            method: auto, direct, exact or mc
            n: Domain size for exact counting and sampling
            tau: Tolerance (a single value applies to every slot)
            samples: Monte Carlo sample count

        Returns:
            BeliefOutcome naming the path taken

        Raises:
            NotApplicableError: If method is direct and no pattern applies
            UnsatisfiableKBError: If no world of size ``n`` satisfies ``kb``
            IterationBudgetExceededError: If exact counting exceeds the budget
        """
        method = BeliefMethod(method)
        taus = tau if isinstance(tau, ToleranceSpec) else ToleranceSpec.uniform(tau)
        rendered = query.render()
        reason = None
        if method in (BeliefMethod.AUTO, BeliefMethod.DIRECT):
            try:
                result = infer(kb, query)
            except (NotApplicableError, MissingRuleError) as e:
                if method is BeliefMethod.DIRECT:
                    raise
                reason = str(e)
                logger.info(f"Direct inference does not apply ({reason}); counting worlds at N={n}")
            else:
                estimate = BeliefEstimate(value=result.estimate, method=Method.DIRECT)
                return BeliefOutcome(query=rendered, requested=method, estimate=estimate, direct=result)
        if method is BeliefMethod.MC:
            estimate = sample_belief(kb, query, n, taus, samples, seed=self.seed)
        else:
            estimate = belief(kb, query, n, taus, budget=self.budget, workers=self.workers)
        return BeliefOutcome(query=rendered, requested=method, estimate=estimate, fallback_reason=reason)

    def converge(
        self,
        kb: KnowledgeBase,
        query: Query,
        schedule: ConvergenceSchedule | str | None = None,
    ) -> ConvergenceReport:
        """Exact beliefs along ``schedule`` (text like ``"10:0.2,20:0.1"``, or the default)."""
        if isinstance(schedule, str):
            schedule = ConvergenceAnalyzer.parse_schedule(schedule)
        schedule = schedule or ConvergenceAnalyzer.default_schedule()
        return ConvergenceAnalyzer.converge(kb, query, schedule, budget=self.budget, workers=self.workers)

    def mistress(self) -> list[MistressRow]:
        """Resolve ``Murderer(Jane)`` on every variant of the murdering-mistress KB."""
        query = Query(constant="Jane", target=Conjunction.of("Murderer"))
        return [MistressRow(variant=v, result=resolve(build_mistress_kb(v), query)) for v in MistressVariant]

    def irr(self, config: IrrConfig) -> IrrAnalysis:
        """Least-index tables, the inverse ratio check, and per-case beliefs cross-checked by the resolver."""
        cases = []
        for i in range(1, config.n + 1):
            for j in range(1, config.m + 1):
                value = irr_belief(config, i, j)
                resolved = infer(build_irr_case(config, i, j), copy_query())
                cases.append(
                    IrrCase(
                        i=i,
                        j=j,
                        belief=value,
                        resolved=resolved.estimate,
                        exceeds_threshold=value > config.threshold,
                    )
                )
        return IrrAnalysis(report=check_prop1(config), cases=tuple(cases))

    def naf(self, config: NafConfig, outcome_model: OutcomeModel | None = None) -> NafAnalysis:
        """
        Copying bounds per similarity level, their derivation by the resolver,
        the Gamma checks around the configured point, and an optional audit.
        """
        levels = []
        for i in range(1, config.n + 1):
            kb = build_naf_case(config, i)
            phi0 = similarity_level(i, config.n)
            if not config.fold_generated:
                phi0 = phi0 & Conjunction.of("Generated")
            roles = LemmaRoles(phi0=phi0, theta=Conjunction.of("Access"), xi=Conjunction.of("Copy"))
            access = resolve_interval(kb, Query(constant=DEFENDANT, target=Conjunction.of("Access")), roles)
            copied = infer(kb, copy_query())
            levels.append(
                NafLevel(
                    level=i,
                    bound=naf_copy_bound(config, i),
                    access_interval=access.interval,
                    copy_interval=copied.interval,
                )
            )
        epsilons = [config.epsilon / 2, config.epsilon, config.epsilon * 2]
        deltas = sorted({Fraction(0), config.delta, Fraction(1)})
        prop2 = check_prop2(epsilons, deltas, config.gamma_spec)
        audit = naf_audit(outcome_model, config.gamma_spec) if outcome_model else None
        return NafAnalysis(config=config, gamma=config.gamma, levels=tuple(levels), prop2=prop2, audit=audit)
