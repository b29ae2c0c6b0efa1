"""Convergence diagnostics for finite-N beliefs approaching the random-worlds limit."""

from __future__ import annotations

from enum import StrEnum
from fractions import Fraction
from typing import Any, ClassVar

from pydantic import BaseModel, ConfigDict, Field, model_validator

from randworlds.errors import IterationBudgetExceededError, UnsatisfiableKBError
from randworlds.logging_config import get_logger
from randworlds.models import KnowledgeBase, Query, Rational, ToleranceSpec, to_fraction
from randworlds.worlds import DEFAULT_BUDGET, BeliefEstimate, belief

logger = get_logger()

DEFAULT_SIZES = (10, 20, 40, 60, 80)
MIN_DEFAULT_TAU = Fraction(1, 50)

INTERLEAVING_NOTE = (
    "Finite schedule: N grows and tau shrinks together; the limit takes N to infinity "
    "before tau to zero, so the last point only approximates it."
)


class PointStatus(StrEnum):
    OK = "ok"
    UNSATISFIABLE = "unsatisfiable"
    BUDGET_EXCEEDED = "budget_exceeded"


class SchedulePoint(BaseModel):
    model_config = ConfigDict(frozen=True)

    n: int = Field(gt=0)
    taus: ToleranceSpec


class ConvergenceSchedule(BaseModel):
    """Ordered (N, tolerance) pairs: N strictly increasing, tolerances nonincreasing."""

    model_config = ConfigDict(frozen=True)

    points: tuple[SchedulePoint, ...] = Field(min_length=1)

    @model_validator(mode="after")
    def _ordered(self) -> ConvergenceSchedule:
        for prev, cur in zip(self.points, self.points[1:], strict=False):
            if cur.n <= prev.n:
                raise ValueError(f"Schedule sizes must strictly increase ({prev.n} then {cur.n})")
            width = max(len(prev.taus.taus), len(cur.taus.taus))
            for i in range(width):
                if cur.taus.tau_for(i) > prev.taus.tau_for(i):
                    raise ValueError(f"Tolerances must not increase along the schedule (N={cur.n})")
        return self

    def render(self) -> str:
        return ",".join(f"{p.n}:{p.taus.render()}" for p in self.points)


class ConvergencePoint(BaseModel):
    """One schedule point: the estimate, or why there is none."""

    model_config = ConfigDict(frozen=True)

    n: int
    taus: tuple[Rational, ...]
    status: PointStatus
    estimate: BeliefEstimate | None = None
    delta: Rational | None = Field(None, description="Change from the previous successful point")
    message: str | None = None


class ConvergenceReport(BaseModel):
    """Per-point beliefs plus monotonicity and Cauchy-style diagnostics."""

    model_config = ConfigDict(frozen=True)

    query: str
    points: tuple[ConvergencePoint, ...]
    limit_estimate: Rational | None = Field(None, description="Value at the last successful point")
    final_delta: Rational | None = None
    monotone: bool = True
    cauchy: bool = Field(True, description="Absolute deltas never grow along the schedule")
    note: str = INTERLEAVING_NOTE

    def to_dict(self) -> dict[str, Any]:
        return self.model_dump(mode="json")


class ConvergenceAnalyzer:
    """Builds schedules and runs belief computations along them."""

    CSV_COLUMNS: ClassVar[list[str]] = [
        "N",
        "tau",
        "belief_num",
        "belief_den",
        "belief_decimal",
        "model_count_digits",
        "status",
    ]

    @staticmethod
    def default_schedule(sizes: tuple[int, ...] = DEFAULT_SIZES) -> ConvergenceSchedule:
        """N in ``sizes`` with tau = max(1/50, 2/N) for every tolerance slot."""
        return ConvergenceSchedule(
            points=tuple(
                SchedulePoint(n=n, taus=ToleranceSpec.uniform(max(MIN_DEFAULT_TAU, Fraction(2, n))))
                for n in sizes
            )
        )

    @staticmethod
    def parse_schedule(text: str) -> ConvergenceSchedule:
        """
        Parse a schedule such as ``"10:0.2,20:1/10"``.

        A KB with several tolerance slots takes ``;``-separated vectors:
        ``"20:0.1;0.05,40:0.05;0.02"``.

        Raises:
            ValueError: If the text is malformed or the schedule is not ordered
        """
        text = text.strip()
        if not text:
            raise ValueError("Schedule cannot be empty")
        points = []
        for item in text.split(","):
            n_text, sep, tau_text = item.partition(":")
            if not sep:
                raise ValueError(f"Invalid schedule point '{item}'. Expected format like '20:0.1'")
            try:
                n = int(n_text)
            except ValueError as e:
                raise ValueError(f"Invalid domain size '{n_text}'") from e
            taus = tuple(to_fraction(t) for t in tau_text.split(";"))
            points.append(SchedulePoint(n=n, taus=ToleranceSpec(taus=taus)))
        return ConvergenceSchedule(points=tuple(points))

    @staticmethod
    def converge(
        kb: KnowledgeBase,
        query: Query,
        schedule: ConvergenceSchedule,
        budget: int = DEFAULT_BUDGET,
        workers: int = 1,
    ) -> ConvergenceReport:
        """
        Compute the exact belief at every schedule point.

        Unsatisfiable points and budget refusals are recorded and the schedule
        continues.

        Args:
            kb: Knowledge base
            query: Query to evaluate
            schedule: (N, tolerance) pairs
            budget: DP transition budget per point
            workers: Worker processes per point

        Returns:
            ConvergenceReport with per-point results and diagnostics
        """
        points: list[ConvergencePoint] = []
        values: list[Fraction] = []
        deltas: list[Fraction] = []
        for point in schedule.points:
            try:
                estimate = belief(kb, query, point.n, point.taus, budget=budget, workers=workers)
            except UnsatisfiableKBError as e:
                logger.info(f"N={point.n}: unsatisfiable")
                points.append(
                    ConvergencePoint(
                        n=point.n, taus=point.taus.taus, status=PointStatus.UNSATISFIABLE, message=str(e)
                    )
                )
                continue
            except IterationBudgetExceededError as e:
                logger.info(f"N={point.n}: budget exceeded")
                points.append(
                    ConvergencePoint(
                        n=point.n, taus=point.taus.taus, status=PointStatus.BUDGET_EXCEEDED, message=str(e)
                    )
                )
                continue
            delta = estimate.value - values[-1] if values else None
            if delta is not None:
                deltas.append(delta)
            values.append(estimate.value)
            points.append(
                ConvergencePoint(
                    n=point.n, taus=point.taus.taus, status=PointStatus.OK, estimate=estimate, delta=delta
                )
            )
            logger.info(f"N={point.n}: belief {float(estimate.value):.6f}")

        monotone = all(d >= 0 for d in deltas) or all(d <= 0 for d in deltas)
        cauchy = all(abs(b) <= abs(a) for a, b in zip(deltas, deltas[1:], strict=False))
        return ConvergenceReport(
            query=query.render(),
            points=tuple(points),
            limit_estimate=values[-1] if values else None,
            final_delta=deltas[-1] if deltas else None,
            monotone=monotone,
            cauchy=cauchy,
        )

    @staticmethod
    def csv_rows(report: ConvergenceReport) -> list[dict[str, str]]:
        """Rows for the CSV export, keyed by :attr:`CSV_COLUMNS`."""
        rows = []
        for point in report.points:
            estimate = point.estimate
            rows.append(
                {
                    "N": str(point.n),
                    "tau": ";".join(str(t) for t in point.taus),
                    "belief_num": str(estimate.value.numerator) if estimate else "",
                    "belief_den": str(estimate.value.denominator) if estimate else "",
                    "belief_decimal": f"{estimate.decimal:.10f}" if estimate else "",
                    "model_count_digits": str(len(str(estimate.model_count)))
                    if estimate and estimate.model_count is not None
                    else "",
                    "status": point.status.value,
                }
            )
        return rows


def converge(
    kb: KnowledgeBase,
    query: Query,
    schedule: ConvergenceSchedule | None = None,
    budget: int = DEFAULT_BUDGET,
    workers: int = 1,
) -> ConvergenceReport:
    """Module-level shortcut for :meth:`ConvergenceAnalyzer.converge` (default schedule when None)."""
    return ConvergenceAnalyzer.converge(
        kb, query, schedule or ConvergenceAnalyzer.default_schedule(), budget=budget, workers=workers
    )
