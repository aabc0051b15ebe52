"""User satisfaction of both allocation schemes and the shift in quality between them.

The satisfaction of a user is linear in the bandwidth of the session it watches: 1 at $\\beta_{max}$ and
$\\beta_m / \\beta_{max}$ below it.
"""
import logging
import warnings
from dataclasses import dataclass
from enum import Enum
from typing import List, Tuple

from .allocation import Allocation, RankedSessions, equal_share_allocate, is_constrained
from .errors import EmptyPopulationWarning
from .parameters import SystemConfig

__all__ = ["SessionSatisfaction", "SatisfactionReport", "Shift", "SessionShift", "QualityShiftReport",
           "equal_share_satisfaction", "session_satisfaction", "satisfaction_report", "session_shift", "quality_shift"]

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SessionSatisfaction:
    """The satisfaction level of the users of one ranked session."""
    rank: int
    session_id: str
    s_level: float


@dataclass(frozen=True)
class SatisfactionReport:
    """The satisfaction per session, the viewer-weighted average and the equally shared baseline.

    Parameters:
        per_session (Tuple[SessionSatisfaction, ...]): The satisfaction level per session, in rank order.
        average (float): The average satisfaction of all users.
        baseline_equal_share (float): The satisfaction of every user in the equally shared scheme.
        population_empty (bool): True if nobody watches, the average is then the baseline.
    """
    per_session: Tuple[SessionSatisfaction, ...]
    average: float
    baseline_equal_share: float
    population_empty: bool = False

    @property
    def gain(self) -> float:
        """The improvement of the average over the equally shared baseline."""
        return self.average - self.baseline_equal_share


class Shift(Enum):
    """Change of the quality of a session compared to the equally shared scheme."""
    IMPROVED = "improved"
    DEGRADED = "degraded"
    UNCHANGED = "unchanged"


@dataclass(frozen=True)
class SessionShift:
    """The quality shift of one session and the number of its viewers."""
    rank: int
    session_id: str
    viewers: int
    shift: Shift


@dataclass(frozen=True)
class QualityShiftReport:
    """The number of users whose quality is improved, degraded or unchanged."""
    users_improved: int
    users_degraded: int
    users_unchanged: int

    @property
    def total(self) -> int:
        return self.users_improved + self.users_degraded + self.users_unchanged


def equal_share_satisfaction(config: SystemConfig, sessions: int) -> float:
    """The satisfaction of every user in the equally shared scheme, $\\min(1, C / (\\beta_{max} M))$.

    Parameters:
        config (SystemConfig): The link configuration.
        sessions (int): The number of active sessions $M$.
    """
    equal_share_allocate(config, sessions)
    if not is_constrained(config, sessions):
        return 1.0
    return config.capacity_kbps / (config.beta_max_kbps * sessions)


def session_satisfaction(config: SystemConfig, alloc: Allocation) -> Tuple[SessionSatisfaction, ...]:
    """The satisfaction level $\\beta_m / \\beta_{max}$ of every session, 1 on an unconstrained link."""
    constrained = is_constrained(config, alloc.session_count)
    return tuple(
        SessionSatisfaction(
            rank=allocated.rank,
            session_id=allocated.session_id,
            s_level=allocated.beta_kbps / config.beta_max_kbps if constrained else 1.0
        )
        for allocated in alloc.per_session
    )


def satisfaction_report(config: SystemConfig, alloc: Allocation, ranked: RankedSessions) -> SatisfactionReport:
    """The satisfaction of the users of every session and the average over all users.

    Parameters:
        config (SystemConfig): The link configuration.
        alloc (Allocation): The allocation computed from `ranked`.
        ranked (RankedSessions): The ranked sessions.
    """
    sessions = ranked.session_count
    baseline = equal_share_satisfaction(config, sessions)
    constrained = is_constrained(config, sessions)
    per_session = session_satisfaction(config, alloc)
    total_viewers = ranked.total_viewers
    if total_viewers == 0:
        warnings.warn("no viewers, the average satisfaction is the equally shared one",
                      EmptyPopulationWarning, stacklevel=2)
        return SatisfactionReport(per_session, baseline, baseline, population_empty=True)
    if not constrained:
        return SatisfactionReport(per_session, 1.0, baseline)
    weighted = sum(level.s_level * entry.viewers for level, entry in zip(per_session, ranked.entries))
    return SatisfactionReport(per_session, weighted / total_viewers, baseline)


def session_shift(alloc: Allocation, ranked: RankedSessions, beta_equal_kbps: float) -> List[SessionShift]:
    """Classify every session as improved, degraded or unchanged compared to the equally shared bandwidth.
    Both bandwidths are rounded to 1e-9 kbps before they are compared.
    """
    reference = round(beta_equal_kbps, 9)
    shifts = []
    for allocated, entry in zip(alloc.per_session, ranked.entries):
        beta = round(allocated.beta_kbps, 9)
        if beta > reference:
            shift = Shift.IMPROVED
        elif beta < reference:
            shift = Shift.DEGRADED
        else:
            shift = Shift.UNCHANGED
        shifts.append(SessionShift(allocated.rank, allocated.session_id, entry.viewers, shift))
    return shifts


def quality_shift(config: SystemConfig, alloc: Allocation, ranked: RankedSessions) -> QualityShiftReport:
    """Count the users for which the popularity based allocation improves, degrades or keeps the quality
    compared to the equally shared scheme.
    """
    counts = {shift: 0 for shift in Shift}
    if ranked.entries:
        beta_equal = equal_share_allocate(config, ranked.session_count)
        for item in session_shift(alloc, ranked, beta_equal):
            counts[item.shift] += item.viewers
        logger.debug("quality shift of %d sessions: %s", ranked.session_count,
                     {shift.value: count for shift, count in counts.items()})
    return QualityShiftReport(
        users_improved=counts[Shift.IMPROVED],
        users_degraded=counts[Shift.DEGRADED],
        users_unchanged=counts[Shift.UNCHANGED]
    )
