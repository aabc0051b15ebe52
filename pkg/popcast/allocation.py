"""Bandwidth allocation for broadcast sessions sharing one link.

Two schemes are implemented: the equally shared scheme, where every active session gets the same bandwidth, and the
popularity based scheme, where the sessions are ranked by their number of viewers and the bandwidth above the minimum
is shared proportional to the number of viewers, capped at the full-quality bandwidth.
"""
import logging
import math
import warnings
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Dict, Iterable, List, Optional, Tuple

import numpy as np

from .errors import DataError, DuplicateSessionId, EmptyPopulationWarning, LastRankCapWarning, OverCapacity, \
    RankOutOfRange
from .parameters import SystemConfig

__all__ = ["Scheme", "SessionSnapshot", "RankedEntry", "RankedSessions", "AllocatedSession",
           "AllocationIntermediates", "Allocation", "CapacityBounds", "rank_sessions", "is_constrained",
           "check_admissible", "equal_share_allocate", "equal_share_allocation", "popularity_allocate",
           "capacity_limits", "allocation_delta"]

logger = logging.getLogger(__name__)


class Scheme(Enum):
    """The allocation scheme that produced an `Allocation`."""
    EQUAL_SHARE = "equal-share"
    POPULARITY = "popularity"


@dataclass(frozen=True)
class SessionSnapshot:
    """One active broadcast session and the number of users currently watching it."""
    session_id: str
    viewers: int

    def __post_init__(self):
        if isinstance(self.viewers, bool) or int(self.viewers) != self.viewers or self.viewers < 0:
            raise DataError(f"viewers of '{self.session_id}' must be a nonnegative integer, {self.viewers!r} given")
        object.__setattr__(self, "viewers", int(self.viewers))


@dataclass(frozen=True)
class RankedEntry:
    """A session with its popularity rank, rank 1 is the most watched session."""
    rank: int
    session_id: str
    viewers: int


@dataclass(frozen=True)
class RankedSessions:
    """The active sessions sorted by descending number of viewers."""
    entries: Tuple[RankedEntry, ...] = ()

    @property
    def session_count(self) -> int:
        """The number of active sessions $M$."""
        return len(self.entries)

    @property
    def total_viewers(self) -> int:
        """The total number of active users $K$."""
        return sum(entry.viewers for entry in self.entries)

    @property
    def mean_viewers(self) -> float:
        """The mean number of viewers per session $K/M$, zero without sessions."""
        return self.total_viewers / self.session_count if self.entries else 0.0

    @property
    def viewers(self) -> np.ndarray:
        """The number of viewers in rank order."""
        return np.array([entry.viewers for entry in self.entries], dtype=np.int64)

    @property
    def session_ids(self) -> List[str]:
        """The session ids in rank order."""
        return [entry.session_id for entry in self.entries]

    def viewers_of(self, session_id: str) -> int:
        """Return the number of viewers of the session with the given id."""
        for entry in self.entries:
            if entry.session_id == session_id:
                return entry.viewers
        raise KeyError(session_id)

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)


@dataclass(frozen=True)
class AllocatedSession:
    """The bandwidth allocated to one ranked session."""
    rank: int
    session_id: str
    beta_kbps: float


@dataclass(frozen=True)
class AllocationIntermediates:
    """The intermediate values of the popularity based allocation, kept for audits.

    Parameters:
        a (float): The bandwidth per viewer, $a = \\frac{M}{K}(\\frac{C}{M} - \\beta_{min})$.
        beta_diff_kbps (float): The bandwidth range $\\beta_{max} - \\beta_{min}$.
        x_terms (Tuple[float, ...]): The excess $X_m$ that session $m$ hands to every lower ranked session.
        diagnostics (Tuple[str, ...]): Remarks on conventions that were applied.
    """
    a: float
    beta_diff_kbps: float
    x_terms: Tuple[float, ...]
    diagnostics: Tuple[str, ...] = ()


@dataclass(frozen=True)
class Allocation:
    """The bandwidth per session, in rank order."""
    per_session: Tuple[AllocatedSession, ...]
    scheme: Scheme
    intermediates: Optional[AllocationIntermediates] = None

    @classmethod
    def empty(cls, scheme: Scheme = Scheme.POPULARITY) -> "Allocation":
        """An allocation without any active session."""
        intermediates = AllocationIntermediates(0.0, 0.0, ()) if scheme is Scheme.POPULARITY else None
        return cls(per_session=(), scheme=scheme, intermediates=intermediates)

    @property
    def session_count(self) -> int:
        return len(self.per_session)

    @property
    def betas(self) -> np.ndarray:
        """The allocated bandwidths in rank order, in kbps."""
        return np.array([session.beta_kbps for session in self.per_session], dtype=float)

    @property
    def total_kbps(self) -> float:
        """The total allocated bandwidth."""
        return math.fsum(session.beta_kbps for session in self.per_session)

    def beta_of(self, session_id: str) -> float:
        """Return the bandwidth allocated to the session with the given id."""
        for session in self.per_session:
            if session.session_id == session_id:
                return session.beta_kbps
        raise KeyError(session_id)

    def beta_at(self, rank: int) -> float:
        """Return the bandwidth allocated to the session at the given rank (1-based)."""
        if not 1 <= rank <= self.session_count:
            raise RankOutOfRange(f"rank {rank} outside of 1..{self.session_count}")
        return self.per_session[rank - 1].beta_kbps

    def as_dict(self) -> Dict[str, float]:
        """Return the allocation in the format `"session_id": beta_kbps`."""
        return {session.session_id: session.beta_kbps for session in self.per_session}

    def __len__(self) -> int:
        return len(self.per_session)

    def __iter__(self):
        return iter(self.per_session)


@dataclass(frozen=True)
class CapacityBounds:
    """The number of sessions the link carries at full quality (`n_hq`) and at minimum quality (`n_lq`)."""
    n_hq: int
    n_lq: int


def rank_sessions(snapshots: Iterable[SessionSnapshot]) -> RankedSessions:
    """Rank the sessions by their number of viewers, rank 1 being the most watched.
    Sessions with the same number of viewers are ordered by their session id.

    Parameters:
        snapshots (Iterable[SessionSnapshot]): The active sessions, in any order.
    """
    snapshots = list(snapshots)
    seen = set()
    for snapshot in snapshots:
        if snapshot.session_id in seen:
            raise DuplicateSessionId(snapshot.session_id)
        seen.add(snapshot.session_id)
    ordered = sorted(snapshots, key=lambda snapshot: (-snapshot.viewers, snapshot.session_id))
    return RankedSessions(tuple(
        RankedEntry(rank=rank, session_id=snapshot.session_id, viewers=snapshot.viewers)
        for rank, snapshot in enumerate(ordered, start=1)
    ))


def is_constrained(config: SystemConfig, sessions: int) -> bool:
    """True if the link can't give every session the full-quality bandwidth, $\\beta_{max} M > C$."""
    return config.beta_max_kbps * sessions > config.capacity_kbps


def check_admissible(config: SystemConfig, sessions: int):
    """Raise `OverCapacity` if the sessions don't fit at the minimum bandwidth, $M \\beta_{min} > C$."""
    if sessions * config.beta_min_kbps > config.capacity_kbps:
        raise OverCapacity(sessions, config.beta_min_kbps, config.capacity_kbps)


def equal_share_allocate(config: SystemConfig, sessions: int) -> float:
    """The bandwidth every session gets in the equally shared scheme.
    This is $\\beta_{max}$ if the link can carry all sessions at full quality, $C/M$ otherwise.

    Parameters:
        config (SystemConfig): The link configuration.
        sessions (int): The number of active sessions $M$, at least 1.
    """
    if sessions < 1:
        raise DataError(f"at least one session is needed, {sessions} given")
    check_admissible(config, sessions)
    if not is_constrained(config, sessions):
        return config.beta_max_kbps
    return config.capacity_kbps / sessions


def equal_share_allocation(config: SystemConfig, ranked: RankedSessions) -> Allocation:
    """The equally shared scheme in the same per-session form as `popularity_allocate`."""
    if not ranked.entries:
        return Allocation.empty(Scheme.EQUAL_SHARE)
    beta = equal_share_allocate(config, ranked.session_count)
    return Allocation(
        per_session=tuple(AllocatedSession(entry.rank, entry.session_id, beta) for entry in ranked.entries),
        scheme=Scheme.EQUAL_SHARE
    )


def popularity_allocate(config: SystemConfig, ranked: RankedSessions) -> Allocation:
    """Allocate the bandwidth by popularity.

    If every session fits at full quality, every session gets $\\beta_{max}$. Otherwise every session gets
    $\\beta_{min}$ plus $a K_m$, the part of the remaining capacity proportional to its viewers $K_m$.
    When this reaches $\\beta_{max}$, the session is capped and the excess $X_m$ is spread equally over the lower
    ranked sessions, which receive it on top of their own share.

    If nobody watches (K = 0), all sessions are treated as equally popular and get $C/M$, an
    `EmptyPopulationWarning` is issued. Without sessions, the allocation is empty.

    Parameters:
        config (SystemConfig): The link configuration.
        ranked (RankedSessions): The ranked active sessions.
    """
    sessions = ranked.session_count
    if sessions == 0:
        return Allocation.empty(Scheme.POPULARITY)
    check_admissible(config, sessions)
    capacity, beta_max, beta_min = config.capacity_kbps, config.beta_max_kbps, config.beta_min_kbps
    beta_diff = config.beta_diff_kbps
    total_viewers = ranked.total_viewers
    # M beta_min = C can round C/M just below beta_min
    share = max(capacity / sessions - beta_min, 0.0)
    a = sessions / total_viewers * share if total_viewers else 0.0
    diagnostics: List[str] = []

    if not is_constrained(config, sessions):
        betas = [beta_max] * sessions
        x_terms = [0.0] * sessions
    elif total_viewers == 0:
        message = f"no viewers on {sessions} active sessions, every session gets C/M"
        warnings.warn(message, EmptyPopulationWarning, stacklevel=2)
        diagnostics.append(message)
        betas = [max(capacity / sessions, beta_min)] * sessions
        x_terms = [0.0] * sessions
    else:
        # (M K_m) / K is rounded once, so scaling all viewers by the same factor gives identical shares
        proportional = (sessions * ranked.viewers) / total_viewers * share
        betas, x_terms = [], []
        carried = 0.0
        for m, own_share in enumerate(proportional.tolist(), start=1):
            s_m = own_share + carried
            if s_m >= beta_diff:
                betas.append(beta_max)
                if m < sessions:
                    x_terms.append((s_m - beta_diff) / (sessions - m))
                else:
                    message = f"rounding capped the last rank ({s_m!r} >= {beta_diff!r}), clamped to beta_max"
                    warnings.warn(message, LastRankCapWarning, stacklevel=2)
                    diagnostics.append(message)
                    x_terms.append(0.0)
            else:
                betas.append(min(max(beta_min + s_m, beta_min), beta_max))
                x_terms.append(0.0)
            carried += x_terms[-1]

    allocation = Allocation(
        per_session=tuple(AllocatedSession(entry.rank, entry.session_id, beta)
                          for entry, beta in zip(ranked.entries, betas)),
        scheme=Scheme.POPULARITY,
        intermediates=AllocationIntermediates(a=a, beta_diff_kbps=beta_diff, x_terms=tuple(x_terms),
                                              diagnostics=tuple(diagnostics))
    )
    expected = min(capacity, sessions * beta_max)
    if not math.isclose(allocation.total_kbps, expected, rel_tol=1e-9):
        logger.warning("allocation of %d sessions sums to %r kbps instead of %r kbps",
                       sessions, allocation.total_kbps, expected)
    logger.debug("popularity allocation of %d sessions, %d viewers: %s", sessions, total_viewers, betas)
    return allocation


def capacity_limits(config: SystemConfig) -> CapacityBounds:
    """The number of sessions that fit at full quality, $\\lfloor C/\\beta_{max} \\rfloor$, and at minimum quality,
    $\\lfloor C/\\beta_{min} \\rfloor$. The floor is taken of the exact quotient of the two floats.
    """
    capacity = Fraction(config.capacity_kbps)
    return CapacityBounds(
        n_hq=int(capacity // Fraction(config.beta_max_kbps)),
        n_lq=int(capacity // Fraction(config.beta_min_kbps))
    )


def allocation_delta(alloc: Allocation, m: int) -> float:
    """The difference $\\beta_m - \\beta_{m+1}$ between the session at rank `m` and the next one.

    Parameters:
        alloc (Allocation): A popularity based allocation.
        m (int): The rank, `1 <= m < M`.
    """
    if alloc.scheme is not Scheme.POPULARITY:
        raise DataError(f"the allocation delta needs a popularity allocation, {alloc.scheme.value} given")
    if not 1 <= m < alloc.session_count:
        raise RankOutOfRange(f"rank {m} outside of 1..{alloc.session_count - 1}")
    return alloc.beta_at(m) - alloc.beta_at(m + 1)
