"""Experiments: sweeps over the number of sessions, single generated instances and the replay of event traces."""
import logging
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from enum import Enum
from functools import partial
from typing import Dict, Iterable, List, Optional, Sequence, Set, Tuple

import numpy as np

from .allocation import Allocation, RankedSessions, SessionSnapshot, check_admissible, equal_share_allocate, \
    equal_share_allocation, popularity_allocate, rank_sessions
from .errors import EmptyPopulationWarning, InvalidSpec, OverCapacity
from .layering import LayerPlan, plan_allocation
from .metrics import QualityShiftReport, SatisfactionReport, SessionShift, quality_shift, satisfaction_report, \
    session_shift
from .parameters import SystemConfig
from .scenarios import ScenarioKind, ScenarioSpec, derive_seed, generate
from .trace import EventKind, EventTrace, TraceEvent

__all__ = ["Evaluation", "SweepRecord", "SweepAggregate", "ReplayStatus", "TimelineEntry", "evaluate", "instance",
           "sweep", "aggregate", "replay", "final_allocation"]

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Evaluation:
    """Both allocation schemes and their comparison for one set of ranked sessions."""
    ranked: RankedSessions
    popularity: Allocation
    equal_share: Allocation
    beta_equal_kbps: float
    satisfaction: SatisfactionReport
    shift: QualityShiftReport
    session_shifts: Tuple[SessionShift, ...]
    layer_plans: Tuple[LayerPlan, ...]


@dataclass(frozen=True)
class SweepRecord:
    """The outcome of one trial of a sweep."""
    sessions: int
    trial: int
    avg_satisfaction_proposed: float
    avg_satisfaction_equal: float
    users_improved: int
    users_degraded: int
    users_unchanged: int
    beta_rank1_kbps: float
    beta_rank_last_kbps: float
    beta_equal_kbps: float


@dataclass(frozen=True)
class SweepAggregate:
    """The means over all trials of a sweep for one number of sessions."""
    sessions: int
    trials: int
    avg_satisfaction_proposed: float
    avg_satisfaction_equal: float
    users_improved: float
    users_degraded: float
    users_unchanged: float
    beta_rank1_kbps: float
    beta_rank_last_kbps: float
    beta_equal_kbps: float


class ReplayStatus(Enum):
    """What happened with an event during a replay."""
    APPLIED = "applied"
    REJECTED = "rejected"
    DROPPED = "dropped"


@dataclass(frozen=True)
class TimelineEntry:
    """The state of the link after one replayed event."""
    index: int
    event: TraceEvent
    status: ReplayStatus
    ranked: RankedSessions
    allocation: Allocation
    layer_plans: Tuple[LayerPlan, ...]


def evaluate(config: SystemConfig, ranked: RankedSessions) -> Evaluation:
    """Allocate the ranked sessions with both schemes and compare them.

    Parameters:
        config (SystemConfig): The link configuration.
        ranked (RankedSessions): The ranked sessions, at least one.
    """
    popularity = popularity_allocate(config, ranked)
    beta_equal = equal_share_allocate(config, ranked.session_count)
    return Evaluation(
        ranked=ranked,
        popularity=popularity,
        equal_share=equal_share_allocation(config, ranked),
        beta_equal_kbps=beta_equal,
        satisfaction=satisfaction_report(config, popularity, ranked),
        shift=quality_shift(config, popularity, ranked),
        session_shifts=tuple(session_shift(popularity, ranked, beta_equal)),
        layer_plans=tuple(plan_allocation(popularity, config))
    )


def instance(config: SystemConfig, kind: ScenarioKind, sessions: int, total_users: int = 200, seed: int = 42,
             trial: int = 0) -> Evaluation:
    """Generate one viewer population and evaluate it. The population is the one a sweep with the same seed
    generates for trial `trial` at `sessions` sessions.
    """
    check_admissible(config, sessions)
    spec = ScenarioSpec(kind=kind, total_users=total_users, session_count=sessions,
                        seed=derive_seed(seed, trial, sessions))
    return evaluate(config, rank_sessions(generate(spec)))


def _run_trial(config: SystemConfig, kind: ScenarioKind, total_users: int, seed: int,
               task: Tuple[int, int]) -> SweepRecord:
    sessions, trial = task
    result = instance(config, kind, sessions, total_users=total_users, seed=seed, trial=trial)
    betas = result.popularity.betas
    return SweepRecord(
        sessions=sessions,
        trial=trial,
        avg_satisfaction_proposed=result.satisfaction.average,
        avg_satisfaction_equal=result.satisfaction.baseline_equal_share,
        users_improved=result.shift.users_improved,
        users_degraded=result.shift.users_degraded,
        users_unchanged=result.shift.users_unchanged,
        beta_rank1_kbps=float(betas[0]),
        beta_rank_last_kbps=float(betas[-1]),
        beta_equal_kbps=result.beta_equal_kbps
    )


def sweep(config: SystemConfig, kind: ScenarioKind, m_range: Iterable[int], trials: int, seed: int,
          total_users: int = 200, workers: int = 1) -> List[SweepRecord]:
    """Run `trials` generated populations for every number of sessions in `m_range`.

    Parameters:
        config (SystemConfig): The link configuration.
        kind (ScenarioKind): The traffic scenario.
        m_range (Iterable[int]): The numbers of sessions, for example `range(15, 51)`.
        trials (int): The number of trials per number of sessions.
        seed (int): The master seed; every trial derives its own seed from it.
        total_users (int): The number of users in every trial.
        workers (int): The number of processes; the records don't depend on it.

    Returns:
        One record per (number of sessions, trial), ordered by the number of sessions, then by trial.
    """
    session_counts = list(m_range)
    if trials < 1:
        raise InvalidSpec(f"at least one trial is needed, {trials} given")
    for sessions in session_counts:
        if sessions < 1:
            raise InvalidSpec(f"at least one session is needed, {sessions} given")
        check_admissible(config, sessions)
    tasks = [(sessions, trial) for sessions in session_counts for trial in range(trials)]
    run = partial(_run_trial, config, kind, total_users, seed)
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as executor:
            records = list(executor.map(run, tasks, chunksize=max(1, trials)))
        for sessions in session_counts:
            logger.info("sweep: %d sessions, %d trials done", sessions, trials)
    else:
        records = []
        for sessions in session_counts:
            records.extend(run((sessions, trial)) for trial in range(trials))
            logger.info("sweep: %d sessions, %d trials done", sessions, trials)
    return records


def _mean(group: Sequence[SweepRecord], name: str) -> float:
    return float(np.mean([getattr(record, name) for record in group]))


def aggregate(records: Sequence[SweepRecord]) -> List[SweepAggregate]:
    """The means over the trials per number of sessions, ordered by the number of sessions."""
    grouped: Dict[int, List[SweepRecord]] = {}
    for record in records:
        grouped.setdefault(record.sessions, []).append(record)
    out = []
    for sessions in sorted(grouped):
        group = grouped[sessions]
        mean = partial(_mean, group)
        out.append(SweepAggregate(
            sessions=sessions,
            trials=len(group),
            avg_satisfaction_proposed=mean("avg_satisfaction_proposed"),
            avg_satisfaction_equal=mean("avg_satisfaction_equal"),
            users_improved=mean("users_improved"),
            users_degraded=mean("users_degraded"),
            users_unchanged=mean("users_unchanged"),
            beta_rank1_kbps=mean("beta_rank1_kbps"),
            beta_rank_last_kbps=mean("beta_rank_last_kbps"),
            beta_equal_kbps=mean("beta_equal_kbps")
        ))
    return out


def _allocate_state(config: SystemConfig, active: Dict[str, int]) -> Tuple[RankedSessions, Allocation,
                                                                           Tuple[LayerPlan, ...]]:
    ranked = rank_sessions(SessionSnapshot(session_id, viewers) for session_id, viewers in active.items())
    with warnings.catch_warnings():
        # freshly started sessions without viewers are normal during a replay
        warnings.simplefilter("ignore", EmptyPopulationWarning)
        allocation = popularity_allocate(config, ranked)
    return ranked, allocation, tuple(plan_allocation(allocation, config))


def replay(config: SystemConfig, trace: EventTrace) -> List[TimelineEntry]:
    """Replay the events and recompute the popularity based allocation after every change.

    A session start is rejected when the running sessions plus the new one don't fit at the minimum bandwidth; later
    events of a rejected session are dropped until it ends. Rejected and dropped events leave the state unchanged.

    Parameters:
        config (SystemConfig): The link configuration.
        trace (EventTrace): The events; a `MalformedTrace` is raised before replaying if they are inconsistent.
    """
    trace.validate()
    active: Dict[str, int] = {}
    rejected: Set[str] = set()
    ranked, allocation, plans = _allocate_state(config, active)
    timeline = []
    for index, event in enumerate(trace):
        status = ReplayStatus.APPLIED
        session_id = event.session_id
        if event.kind is EventKind.START:
            try:
                check_admissible(config, len(active) + 1)
            except OverCapacity:
                status = ReplayStatus.REJECTED
                rejected.add(session_id)
                logger.warning("t=%g: start of '%s' rejected, %d sessions already running",
                               event.timestamp, session_id, len(active))
            else:
                active[session_id] = 0
                logger.info("t=%g: session '%s' admitted", event.timestamp, session_id)
        elif session_id in rejected:
            status = ReplayStatus.DROPPED
            if event.kind is EventKind.END:
                rejected.discard(session_id)
        elif event.kind is EventKind.END:
            del active[session_id]
        elif event.kind is EventKind.JOIN:
            active[session_id] += 1
        else:
            active[session_id] -= 1
        if status is ReplayStatus.APPLIED:
            ranked, allocation, plans = _allocate_state(config, active)
        timeline.append(TimelineEntry(index=index, event=event, status=status, ranked=ranked,
                                      allocation=allocation, layer_plans=plans))
    return timeline


def final_allocation(timeline: Sequence[TimelineEntry]) -> Optional[Allocation]:
    """The allocation after the last event, `None` for an empty timeline."""
    return timeline[-1].allocation if timeline else None
