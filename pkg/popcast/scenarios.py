"""Seeded viewer populations and session churn.

Two traffic scenarios are generated for a fixed number of users: every user picks a session uniformly at random
(`ScenarioKind.UNIFORM`), or half of the users watch the first session and the other half pick one of the other
sessions uniformly at random (`ScenarioKind.HALF_ON_ONE`).

All randomness comes from `numpy.random.Generator` with the PCG64 bit generator. The stream of a sweep trial is seeded
by `derive_seed`, which mixes the master seed, the number of sessions and the trial index with
`numpy.random.SeedSequence`, so trials are independent of the order in which they run.
"""
from dataclasses import dataclass
from enum import Enum
from typing import List, Optional

import numpy as np

from .allocation import SessionSnapshot, capacity_limits
from .errors import InvalidSpec
from .parameters import SystemConfig
from .trace import EventKind, EventTrace, TraceEvent

__all__ = ["ScenarioKind", "ScenarioSpec", "generate", "derive_seed", "session_ids", "synthesize_trace"]

SEED_LIMIT = 2 ** 64


class ScenarioKind(Enum):
    """The traffic scenarios."""
    UNIFORM = 1
    HALF_ON_ONE = 2

    @classmethod
    def from_number(cls, number) -> "ScenarioKind":
        """Get the scenario from its number, 1 or 2."""
        try:
            return cls(int(number))
        except (TypeError, ValueError):
            raise InvalidSpec(f"unknown scenario '{number}', expected 1 or 2") from None


@dataclass(frozen=True)
class ScenarioSpec:
    """The description of one generated viewer population.

    Parameters:
        kind (ScenarioKind): The traffic scenario.
        total_users (int): The number of users $K$.
        session_count (int): The number of sessions $M$.
        seed (int): The seed, an unsigned 64-bit integer.
    """
    kind: ScenarioKind
    total_users: int
    session_count: int
    seed: int

    def __post_init__(self):
        if not isinstance(self.kind, ScenarioKind):
            raise InvalidSpec(f"unknown scenario kind {self.kind!r}")
        if self.total_users < 1:
            raise InvalidSpec(f"at least one user is needed, {self.total_users} given")
        if self.session_count < 1:
            raise InvalidSpec(f"at least one session is needed, {self.session_count} given")
        if self.kind is ScenarioKind.HALF_ON_ONE and self.session_count < 2:
            raise InvalidSpec("the half-on-one scenario needs at least two sessions")
        if not 0 <= self.seed < SEED_LIMIT:
            raise InvalidSpec(f"the seed must be an unsigned 64-bit integer, {self.seed} given")


def session_ids(count: int) -> List[str]:
    """The session ids `s001`, `s002`, ..., widened when there are more than 999 sessions."""
    width = max(3, len(str(count)))
    return [f"s{index:0{width}d}" for index in range(1, count + 1)]


def _uniform_counts(rng: np.random.Generator, users: int, bins: int) -> np.ndarray:
    return rng.multinomial(users, np.full(bins, 1 / bins))


def generate(spec: ScenarioSpec) -> List[SessionSnapshot]:
    """Generate the viewers per session for the scenario; identical specs give identical output."""
    rng = np.random.default_rng(spec.seed)
    if spec.kind is ScenarioKind.UNIFORM:
        counts = _uniform_counts(rng, spec.total_users, spec.session_count)
    else:
        popular = spec.total_users // 2
        counts = np.concatenate((
            [popular],
            _uniform_counts(rng, spec.total_users - popular, spec.session_count - 1)
        ))
    return [SessionSnapshot(session_id, int(viewers))
            for session_id, viewers in zip(session_ids(spec.session_count), counts)]


def derive_seed(master_seed: int, trial: int, sessions: int) -> int:
    """The seed of one sweep trial, derived from the master seed with the spawn key `(sessions, trial)`."""
    sequence = np.random.SeedSequence(master_seed, spawn_key=(sessions, trial))
    return int(sequence.generate_state(1, dtype=np.uint64)[0])


def synthesize_trace(config: SystemConfig, events: int, seed: int, max_sessions: Optional[int] = None,
                     horizon: float = 3600.) -> EventTrace:
    """Generate a random but lifecycle-consistent trace of session and viewer events.

    Parameters:
        config (SystemConfig): The link configuration, used for the default `max_sessions`.
        events (int): The number of events.
        seed (int): The seed of the generator.
        max_sessions (Optional[int]): The maximum number of sessions running at once in the trace. By default two more
            than the link admits, so the trace also exercises the admission control.
        horizon (float): The expected duration of the trace in seconds.
    """
    if events < 0:
        raise InvalidSpec(f"the number of events can't be negative, {events} given")
    if max_sessions is None:
        max_sessions = capacity_limits(config).n_lq + 2
    if max_sessions < 1:
        raise InvalidSpec(f"at least one session must be allowed, {max_sessions} given")
    rng = np.random.default_rng(seed)
    gaps = rng.exponential(horizon / max(events, 1), size=events)
    timestamps = np.round(np.cumsum(gaps), 3)
    running = {}
    started = 0
    out = []
    kinds = [EventKind.START, EventKind.END, EventKind.JOIN, EventKind.LEAVE]
    weights = np.array([0.15, 0.05, 0.55, 0.25])
    for timestamp in timestamps.tolist():
        allowed = np.array([
            len(running) < max_sessions,
            bool(running),
            bool(running),
            any(viewers > 0 for viewers in running.values())
        ])
        probabilities = weights * allowed
        kind = kinds[rng.choice(len(kinds), p=probabilities / probabilities.sum())]
        if kind is EventKind.START:
            started += 1
            session_id = f"t{started:04d}"
            running[session_id] = 0
        elif kind is EventKind.LEAVE:
            candidates = sorted(key for key, viewers in running.items() if viewers > 0)
            session_id = candidates[rng.integers(len(candidates))]
            running[session_id] -= 1
        else:
            candidates = sorted(running)
            session_id = candidates[rng.integers(len(candidates))]
            if kind is EventKind.END:
                del running[session_id]
            else:
                running[session_id] += 1
        out.append(TraceEvent(timestamp=timestamp, kind=kind, session_id=session_id))
    return EventTrace(tuple(out))
