"""Timestamped session and viewer events, replayed by `popcast.simulation.replay`."""
from dataclasses import dataclass
from enum import Enum
from typing import Dict, Iterator, Tuple

from .errors import MalformedTrace

__all__ = ["EventKind", "TraceEvent", "EventTrace"]


class EventKind(Enum):
    """The kind of an event: a session starts or ends, a viewer joins or leaves a session."""
    START = "start"
    END = "end"
    JOIN = "join"
    LEAVE = "leave"


@dataclass(frozen=True)
class TraceEvent:
    """One event at `timestamp` seconds."""
    timestamp: float
    kind: EventKind
    session_id: str


@dataclass(frozen=True)
class EventTrace:
    """Events ordered by timestamp; events with equal timestamps are processed in the given order."""
    events: Tuple[TraceEvent, ...] = ()

    def __len__(self) -> int:
        return len(self.events)

    def __iter__(self) -> Iterator[TraceEvent]:
        return iter(self.events)

    def validate(self):
        """Check the timestamps and the lifecycle of every session, raise `MalformedTrace` on the first violation.
        A session must be started before it ends or viewers join or leave it, can't start twice while it is
        running, and can't lose more viewers than joined it.
        """
        previous = 0.0
        viewers: Dict[str, int] = {}
        for index, event in enumerate(self.events):
            if not event.timestamp >= 0:
                raise MalformedTrace(f"event {index}: negative or undefined timestamp {event.timestamp!r}")
            if event.timestamp < previous:
                raise MalformedTrace(f"event {index}: timestamp {event.timestamp!r} before {previous!r}")
            previous = event.timestamp
            running = event.session_id in viewers
            if event.kind is EventKind.START:
                if running:
                    raise MalformedTrace(f"event {index}: session '{event.session_id}' started twice")
                viewers[event.session_id] = 0
                continue
            if not running:
                raise MalformedTrace(
                    f"event {index}: {event.kind.value} on session '{event.session_id}' that isn't started"
                )
            if event.kind is EventKind.END:
                del viewers[event.session_id]
            elif event.kind is EventKind.JOIN:
                viewers[event.session_id] += 1
            else:
                if viewers[event.session_id] == 0:
                    raise MalformedTrace(f"event {index}: leave on session '{event.session_id}' without viewers")
                viewers[event.session_id] -= 1
