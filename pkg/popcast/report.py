"""Reading snapshots and traces, writing the CSV outputs.

Bandwidths are written in kbps with 3 decimals, satisfaction levels with 6 decimals, both rounded half to even, so
identical inputs give byte-identical files.
"""
import csv
import logging
from decimal import Decimal, ROUND_HALF_EVEN
from pathlib import Path
from typing import IO, Iterable, Iterator, List, Sequence, Tuple, Union

from .allocation import CapacityBounds, SessionSnapshot
from .errors import DataError
from .metrics import session_satisfaction
from .parameters import SystemConfig
from .simulation import Evaluation, SweepAggregate, SweepRecord, TimelineEntry
from .trace import EventKind, EventTrace, TraceEvent

__all__ = ["SNAPSHOT_HEADER", "TRACE_HEADER", "ALLOCATION_HEADER", "SUMMARY_HEADER", "SWEEP_HEADER",
           "AGGREGATE_HEADER", "TIMELINE_HEADER", "format_kbps", "format_level", "read_snapshots", "read_trace",
           "write_trace", "write_allocation", "write_summary", "write_sweep_records", "write_sweep_aggregate",
           "write_timeline", "write_limits"]

logger = logging.getLogger(__name__)

SNAPSHOT_HEADER = ["session_id", "viewers"]
TRACE_HEADER = ["timestamp", "event", "session_id"]
ALLOCATION_HEADER = ["rank", "session_id", "viewers", "beta_kbps", "beta_equal_kbps", "s_level",
                     "layers_base_kbps", "layers_count", "layers_residual_kbps"]
SUMMARY_HEADER = ["metric", "value"]
SWEEP_HEADER = ["M", "trial", "avg_sat_proposed", "avg_sat_equal", "users_improved", "users_degraded",
                "users_unchanged", "beta_rank1_kbps", "beta_rankM_kbps", "beta_equal_kbps"]
AGGREGATE_HEADER = [column for column in SWEEP_HEADER if column != "trial"]
TIMELINE_HEADER = ["event_index", "timestamp", "event", "event_session_id", "status", "rank", "session_id",
                   "viewers", "beta_kbps", "s_level", "layers_count", "layers_residual_kbps"]

PathOrStream = Union[str, Path, IO[str]]


def _fixed(value: float, digits: int) -> str:
    return str(Decimal(value).quantize(Decimal(1).scaleb(-digits), rounding=ROUND_HALF_EVEN))


def format_kbps(value: float) -> str:
    """A bandwidth with exactly 3 decimals."""
    return _fixed(value, 3)


def format_level(value: float) -> str:
    """A satisfaction level with exactly 6 decimals."""
    return _fixed(value, 6)


def _writer(stream: IO[str]):
    return csv.writer(stream, lineterminator="\n")


def _rows(source: PathOrStream, header: List[str]) -> Iterator[Tuple[int, List[str]]]:
    """The data rows with their line numbers; comment lines and empty lines are skipped, the header is checked."""
    name = str(source) if isinstance(source, (str, Path)) else getattr(source, "name", "<stream>")
    try:
        if isinstance(source, (str, Path)):
            with open(source, encoding="utf-8", newline="") as handle:
                lines = handle.read().splitlines()
        else:
            lines = source.read().splitlines()
    except OSError as error:
        raise DataError(f"can't read '{source}': {error.strerror}") from None
    except UnicodeDecodeError as error:
        raise DataError(f"{name} isn't valid UTF-8 ({error.reason} at byte {error.start})") from None
    seen_header = False
    for line_number, line in enumerate(lines, start=1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        row = [field.strip() for field in next(csv.reader([line]))]
        if not seen_header:
            if row != header:
                raise DataError(f"{name}:{line_number}: expected header '{','.join(header)}', got '{line}'")
            seen_header = True
            continue
        if len(row) != len(header):
            raise DataError(f"{name}:{line_number}: expected {len(header)} fields, got {len(row)}")
        yield line_number, row
    if not seen_header:
        raise DataError(f"{name}: no header '{','.join(header)}' found")


def read_snapshots(source: PathOrStream) -> List[SessionSnapshot]:
    """Read a snapshot CSV with the header `session_id,viewers`."""
    snapshots = []
    for line_number, (session_id, viewers) in _rows(source, SNAPSHOT_HEADER):
        if not session_id:
            raise DataError(f"line {line_number}: empty session id")
        try:
            count = int(viewers)
        except ValueError:
            raise DataError(f"line {line_number}: viewers '{viewers}' is not an integer") from None
        snapshots.append(SessionSnapshot(session_id, count))
    logger.debug("read %d sessions", len(snapshots))
    return snapshots


def read_trace(source: PathOrStream) -> EventTrace:
    """Read a trace CSV with the header `timestamp,event,session_id`."""
    events = []
    for line_number, (timestamp, kind, session_id) in _rows(source, TRACE_HEADER):
        try:
            value = float(timestamp)
        except ValueError:
            raise DataError(f"line {line_number}: timestamp '{timestamp}' is not a number") from None
        try:
            event_kind = EventKind(kind)
        except ValueError:
            raise DataError(f"line {line_number}: unknown event '{kind}', expected start, end, join or leave") \
                from None
        if not session_id:
            raise DataError(f"line {line_number}: empty session id")
        events.append(TraceEvent(timestamp=value, kind=event_kind, session_id=session_id))
    logger.debug("read %d events", len(events))
    return EventTrace(tuple(events))


def write_trace(trace: EventTrace, stream: IO[str]):
    """Write a trace in the format `read_trace` reads."""
    writer = _writer(stream)
    writer.writerow(TRACE_HEADER)
    for event in trace:
        writer.writerow([_fixed(event.timestamp, 3), event.kind.value, event.session_id])


def write_allocation(evaluation: Evaluation, stream: IO[str]):
    """Write the popularity based allocation of every session with its layer plan and satisfaction."""
    writer = _writer(stream)
    writer.writerow(ALLOCATION_HEADER)
    for entry, allocated, level, plan in zip(evaluation.ranked, evaluation.popularity,
                                             evaluation.satisfaction.per_session, evaluation.layer_plans):
        writer.writerow([
            entry.rank, entry.session_id, entry.viewers,
            format_kbps(allocated.beta_kbps), format_kbps(evaluation.beta_equal_kbps), format_level(level.s_level),
            format_kbps(plan.base_kbps), plan.enhancement_count, format_kbps(plan.residual_kbps)
        ])


def write_summary(evaluation: Evaluation, stream: IO[str]):
    """Write the comparison of both schemes as `metric,value` rows."""
    writer = _writer(stream)
    writer.writerow(SUMMARY_HEADER)
    report, shift = evaluation.satisfaction, evaluation.shift
    writer.writerows([
        ["sessions", evaluation.ranked.session_count],
        ["viewers", evaluation.ranked.total_viewers],
        ["beta_equal_kbps", format_kbps(evaluation.beta_equal_kbps)],
        ["avg_sat_proposed", format_level(report.average)],
        ["avg_sat_equal", format_level(report.baseline_equal_share)],
        ["users_improved", shift.users_improved],
        ["users_degraded", shift.users_degraded],
        ["users_unchanged", shift.users_unchanged]
    ])


def write_sweep_records(records: Iterable[SweepRecord], stream: IO[str]):
    """Write one row per sweep trial."""
    writer = _writer(stream)
    writer.writerow(SWEEP_HEADER)
    for record in records:
        writer.writerow([
            record.sessions, record.trial,
            format_level(record.avg_satisfaction_proposed), format_level(record.avg_satisfaction_equal),
            record.users_improved, record.users_degraded, record.users_unchanged,
            format_kbps(record.beta_rank1_kbps), format_kbps(record.beta_rank_last_kbps),
            format_kbps(record.beta_equal_kbps)
        ])


def write_sweep_aggregate(aggregates: Iterable[SweepAggregate], stream: IO[str]):
    """Write one row of means per number of sessions; the user counts are written with 3 decimals."""
    writer = _writer(stream)
    writer.writerow(AGGREGATE_HEADER)
    for item in aggregates:
        writer.writerow([
            item.sessions,
            format_level(item.avg_satisfaction_proposed), format_level(item.avg_satisfaction_equal),
            _fixed(item.users_improved, 3), _fixed(item.users_degraded, 3), _fixed(item.users_unchanged, 3),
            format_kbps(item.beta_rank1_kbps), format_kbps(item.beta_rank_last_kbps),
            format_kbps(item.beta_equal_kbps)
        ])


def write_timeline(timeline: Sequence[TimelineEntry], config: SystemConfig, stream: IO[str]):
    """Write the allocation after every replayed event, one row per active session."""
    writer = _writer(stream)
    writer.writerow(TIMELINE_HEADER)
    for item in timeline:
        prefix = [item.index, _fixed(item.event.timestamp, 3), item.event.kind.value, item.event.session_id,
                  item.status.value]
        if not item.allocation.per_session:
            writer.writerow(prefix + [""] * (len(TIMELINE_HEADER) - len(prefix)))
            continue
        levels = session_satisfaction(config, item.allocation)
        for entry, allocated, level, plan in zip(item.ranked, item.allocation, levels, item.layer_plans):
            writer.writerow(prefix + [
                entry.rank, entry.session_id, entry.viewers, format_kbps(allocated.beta_kbps),
                format_level(level.s_level),
                plan.enhancement_count, format_kbps(plan.residual_kbps)
            ])


def write_limits(bounds: CapacityBounds, stream: IO[str]):
    """Write the capacity bounds as `n_hq,...` and `n_lq,...` rows."""
    writer = _writer(stream)
    writer.writerows([["n_hq", bounds.n_hq], ["n_lq", bounds.n_lq]])
