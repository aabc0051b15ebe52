"""Test the generated viewer populations and traces."""
import numpy as np
import pytest

import popcast as pc


def _spec(kind=pc.ScenarioKind.UNIFORM, total_users=200, session_count=30, seed=1):
    return pc.ScenarioSpec(kind=kind, total_users=total_users, session_count=session_count, seed=seed)


def test_single_session():
    snapshots = pc.generate(_spec(session_count=1, seed=12345))
    assert snapshots == [pc.SessionSnapshot("s001", 200)]


@pytest.mark.parametrize("seed", [0, 1, 2 ** 64 - 1])
def test_half_on_one(seed):
    snapshots = pc.generate(_spec(kind=pc.ScenarioKind.HALF_ON_ONE, seed=seed))
    assert snapshots[0] == pc.SessionSnapshot("s001", 100)
    assert sum(snapshot.viewers for snapshot in snapshots) == 200
    assert [snapshot.session_id for snapshot in snapshots] == pc.session_ids(30)


def test_half_on_one_odd_users():
    snapshots = pc.generate(_spec(kind=pc.ScenarioKind.HALF_ON_ONE, total_users=201, session_count=2))
    assert [snapshot.viewers for snapshot in snapshots] == [100, 101]


@pytest.fixture(scope="module", ids=["uniform", "half-on-one"], params=list(pc.ScenarioKind))
def kind(request):
    return request.param


def test_deterministic(kind):
    assert pc.generate(_spec(kind=kind, seed=7)) == pc.generate(_spec(kind=kind, seed=7))
    assert pc.generate(_spec(kind=kind, seed=7)) != pc.generate(_spec(kind=kind, seed=8))


@pytest.mark.parametrize("users, sessions", [(1, 2), (200, 50), (3, 40), (1000, 2)])
def test_totals(kind, users, sessions):
    snapshots = pc.generate(_spec(kind=kind, total_users=users, session_count=sessions))
    assert len(snapshots) == sessions
    assert sum(snapshot.viewers for snapshot in snapshots) == users
    assert all(snapshot.viewers >= 0 for snapshot in snapshots)


def test_uniform_mean():
    counts = np.array([
        [snapshot.viewers for snapshot in pc.generate(_spec(session_count=20, seed=seed))]
        for seed in range(10_000)
    ])
    assert np.all(np.abs(counts.mean(axis=0) - 10.) <= 0.5)


@pytest.mark.parametrize("values", [
    dict(total_users=0),
    dict(session_count=0),
    dict(kind=pc.ScenarioKind.HALF_ON_ONE, session_count=1),
    dict(seed=-1),
    dict(seed=2 ** 64),
    dict(kind=3),
], ids=["no-users", "no-sessions", "half-on-one-single", "negative-seed", "large-seed", "unknown-kind"])
def test_invalid_spec(values):
    with pytest.raises(pc.InvalidSpec):
        _spec(**values)


def test_from_number():
    assert pc.ScenarioKind.from_number(1) is pc.ScenarioKind.UNIFORM
    assert pc.ScenarioKind.from_number("2") is pc.ScenarioKind.HALF_ON_ONE
    with pytest.raises(pc.InvalidSpec):
        pc.ScenarioKind.from_number(3)


def test_session_ids():
    assert pc.session_ids(3) == ["s001", "s002", "s003"]
    assert pc.session_ids(1000)[-1] == "s1000"
    assert pc.session_ids(1000)[0] == "s0001"


def test_derive_seed():
    seed = pc.derive_seed(42, 0, 30)
    assert seed == pc.derive_seed(42, 0, 30)
    assert 0 <= seed < 2 ** 64
    others = {pc.derive_seed(42, trial, sessions) for trial in range(10) for sessions in range(15, 51)}
    assert len(others) == 10 * 36
    assert pc.derive_seed(43, 0, 30) != seed


@pytest.mark.parametrize("seed", range(10))
def test_trace_consistent(table_config, seed):
    trace = pc.synthesize_trace(table_config, 500, seed=seed)
    assert len(trace) == 500
    trace.validate()
    timestamps = [event.timestamp for event in trace]
    assert timestamps == sorted(timestamps)


def test_trace_deterministic(table_config):
    assert pc.synthesize_trace(table_config, 100, seed=3) == pc.synthesize_trace(table_config, 100, seed=3)


def test_trace_max_sessions(table_config):
    trace = pc.synthesize_trace(table_config, 2000, seed=5, max_sessions=4)
    running, most = set(), 0
    for event in trace:
        if event.kind is pc.EventKind.START:
            running.add(event.session_id)
        elif event.kind is pc.EventKind.END:
            running.discard(event.session_id)
        most = max(most, len(running))
    assert most <= 4


def test_trace_starts_with_a_session(table_config):
    trace = pc.synthesize_trace(table_config, 1, seed=9)
    assert trace.events[0].kind is pc.EventKind.START
    assert trace.events[0].session_id == "t0001"


def test_trace_empty(table_config):
    assert len(pc.synthesize_trace(table_config, 0, seed=0)) == 0


@pytest.mark.parametrize("values", [dict(events=-1), dict(events=5, max_sessions=0)])
def test_trace_invalid(table_config, values):
    with pytest.raises(pc.InvalidSpec):
        pc.synthesize_trace(table_config, seed=0, **values)
