"""Test the ranking and both allocation schemes."""
import itertools
import math
import warnings
from fractions import Fraction

import numpy as np
import pytest

import popcast as pc
from .conftest import random_case, snapshots_from_counts


def _snapshots(**viewers):
    return [pc.SessionSnapshot(session_id, count) for session_id, count in viewers.items()]


def test_rank_already_sorted():
    ranked = pc.rank_sessions(_snapshots(A=7, B=2, C=1))
    assert [(entry.rank, entry.session_id, entry.viewers) for entry in ranked] == \
           [(1, "A", 7), (2, "B", 2), (3, "C", 1)]
    assert ranked.total_viewers == 10
    assert ranked.session_count == 3


def test_rank_ties_by_session_id():
    ranked = pc.rank_sessions(_snapshots(B=5, A=5))
    assert ranked.session_ids == ["A", "B"]


def test_rank_empty():
    ranked = pc.rank_sessions([])
    assert ranked.session_count == 0
    assert ranked.total_viewers == 0
    assert ranked.mean_viewers == 0.


def test_rank_unsorted():
    ranked = pc.rank_sessions(_snapshots(d=0, c=3, b=9, a=3))
    assert ranked.session_ids == ["b", "a", "c", "d"]
    np.testing.assert_array_equal(ranked.viewers, [9, 3, 3, 0])
    assert ranked.viewers_of("c") == 3
    with pytest.raises(KeyError):
        ranked.viewers_of("e")


def test_duplicate_id():
    with pytest.raises(pc.DuplicateSessionId, match="'A'"):
        pc.rank_sessions(_snapshots(A=1, B=2) + [pc.SessionSnapshot("A", 3)])


@pytest.mark.parametrize("viewers", [-1, 2.5, True, "3"], ids=["negative", "fraction", "bool", "string"])
def test_invalid_viewers(viewers):
    with pytest.raises((pc.DataError, TypeError, ValueError)):
        pc.SessionSnapshot("A", viewers)


def test_mean_between_extremes(property_cases):
    for case in property_cases:
        viewers = case.ranked.viewers
        assert viewers[0] >= case.ranked.mean_viewers >= viewers[-1]
        assert np.all(np.diff(viewers) <= 0)


@pytest.mark.parametrize("sessions, expected", [(1, 2000.), (10, 2000.), (15, 2000.), (30, 1000.), (50, 600.)])
def test_equal_share_table_config(table_config, sessions, expected):
    assert pc.equal_share_allocate(table_config, sessions) == expected


def test_equal_share_over_capacity(table_config):
    with pytest.raises(pc.OverCapacity) as error:
        pc.equal_share_allocate(table_config, 51)
    assert error.value.sessions == 51
    assert error.value.exit_code == 3


def test_equal_share_no_sessions(table_config):
    with pytest.raises(pc.DataError):
        pc.equal_share_allocate(table_config, 0)


def test_equal_share_per_session_form(small3):
    ranked = pc.rank_sessions(_snapshots(A=7, B=2, C=1))
    allocation = pc.equal_share_allocation(small3, ranked)
    assert allocation.scheme is pc.Scheme.EQUAL_SHARE
    assert allocation.intermediates is None
    assert allocation.as_dict() == pytest.approx({"A": 10000 / 3, "B": 10000 / 3, "C": 10000 / 3})
    assert pc.equal_share_allocation(small3, pc.rank_sessions([])) == pc.Allocation.empty(pc.Scheme.EQUAL_SHARE)


def test_one_cap(small3):
    allocation = pc.popularity_allocate(small3, pc.rank_sessions(_snapshots(A=7, B=2, C=1)))
    assert allocation.scheme is pc.Scheme.POPULARITY
    assert allocation.betas == pytest.approx([4000., 3350., 2650.], rel=1e-12)
    assert allocation.intermediates.a == pytest.approx(700., rel=1e-12)
    assert allocation.intermediates.beta_diff_kbps == 3000.
    assert allocation.intermediates.x_terms == pytest.approx((950., 0., 0.), rel=1e-12)
    assert allocation.intermediates.diagnostics == ()
    assert allocation.total_kbps == pytest.approx(10000., rel=1e-12)


def test_two_caps(small4):
    allocation = pc.popularity_allocate(small4, pc.rank_sessions(_snapshots(A=4, B=2, C=1, D=1)))
    assert allocation.betas.tolist() == [3000., 3000., 2500., 2500.]
    assert allocation.intermediates.a == 875.
    assert allocation.intermediates.x_terms == (500., 125., 0., 0.)
    assert allocation.as_dict() == {"A": 3000., "B": 3000., "C": 2500., "D": 2500.}
    assert allocation.beta_of("C") == 2500.


@pytest.mark.parametrize("units", [1, 1000], ids=["mbps", "kbps"])
def test_worked_instances_match_oracle(oracle, units):
    exact = oracle(10 * units, 4 * units, 1 * units, [7, 2, 1])
    assert [beta / units for beta in exact.betas] == [4, Fraction(67, 20), Fraction(53, 20)]
    assert [x / units for x in exact.x_terms] == [Fraction(19, 20), 0, 0]
    exact = oracle(11 * units, 3 * units, 1 * units, [4, 2, 1, 1])
    assert [beta / units for beta in exact.betas] == [3, 3, 2.5, 2.5]
    assert [x / units for x in exact.x_terms] == [0.5, 0.125, 0, 0]


def test_symmetric(table_config):
    allocation = pc.popularity_allocate(table_config, pc.rank_sessions(snapshots_from_counts([10] * 20)))
    assert allocation.betas.tolist() == [1500.] * 20


def test_unconstrained(table_config):
    allocation = pc.popularity_allocate(table_config, pc.rank_sessions(snapshots_from_counts(range(10, 0, -1))))
    assert allocation.betas.tolist() == [2000.] * 10
    assert allocation.intermediates.x_terms == (0.,) * 10


def test_at_minimum_capacity(table_config):
    allocation = pc.popularity_allocate(table_config, pc.rank_sessions(snapshots_from_counts([100] + [2] * 49)))
    assert allocation.betas.tolist() == [600.] * 50
    assert allocation.intermediates.a == 0.


def test_zero_viewer_session(small4):
    allocation = pc.popularity_allocate(small4, pc.rank_sessions(_snapshots(A=6, B=2, C=0, D=0)))
    assert allocation.beta_of("C") == allocation.beta_of("D") >= small4.beta_min_kbps
    assert allocation.total_kbps == pytest.approx(11000.)


def test_no_sessions(table_config):
    allocation = pc.popularity_allocate(table_config, pc.rank_sessions([]))
    assert allocation == pc.Allocation.empty()
    assert len(allocation) == 0
    assert allocation.total_kbps == 0.


def test_nobody_watches(table_config):
    ranked = pc.rank_sessions(snapshots_from_counts([0] * 20))
    with pytest.warns(pc.EmptyPopulationWarning):
        allocation = pc.popularity_allocate(table_config, ranked)
    assert allocation.betas.tolist() == [1500.] * 20
    assert len(allocation.intermediates.diagnostics) == 1


def test_nobody_watches_unconstrained(table_config):
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        allocation = pc.popularity_allocate(table_config, pc.rank_sessions(snapshots_from_counts([0] * 5)))
    assert allocation.betas.tolist() == [2000.] * 5


def test_over_capacity(table_config):
    with pytest.raises(pc.OverCapacity, match="51 sessions"):
        pc.popularity_allocate(table_config, pc.rank_sessions(snapshots_from_counts([1] * 51)))


@pytest.mark.parametrize("capacity, beta_max, beta_min, sessions", [
    (8.1, 1.8, 0.9, 9),
    (4.3, 0.2, 0.1, 43),
], ids=["9-sessions", "43-sessions"])
def test_admission_edge(capacity, beta_max, beta_min, sessions):
    """M beta_min equals C while C/M rounds below beta_min."""
    config = pc.SystemConfig(capacity, beta_max, beta_min, beta_min / 4)
    allocation = pc.popularity_allocate(config, pc.rank_sessions(snapshots_from_counts(range(sessions, 0, -1))))
    assert np.all(allocation.betas >= beta_min)
    assert np.all(allocation.betas <= beta_max)
    assert allocation.total_kbps == pytest.approx(capacity, rel=1e-9)
    assert len(pc.plan_allocation(allocation, config)) == sessions

    with pytest.warns(pc.EmptyPopulationWarning):
        nobody = pc.popularity_allocate(config, pc.rank_sessions(snapshots_from_counts([0] * sessions)))
    assert np.all(nobody.betas >= beta_min)
    assert len(pc.plan_allocation(nobody, config)) == sessions


def test_last_rank_clamped():
    # C is one ulp below 4 beta_max
    config = pc.SystemConfig(1.7256349385534981, 0.4314087346383746, 0.14388193965445126, 0.01)
    with pytest.warns(pc.LastRankCapWarning):
        allocation = pc.popularity_allocate(config, pc.rank_sessions(snapshots_from_counts([1, 1, 1, 1])))
    assert allocation.beta_at(4) == config.beta_max_kbps
    assert np.all(allocation.betas <= config.beta_max_kbps)
    assert allocation.intermediates.x_terms[-1] == 0.
    assert len(allocation.intermediates.diagnostics) == 1
    assert "last rank" in allocation.intermediates.diagnostics[0]


@pytest.mark.parametrize("capacity, beta_max, beta_min, expected", [
    (30000., 2000., 600., (15, 50)),
    (2000., 2000., 2000., (1, 1)),
    (30000., 7000., 7000., (4, 4)),
    (10000., 4000., 1000., (2, 10)),
    (0.5, 0.25, 0.125, (2, 4)),
], ids=["table", "equal", "floor", "small-3", "binary-fractions"])
def test_capacity_limits(capacity, beta_max, beta_min, expected):
    config = pc.SystemConfig(capacity, beta_max, beta_min, 1.)
    bounds = pc.capacity_limits(config)
    assert (bounds.n_hq, bounds.n_lq) == expected
    assert bounds.n_hq <= bounds.n_lq


@pytest.mark.parametrize("m, expected", [(1, 0.), (2, 500.), (3, 0.)])
def test_delta_two_caps(small4, m, expected):
    allocation = pc.popularity_allocate(small4, pc.rank_sessions(_snapshots(A=4, B=2, C=1, D=1)))
    assert pc.allocation_delta(allocation, m) == expected


def test_delta_symmetric(table_config):
    allocation = pc.popularity_allocate(table_config, pc.rank_sessions(snapshots_from_counts([10] * 20)))
    assert all(pc.allocation_delta(allocation, m) == 0. for m in range(1, 20))


@pytest.mark.parametrize("m", [0, 4, 5])
def test_delta_out_of_range(small4, m):
    allocation = pc.popularity_allocate(small4, pc.rank_sessions(_snapshots(A=4, B=2, C=1, D=1)))
    with pytest.raises(pc.RankOutOfRange):
        pc.allocation_delta(allocation, m)


def test_delta_needs_popularity_scheme(small4):
    allocation = pc.equal_share_allocation(small4, pc.rank_sessions(_snapshots(A=4, B=2)))
    with pytest.raises(pc.DataError):
        pc.allocation_delta(allocation, 1)


def test_beta_at(small4):
    allocation = pc.popularity_allocate(small4, pc.rank_sessions(_snapshots(A=4, B=2, C=1, D=1)))
    assert allocation.beta_at(4) == 2500.
    with pytest.raises(IndexError):
        allocation.beta_at(5)


def test_delta_zero_for_equal_viewers_or_caps(property_cases):
    for case in property_cases[:2000]:
        viewers = case.ranked.viewers
        for m in range(1, case.allocation.session_count):
            delta = pc.allocation_delta(case.allocation, m)
            assert delta >= -1e-9
            capped = case.allocation.beta_at(m + 1) == case.config.beta_max_kbps
            if viewers[m - 1] == viewers[m] or capped:
                assert delta == pytest.approx(0., abs=1e-9)


def test_conservation(property_cases):
    violations = []
    for case in property_cases:
        config, sessions = case.config, case.ranked.session_count
        expected = min(config.capacity_kbps, sessions * config.beta_max_kbps)
        if not math.isclose(case.allocation.total_kbps, expected, rel_tol=1e-9):
            violations.append(case)
        if not pc.is_constrained(config, sessions):
            assert np.all(case.allocation.betas == config.beta_max_kbps)
    assert violations == []


def test_bounds_and_ordering(property_cases):
    for case in property_cases:
        config, betas = case.config, case.allocation.betas
        assert np.all(betas >= config.beta_min_kbps)
        assert np.all(betas <= config.beta_max_kbps)
        assert np.all(np.diff(betas) <= 1e-9)
        if pc.is_constrained(config, case.ranked.session_count):
            fair = config.capacity_kbps / case.ranked.session_count
            assert betas[0] >= fair - 1e-9
            assert betas[-1] <= fair + 1e-9
        assert all(x >= 0 for x in case.allocation.intermediates.x_terms)
        assert case.allocation.intermediates.x_terms[-1] == 0.
        assert case.allocation.intermediates.beta_diff_kbps == config.beta_max_kbps - config.beta_min_kbps


def test_matches_oracle_on_corpus(property_cases, oracle):
    for case in property_cases:
        config = case.config
        exact = oracle(config.capacity_kbps, config.beta_max_kbps, config.beta_min_kbps,
                       case.ranked.viewers.tolist())
        assert not exact.last_rank_capped
        assert case.allocation.betas == pytest.approx([float(beta) for beta in exact.betas], abs=1e-9, rel=1e-12)


@pytest.mark.parametrize("seed", range(20))
def test_matches_oracle_small(oracle, seed):
    rng = np.random.default_rng(seed)
    for _ in range(100):
        sessions = int(rng.integers(1, 7))
        beta_min = int(rng.integers(1, 6))
        beta_max = beta_min + int(rng.integers(0, 6))
        capacity = int(rng.integers(max(beta_max, sessions * beta_min), sessions * beta_max + 3))
        counts = rng.integers(0, 21, size=sessions)
        if counts.sum() == 0:
            counts[0] = 1
        config = pc.SystemConfig(float(capacity), float(beta_max), float(beta_min), 1.)
        ranked = pc.rank_sessions(snapshots_from_counts(counts))
        allocation = pc.popularity_allocate(config, ranked)
        exact = oracle(capacity, beta_max, beta_min, ranked.viewers.tolist())
        assert not exact.last_rank_capped
        for beta, exact_beta in zip(allocation.betas, exact.betas):
            assert abs(beta - float(exact_beta)) <= 1e-9
        for x_term, exact_x in zip(allocation.intermediates.x_terms, exact.x_terms):
            assert abs(x_term - float(exact_x)) <= 1e-9


@pytest.mark.parametrize("factor", [2, 3, 7, 1000])
def test_viewer_scale_invariance(factor):
    rng = np.random.default_rng(factor)
    for _ in range(200):
        case = random_case(rng)
        scaled = pc.rank_sessions(
            pc.SessionSnapshot(entry.session_id, entry.viewers * factor) for entry in case.ranked
        )
        np.testing.assert_array_equal(pc.popularity_allocate(case.config, scaled).betas, case.allocation.betas)


@pytest.mark.parametrize("seed", range(5))
def test_equal_viewers_get_equal_share(seed):
    rng = np.random.default_rng(seed)
    for _ in range(200):
        case = random_case(rng)
        sessions = case.ranked.session_count
        equal = pc.rank_sessions(snapshots_from_counts([int(rng.integers(1, 30))] * sessions))
        betas = pc.popularity_allocate(case.config, equal).betas
        expected = min(case.config.beta_max_kbps, case.config.capacity_kbps / sessions)
        assert betas == pytest.approx([expected] * sessions, rel=1e-12)


@pytest.mark.parametrize("seed", range(5))
def test_permutation_invariance(seed):
    rng = np.random.default_rng(seed)
    config = pc.SystemConfig(3000., 400., 100., 10.)
    counts = rng.integers(0, 5, size=8)
    snapshots = snapshots_from_counts(counts)
    expected = pc.popularity_allocate(config, pc.rank_sessions(snapshots)).as_dict()
    for permutation in itertools.islice(itertools.permutations(snapshots), 0, None, 997):
        assert pc.popularity_allocate(config, pc.rank_sessions(permutation)).as_dict() == expected
