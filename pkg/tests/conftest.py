from fractions import Fraction
from pathlib import Path
from typing import List, NamedTuple, Sequence, Tuple

import numpy as np
import pytest

import popcast as pc

BASELINE_DIR = Path(__file__).parent / "baseline_data"


class ExactAllocation(NamedTuple):
    betas: Tuple[Fraction, ...]
    x_terms: Tuple[Fraction, ...]
    last_rank_capped: bool


def exact_popularity_allocation(capacity, beta_max, beta_min, viewers: Sequence[int]) -> ExactAllocation:
    """Popularity based allocation in rational arithmetic, `viewers` in rank order."""
    capacity, beta_max, beta_min = Fraction(capacity), Fraction(beta_max), Fraction(beta_min)
    sessions, total = len(viewers), sum(viewers)
    if beta_max * sessions <= capacity:
        return ExactAllocation((beta_max,) * sessions, (Fraction(0),) * sessions, False)
    if total == 0:
        return ExactAllocation((capacity / sessions,) * sessions, (Fraction(0),) * sessions, False)
    a = Fraction(sessions, total) * (capacity / sessions - beta_min)
    beta_diff = beta_max - beta_min
    betas, x_terms = [], []
    carried = Fraction(0)
    last_rank_capped = False
    for m, count in enumerate(viewers, start=1):
        s_m = a * count + carried
        if s_m >= beta_diff:
            betas.append(beta_max)
            if m == sessions:
                last_rank_capped = True
                x_terms.append(Fraction(0))
            else:
                x_terms.append((s_m - beta_diff) / (sessions - m))
        else:
            betas.append(beta_min + s_m)
            x_terms.append(Fraction(0))
        carried += x_terms[-1]
    return ExactAllocation(tuple(betas), tuple(x_terms), last_rank_capped)


class Case(NamedTuple):
    config: pc.SystemConfig
    ranked: pc.RankedSessions
    allocation: pc.Allocation


def snapshots_from_counts(counts: Sequence[int], prefix: str = "s") -> List[pc.SessionSnapshot]:
    return [pc.SessionSnapshot(f"{prefix}{index:03d}", int(count)) for index, count in enumerate(counts, start=1)]


def random_case(rng: np.random.Generator, max_sessions: int = 64, max_users: int = 1000) -> Case:
    """A random admissible instance on an integer parameter grid."""
    sessions = int(rng.integers(1, max_sessions + 1))
    beta_min = int(rng.integers(1, 51))
    beta_max = beta_min + int(rng.integers(0, 101))
    low = max(beta_max, sessions * beta_min)
    capacity = int(rng.integers(low, max(low, sessions * beta_max) + 101))
    users = int(rng.integers(1, max_users + 1))
    counts = rng.multinomial(users, rng.dirichlet(np.ones(sessions)))
    config = pc.SystemConfig(capacity_kbps=float(capacity), beta_max_kbps=float(beta_max),
                             beta_min_kbps=float(beta_min), layer_granularity_kbps=10.)
    ranked = pc.rank_sessions(snapshots_from_counts(counts))
    return Case(config, ranked, pc.popularity_allocate(config, ranked))


@pytest.fixture(scope="session")
def property_cases() -> List[Case]:
    rng = np.random.default_rng(20240917)
    return [random_case(rng) for _ in range(10_000)]


@pytest.fixture(scope="session")
def oracle():
    return exact_popularity_allocation


@pytest.fixture
def table_config() -> pc.SystemConfig:
    return pc.presets["default"].system_config()


@pytest.fixture
def small3() -> pc.SystemConfig:
    return pc.presets["small-3"].system_config()


@pytest.fixture
def small4() -> pc.SystemConfig:
    return pc.presets["small-4"].system_config()


@pytest.fixture(scope="module", ids=list(pc.presets.keys()), params=list(pc.presets.values()))
def preset(request) -> pc.ParametersList:
    return request.param


@pytest.fixture
def baseline():
    """Read the expected output stored in `tests/baseline_data/<name>.csv`."""
    def load(name: str) -> str:
        return (BASELINE_DIR / f"{name}.csv").read_text(encoding="utf-8")
    return load
