import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from shadowmart.dilation import push_forward
from shadowmart.measure import Measure

settings.register_profile(
    "default", max_examples=60, deadline=None,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.data_too_large])
settings.register_profile("thorough", max_examples=500, deadline=None)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

# dyadic positions keep all potentials exactly representable
POSITIONS = [k / 4 for k in range(-16, 17)]


@st.composite
def measures(draw, min_atoms=1, max_atoms=6, mass=None):
    xs = draw(st.lists(st.sampled_from(POSITIONS), min_size=min_atoms, max_size=max_atoms, unique=True))
    ws = draw(st.lists(st.floats(0.05, 1.0), min_size=len(xs), max_size=len(xs)))
    ws = np.asarray(ws)
    if mass is not None:
        ws = ws * (mass / ws.sum())
    return Measure(xs, ws)


@st.composite
def spread_pairs(draw, max_atoms=5):
    """(mu, mu') with mu <=_c mu' built by pushing mu through a random target set."""
    mu = draw(measures(max_atoms=max_atoms, mass=1.0))
    extra = draw(st.lists(st.sampled_from(POSITIONS), min_size=0, max_size=4, unique=True))
    lo = min(mu.xs.min(), min(extra, default=0.0)) - draw(st.sampled_from([0.0, 0.5, 1.0]))
    hi = max(mu.xs.max(), max(extra, default=0.0)) + draw(st.sampled_from([0.0, 0.5, 1.0]))
    F = np.unique(np.concatenate(([lo, hi], extra)))
    return mu, push_forward(mu, F)


def random_measure(rng, n_max=6, mass=1.0, lo=-4, hi=4, step=0.5):
    grid = np.arange(lo, hi + step / 2, step)
    n = int(rng.integers(1, n_max + 1))
    xs = rng.choice(grid, n, replace=False)
    ws = rng.uniform(0.05, 1.0, n)
    return Measure(xs, ws * (mass / ws.sum()))


def random_spread(rng, mu, n_extra=4, lo=-4, hi=4, step=0.5):
    grid = np.arange(lo, hi + step / 2, step)
    extra = rng.choice(grid, int(rng.integers(0, n_extra + 1)), replace=False)
    F = np.unique(np.concatenate(([min(mu.xs.min(), lo / 2), max(mu.xs.max(), hi / 2)], extra,
                                  mu.xs[rng.random(mu.xs.size) < 0.3])))
    return push_forward(mu, F)


def random_peacock_marginals(rng, n_times, n_max=4):
    mu = random_measure(rng, n_max)
    out = [mu]
    for _ in range(n_times - 1):
        out.append(random_spread(rng, out[-1], n_extra=3))
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# acceptance lines collected by test_acceptance and echoed after the run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
