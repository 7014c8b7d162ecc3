import numpy as np
import pytest
from hypothesis import given

from shadowmart.errors import AsymptoticMismatch, NoConvexMinorant, NotAPotential
from shadowmart.martingale import discretize
from shadowmart.measure import Measure, equal, w1_distance
from shadowmart.potential import (
    PLFunction,
    cinf,
    csup,
    lower_convex_envelope,
    measure_of,
    pointwise_inf_then_envelope,
    pointwise_sup,
    potential_of,
)

from conftest import measures, spread_pairs

SYM = Measure([-1.0, 1.0], [0.5, 0.5])
SPREAD = Measure([-2.0, 0.0, 2.0], [0.25, 0.5, 0.25])
PROBES = np.linspace(-5, 5, 41)


class TestPotentialOf:
    def test_dirac(self):
        u = potential_of(Measure.dirac(0.0))
        assert np.allclose(u(PROBES), np.abs(PROBES), atol=0, rtol=0)

    def test_symmetric(self):
        assert potential_of(SYM)(0.0) == 1.0

    def test_scaled(self):
        u = potential_of(Measure.dirac(0.0, 0.25))
        assert np.array_equal(u(PROBES), 0.25 * np.abs(PROBES))

    def test_slope_jumps(self):
        u = potential_of(SPREAD)
        assert np.allclose(np.diff(u.slopes()), 2 * SPREAD.ws)
        assert u.left_slope == -1.0 and u.right_slope == 1.0

    @given(measures())
    def test_roundtrip_exact(self, m):
        assert equal(measure_of(potential_of(m)), m, tol=1e-12)

    @given(measures())
    def test_convexity_and_asymptotes(self, m):
        u = potential_of(m)
        assert u.is_convex(tol=0.0)
        far = 100.0
        star = m.barycenter
        assert float(u(far)) == pytest.approx(m.mass * abs(far - star), abs=1e-9)
        assert float(u(-far)) == pytest.approx(m.mass * abs(-far - star), abs=1e-9)


class TestMeasureOf:
    def test_abs(self):
        assert measure_of(PLFunction([0.0], [0.0], -1, 1)) == Measure.dirac(0.0)

    def test_max_one_abs(self):
        u = PLFunction([-1.0, 1.0], [1.0, 1.0], -1, 1)
        assert measure_of(u) == SYM

    def test_bad_slopes(self):
        with pytest.raises(NotAPotential):
            measure_of(PLFunction([0.0], [0.0], -1, 2))

    def test_bad_asymptote(self):
        # |x| + 1 has the right slopes but not the potential identity
        with pytest.raises(NotAPotential):
            measure_of(PLFunction([-1.0, 1.0], [2.0, 2.0], -1, 1))

    def test_not_convex(self):
        with pytest.raises(NotAPotential):
            measure_of(PLFunction([-1.0, 0.0, 1.0], [1.0, 1.5, 1.0], -1, 1))


class TestEnvelope:
    def test_convex_is_fixed(self):
        u = potential_of(SPREAD)
        env = lower_convex_envelope(u)
        assert np.allclose(env(PROBES), u(PROBES))

    def test_bump_removed(self):
        f = PLFunction([-1.0, 0.0, 1.0], [1.0, 1.5, 1.0], -1, 1)
        env = lower_convex_envelope(f)
        assert np.allclose(env(PROBES), np.maximum(1.0, np.abs(PROBES)))

    def test_shadow_difference(self):
        nu, mu = Measure.dirac(0.0, 0.5), SYM
        um = potential_of(mu)
        env = lower_convex_envelope(um - potential_of(nu))
        g = np.array([-1.0, 0.0, 1.0])
        eta = measure_of(PLFunction(g, um(g) - env(g), -0.5, 0.5))
        assert equal(eta, Measure([-1.0, 1.0], [0.25, 0.25]), tol=1e-12)

    def test_no_minorant(self):
        with pytest.raises(NoConvexMinorant):
            lower_convex_envelope(PLFunction([0.0], [0.0], 1, -1))

    @given(spread_pairs())
    def test_below_and_idempotent(self, pair):
        nu, mu = pair
        f = potential_of(mu) - potential_of(Measure(nu.xs, 0.5 * nu.ws))
        env = lower_convex_envelope(f)
        g = np.union1d(f.xs, env.xs)
        assert np.all(env(g) <= f(g) + 1e-12)
        again = lower_convex_envelope(env)
        assert np.allclose(again(g), env(g), atol=1e-12)
        assert env.is_convex(tol=1e-12)


class TestSupInf:
    def test_sup_examples(self):
        u0 = potential_of(Measure.dirac(0.0))
        assert np.allclose(pointwise_sup([u0, u0])(PROBES), u0(PROBES))
        us = potential_of(SYM)
        assert np.allclose(pointwise_sup([u0, us])(PROBES), us(PROBES))

    def test_inf_example(self):
        u = pointwise_inf_then_envelope([potential_of(SYM), potential_of(Measure.dirac(0.0))])
        assert np.allclose(u(PROBES), np.abs(PROBES))

    def test_csup_cinf(self):
        assert equal(csup([SYM]), SYM)
        assert equal(csup([Measure.dirac(0.0), SYM]), SYM)
        wide = Measure([-2.0, 2.0], [0.5, 0.5])
        assert equal(cinf([wide, SYM]), SYM)

    def test_crossing_sup(self):
        # two incomparable measures: the sup strictly dominates both
        a = Measure([-1.0, 1.0], [0.5, 0.5])
        b = Measure([-2.0, 0.0, 2.0], [0.1, 0.8, 0.1])
        s = csup([a, b])
        assert s.mass == pytest.approx(1.0)
        assert s.barycenter == pytest.approx(0.0, abs=1e-12)
        us = potential_of(s)
        assert np.all(us(PROBES) >= np.maximum(potential_of(a)(PROBES), potential_of(b)(PROBES)) - 1e-12)

    def test_mismatch(self):
        with pytest.raises(AsymptoticMismatch):
            pointwise_sup([potential_of(Measure.dirac(0.0)), potential_of(Measure.dirac(1.0))])
        with pytest.raises(AsymptoticMismatch):
            pointwise_sup([potential_of(Measure.dirac(0.0)), potential_of(Measure.dirac(0.0, 0.5))])


def test_potentials_converge_under_refinement():
    # discretized uniform[-1, 1] approaches U(x) = (1 + x^2) / 2 inside [-1, 1]
    probes = np.linspace(-1.5, 1.5, 13) + 0.0371
    exact = np.where(np.abs(probes) <= 1, (1 + probes ** 2) / 2, np.abs(probes))
    errs = []
    prev = None
    for m in (8, 32, 128):
        d = discretize({"type": "uniform", "lo": -1.0, "hi": 1.0}, m)
        errs.append(float(np.max(np.abs(potential_of(d)(probes) - exact))))
        if prev is not None:
            assert w1_distance(prev, d) < 1.0 / m * 4
        prev = d
    assert errs[0] > errs[1] > errs[2]
    assert errs[2] < 1e-4


def test_csv_dump():
    text = potential_of(SYM).to_csv()
    assert text.splitlines()[0] == "x,value"
    assert text.splitlines()[1] == "-1.0,1.0"
