import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from shadowmart.errors import NotAPeacock, OrderViolation
from shadowmart.families import spread_chain, walk_law, walk_mixture_peacock
from shadowmart.measure import (
    Measure,
    check_convex_order,
    check_cs_order,
    check_positive_order,
    equal,
    max_abs_diff,
    scale,
    w1_distance,
)
from shadowmart.mot import brute_force_shadow
from shadowmart.parametrization import Parametrization
from shadowmart.potential import potential_of
from shadowmart.shadow import (
    Peacock,
    ShadowTable,
    obstructed_shadow,
    residual_peacock,
    shadow_associativity_check,
    shadow_homogeneity_check,
    shadow_path,
    shadow_table,
    simple_shadow,
)

from conftest import measures, random_measure, random_spread, spread_pairs

SYM = Measure([-1.0, 1.0], [0.5, 0.5])
SPREAD = Measure([-2.0, 0.0, 2.0], [0.25, 0.5, 0.25])
HALF0 = Measure.dirac(0.0, 0.5)


def close(a, b, tol=1e-12):
    return max_abs_diff(a, b) <= tol


class TestSimpleShadow:
    def test_submeasure_is_fixed(self):
        assert simple_shadow(HALF0, SPREAD) == HALF0

    def test_forced_weights(self):
        assert close(simple_shadow(HALF0, SYM), Measure([-1.0, 1.0], [0.25, 0.25]))

    def test_three_quarters(self):
        eta = simple_shadow(Measure.dirac(0.0, 0.75), SPREAD)
        assert close(eta, Measure([-2.0, 0.0, 2.0], [0.125, 0.5, 0.125]))
        assert close(eta, brute_force_shadow(Measure.dirac(0.0, 0.75), SPREAD), 1e-7)

    def test_full_mass_gives_target(self):
        assert close(simple_shadow(Measure.dirac(0.0), SPREAD), SPREAD)

    def test_order_violation(self):
        with pytest.raises(OrderViolation):
            simple_shadow(Measure.dirac(3.0, 0.5), SYM)
        with pytest.raises(OrderViolation):
            simple_shadow(Measure.dirac(0.0, 2.0), SYM)

    def test_empty(self):
        assert len(simple_shadow(Measure.zero(), SYM)) == 0

    @given(spread_pairs(), st.floats(0.05, 1.0))
    def test_shadow_is_sandwiched(self, pair, frac):
        mu0, mu1 = pair
        nu = Measure(mu0.xs, mu0.ws * frac)
        eta = simple_shadow(nu, mu1)
        assert eta.mass == pytest.approx(nu.mass, abs=1e-12)
        assert check_convex_order(nu, eta)
        assert check_positive_order(eta, mu1)

    @given(spread_pairs(), st.floats(0.05, 1.0))
    def test_potential_difference_bound(self, pair, frac):
        # a wider target raises the shadow potential by at most the target gain
        mu, nu_full = pair
        mu2 = random_spread(np.random.default_rng(len(mu)), mu)
        nu = Measure(nu_full.xs, nu_full.ws * frac)
        try:
            lo = simple_shadow(nu, mu)
        except OrderViolation:
            return
        hi = simple_shadow(nu, mu2)
        g = np.union1d(np.union1d(mu.xs, mu2.xs), np.union1d(lo.xs, hi.xs))
        lhs = potential_of(hi)(g) - potential_of(lo)(g)
        rhs = potential_of(mu2)(g) - potential_of(mu)(g)
        assert np.all(lhs <= rhs + 1e-9)


class TestObstructed:
    def test_single_link(self):
        assert close(obstructed_shadow(HALF0, [SYM]), simple_shadow(HALF0, SYM))

    def test_two_link_chain(self):
        eta = obstructed_shadow(HALF0, spread_chain())
        assert close(eta, Measure([-2.0, 0.0, 2.0], [0.125, 0.25, 0.125]))
        path = shadow_path(HALF0, spread_chain())
        assert close(path[0], Measure([-1.0, 1.0], [0.25, 0.25]))

    def test_failing_index(self):
        with pytest.raises(OrderViolation) as info:
            obstructed_shadow(Measure.dirac(0.0, 0.5), [SYM, Measure.dirac(0.0)])
        assert info.value.index == 1

    def test_chain_discontinuity(self):
        # a short-lived spread before time 1 leaves a permanent mark on the shadow
        # on the grid {0, (n-1)/n, 1} the chain is the same for every n
        tail = spread_chain()[1]
        chain = [Measure.dirac(0.0), SYM, tail]
        assert close(obstructed_shadow(HALF0, chain), Measure([-2.0, 0.0, 2.0], [0.125, 0.25, 0.125]))
        limit = obstructed_shadow(HALF0, [Measure.dirac(0.0), Measure.dirac(0.0), tail])
        assert close(limit, HALF0)

    @given(spread_pairs(), st.floats(0.1, 0.9))
    def test_more_obstructions_increase_shadow(self, pair, frac):
        mu0, mu1 = pair
        mu2 = random_spread(np.random.default_rng(len(mu1)), mu1)
        nu = Measure(mu0.xs, mu0.ws * frac)
        short = obstructed_shadow(nu, [mu0, mu2])
        full = obstructed_shadow(nu, [mu0, mu1, mu2])
        assert check_convex_order(short, full)


class TestCalculus:
    def test_associativity_examples(self):
        assert shadow_associativity_check(HALF0, Measure.zero(), [SYM]).deviation == 0.0
        q = Measure.dirac(0.0, 0.25)
        assert shadow_associativity_check(q, q, [SYM]).deviation <= 1e-15
        assert shadow_associativity_check(q, q, spread_chain()).deviation <= 1e-15

    def test_homogeneity_examples(self):
        assert shadow_homogeneity_check(HALF0, [SYM], 1.0).deviation == 0.0
        r = shadow_homogeneity_check(HALF0, [SYM], 2.0)
        assert r.ok
        assert close(obstructed_shadow(Measure.dirac(0.0), [scale(SYM, 2.0)]), SYM)
        rng = np.random.default_rng(3)
        mu = random_measure(rng)
        target = random_spread(rng, mu)
        assert shadow_homogeneity_check(scale(mu, 0.5), [mu, target], 0.3).deviation < 1e-9

    def test_homogeneity_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            shadow_homogeneity_check(HALF0, [SYM], 0.0)

    def test_residual_peacock(self):
        p = Peacock([0.0, 0.5, 1.0], [Measure.dirac(0.0), *spread_chain()])
        r = residual_peacock(p, HALF0)
        expect = [HALF0, Measure([-1.0, 1.0], [0.25, 0.25]), Measure([-2.0, 0.0, 2.0], [0.125, 0.25, 0.125])]
        for a, b in zip(r.marginals, expect):
            assert close(a, b)

    def test_residual_trivial_cases(self):
        p = Peacock([0.0, 1.0], [SYM, SYM])
        assert all(len(m) == 0 for m in residual_peacock(p, SYM).marginals)
        q = walk_mixture_peacock()
        r = residual_peacock(q, Measure.zero())
        assert all(close(a, b) for a, b in zip(r.marginals, q.marginals))

    @given(spread_pairs(), st.floats(0.1, 0.9), st.floats(0.1, 0.9))
    def test_monotone_in_positive_order(self, pair, a, b):
        mu0, mu1 = pair
        lo, hi = sorted((a, b))
        s_lo = obstructed_shadow(Measure(mu0.xs, mu0.ws * lo), [mu0, mu1])
        s_hi = obstructed_shadow(Measure(mu0.xs, mu0.ws * hi), [mu0, mu1])
        assert check_positive_order(s_lo, s_hi)

    @given(spread_pairs())
    def test_monotone_in_convex_and_cs_order(self, pair):
        mu0, mu1 = pair
        target = scale(mu1, 2.0)
        nu = Measure([float(mu0.barycenter)], [1.0])
        # nu <=_c mu0 and a right shift of nu is above it in the cs order
        for a, b in ((nu, mu0), (nu, Measure([nu.xs[0] + 0.25], [1.0]))):
            try:
                sa, sb = simple_shadow(a, target), simple_shadow(b, target)
            except OrderViolation:
                continue
            if check_convex_order(a, b):
                assert check_convex_order(sa, sb)
            assert check_cs_order(sa, sb)


class TestPeacock:
    def test_validation(self):
        with pytest.raises(NotAPeacock):
            Peacock([0.0, 1.0], [SYM, Measure.dirac(0.0)])
        with pytest.raises(NotAPeacock):
            Peacock([1.0, 0.0], [SYM, SYM])
        with pytest.raises(NotAPeacock):
            Peacock([0.0], [SYM, SYM])

    def test_roundtrip(self):
        p = walk_mixture_peacock()
        q = Peacock.from_dict(json.loads(json.dumps(p.to_dict())))
        assert q.times == p.times
        assert all(a == b for a, b in zip(p.marginals, q.marginals))


class TestTable:
    def test_endpoints_and_sunset_entry(self):
        p = walk_mixture_peacock()
        param = Parametrization("sunset", p.marginals[0])
        t = shadow_table(p, param, [0.0, 0.25, 0.5, 1.0])
        assert all(len(m) == 0 for m in t.entries[0])
        for a, b in zip(t.entries[-1], p.marginals):
            assert close(a, b)
        assert close(t.entries[2][2], scale(walk_law(2), 0.5))
        assert close(t.entries[2][2], Measure([-2.0, 0.0, 2.0], [0.125, 0.25, 0.125]))

    def test_threads_match_serial(self):
        p = walk_mixture_peacock()
        param = Parametrization("left_curtain", p.marginals[0])
        grid = np.linspace(0, 1, 9).tolist()
        a = shadow_table(p, param, grid)
        b = shadow_table(p, param, grid, threads=4)
        assert a.to_dict() == b.to_dict()

    def test_json_roundtrip(self):
        p = walk_mixture_peacock(2)
        t = shadow_table(p, Parametrization("sunset", p.marginals[0]), [0.0, 0.5, 1.0])
        d = json.loads(t.to_json())
        assert set(d) == {"alphas", "times", "entries"}
        assert ShadowTable.from_dict(d).to_dict() == t.to_dict()

    def test_unsorted_grid(self):
        p = walk_mixture_peacock(1)
        with pytest.raises(ValueError):
            shadow_table(p, Parametrization("sunset", p.marginals[0]), [0.0, 1.0, 0.5])


@given(spread_pairs(), spread_pairs())
def test_lipschitz_stability(p1, p2):
    nu, mu = p1
    nu2, mu2 = p2
    half, half2 = Measure(nu.xs, 0.5 * nu.ws), Measure(nu2.xs, 0.5 * nu2.ws)
    try:
        a = simple_shadow(half, mu)
        b = simple_shadow(half2, mu2)
    except OrderViolation:
        return
    lhs = w1_distance(a, b)
    assert lhs <= w1_distance(half, half2) + 2 * w1_distance(mu, mu2) + 1e-9


@given(measures(max_atoms=4, mass=0.5), measures(max_atoms=5, mass=1.0))
def test_matches_lp_oracle(nu, mu):
    try:
        eta = simple_shadow(nu, mu)
    except OrderViolation:
        return
    assert equal(eta, brute_force_shadow(nu, mu), tol=1e-7)
