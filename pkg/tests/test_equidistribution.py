import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from logtransport.equidistribution import (Ball, PolySublevel, Union, delta_fit, fejer_hit_bound, fejer_kernel,
                                           fejer_series, hit_count, first_visit_check)
from logtransport.torus import Dynamics, continued_fraction, golden_mean

GOLDEN = Dynamics.shift([golden_mean()], dioph_class="DC", A=1.0, c=0.3)


def brute_hits(omega, x0, center, radius, N):
    out = []
    for k in range(1, N + 1):
        y = (x0 + k * omega - center) % 1.0
        if min(y, 1 - y) <= radius:
            out.append(k)
    return out


def test_golden_ball_hits_match_enumeration():
    rep = hit_count(GOLDEN, [0.0], Ball((0.0,), 0.1), 100)
    ref = brute_hits(golden_mean(), 0.0, 0.0, 0.1, 100)
    assert rep.hit_indices.tolist() == ref
    # pinned regression value
    assert rep.hits == 20
    assert rep.first_hit == ref[0]


def test_whole_torus_and_empty_ball():
    assert hit_count(GOLDEN, [0.0], Ball((0.0,), 0.5), 500).hits == 500
    assert hit_count(GOLDEN, [0.0], Ball((0.0,), 0.0), 500).hits == 0
    assert hit_count(GOLDEN, [0.0], Ball((0.0,), 0.0), 500).first_hit is None


def test_chunked_skew_orbit_matches_stepwise():
    import logtransport.equidistribution as eq
    d = Dynamics.skew_shift(golden_mean(), dim=2)
    S = Ball((0.1, -0.2), 0.05)
    old = eq._ORBIT_CHUNK
    try:
        eq._ORBIT_CHUNK = 7
        small = hit_count(d, [0.3, 0.1], S, 500)
    finally:
        eq._ORBIT_CHUNK = old
    big = hit_count(d, [0.3, 0.1], S, 500)
    assert np.array_equal(small.hit_indices, big.hit_indices)


def test_poly_sublevel_ties_count():
    S = PolySublevel({(1,): 1.0}, threshold=0.0, sense="<=")
    assert S.contains(np.array([[0.0]]))[0]
    S = PolySublevel({(2,): 1.0}, threshold=0.0, sense=">=")
    assert S.contains(np.array([[0.0]]))[0]
    assert PolySublevel({(2, 1): 1.0, (0, 0): -1.0}).degree == 3


def test_ball_degree_and_euclidean_metric():
    b = Ball((0.0, 0.0), 0.1, metric="euclidean")
    assert b.degree == 2
    assert not b.contains(np.array([[0.09, 0.09]]))[0]
    assert Ball((0.0, 0.0), 0.1).contains(np.array([[0.09, 0.09]]))[0]


@given(st.floats(-0.5, 0.49), st.floats(-0.5, 0.49), st.floats(0.0, 0.2), st.floats(0.0, 0.2),
       st.integers(1, 400))
@settings(max_examples=40, deadline=None)
def test_union_subadditive(c1, c2, r1, r2, N):
    S1, S2 = Ball((c1,), r1), Ball((c2,), r2)
    h1 = hit_count(GOLDEN, [0.0], S1, N).hits
    h2 = hit_count(GOLDEN, [0.0], S2, N).hits
    hu = hit_count(GOLDEN, [0.0], Union(S1, S2), N).hits
    assert hu <= h1 + h2
    if abs(((c1 - c2 + 0.5) % 1.0) - 0.5) > r1 + r2:
        assert hu == h1 + h2


@given(st.integers(1, 300), st.integers(1, 300), st.floats(0.0, 0.3), st.floats(0.0, 0.3))
@settings(max_examples=40, deadline=None)
def test_hits_monotone_in_N_and_radius(n1, n2, r1, r2):
    (na, nb), (ra, rb) = sorted((n1, n2)), sorted((r1, r2))
    S = Ball((0.2,), ra)
    assert hit_count(GOLDEN, [0.0], S, na).hits <= hit_count(GOLDEN, [0.0], S, nb).hits
    assert hit_count(GOLDEN, [0.0], S, nb).hits <= hit_count(GOLDEN, [0.0], Ball((0.2,), rb), nb).hits


# -- Fejér kernel ----------------------------------------------------------------------------------


def test_fejer_value_at_zero_and_pi():
    assert fejer_kernel(16, 0.0) == 16.0
    assert fejer_kernel(5, math.pi) == pytest.approx(0.2, abs=1e-14)


def test_fejer_mean_is_one():
    for R in (1, 4, 16, 33):
        val, _ = integrate.quad(lambda x: fejer_kernel(R, x), -math.pi, math.pi, limit=400,
                                points=[0.0], epsabs=1e-13, epsrel=1e-13)
        assert val / (2 * math.pi) == pytest.approx(1.0, abs=1e-8)


@given(st.integers(1, 64), st.floats(-math.pi, math.pi))
@settings(max_examples=200, deadline=None)
def test_fejer_coefficient_form_and_positivity(R, x):
    k = float(fejer_kernel(R, x))
    assert k >= 0
    assert k == pytest.approx(float(fejer_series(R, x)), abs=1e-10)


def test_fejer_near_singularity_continuous():
    xs = np.array([1e-12, 1e-9, 1e-7, 1e-5])
    assert np.allclose(fejer_kernel(20, xs), fejer_series(20, xs), atol=1e-10)


@pytest.mark.parametrize("N", [10 ** 3, 10 ** 4, 10 ** 5])
def test_fejer_hit_bound_on_golden(N):
    eps = N ** (-1 / 2)
    b = fejer_hit_bound(GOLDEN, [0.0], eps, N)
    assert b.lhs <= b.rhs
    assert b.lhs <= 16 * N * eps


def test_fejer_example_eps_one_hundredth():
    b = fejer_hit_bound(GOLDEN, [0.0], 0.01, 10 ** 4)
    assert b.lhs <= b.rhs


def test_fejer_majorant_dominates_count():
    b = fejer_hit_bound(Dynamics.shift([golden_mean(), math.sqrt(2) - 1], dioph_class="DC", A=2.0, c=0.05),
                        [0.1, 0.2], 0.02, 5000)
    assert b.lhs <= b.majorant


def test_rational_frequency_breaks_bound_with_warning():
    d = Dynamics.shift([1 / 3])
    with pytest.warns(RuntimeWarning):
        b = fejer_hit_bound(d, [0.0], 0.001, 3000, A=1.0)
    assert b.lhs == 1000
    assert b.lhs > 16 * 3000 * 0.001


def test_fejer_half_clamp_trivial():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        b = fejer_hit_bound(GOLDEN, [0.0], 0.5, 200)
    assert b.lhs == 200 <= b.rhs


# -- first visits ----------------------------------------------------------------------------------


def test_first_visit_golden_q8():
    cf = continued_fraction(golden_mean(), 20)
    assert cf.q(5) == 8
    r = first_visit_check(cf, 5, (0.2, 0.35), grid_size=10 ** 4)
    assert r.bound == 12
    assert r.passed


@pytest.mark.parametrize("n", [4, 7, 10])
def test_first_visit_brute_force_oracle(n):
    cf = continued_fraction(golden_mean(), 20)
    length = 1.2 / cf.q(n)
    r = first_visit_check(cf, n, (0.05, 0.05 + length), grid_size=500)
    worst = 0
    for x in np.arange(500) / 500:
        j = 1
        while (x + j * golden_mean() - 0.05) % 1.0 >= length:
            j += 1
        worst = max(worst, j)
    assert r.max_first_hit == worst
    assert r.passed


def test_first_visit_full_circle_and_precondition():
    cf = continued_fraction(golden_mean(), 20)
    assert first_visit_check(cf, 3, (-0.5, 0.5)).max_first_hit == 1
    with pytest.raises(ValueError):
        first_visit_check(cf, 5, (0.0, 1 / 8))


# -- sublinear exponent ------------------------------------------------------------------------------


def test_delta_fit_golden_recovers_radius_exponent():
    r = delta_fit(GOLDEN, [0.0], [10 ** 3, 10 ** 4, 10 ** 5], delta_try=0.4)
    assert r.delta == pytest.approx(0.4, abs=0.05)


def test_delta_fit_periodic_is_flat():
    r = delta_fit(Dynamics.shift([0.25]), [0.0], [10 ** 2, 10 ** 3, 10 ** 4], delta_try=0.4)
    assert abs(r.delta) < 1e-12


def test_delta_fit_skew_shift_positive():
    d = Dynamics.skew_shift(golden_mean(), dim=2, dioph_class="SDC", A=1.0, c=0.3)
    r = delta_fit(d, [0.0, 0.0], [10 ** 3, 10 ** 4, 10 ** 5], delta_try=0.25)
    assert r.delta > 0


def test_delta_fit_degenerate_and_span():
    with pytest.raises(ValueError):
        delta_fit(GOLDEN, [0.0], [10 ** 3, 10 ** 4], delta_try=0.3)
    with pytest.raises(ValueError):
        delta_fit(Dynamics.shift([0.5]), [0.25], [10 ** 2, 10 ** 3, 10 ** 4], delta_try=0.5)
