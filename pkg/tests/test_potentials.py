import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from logtransport.potentials import (Potential, TaylorPolynomial, evaluate, gevrey_tail_bound, polynomialize,
                                     schedule_N0, schedule_N1, taylor_degree, taylor_remainder_bound,
                                     truncate_fourier)


def two_cos():
    return Potential({(1,): 1.0, (-1,): 1.0})


def direct_sum(f: Potential, pts):
    """Mode-by-mode sum in plain Python complex arithmetic."""
    out = []
    for x in np.atleast_2d(pts):
        s = sum(complex(c) * complex(math.cos(2 * math.pi * float(np.dot(n, x))),
                                     math.sin(2 * math.pi * float(np.dot(n, x))))
                for n, c in zip(f.modes.tolist(), f.coeffs))
        out.append(f.coupling * s.real)
    return np.array(out)


def test_two_cos_values():
    f = two_cos()
    assert evaluate(f, 0.0) == pytest.approx(2.0)
    assert abs(evaluate(f, 0.25)) < 1e-15


def test_gevrey_saturated_coefficient():
    f = Potential.gevrey_saturated(2.0, 9)
    c = dict(zip(map(tuple, f.modes.tolist()), f.coeffs))
    assert abs(c[(9,)]) == pytest.approx(math.exp(-3), rel=1e-14)
    assert abs(c[(9,)]) == pytest.approx(0.049787, abs=1e-6)


def test_non_hermitian_rejected():
    with pytest.raises(ValueError):
        Potential({(1,): 1.0, (-1,): 0.5})
    with pytest.raises(ValueError):
        Potential({(1,): 1j, (-1,): 1j})


def test_gevrey_decay_enforced():
    with pytest.raises(ValueError):
        Potential({(1,): 0.9, (-1,): 0.9}, kind="gevrey", sigma=2.0)


def test_matches_direct_sum_multidim():
    f = Potential.gevrey_saturated(1.5, 2, dim=2, coupling=3.0)
    X = np.random.default_rng(1).random((50, 2)) - 0.5
    assert np.max(np.abs(evaluate(f, X) - direct_sum(f, X))) < 1e-12


@pytest.mark.parametrize("f", [Potential.cosine(4.0), Potential.cosine_sum(2.0, dim=2),
                               Potential.gevrey_saturated(2.0, 4, dim=2)])
def test_sup_norm_bound_dominates_grid(f):
    X = np.random.default_rng(2).random((10 ** 4, f.dim)) - 0.5
    assert np.max(np.abs(evaluate(f, X))) <= f.sup_norm_bound + 1e-12


def test_imaginary_residue_check():
    f = Potential.gevrey_saturated(2.0, 3, dim=2)
    pts = np.random.default_rng(3).random((1000, 2)) - 0.5
    phase = 2j * np.pi * (pts @ f.modes.T)
    assert np.max(np.abs((np.exp(phase) @ f.coeffs).imag)) <= 1e-12


@given(st.dictionaries(st.integers(1, 6), st.tuples(st.floats(-1, 1), st.floats(-1, 1)), min_size=1, max_size=4),
       st.floats(-3, 3))
@settings(max_examples=40, deadline=None)
def test_round_trip_serialization_exact(modes, lam):
    coeffs = {}
    for n, (re, im) in modes.items():
        coeffs[(n,)] = complex(re, im)
        coeffs[(-n,)] = complex(re, -im)
    f = Potential(coeffs, lam)
    g = Potential.loads(f.dumps())
    assert np.array_equal(f.modes, g.modes)
    assert np.array_equal(f.coeffs, g.coeffs)
    assert g.coupling == f.coupling and g.kind == f.kind


# -- Fourier truncation -------------------------------------------------------------------------


def test_truncation_exact_for_low_degree():
    t = truncate_fourier(Potential.cosine(3.0), 1)
    assert t.sup_error == 0.0


def test_truncation_to_mean():
    f = Potential.cosine(2.0).add_constant(0.7)
    t = truncate_fourier(f, 0)
    assert evaluate(t.approximant, np.array([0.1, 0.3])) == pytest.approx([0.7, 0.7])
    assert t.sup_error == pytest.approx(2.0)


def test_gevrey_tail_certificate_against_direct_sum():
    # 1-d shells have two points, so the tail is 2 * sum_{m > 100} exp(-sqrt m)
    with mpmath.workdps(30):
        ref = 2 * mpmath.nsum(lambda m: mpmath.exp(-mpmath.sqrt(m)), [101, mpmath.inf])
    bound = gevrey_tail_bound(100, 2.0, 1)
    assert bound >= float(ref) * (1 - 1e-12)
    assert bound <= float(ref) * 1.01
    f = Potential.gevrey_saturated(2.0, 3, coupling=1.5)
    t = truncate_fourier(f, 100)
    assert t.sup_error == pytest.approx(1.5 * bound, rel=1e-12)


def test_gevrey_tail_bound_two_dims_against_brute_force():
    # brute force over |n|_inf <= 400 plus a loose remainder, sigma = 1 (fast decay)
    M = 5
    axis = np.arange(-400, 401)
    n = np.stack(np.meshgrid(axis, axis, indexing="ij"), -1).reshape(-1, 2)
    sup = np.max(np.abs(n), axis=1)
    brute = np.sum(np.exp(-sup[sup > M].astype(float)))
    assert gevrey_tail_bound(M, 1.0, 2) >= brute * (1 - 1e-12)
    assert gevrey_tail_bound(M, 1.0, 2) <= brute * 1.001


@pytest.mark.parametrize("N0", [0, 1, 2, 3])
def test_truncation_certificate_sound_on_grid(N0):
    f = Potential.gevrey_saturated(2.0, 6, coupling=2.0)
    t = truncate_fourier(f, N0)
    x = np.linspace(-0.5, 0.5, 10 ** 5, endpoint=False)
    assert np.max(np.abs(evaluate(f, x) - t(x))) <= t.sup_error


# -- polynomialization ------------------------------------------------------------------------------


def test_cosine_taylor_degree_sixteen():
    t = truncate_fourier(Potential.cosine(1.0), 1)
    p = polynomialize(t, 1e-6)
    assert p.N1 == 16
    assert math.pi ** 17 / math.factorial(17) == pytest.approx(8e-7, rel=0.02)
    x = np.linspace(-0.5, 0.5, 10 ** 5, endpoint=False)
    err = np.max(np.abs(evaluate(Potential.cosine(1.0), x) - p(x)))
    assert err <= p.sup_error <= 1e-6 * (1 + 1e-6)


def test_loose_tolerance_gives_degree_zero():
    p = polynomialize(truncate_fourier(Potential.cosine(1.0), 1), 2.0)
    assert p.N1 == 0
    assert np.allclose(p(np.array([0.1, -0.3])), 1.0)


def test_degree_cap_enforced():
    with pytest.raises(ValueError):
        polynomialize(truncate_fourier(Potential.gevrey_saturated(1.0, 40), 40), 1e-300, degree_cap=20)


def test_two_mode_degree_is_sum_of_axis_degrees():
    f = Potential({(1, 2): 0.3, (-1, -2): 0.3, (0, 1): 0.2, (0, -1): 0.2})
    p = polynomialize(truncate_fourier(f, 2), 1e-8)
    poly = p.approximant
    sums = poly.degrees.sum(axis=1)
    assert p.N1 == sums.max()
    thr = 1e-8 / (4 * 0.3)
    assert poly.degrees[np.argmax(sums)].tolist() == [taylor_degree(1, thr), taylor_degree(2, thr)]


def test_schedule_scaling():
    # N1 grows like k^(sigma nu + eps); with N0 = ceil(k^(sigma + eps)) the recomputed degree tracks it
    k, sigma, nu = 20, 1.0, 2
    assert schedule_N0(k, sigma) == math.ceil(20 ** 1.05)
    assert schedule_N1(k, sigma, nu) == math.ceil(20 ** 2.05)
    f = Potential.cosine_sum(1.0, dim=2)
    p = polynomialize(truncate_fourier(f, schedule_N0(k, sigma)), math.exp(-k * 0.1))
    assert 0 < p.N1 <= schedule_N1(k, sigma, nu)


@pytest.mark.parametrize("tol", [1e-2, 1e-6, 1e-10])
def test_two_stage_certificate_sound_and_subadditive(tol):
    f = Potential.gevrey_saturated(2.0, 5, dim=2, coupling=1.0)
    t = truncate_fourier(f, 2)
    p = polynomialize(t, tol)
    assert p.sup_error <= sum(p.stage_errors) * (1 + 1e-15)
    X = np.random.default_rng(4).random((2 * 10 ** 4, 2)) - 0.5
    assert np.max(np.abs(evaluate(f, X) - p(X))) <= p.sup_error


def test_monomial_expansion_agrees_with_factored_form():
    p = polynomialize(truncate_fourier(Potential.cosine_sum(1.0, dim=2), 1), 1e-3).approximant
    mono = p.monomials()
    X = np.random.default_rng(5).random((20, 2)) - 0.5
    vals = [sum(c * x[0] ** e[0] * x[1] ** e[1] for e, c in mono.items()) for x in X]
    assert np.allclose(vals, p(X), atol=1e-9)


@given(st.integers(0, 60), st.integers(-6, 6))
@settings(max_examples=60, deadline=None)
def test_taylor_remainder_bound_is_valid(m, n):
    # partial sums in 100-digit arithmetic; remainders go down to ~1e-54 at m = 60, n = 1
    bound = taylor_remainder_bound(m, n)
    with mpmath.workdps(100):
        for t in mpmath.linspace(-math.pi * abs(n), math.pi * abs(n), 33):
            partial = mpmath.fsum((1j * t) ** k / mpmath.factorial(k) for k in range(m + 1))
            assert abs(mpmath.expj(t) - partial) <= bound * (1 + 1e-12)


def test_taylor_polynomial_type():
    p = polynomialize(truncate_fourier(Potential.cosine(1.0), 1), 1e-4).approximant
    assert isinstance(p, TaylorPolynomial)
