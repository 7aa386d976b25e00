"""Transfer-matrix cocycles, Lyapunov exponents and large-deviation sets.

The one-step matrix at site k is ``[[v_k - z, -1], [1, 0]]`` with
``v_k = lambda f(T^k x)``; the n-step product ``A_n`` multiplies sites
``n, ..., 1`` (rightmost first).  Negative n gives the left cocycle
``A_{-m}(x) = A_m(T^{-m} x)^{-1}``.

Products are accumulated as ``Q @ R`` with Q in SU(2) and R upper
triangular, R stored through the logarithms of its diagonal.  Each step
re-factors, so nothing overflows and ``log|det|`` is an honestly accumulated
quantity (it should stay at 0).  All kernels are batched over phases and
energies.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .potentials import CertifiedApprox, Potential, TaylorPolynomial, evaluate, polynomialize, schedule_N0, truncate_fourier
from .torus import SHIFT, Dynamics, as_array, wrap

MAX_STEPS = 10 ** 8
MC_CHUNK = 2048


# -- potential sampling ----------------------------------------------------------


def orbit_points(d: Dynamics, X, offsets) -> np.ndarray:
    """``T^k x`` for every phase in X (shape (P, dim)) and every k in offsets.

    Returns shape (P, len(offsets), dim).
    """
    X = np.atleast_2d(as_array(X))
    offsets = np.asarray(offsets, dtype=np.int64)
    if d.kind == SHIFT:
        return wrap(X[:, None, :] + offsets[None, :, None] * d.omega[None, None, :])
    lo, hi = min(int(offsets.min()), 0), max(int(offsets.max()), 0)
    table = np.empty((X.shape[0], hi - lo + 1, d.dim))
    table[:, -lo] = wrap(X)
    x = table[:, -lo].copy()
    for k in range(1, hi + 1):
        x = d.forward(x)
        table[:, k - lo] = x
    x = table[:, -lo].copy()
    for k in range(1, -lo + 1):
        x = d.backward(x)
        table[:, -k - lo] = x
    return table[:, offsets - lo]


def sample(f, d: Dynamics, X, offsets, site_bumps: Mapping[int, float] | None = None) -> np.ndarray:
    """Potential values ``lambda f(T^k x)``, shape (P, len(offsets)).

    ``f`` may be a :class:`Potential`, a :class:`TaylorPolynomial` or a
    :class:`CertifiedApprox`.  ``site_bumps`` adds a constant at fixed orbit
    indices (a local perturbation of the sampled sequence).
    """
    if isinstance(f, CertifiedApprox):
        f = f.approximant
    offsets = np.asarray(offsets, dtype=np.int64)
    pts = orbit_points(d, X, offsets)
    v = evaluate(f, pts)
    if site_bumps:
        for site, amount in site_bumps.items():
            v[:, offsets == site] += amount
    if not np.all(np.isfinite(v)):
        raise FloatingPointError("non-finite potential value")
    return v


def offsets_for(n: int, start_at_zero: bool = False) -> np.ndarray:
    """Orbit indices in application order for an n-step product."""
    s = -1 if start_at_zero else 0
    if n > 0:
        return np.arange(s + 1, s + n + 1)
    return s - np.arange(0, -n)


# -- log-scaled products -------------------------------------------------------------


@dataclass
class _State:
    q: np.ndarray      # (..., 2, 2) complex, SU(2)
    l1: np.ndarray     # log r11
    l2: np.ndarray     # log |r22|
    ph2: np.ndarray    # phase of r22
    t: np.ndarray      # r12 / r11

    def log_norm(self) -> np.ndarray:
        rho = np.exp(self.l2 - self.l1)
        return self.l1 + np.log(_norm2x2(np.ones_like(self.t), self.t, np.zeros_like(self.t), rho * self.ph2))


def _norm2x2(p, q, r, s):
    """Largest singular value of ``[[p, q], [r, s]]`` in closed form."""
    fro = np.abs(p) ** 2 + np.abs(q) ** 2 + np.abs(r) ** 2 + np.abs(s) ** 2
    det = np.abs(p * s - q * r)
    disc = np.sqrt(np.maximum((fro - 2 * det) * (fro + 2 * det), 0.0))
    return np.sqrt((fro + disc) / 2)


def _run(v: np.ndarray, z, inverse: bool = False, running: bool = False):
    """Accumulate the cocycle over samples ``v`` (shape (P, n)) for energies z.

    Returns the final state with leading shape (P, Z) and, if ``running``,
    the array of ``log ||A_j||`` for j = 1..n with shape (P, Z, n).
    """
    v = np.atleast_2d(np.asarray(v, dtype=float))
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    P, n = v.shape
    shape = (P, z.size)
    q00 = np.ones(shape, dtype=complex)
    q10 = np.zeros(shape, dtype=complex)
    l1 = np.zeros(shape)
    l2 = np.zeros(shape)
    ph2 = np.ones(shape, dtype=complex)
    t = np.zeros(shape, dtype=complex)
    logs = np.empty(shape + (n,)) if running else None
    for j in range(n):
        a = v[:, j, None] - z[None, :]
        # Q = [[q00, -conj(q10)], [q10, conj(q00)]]
        q01 = -np.conj(q10)
        q11 = np.conj(q00)
        if inverse:
            # [[0, 1], [-1, a]] @ Q
            b00, b10 = q10, a * q10 - q00
            b01, b11 = q11, a * q11 - q01
        else:
            # [[a, -1], [1, 0]] @ Q
            b00, b10 = a * q00 - q10, q00
            b01, b11 = a * q01 - q11, q01
        r11 = np.sqrt(np.abs(b00) ** 2 + np.abs(b10) ** 2)
        n00, n10 = b00 / r11, b10 / r11
        r12 = np.conj(n00) * b01 + np.conj(n10) * b11
        # second column of the new Q is (-conj(n10), conj(n00))
        r22 = -n10 * b01 + n00 * b11
        rho_old = np.exp(l2 - l1) * ph2
        t = t + (r12 / r11) * rho_old
        abs22 = np.abs(r22)
        l1 = l1 + np.log(r11)
        l2 = l2 + np.log(abs22)
        ph2 = ph2 * (r22 / abs22)
        q00, q10 = n00, n10
        if running:
            rho = np.exp(l2 - l1) * ph2
            logs[..., j] = l1 + np.log(_norm2x2(1.0, t, 0.0, rho))
    q = np.empty(shape + (2, 2), dtype=complex)
    q[..., 0, 0], q[..., 1, 0] = q00, q10
    q[..., 0, 1], q[..., 1, 1] = -np.conj(q10), np.conj(q00)
    return _State(q, l1, l2, ph2, t), logs


@dataclass(frozen=True)
class LogScaledMatrix:
    """``exp(log_mag) * unit`` with ``||unit|| = 1``.

    ``log_abs_det`` is accumulated step by step from the factorization and
    should stay at 0 (the one-step matrices are unimodular); ``det_phase``
    is the phase of the determinant.
    """

    unit: np.ndarray
    log_mag: float
    det_phase: complex = 1.0
    log_abs_det: float = 0.0

    @classmethod
    def identity(cls) -> "LogScaledMatrix":
        return cls(np.eye(2, dtype=complex), 0.0, 1.0, 0.0)

    @classmethod
    def from_matrix(cls, m) -> "LogScaledMatrix":
        m = np.asarray(m, dtype=complex)
        s = float(_norm2x2(m[0, 0], m[0, 1], m[1, 0], m[1, 1]))
        det = complex(np.linalg.det(m))
        return cls(m / s, math.log(s), det / abs(det) if det else 1.0, math.log(abs(det)) if det else -math.inf)

    def matrix(self) -> np.ndarray:
        """The true matrix; overflows for very long products."""
        return math.exp(self.log_mag) * self.unit

    @property
    def det(self) -> complex:
        return self.det_phase * math.exp(self.log_abs_det)

    def __matmul__(self, other: "LogScaledMatrix") -> "LogScaledMatrix":
        prod = self.unit @ other.unit
        s = float(_norm2x2(prod[0, 0], prod[0, 1], prod[1, 0], prod[1, 1]))
        return LogScaledMatrix(prod / s, self.log_mag + other.log_mag + math.log(s),
                               self.det_phase * other.det_phase, self.log_abs_det + other.log_abs_det)


def _as_matrix(state: _State, idx=()) -> LogScaledMatrix:
    q = state.q[idx]
    l1, l2 = float(state.l1[idx]), float(state.l2[idx])
    ph2, t = complex(state.ph2[idx]), complex(state.t[idx])
    k = np.array([[1.0, t], [0.0, math.exp(l2 - l1) * ph2]], dtype=complex)
    s = float(_norm2x2(k[0, 0], k[0, 1], k[1, 0], k[1, 1]))
    log_mag = max(l1 + math.log(s), 0.0)
    det_q = q[0, 0] * q[1, 1] - q[0, 1] * q[1, 0]
    return LogScaledMatrix(q @ k / s, log_mag, complex(ph2 * det_q / abs(det_q)), l1 + l2)


def transfer(f, d: Dynamics, x, z: complex, n: int, start_at_zero: bool = False,
             site_bumps: Mapping[int, float] | None = None) -> LogScaledMatrix:
    """The n-step transfer matrix ``A_n^{f,z}(x)``; n may be negative."""
    if n == 0:
        return LogScaledMatrix.identity()
    if abs(n) > MAX_STEPS:
        raise ValueError(f"|n| = {abs(n)} exceeds the cap {MAX_STEPS}")
    v = sample(f, d, np.atleast_2d(as_array(x)), offsets_for(n, start_at_zero), site_bumps)
    state, _ = _run(v, [z], inverse=n < 0)
    return _as_matrix(state, (0, 0))


def log_norms(f, d: Dynamics, X, z, n: int, running: bool = False, start_at_zero: bool = False,
              site_bumps: Mapping[int, float] | None = None, chunk: int = 4096) -> np.ndarray:
    """``log ||A_n^{f,z}(x)||`` for phases X (P, dim) and energies z (Z,).

    Returns (P, Z), or (P, Z, |n|) with the values for every 1 <= j <= |n|
    when ``running``.  Steps are processed in chunks of phases so memory
    stays bounded.
    """
    X = np.atleast_2d(as_array(X))
    if n == 0:
        raise ValueError("n must be nonzero")
    if abs(n) > MAX_STEPS:
        raise ValueError(f"|n| = {abs(n)} exceeds the cap {MAX_STEPS}")
    offsets = offsets_for(n, start_at_zero)
    outs = []
    for s in range(0, X.shape[0], chunk):
        v = sample(f, d, X[s:s + chunk], offsets, site_bumps)
        state, logs = _run(v, z, inverse=n < 0, running=running)
        outs.append(np.maximum(logs, 0.0) if running else np.maximum(state.log_norm(), 0.0))
    return np.concatenate(outs, axis=0)


def naive_product(v, z: complex, inverse: bool = False) -> np.ndarray:
    """Plain double-precision product of the one-step matrices (test oracle)."""
    m = np.eye(2, dtype=complex)
    for a in np.asarray(v, dtype=float) - z:
        step = np.array([[0, 1], [-1, a]], dtype=complex) if inverse else np.array([[a, -1], [1, 0]], dtype=complex)
        m = step @ m
    return m


# -- Monte Carlo helpers ---------------------------------------------------------------


def _rng(seed: int, task: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(task,))))


def random_phases(dim: int, count: int, seed: int, task: int = 0) -> np.ndarray:
    return _rng(seed, task).random((count, dim)) - 0.5


def _chunked(fn, count: int, workers: int):
    """Run ``fn(task, size)`` over fixed-size tasks; results in task order."""
    sizes = [min(MC_CHUNK, count - s) for s in range(0, count, MC_CHUNK)]
    if workers <= 1 or len(sizes) == 1:
        return [fn(i, m) for i, m in enumerate(sizes)]
    with ThreadPoolExecutor(workers) as pool:
        return list(pool.map(fn, range(len(sizes)), sizes))


@dataclass(frozen=True)
class LyapunovEstimate:
    z: complex
    n: int
    mean: float
    stderr: float
    num_phases: int
    seed: int | None


def lyapunov(f, d: Dynamics, z: complex, n: int, num_phases: int, seed: int, workers: int = 1) -> LyapunovEstimate:
    """Monte Carlo estimate of ``L_n(z) = (1/n) int ln ||A_n(x)|| dx``.

    Phases are drawn in fixed chunks from counter-based streams keyed by
    (seed, chunk index), so the result does not depend on ``workers``.
    """
    if n < 1 or num_phases < 2:
        raise ValueError("need n >= 1 and num_phases >= 2")

    def task(i, m):
        X = random_phases(d.dim, m, seed, i)
        return log_norms(f, d, X, [z], n)[:, 0] / n

    vals = np.concatenate(_chunked(task, num_phases, workers))
    return LyapunovEstimate(complex(z), n, float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(vals.size)),
                            vals.size, seed)


def lyapunov_grid(f, d: Dynamics, z: complex, n: int, grid: int) -> float:
    """Deterministic-grid average of ``(1/n) ln ||A_n||`` (midpoint rule, dim 1 or tensor grid)."""
    axis = (np.arange(grid) + 0.5) / grid - 0.5
    X = np.stack(np.meshgrid(*[axis] * d.dim, indexing="ij"), axis=-1).reshape(-1, d.dim)
    return float(np.mean(log_norms(f, d, X, [z], n)[:, 0]) / n)


def lyapunov_reference(f, d: Dynamics, z: complex, num_phases: int, seed: int,
                       ns=(125, 250, 500), workers: int = 1) -> float:
    """Richardson extrapolation of ``L_n`` assuming ``L + b/n + c/n^2``."""
    ns = np.asarray(ns, dtype=float)
    vals = [lyapunov(f, d, z, int(m), num_phases, seed, workers).mean for m in ns]
    design = np.stack([np.ones_like(ns), 1 / ns, 1 / ns ** 2], axis=1)
    coef = np.linalg.lstsq(design[:, :len(ns)], vals, rcond=None)[0]
    return float(coef[0])


# -- large-deviation sets ----------------------------------------------------------------


@dataclass(frozen=True)
class DeviationMeasure:
    measure: float
    stderr: float
    half_width: float
    num_samples: int
    level: float


def deviation_measure(f, d: Dynamics, z: complex, k: int, a_frac: float, L_ref: float,
                      num_samples: int, seed: int, workers: int = 1) -> DeviationMeasure:
    """Monte Carlo measure of ``{x : (1/k) ln ||A_k^{f,z}(x)|| >= a_frac * L_ref}``.

    ``half_width`` is the 95% normal-approximation binomial half-width.
    """
    if not L_ref > 0:
        raise ValueError("L_ref must be positive")
    level = a_frac * L_ref

    def task(i, m):
        X = random_phases(d.dim, m, seed, i)
        return log_norms(f, d, X, [z], k)[:, 0] / k >= level

    hits = np.concatenate(_chunked(task, num_samples, workers))
    p = float(hits.mean())
    se = math.sqrt(p * (1 - p) / hits.size)
    return DeviationMeasure(p, se, 1.96 * se, hits.size, level)


def default_levels(tau: float) -> tuple[float, float, float]:
    """Level fractions (a, c, d) with ``1 - tau/16 > a > c > d > 1 - tau/8``."""
    return 1 - tau / 15, 1 - tau / 12, 1 - tau / 9


@dataclass(frozen=True)
class InclusionReport:
    violations: int
    tested: int
    samples: int
    levels: tuple
    N0: int
    N1: int
    sup_error: float
    z_bound: float


def inclusion_check(f: Potential, d: Dynamics, E: float, z: complex, k: int, tau: float,
                    L_ref: float, params: tuple | None = None, num_samples: int = 1000, seed: int = 0,
                    schedule_eps: float = 0.05) -> InclusionReport:
    """Sample the chain ``V_k^f(E, aL) in V_k^g(E, cL) in V_k^f(z, dL)``.

    g is the Taylor polynomialization of the Fourier truncation at
    ``N0 = ceil(k**(sigma + eps))`` with tolerance ``exp(-k (1 - d) L)``.
    A violation is a sampled phase in the first set missing from either of
    the other two.
    """
    a, c, dd = params or default_levels(tau)
    if not (a > c > dd):
        raise ValueError("levels must satisfy a > c > d")
    z_bound = math.exp(-tau * k * L_ref / f.sup_norm_bound)
    if not abs(E - z) < z_bound:
        raise ValueError(f"|E - z| = {abs(E - z):.3g} is not below exp(-tau k L / ||f||) = {z_bound:.3g}")
    sigma = f.sigma if f.sigma is not None else 1.0
    trunc = truncate_fourier(f, schedule_N0(k, sigma, schedule_eps))
    poly = polynomialize(trunc, math.exp(-k * (1 - dd) * L_ref))
    X = random_phases(d.dim, num_samples, seed)
    s0 = log_norms(f, d, X, [E], k)[:, 0] / k
    s1 = log_norms(poly, d, X, [E], k)[:, 0] / k
    s2 = log_norms(f, d, X, [z], k)[:, 0] / k
    outer = s0 >= a * L_ref
    bad = outer & ~((s1 >= c * L_ref) & (s2 >= dd * L_ref))
    return InclusionReport(int(bad.sum()), int(outer.sum()), num_samples, (a, c, dd),
                           trunc.N0, poly.N1, poly.sup_error, z_bound)


def growth_first_hit(f, d: Dynamics, x, z: complex, k: int, d_frac: float, L_ref: float,
                     j_max: int, batch: int = 512) -> int | None:
    """Smallest ``1 <= j <= j_max`` with ``(2/k) ln ||A_k^{f,z}(T^j x)|| >= d_frac * L_ref``."""
    if j_max < 1:
        raise ValueError("j_max must be >= 1")
    x = as_array(x).reshape(-1)
    level = d_frac * L_ref
    for j0 in range(1, j_max + 1, batch):
        js = np.arange(j0, min(j0 + batch, j_max + 1))
        X = orbit_points(d, x[None, :], js)[0]
        ok = 2.0 * log_norms(f, d, X, [z], k)[:, 0] / k >= level
        if ok.any():
            return int(js[np.argmax(ok)])
    return None


@dataclass(frozen=True)
class ComparabilityReport:
    exponent: float
    A_fit: float
    passed: bool
    worst: tuple


def comparability_check(f1, f2, d: Dynamics, x, E_grid, eps_grid, A_fit: float,
                        site_bumps: Mapping[int, float] | None = None,
                        energy_shift: float = 0.0) -> ComparabilityReport:
    """Empirical exponent in ``eps^A ||A^{v1}|| <~ ||A^{v2}|| <~ eps^-A ||A^{v1}||``.

    Both cocycles are evaluated at ``E + i eps`` (the second at
    ``E + energy_shift + i eps``) for ``1 <= |n| <= ln(1/eps)``; the exponent
    is the largest ``|ln||A^{v2}|| - ln||A^{v1}|||/ln(1/eps)``.
    ``site_bumps`` perturbs the samples of ``f2`` at fixed orbit indices.
    """
    E_grid = np.atleast_1d(np.asarray(E_grid, dtype=float))
    eps_grid = np.atleast_1d(np.asarray(eps_grid, dtype=float))
    if E_grid.size == 0 or eps_grid.size == 0:
        raise ValueError("grids must be nonempty")
    if np.any((eps_grid <= 0) | (eps_grid >= 1)):
        raise ValueError("eps must lie in (0, 1)")
    x = as_array(x).reshape(1, -1)
    worst, where = 0.0, None
    for eps in eps_grid:
        n_max = int(math.floor(math.log(1 / eps)))
        if n_max < 1:
            continue
        z1 = E_grid + 1j * eps
        z2 = E_grid + energy_shift + 1j * eps
        for sign in (1, -1):
            g1 = log_norms(f1, d, x, z1, sign * n_max, running=True)[0]
            g2 = log_norms(f2, d, x, z2, sign * n_max, running=True, site_bumps=site_bumps)[0]
            diff = np.abs(g2 - g1) / math.log(1 / eps)
            i = np.unravel_index(np.argmax(diff), diff.shape)
            if diff[i] > worst:
                worst, where = float(diff[i]), (float(E_grid[i[0]]), float(eps), int(sign * (i[1] + 1)))
    return ComparabilityReport(worst, A_fit, worst <= A_fit, where)
