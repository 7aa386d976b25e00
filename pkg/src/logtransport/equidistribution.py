"""Counting orbit visits to balls and polynomial sublevel sets.

Also holds the Fejér kernel, the Fejér majorant bound for ball visits of a
Diophantine shift, the first-return check for intervals on the circle and a
regression estimate of the sublinear visit exponent.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .torus import SHIFT, ContinuedFraction, Dynamics, as_array, orbit_array, torus_distance, wrap

#: constant used in the Fejér visit bound
FEJER_CONSTANT = 16.0

_ORBIT_CHUNK = 1 << 16


# -- target sets -----------------------------------------------------------------


@dataclass(frozen=True)
class Ball:
    """Torus ball; max-norm (a box) by default, euclidean on request.

    A radius of at least 1/2 in the max norm covers the whole torus.
    """

    center: tuple
    radius: float
    metric: str = "max"

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(v) for v in np.atleast_1d(self.center)))
        if self.radius < 0:
            raise ValueError("radius must be >= 0")
        if self.metric not in ("max", "euclidean"):
            raise ValueError(f"unknown metric {self.metric!r}")

    degree = 2

    def contains(self, pts: np.ndarray) -> np.ndarray:
        dist = torus_distance(pts, np.asarray(self.center))
        if self.metric == "max":
            return np.max(dist, axis=-1) <= self.radius
        return np.sqrt(np.sum(dist ** 2, axis=-1)) <= self.radius


@dataclass(frozen=True)
class PolySublevel:
    """``{x : p(x) <sense> threshold}`` for a real polynomial p.

    ``coeffs`` maps exponent tuples to coefficients; x are fundamental-domain
    coordinates.  Ties count as members for ``<=`` and ``>=``.
    """

    coeffs: Mapping
    threshold: float = 0.0
    sense: str = "<="

    def __post_init__(self):
        if self.sense not in ("<=", ">=", "=="):
            raise ValueError(f"unknown sense {self.sense!r}")
        if not self.coeffs:
            raise ValueError("empty polynomial")

    @property
    def degree(self) -> int:
        return max(1, max(sum(e) for e in self.coeffs))

    def value(self, pts: np.ndarray) -> np.ndarray:
        """p(x) with Neumaier-compensated summation over monomials."""
        pts = np.asarray(pts, dtype=float)
        total = np.zeros(pts.shape[:-1])
        comp = np.zeros_like(total)
        for expo, c in self.coeffs.items():
            term = np.full_like(total, float(c))
            for j, e in enumerate(expo):
                if e:
                    term = term * pts[..., j] ** e
            t = total + term
            big = np.abs(total) >= np.abs(term)
            comp += np.where(big, (total - t) + term, (term - t) + total)
            total = t
        return total + comp

    def contains(self, pts: np.ndarray) -> np.ndarray:
        val = self.value(pts)
        if self.sense == "<=":
            return val <= self.threshold
        if self.sense == ">=":
            return val >= self.threshold
        return val == self.threshold


@dataclass(frozen=True)
class Union:
    parts: tuple = field(default_factory=tuple)

    def __init__(self, *parts):
        object.__setattr__(self, "parts", tuple(parts))

    @property
    def degree(self) -> int:
        return len(self.parts) * max(p.degree for p in self.parts)

    def contains(self, pts: np.ndarray) -> np.ndarray:
        out = np.zeros(np.asarray(pts).shape[:-1], dtype=bool)
        for p in self.parts:
            out |= p.contains(pts)
        return out


@dataclass(frozen=True)
class HitReport:
    N: int
    hits: int
    hit_indices: np.ndarray
    first_hit: int | None


def _orbit_chunks(d: Dynamics, x0, N: int):
    """Yield ``(start, points)`` covering ``T^1 x0 .. T^N x0`` in order."""
    x0 = np.asarray(wrap(as_array(x0)), dtype=float).reshape(-1)
    x = x0
    for start in range(1, N + 1, _ORBIT_CHUNK):
        m = min(_ORBIT_CHUNK, N - start + 1)
        if d.kind == SHIFT:
            pts = orbit_array(d, x0, m, start)
        else:
            pts = orbit_array(d, x, m, 1)
            x = pts[-1]
        yield start, pts


def hit_count(d: Dynamics, x0, S, N: int) -> HitReport:
    """Exact count of ``1 <= k <= N`` with ``T^k x0`` in S."""
    if N < 1:
        raise ValueError("N must be >= 1")
    idx = [np.nonzero(S.contains(pts))[0] + start for start, pts in _orbit_chunks(d, x0, N)]
    hits = np.concatenate(idx)
    return HitReport(N, int(hits.size), hits, int(hits[0]) if hits.size else None)


# -- Fejér kernel -------------------------------------------------------------------


def fejer_kernel(R: int, x) -> np.ndarray:
    """``(1/R) (sin(R x/2) / sin(x/2))**2`` with value R at x = 0 (x in radians)."""
    if R < 1:
        raise ValueError("R must be a positive integer")
    x = np.asarray(x, dtype=float)
    s = np.sin(x / 2)
    small = np.abs(s) < 1e-8
    safe = np.where(small, 1.0, s)
    val = np.sin(R * x / 2) ** 2 / (R * safe ** 2)
    # series near the removable singularity
    near = R * (1 - (R * R - 1) * x ** 2 / 12)
    return np.where(small, near, val)


def fejer_series(R: int, x) -> np.ndarray:
    """Coefficient form ``sum_{|m|<R} (1 - |m|/R) e^{imx}`` (real part)."""
    x = np.asarray(x, dtype=float)
    m = np.arange(-R + 1, R)
    w = 1 - np.abs(m) / R
    return np.cos(np.multiply.outer(x, m)) @ w


@dataclass(frozen=True)
class FejerBound:
    lhs: int
    majorant: float
    rhs: float
    eps: float
    R: int
    N: int
    C: float


def fejer_hit_bound(d: Dynamics, x0, eps: float, N: int, A: float | None = None,
                    center=None, C: float = FEJER_CONSTANT) -> FejerBound:
    """Visits of the max-norm eps-ball against ``C N (eps^nu + eps^-A / N)``.

    ``majorant`` is the intermediate Fejér sum
    ``C R^-nu sum_k prod_j F_R(2 pi x_j^(k))`` with ``R = floor(1/(10 eps))``,
    which dominates the visit count pointwise.
    """
    if d.kind != SHIFT:
        raise ValueError("the Fejér bound is for shifts")
    A = d.frequency.A if A is None else A
    if d.frequency.dioph_class != "DC":
        warnings.warn("frequency is not labelled DC(A, c); the bound need not hold", RuntimeWarning)
    if A is None:
        raise ValueError("need a Diophantine exponent A")
    nu = d.dim
    center = np.zeros(nu) if center is None else np.asarray(center, dtype=float)
    ball = Ball(tuple(center), eps)
    lhs = hit_count(d, x0, ball, N).hits
    R = max(1, int(math.floor(1 / (10 * eps)))) if eps > 0 else 1
    maj = 0.0
    for _, pts in _orbit_chunks(d, x0, N):
        rel = wrap(pts - center)
        maj += float(np.sum(np.prod(fejer_kernel(R, 2 * np.pi * rel), axis=-1)))
    maj *= C * R ** (-nu)
    e = min(eps, 0.5)
    rhs = C * N * (e ** nu + (e ** (-A) / N if e > 0 else math.inf))
    return FejerBound(lhs, maj, rhs, eps, R, N, C)


# -- first visits on the circle -------------------------------------------------------


@dataclass(frozen=True)
class FirstVisitReport:
    max_first_hit: int
    bound: int
    passed: bool
    q_n: int
    interval: tuple


def first_hits(omega: float, phases: np.ndarray, start: float, length: float, j_cap: int) -> np.ndarray:
    """First ``j >= 1`` with ``x + j omega mod 1`` in ``[start, start+length)``; 0 if none up to j_cap."""
    phases = np.asarray(phases, dtype=float)
    out = np.zeros(phases.shape, dtype=np.int64)
    todo = np.ones(phases.shape, dtype=bool)
    for j in range(1, j_cap + 1):
        pos = np.mod(phases + j * omega - start, 1.0)
        hit = todo & (pos < length)
        out[hit] = j
        todo &= ~hit
        if not todo.any():
            break
    return out


def first_visit_check(cf: ContinuedFraction, n: int, interval: Sequence[float], grid_size: int = 10_000) -> FirstVisitReport:
    """Largest first visit time to an arc of length > 1/q_n over a phase grid.

    Passes when it does not exceed ``q_n + q_{n-1} - 1``.
    """
    if n < 1 or n >= len(cf.convergents):
        raise ValueError(f"convergent index {n} unavailable")
    start, length = float(interval[0]), float(interval[1]) - float(interval[0])
    q_n, q_prev = cf.q(n), cf.q(n - 1)
    if not length > 1.0 / q_n:
        raise ValueError(f"|interval| = {length} must exceed 1/q_n = {1 / q_n}")
    bound = q_n + q_prev - 1
    grid = np.arange(grid_size) / grid_size
    if length >= 1.0:
        first = np.ones(grid_size, dtype=np.int64)
    else:
        first = first_hits(cf.omega, grid, start, length, 4 * bound + 4)
    missing = first == 0
    worst = int(first.max()) if not missing.any() else 4 * bound + 5
    return FirstVisitReport(worst, bound, worst <= bound, q_n, (start, start + length))


# -- sublinear exponent ----------------------------------------------------------------


@dataclass(frozen=True)
class DeltaFit:
    delta: float
    residual: float
    N_grid: tuple
    hits: tuple
    delta_try: float


def delta_fit(d: Dynamics, x0, N_grid: Sequence[int], delta_try: float, center=None) -> DeltaFit:
    """Fit ``hits/N ~ N^-delta`` for balls of radius ``N^-delta_try``.

    The radius shrinks with N, so a non-zero exponent measures how fast the
    visit frequency decays.  Grids with zero visits are dropped from the
    fit; all-zero data is an error.
    """
    N_grid = np.asarray(sorted(int(n) for n in N_grid))
    if N_grid.size < 2 or N_grid[-1] < 100 * N_grid[0]:
        raise ValueError("N_grid must span at least two decades")
    center = np.zeros(d.dim) if center is None else center
    hits = np.array([hit_count(d, x0, Ball(tuple(np.atleast_1d(center)), N ** (-delta_try)), int(N)).hits
                     for N in N_grid])
    ok = hits > 0
    if ok.sum() < 2:
        raise ValueError("degenerate fit: fewer than two grid points with visits")
    xs, ys = np.log(N_grid[ok]), np.log(hits[ok] / N_grid[ok])
    slope, icpt = np.polyfit(xs, ys, 1)
    res = float(np.sqrt(np.mean((ys - (slope * xs + icpt)) ** 2)))
    return DeltaFit(float(-slope), res, tuple(int(v) for v in N_grid), tuple(int(h) for h in hits), delta_try)
