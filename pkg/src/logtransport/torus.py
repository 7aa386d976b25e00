"""Points, frequencies and orbits of the shift and skew-shift on the torus.

Coordinates always live in the fundamental domain [-1/2, 1/2).  Most
functions accept either a :class:`TorusPoint` or a raw array whose last
axis has length ``dim``; the array forms are what the numerical kernels in
the rest of the package use.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import mpmath
import numpy as np

SHIFT = "shift"
SKEW_SHIFT = "skew-shift"

#: Largest lattice box that :func:`diophantine_margin` will enumerate.
MAX_LATTICE_POINTS = 20_000_000


def wrap(x):
    """Reduce coordinates mod 1 into [-1/2, 1/2)."""
    x = np.asarray(x, dtype=float)
    y = x - np.floor(x + 0.5)
    # floor rounding can land exactly on +1/2
    return np.where(y >= 0.5, y - 1.0, y)


def torus_distance(x, y):
    """Per-coordinate distance to the nearest lattice translate."""
    return np.abs(wrap(np.asarray(x, dtype=float) - np.asarray(y, dtype=float)))


@dataclass(frozen=True)
class TorusPoint:
    coords: tuple

    def __init__(self, coords):
        c = np.atleast_1d(np.asarray(coords, dtype=float))
        if c.ndim != 1 or c.size == 0:
            raise ValueError("a torus point needs a non-empty 1-d coordinate vector")
        object.__setattr__(self, "coords", tuple(float(v) for v in wrap(c)))

    @property
    def dim(self) -> int:
        return len(self.coords)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.coords, dtype=dtype)


@dataclass(frozen=True)
class Frequency:
    """Frequency vector with an optional Diophantine label.

    ``dioph_class`` is one of ``"DC"``, ``"SDC"`` or ``None``.  The label is
    a claim made by the caller; :func:`diophantine_margin` gives a finite
    certificate for it.
    """

    omega: tuple
    dioph_class: str | None = None
    A: float | None = None
    c: float | None = None

    def __init__(self, omega, dioph_class=None, A=None, c=None):
        w = np.atleast_1d(np.asarray(omega, dtype=float))
        object.__setattr__(self, "omega", tuple(float(v) for v in w))
        if dioph_class not in (None, "DC", "SDC"):
            raise ValueError(f"unknown Diophantine class {dioph_class!r}")
        if dioph_class is not None:
            if A is None or c is None or A <= 0 or c <= 0:
                raise ValueError("DC/SDC labels need A > 0 and c > 0")
            if dioph_class == "SDC" and A > 2:
                raise ValueError("SDC is only used with A <= 2")
        object.__setattr__(self, "dioph_class", dioph_class)
        object.__setattr__(self, "A", None if A is None else float(A))
        object.__setattr__(self, "c", None if c is None else float(c))

    @property
    def dim(self) -> int:
        return len(self.omega)


@dataclass(frozen=True)
class Dynamics:
    """Shift ``x -> x + omega`` or skew-shift on the ``dim``-torus.

    The skew-shift is ``(x1, ..., xd) -> (x1 + w, x2 + x1, ..., xd + x(d-1))``
    and only uses ``frequency.omega[0]``.
    """

    kind: str
    frequency: Frequency
    dim: int = field(default=0)

    def __post_init__(self):
        if self.kind not in (SHIFT, SKEW_SHIFT):
            raise ValueError(f"unknown dynamics kind {self.kind!r}")
        dim = self.dim or (self.frequency.dim if self.kind == SHIFT else 2)
        object.__setattr__(self, "dim", dim)
        if self.kind == SHIFT and self.frequency.dim != dim:
            raise ValueError("shift frequency dimension must match the torus dimension")
        if self.kind == SKEW_SHIFT and dim < 2:
            raise ValueError("the skew-shift needs dimension >= 2")

    @classmethod
    def shift(cls, omega, **labels) -> "Dynamics":
        return cls(SHIFT, Frequency(omega, **labels))

    @classmethod
    def skew_shift(cls, omega: float, dim: int = 2, **labels) -> "Dynamics":
        return cls(SKEW_SHIFT, Frequency([omega], **labels), dim)

    @property
    def omega(self) -> np.ndarray:
        return np.asarray(self.frequency.omega)

    def _check(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape[-1:] != (self.dim,):
            raise ValueError(f"point of dimension {x.shape[-1:]} does not match dynamics of dimension {self.dim}")
        return x

    def forward(self, x):
        """One step on an array of points (last axis = coordinates)."""
        x = self._check(x)
        if self.kind == SHIFT:
            return wrap(x + self.omega)
        y = np.empty_like(x)
        y[..., 0] = x[..., 0] + self.omega[0]
        y[..., 1:] = x[..., 1:] + x[..., :-1]
        return wrap(y)

    def backward(self, x):
        """Inverse step on an array of points."""
        x = self._check(x)
        if self.kind == SHIFT:
            return wrap(x - self.omega)
        y = np.empty_like(x)
        y[..., 0] = x[..., 0] - self.omega[0]
        for j in range(1, self.dim):
            y[..., j] = x[..., j] - y[..., j - 1]
        return wrap(y)

    def iterates(self, x0, ks) -> np.ndarray:
        """``T^k x0`` for each integer k in ``ks`` (any sign), shape (len(ks), dim).

        Shift iterates use the closed form ``x0 + k*omega``; skew-shift
        iterates are generated by stepping from k = 0 in both directions.
        """
        x0 = wrap(self._check(np.asarray(x0, dtype=float).reshape(-1)))
        ks = np.asarray(ks, dtype=np.int64).reshape(-1)
        if ks.size == 0:
            return np.empty((0, self.dim))
        if self.kind == SHIFT:
            return wrap(x0[None, :] + np.multiply.outer(ks, self.omega))
        lo, hi = min(int(ks.min()), 0), max(int(ks.max()), 0)
        table = np.empty((hi - lo + 1, self.dim))
        table[-lo] = x0
        x = x0.copy()
        for k in range(1, hi + 1):
            x = self.forward(x)
            table[k - lo] = x
        x = x0.copy()
        for k in range(1, -lo + 1):
            x = self.backward(x)
            table[-k - lo] = x
        return table[ks - lo]


def as_array(x) -> np.ndarray:
    return np.asarray(x, dtype=float)


def step(d: Dynamics, x: TorusPoint) -> TorusPoint:
    return TorusPoint(d.forward(as_array(x)))


def orbit(d: Dynamics, x0: TorusPoint, N: int) -> list[TorusPoint]:
    """``[T x0, T^2 x0, ..., T^N x0]`` as torus points."""
    if N < 1:
        raise ValueError("orbit length must be >= 1")
    return [TorusPoint(p) for p in orbit_array(d, x0, N)]


def orbit_array(d: Dynamics, x0, N: int, start: int = 1) -> np.ndarray:
    """Orbit segment ``T^start x0, ..., T^(start+N-1) x0`` as an (N, dim) array."""
    if N < 1:
        raise ValueError("orbit length must be >= 1")
    return d.iterates(as_array(x0), np.arange(start, start + N))


def skew_shift_closed_form(x0, omega: float, k: int) -> np.ndarray:
    """``T^k x0`` for the skew-shift from the binomial expansion.

    Coordinate j (1-based) is ``sum_{i<j} C(k,i) x_{j-i} + C(k,j) omega``;
    exact integer binomials keep this usable as an oracle for moderate k.
    """
    x0 = np.asarray(x0, dtype=float)
    out = np.empty_like(x0)
    for j in range(1, x0.size + 1):
        acc = math.comb(k, j) * omega
        for i in range(j):
            acc += math.comb(k, i) * x0[j - 1 - i]
        out[j - 1] = acc
    return wrap(out)


# -- continued fractions ------------------------------------------------------


@dataclass(frozen=True)
class ContinuedFraction:
    """Expansion ``omega = [0; a_1, a_2, ...]``.

    ``convergents[n] = (p_n, q_n)`` with ``(p_0, q_0) = (0, 1)`` so that
    ``q_1 = a_1``.  ``exhausted`` is set when the expansion stopped because
    the working precision ran out (or omega was rational).
    """

    omega: float
    partial_quotients: tuple
    convergents: tuple
    exhausted: bool
    precision_bits: int

    @property
    def denominators(self) -> list[int]:
        return [q for _, q in self.convergents]

    def q(self, n: int) -> int:
        return self.convergents[n][1]


def _to_mpf(omega):
    if isinstance(omega, Fraction):
        return mpmath.mpf(omega.numerator) / omega.denominator
    if isinstance(omega, str):
        return mpmath.mpf(omega)
    return mpmath.mpf(omega)


def continued_fraction(omega, n_max: int, precision_bits: int = 113) -> ContinuedFraction:
    """Partial quotients and convergents of ``omega`` in (0, 1).

    The arithmetic runs in ``precision_bits`` of binary precision (mpmath).
    Floats are taken at face value, i.e. as the dyadic rational they store;
    pass a string or an mpmath number to expand a more precise value.  The
    expansion stops early, with ``exhausted=True``, once the remainder is
    zero at working precision or the propagated rounding error (which grows
    like ``q_n**2``) reaches the remainder's resolution.
    """
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    with mpmath.workprec(precision_bits):
        r = _to_mpf(omega)
        if not 0 < r < 1:
            raise ValueError("omega must lie in (0, 1)")
        quotients: list[int] = []
        convs = [(0, 1)]
        p_prev, q_prev, p, q = 1, 0, 0, 1
        exhausted = False
        ulp = mpmath.mpf(2) ** (-precision_bits + 4)
        while len(quotients) < n_max:
            if r == 0 or (q * q) * ulp >= r:
                exhausted = True
                break
            x = 1 / r
            a = int(mpmath.floor(x))
            r = x - a
            quotients.append(a)
            p_prev, q_prev, p, q = p, q, a * p + p_prev, a * q + q_prev
            convs.append((p, q))
        if not exhausted and (r == 0 or (q * q) * ulp >= r):
            exhausted = True
    return ContinuedFraction(float(omega) if not isinstance(omega, str) else float(mpmath.mpf(omega)),
                             tuple(quotients), tuple(convs), exhausted, precision_bits)


def golden_mean() -> float:
    return (math.sqrt(5.0) - 1.0) / 2.0


# -- Diophantine certificates ---------------------------------------------------


@dataclass(frozen=True)
class DiophantineMargin:
    margin: float
    argmin: tuple
    K_max: int
    A: float
    kind: str


def _lattice_box(dim: int, K: int) -> np.ndarray:
    count = (2 * K + 1) ** dim
    if count > MAX_LATTICE_POINTS:
        raise OverflowError(
            f"lattice box (2*{K}+1)^{dim} = {count} exceeds the enumeration limit {MAX_LATTICE_POINTS}")
    axes = [np.arange(-K, K + 1)] * dim
    ks = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, dim)
    return ks[np.any(ks != 0, axis=1)]


def diophantine_margin(f: Frequency, K_max: int, A: float | None = None, kind: str | None = None) -> DiophantineMargin:
    """Smallest ``||k.omega|| * w(|k|)`` over ``0 < |k|_inf <= K_max``.

    ``w(r) = r**A`` for DC and ``r * max(ln r, 1)**A`` for SDC.  This is a
    certificate for the scanned k only; it cannot prove membership.
    """
    if K_max < 1:
        raise ValueError("K_max must be >= 1")
    A = f.A if A is None else A
    kind = kind or f.dioph_class or "DC"
    if A is None:
        raise ValueError("an exponent A is required")
    omega = np.asarray(f.omega)
    ks = _lattice_box(omega.size, K_max)
    # one of k, -k suffices since ||-t|| = ||t||
    lead = ks[np.arange(len(ks)), np.argmax(ks != 0, axis=1)]
    ks = ks[lead > 0]
    norm_k = np.max(np.abs(ks), axis=1).astype(float)
    phase = ks @ omega
    dist = np.abs(phase - np.round(phase))
    if kind == "SDC":
        weight = norm_k * np.maximum(np.log(norm_k), 1.0) ** A
    else:
        weight = norm_k ** A
    vals = dist * weight
    # lexicographic tie-break on |k|_inf so the smallest witness is reported
    order = np.lexsort((norm_k, vals))
    i = int(order[0])
    return DiophantineMargin(float(vals[i]), tuple(int(v) for v in ks[i]), K_max, float(A), kind)
