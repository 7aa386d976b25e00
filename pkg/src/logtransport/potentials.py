"""Sampling functions on the torus and certified polynomial approximants.

A :class:`Potential` is ``lambda * sum_n c_n exp(2 pi i n.x)`` over finitely
many stored modes.  Gevrey models additionally carry the decay law
``|c_n| <= exp(-|n|**(1/sigma))`` for the unstored tail, which only enters
error certificates.

Approximation goes in two stages, each returning a :class:`CertifiedApprox`
whose ``sup_error`` is a rigorous upper bound on the torus sup-distance to
the source:

* :func:`truncate_fourier` keeps modes with ``|n|_inf <= N0``;
* :func:`polynomialize` replaces each ``exp(2 pi i n_j x_j)`` by a Taylor
  polynomial about 0, giving an honest polynomial in the coordinates.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np
from scipy import special

TRIG = "trig"
GEVREY = "gevrey"

DEFAULT_DEGREE_CAP = 512
#: explicit terms summed before the integral comparison takes over
_TAIL_EXPLICIT_TERMS = 200_000


class Potential:
    """Real trigonometric polynomial ``lambda * f`` on the ``dim``-torus."""

    def __init__(self, coeffs: Mapping, coupling: float = 1.0, dim: int | None = None,
                 kind: str = TRIG, sigma: float | None = None, cutoff: int | None = None):
        items = [(tuple(int(v) for v in np.atleast_1d(n)), complex(c)) for n, c in coeffs.items()]
        if not items:
            raise ValueError("a potential needs at least one Fourier mode")
        dim = dim or len(items[0][0])
        table: dict[tuple, complex] = {}
        for n, c in items:
            if len(n) != dim:
                raise ValueError(f"mode {n} does not have dimension {dim}")
            table[n] = table.get(n, 0) + c
        for n, c in table.items():
            partner = table.get(tuple(-v for v in n), 0)
            if abs(partner - c.conjugate()) > 1e-12 * max(1.0, abs(c)):
                raise ValueError(f"coefficients are not hermitian at mode {n}: f(-n) must equal conj(f(n))")
        if kind not in (TRIG, GEVREY):
            raise ValueError(f"unknown potential kind {kind!r}")
        if kind == GEVREY:
            if sigma is None or sigma < 1:
                raise ValueError("Gevrey models need sigma >= 1")
            for n, c in table.items():
                if abs(c) > math.exp(-np.linalg.norm(n) ** (1.0 / sigma)) * (1 + 1e-12):
                    raise ValueError(f"mode {n} violates the Gevrey decay bound")
            cutoff = max(max(abs(v) for v in n) for n in table) if cutoff is None else int(cutoff)
        self.kind = kind
        self.dim = int(dim)
        self.coupling = float(coupling)
        self.sigma = None if sigma is None else float(sigma)
        self.cutoff = cutoff
        keys = sorted(table)
        self.modes = np.array(keys, dtype=np.int64).reshape(len(keys), dim)
        self.coeffs = np.array([table[k] for k in keys], dtype=complex)

    # -- constructors -------------------------------------------------------

    @classmethod
    def cosine(cls, coupling: float = 1.0, dim: int = 1, axis: int = 0) -> "Potential":
        """``coupling * cos(2 pi x_axis)``."""
        n = [0] * dim
        n[axis] = 1
        m = [0] * dim
        m[axis] = -1
        return cls({tuple(n): 0.5, tuple(m): 0.5}, coupling, dim)

    @classmethod
    def cosine_sum(cls, coupling: float = 1.0, dim: int = 2) -> "Potential":
        """``coupling * sum_j cos(2 pi x_j)``."""
        coeffs = {}
        for j in range(dim):
            for s in (1, -1):
                n = [0] * dim
                n[j] = s
                coeffs[tuple(n)] = 0.5
        return cls(coeffs, coupling, dim)

    @classmethod
    def zero(cls, dim: int = 1) -> "Potential":
        return cls({(0,) * dim: 0.0}, 1.0, dim)

    @classmethod
    def gevrey_saturated(cls, sigma: float, cutoff: int, dim: int = 1, coupling: float = 1.0) -> "Potential":
        """Gevrey model with ``c_n = exp(-|n|**(1/sigma))`` for ``0 < |n|_inf <= cutoff``."""
        axes = [np.arange(-cutoff, cutoff + 1)] * dim
        grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, dim)
        grid = grid[np.any(grid != 0, axis=1)]
        mags = np.exp(-np.linalg.norm(grid, axis=1) ** (1.0 / sigma))
        return cls({tuple(n): c for n, c in zip(grid, mags)}, coupling, dim, GEVREY, sigma, cutoff)

    # -- basic queries ---------------------------------------------------------

    @property
    def degree(self) -> int:
        return int(np.max(np.abs(self.modes))) if len(self.modes) else 0

    @property
    def sup_norm_bound(self) -> float:
        return abs(self.coupling) * float(np.sum(np.abs(self.coeffs)))

    def mean(self) -> float:
        zero = np.all(self.modes == 0, axis=1)
        return float(self.coupling * self.coeffs[zero].real.sum())

    def __call__(self, x) -> np.ndarray:
        return evaluate(self, x)

    def add_constant(self, c: float) -> "Potential":
        """The potential ``self + c`` (same kind and coupling)."""
        table = dict(zip(map(tuple, self.modes.tolist()), self.coeffs))
        zero = (0,) * self.dim
        table[zero] = table.get(zero, 0) + c / self.coupling
        return Potential(table, self.coupling, self.dim, TRIG)

    def scaled(self, coupling: float) -> "Potential":
        table = dict(zip(map(tuple, self.modes.tolist()), self.coeffs))
        return Potential(table, coupling, self.dim, self.kind, self.sigma, self.cutoff)

    def __repr__(self):
        extra = f", sigma={self.sigma}, cutoff={self.cutoff}" if self.kind == GEVREY else ""
        return f"Potential(kind={self.kind!r}, dim={self.dim}, modes={len(self.modes)}, coupling={self.coupling}{extra})"

    # -- serialization -----------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "dim": self.dim,
            "coupling": self.coupling,
            "sigma": self.sigma,
            "cutoff": self.cutoff,
            "coefficients": [[*map(int, n), float(c.real), float(c.imag)]
                             for n, c in zip(self.modes, self.coeffs)],
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "Potential":
        dim = int(data["dim"])
        coeffs = {tuple(row[:dim]): complex(row[dim], row[dim + 1]) for row in data["coefficients"]}
        return cls(coeffs, data.get("coupling", 1.0), dim, data.get("kind", TRIG),
                   data.get("sigma"), data.get("cutoff"))

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=1)

    @classmethod
    def loads(cls, text: str) -> "Potential":
        return cls.from_dict(json.loads(text))


def _points(x, dim: int) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if dim == 1 and (x.ndim == 0 or x.shape[-1] != 1):
        x = x[..., None]
    if x.shape[-1] != dim:
        raise ValueError(f"points of dimension {x.shape[-1]} do not match potential of dimension {dim}")
    return x


def evaluate(f, x) -> np.ndarray:
    """Values of a potential or approximant at points ``x`` (last axis = coords).

    For one-dimensional potentials a bare array of coordinates is accepted.
    """
    if isinstance(f, TaylorPolynomial):
        return f(x)
    pts = _points(x, f.dim)
    phase = 2j * np.pi * (pts @ f.modes.T.astype(float))
    vals = f.coupling * (np.exp(phase) @ f.coeffs)
    scale = max(1.0, f.sup_norm_bound)
    if np.any(np.abs(vals.imag) > 1e-12 * scale):
        raise FloatingPointError("imaginary residue above 1e-12: coefficients lost hermitian symmetry")
    return vals.real


# -- certified approximation ----------------------------------------------------


@dataclass(frozen=True)
class CertifiedApprox:
    approximant: object
    sup_error: float
    source: str
    N0: int
    N1: int | None = None
    stage_errors: tuple = ()

    def __call__(self, x):
        return evaluate(self.approximant, x)


def _shell_polynomial(dim: int) -> list[tuple[int, float]]:
    """(power, coefficient) pairs of ``(2t+1)^dim - (2t-1)^dim``."""
    terms = []
    for i in range(1, dim + 1, 2):
        terms.append((dim - i, 2.0 * math.comb(dim, i) * 2.0 ** (dim - i)))
    return terms


def gevrey_tail_bound(M: int, sigma: float, dim: int) -> float:
    """Upper bound for ``sum_{|n|_inf > M} exp(-|n|_inf**(1/sigma))``.

    Explicit shell sums up to ``M + _TAIL_EXPLICIT_TERMS`` followed by the
    integral comparison ``sum_{m > X} g(m) <= int_X^inf g`` for the
    decreasing shell weight g, evaluated in closed form with
    ``int_X^inf t^k exp(-t^(1/s)) dt = s * Gamma(s(k+1), X^(1/s))``.
    Since ``|n|_2 >= |n|_inf`` this also bounds the tail of the Euclidean law.
    """
    terms = _shell_polynomial(dim)
    peak = (sigma * max(dim - 1, 0)) ** sigma
    X = max(M + _TAIL_EXPLICIT_TERMS, int(math.ceil(peak)) + 1)
    m = np.arange(M + 1, X + 1, dtype=float)
    shell = sum(c * m ** p for p, c in terms)
    explicit = math.fsum(shell * np.exp(-m ** (1.0 / sigma)))
    U = X ** (1.0 / sigma)
    rest = 0.0
    for p, c in terms:
        a = sigma * (p + 1)
        rest += c * sigma * float(special.gammaincc(a, U) * special.gamma(a))
    return explicit + rest


def truncate_fourier(f: Potential, N0: int) -> CertifiedApprox:
    """Keep modes with ``|n|_inf <= N0``.

    The certificate is ``|lambda|`` times the stored dropped coefficients plus,
    for Gevrey models, the decay-law tail beyond ``max(N0, cutoff)``.
    """
    if N0 < 0:
        raise ValueError("N0 must be >= 0")
    keep = np.max(np.abs(f.modes), axis=1) <= N0
    kept = {tuple(n): c for n, c in zip(f.modes[keep].tolist(), f.coeffs[keep])}
    if not kept:
        kept = {(0,) * f.dim: 0.0}
    err = abs(f.coupling) * float(np.sum(np.abs(f.coeffs[~keep])))
    if f.kind == GEVREY:
        err += abs(f.coupling) * gevrey_tail_bound(max(N0, f.cutoff), f.sigma, f.dim)
    approx = Potential(kept, f.coupling, f.dim, TRIG)
    return CertifiedApprox(approx, err, "fourier", int(N0), None, (err,))


def taylor_remainder_bound(m: int, n: int) -> float:
    """Bound on ``|exp(i t) - sum_{k<=m} (i t)^k/k!|`` for ``|t| <= pi |n|``."""
    if n == 0:
        return 0.0
    a = math.pi * abs(n)
    if m == 0:
        return min(a, 2.0)
    return math.exp((m + 1) * math.log(a) - math.lgamma(m + 2))


def taylor_degree(n: int, threshold: float, cap: int = DEFAULT_DEGREE_CAP) -> int:
    """Smallest m with remainder bound <= threshold."""
    if n == 0:
        return 0
    for m in range(cap + 1):
        if taylor_remainder_bound(m, n) <= threshold:
            return m
    raise ValueError(f"Taylor degree for |n|={abs(n)} exceeds the cap {cap}; loosen tol")


class TaylorPolynomial:
    """``Re sum_n a_n prod_j P_{m_nj}(2 pi n_j x_j)`` with ``P_m`` the order-m
    Taylor polynomial of ``exp(i t)``; a genuine polynomial in x.

    Evaluation goes through the factored form; :meth:`monomials` expands it.
    """

    def __init__(self, modes: np.ndarray, amplitudes: np.ndarray, degrees: np.ndarray):
        self.modes = np.asarray(modes, dtype=np.int64)
        self.amplitudes = np.asarray(amplitudes, dtype=complex)
        self.degrees = np.asarray(degrees, dtype=np.int64)
        self.dim = self.modes.shape[1]

    @property
    def total_degree(self) -> int:
        return int(self.degrees.sum(axis=1).max()) if len(self.degrees) else 0

    @staticmethod
    def _factor(n: int, m: int, x: np.ndarray) -> np.ndarray:
        t = 2.0 * np.pi * n * x
        acc = np.ones_like(t, dtype=complex)
        for k in range(m, 0, -1):
            acc = 1.0 + acc * (1j * t / k)
        return acc

    def __call__(self, x) -> np.ndarray:
        pts = _points(x, self.dim)
        out = np.zeros(pts.shape[:-1], dtype=complex)
        cache: dict = {}
        for n, a, deg in zip(self.modes, self.amplitudes, self.degrees):
            term = np.full(pts.shape[:-1], a, dtype=complex)
            for j in range(self.dim):
                key = (j, int(n[j]), int(deg[j]))
                if key not in cache:
                    cache[key] = self._factor(int(n[j]), int(deg[j]), pts[..., j])
                term = term * cache[key]
            out += term
        return out.real

    def monomials(self) -> dict[tuple, float]:
        """Expanded real coefficients keyed by exponent tuples."""
        out: dict[tuple, complex] = {}
        for n, a, deg in zip(self.modes, self.amplitudes, self.degrees):
            per_axis = []
            for j in range(self.dim):
                c = 2j * math.pi * int(n[j])
                per_axis.append([c ** k / math.factorial(k) for k in range(int(deg[j]) + 1)])
            for idx in np.ndindex(*[len(p) for p in per_axis]):
                coef = a
                for j, k in enumerate(idx):
                    coef = coef * per_axis[j][k]
                out[idx] = out.get(idx, 0) + coef
        return {k: float(v.real) for k, v in out.items() if v.real != 0.0}


def polynomialize(t: CertifiedApprox, tol: float, degree_cap: int = DEFAULT_DEGREE_CAP) -> CertifiedApprox:
    """Replace every exponential of a truncated potential by a Taylor polynomial.

    Per-axis degrees are the smallest with remainder bound at most
    ``tol / (#modes * max|amplitude|)``; the certificate adds
    ``sum_n |a_n| (prod_j (1 + r_nj) - 1)`` to the truncation error, plus a
    bound on the floating-point rounding of the Horner evaluation.
    """
    if t.source != "fourier":
        raise ValueError("polynomialize expects a Fourier truncation")
    if not tol > 0:
        raise ValueError("tol must be positive")
    f: Potential = t.approximant
    amps = f.coupling * f.coeffs
    nz = np.abs(amps) > 0
    modes, amps = f.modes[nz], amps[nz]
    if len(modes) == 0:
        poly = TaylorPolynomial(np.zeros((1, f.dim), dtype=np.int64), np.zeros(1), np.zeros((1, f.dim), dtype=np.int64))
        return CertifiedApprox(poly, t.sup_error, "polynomial", t.N0, 0, (t.sup_error, 0.0))
    threshold = tol / (len(modes) * float(np.max(np.abs(amps))))
    degrees = np.zeros_like(modes)
    taylor_err = 0.0
    rounding = 0.0
    eps = np.finfo(float).eps
    for i, n in enumerate(modes):
        prod = 1.0
        for j, nj in enumerate(n):
            m = taylor_degree(int(nj), threshold, degree_cap) if math.isfinite(threshold) else 0
            degrees[i, j] = m
            prod *= 1.0 + taylor_remainder_bound(m, int(nj))
        taylor_err += abs(amps[i]) * (prod - 1.0)
        # Horner in floating point: error <= 2 (deg + 1) eps * sum_k |t|^k / k! per factor
        grow = math.exp(math.pi * float(np.abs(n).sum()))
        rounding += abs(amps[i]) * 4 * (int(degrees[i].sum()) + len(n) + 1) * eps * grow
    taylor_err += rounding
    poly = TaylorPolynomial(modes, amps, degrees)
    return CertifiedApprox(poly, t.sup_error + taylor_err, "polynomial", t.N0, poly.total_degree,
                           (t.sup_error, taylor_err))


def schedule_N0(k: int, sigma: float, eps: float = 0.05) -> int:
    """Fourier cutoff ``ceil(k**(sigma + eps))`` used at cocycle scale k."""
    return int(math.ceil(k ** (sigma + eps)))


def schedule_N1(k: int, sigma: float, dim: int, eps: float = 0.05) -> int:
    """Polynomial degree scale ``ceil(k**(sigma*dim + eps))``."""
    return int(math.ceil(k ** (sigma * dim + eps)))
