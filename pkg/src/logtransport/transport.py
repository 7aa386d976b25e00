"""Transport exponents from moment series and outside probabilities.

Finite data stands in for limsup/liminf: the central estimate is a least
squares slope, and the envelope slopes are taken from the first point of the
trailing half of the window to every later point.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
from scipy.special import logsumexp

from .cocycle import _chunked, log_norms
from .quantum import AmplitudeProfile, spectrum_bound
from .torus import Dynamics, as_array

#: ``-ln P / ln ln T`` is reported as +inf once P drops to this level
P_FLOOR = 64 * np.finfo(float).eps
LNLN = "lnln"
LN = "ln"


@dataclass(frozen=True)
class MomentSeries:
    p: float
    T: np.ndarray
    moments: np.ndarray
    provenance: str = ""

    def __post_init__(self):
        T = np.asarray(self.T, dtype=float)
        m = np.asarray(self.moments, dtype=float)
        if T.shape != m.shape or T.ndim != 1:
            raise ValueError("T and moments must be matching 1-d sequences")
        if np.any(T <= 0) or np.any(np.diff(T) <= 0):
            raise ValueError("T must be positive and strictly increasing")
        if self.p >= 0 and np.any(m < 1 - 1e-8):
            raise ValueError("moments with p >= 0 are at least 1")
        object.__setattr__(self, "T", T)
        object.__setattr__(self, "moments", m)

    def subsample(self, step: int = 2) -> "MomentSeries":
        return MomentSeries(self.p, self.T[::step], self.moments[::step], self.provenance)


@dataclass(frozen=True)
class TransportEstimate:
    beta: float
    beta_plus: float
    beta_minus: float
    residual: float
    window: tuple
    scale: str
    p: float


def _envelope_slopes(xs: np.ndarray, ys: np.ndarray) -> tuple[float, float]:
    """Max and min slope from the trailing-half anchor to each later point."""
    k = len(xs) // 2
    if len(xs) - k < 2:
        k = len(xs) - 2
    dx = xs[k + 1:] - xs[k]
    slopes = (ys[k + 1:] - ys[k]) / dx
    return float(slopes.max()), float(slopes.min())


def _fit(series: MomentSeries, scale: str, min_samples: int) -> TransportEstimate:
    if len(series.T) < min_samples:
        raise ValueError(f"need at least {min_samples} samples, got {len(series.T)}")
    if series.p <= 0:
        raise ValueError("p must be positive")
    if scale == LNLN:
        if series.T[0] < 10:
            raise ValueError("T_min must be >= 10 so that ln ln T > 0")
        u = np.log(np.log(series.T))
    else:
        u = np.log(series.T)
    xs = series.p * u
    ys = np.log(series.moments)
    if np.ptp(xs) == 0:
        raise ValueError("degenerate series")
    slope, icpt = np.polyfit(xs, ys, 1)
    res = float(np.sqrt(np.mean((ys - (slope * xs + icpt)) ** 2)))
    plus, minus = _envelope_slopes(xs, ys)
    return TransportEstimate(float(slope), plus, minus, res, (float(series.T[0]), float(series.T[-1])),
                             scale, float(series.p))


def fit_beta_log(series: MomentSeries) -> TransportEstimate:
    """Slope of ``ln <|X|^p>`` against ``p ln ln T``."""
    return _fit(series, LNLN, 6)


def fit_beta(series: MomentSeries) -> TransportEstimate:
    """Slope of ``ln <|X|^p>`` against ``p ln T`` (power-law exponents)."""
    return _fit(series, LN, 3)


def estimates_csv(rows: Sequence[tuple[str, float, TransportEstimate]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["experiment", "parameter", "estimate", "beta_plus", "beta_minus", "residual",
                "T_min", "T_max", "scale"])
    for exp_id, param, e in rows:
        w.writerow([exp_id, repr(float(param)), repr(e.beta), repr(e.beta_plus), repr(e.beta_minus),
                    repr(e.residual), repr(e.window[0]), repr(e.window[1]), e.scale])
    return buf.getvalue()


# -- outside-probability exponents ----------------------------------------------------


@dataclass(frozen=True)
class SLogEstimate:
    """``s_plus`` follows the liminf of the samples and ``s_minus`` the limsup.

    So ``s_plus <= s_minus``.  A diverging trend reports both as +inf.
    """

    alpha: float
    s_plus: float
    s_minus: float
    alpha_log_bound: float
    samples: tuple
    divergent: bool


def _mass_beyond(a: np.ndarray, L: int, N: float) -> float:
    """``sum_{|n| > N} a(n)`` on the window; empty once N >= L."""
    k = math.floor(N) + 1 if N >= 0 else 0
    if k > L:
        return 0.0
    return math.fsum(a[: L - k + 1]) + math.fsum(a[L + k:]) if k > 0 else math.fsum(a)


def _largest_finite_alpha(a: np.ndarray, L: int, T: float, p_floor: float) -> float:
    tails = np.array([_mass_beyond(a, L, n) for n in range(L + 1)])
    above = np.nonzero(tails > p_floor)[0]
    n_star = int(above[-1]) if above.size else -1
    # P(N) stays above the floor for every N < n_star + 1
    return math.log(n_star + 3) / math.log(math.log(T))


def fit_s_log(profiles: Mapping[float, AmplitudeProfile], alpha: float,
              p_floor: float = P_FLOOR) -> SLogEstimate:
    """``-ln P(ln(T)^alpha - 2, T) / ln ln T`` per sample, with envelopes.

    Samples whose P is at or below ``p_floor`` count as +inf and are left out
    of the envelopes, which use the finite samples in the trailing half of
    the grid.  If that half has none, or the finite samples grow faster than
    ``ln ln T``, both envelopes are +inf.
    """
    if alpha < 0:
        raise ValueError("alpha must be >= 0")
    Ts = sorted(profiles)
    if len(Ts) < 2:
        raise ValueError("need at least two profiles")
    vals, bounds, cuts = [], [], []
    for T in Ts:
        prof = profiles[T]
        if T < 10:
            raise ValueError("T must be >= 10")
        if not prof.valid:
            raise ValueError(f"profile at T={T} is flagged invalid")
        lnlnT = math.log(math.log(T))
        N = math.log(T) ** alpha - 2
        cuts.append(math.floor(N))
        P = _mass_beyond(prof.a, prof.L, N)
        vals.append(math.inf if P <= p_floor else max(0.0, -math.log(P)) / lnlnT)
        bounds.append(_largest_finite_alpha(prof.a, prof.L, T, p_floor))
    vals = np.array(vals)
    finite = np.isfinite(vals)
    tail = np.zeros(len(Ts), dtype=bool)
    tail[len(Ts) // 2:] = True
    divergent = False
    pos = finite & (vals > 0)
    # a trend needs the integer cutoff to move more than once; a single jump is not growth
    if len(set(np.asarray(cuts)[pos].tolist())) >= 3:
        u = np.log(np.log(np.asarray(Ts)[pos]))
        slope = np.polyfit(u, np.log(vals[pos]), 1)[0]
        divergent = bool(slope > 1)
    use = finite & tail
    if divergent or not use.any():
        s_plus = s_minus = math.inf
    else:
        s_plus, s_minus = float(vals[use].min()), float(vals[use].max())
    return SLogEstimate(float(alpha), s_plus, s_minus, float(min(bounds)), tuple(vals.tolist()), divergent)


def scan_alpha(profiles: Mapping[float, AmplitudeProfile], alphas: Sequence[float],
               p_floor: float = P_FLOOR) -> list[SLogEstimate]:
    return [fit_s_log(profiles, a, p_floor) for a in alphas]


# -- integral criterion ------------------------------------------------------------------


@dataclass(frozen=True)
class DTIntegral:
    value: float
    log_value: float
    N_used: int
    K: float
    refined_panels: int
    asymmetry: float


def _log_integrand(f, d: Dynamics, X: np.ndarray, E: np.ndarray, T: float, N: int, workers: int) -> np.ndarray:
    """``-2 min_l max_{1<=j<=N} log ||A_{lj}^{E+i/T}(x)||``, minimized over phases X."""
    z = E + 1j / T
    chunk = 256
    sizes = [min(chunk, len(z) - s) for s in range(0, len(z), chunk)]
    starts = np.cumsum([0] + sizes[:-1])

    def task(i, m):
        zz = z[starts[i]:starts[i] + m]
        fwd = log_norms(f, d, X, zz, N, running=True).max(axis=-1)
        bwd = log_norms(f, d, X, zz, -N, running=True).max(axis=-1)
        return np.minimum(fwd, bwd).min(axis=0), (fwd - bwd).mean(axis=0)

    if workers <= 1:
        out = [task(i, m) for i, m in enumerate(sizes)]
    else:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(workers) as pool:
            out = list(pool.map(task, range(len(sizes)), sizes))
    growth = np.concatenate([o[0] for o in out])
    asym = np.concatenate([o[1] for o in out])
    return -2 * growth, asym


def _simpson_weights(a: float, b: float, panels: int) -> tuple[np.ndarray, np.ndarray]:
    x = np.linspace(a, b, 2 * panels + 1)
    h = (b - a) / (2 * panels)
    w = np.full(x.size, 2.0)
    w[1::2] = 4.0
    w[0] = w[-1] = 1.0
    return x, w * h / 3


def dt_integral(f, d: Dynamics, x, T: float, gamma: float, xi_probe: float | None = None,
                panels: int = 1 << 10, refine: int = 16, phases=None, workers: int = 1) -> DTIntegral:
    """``int_{-K}^{K} dE / min_l max_{1<=lj<=N} ||A_j^{E+i/T}(x)||^2`` with ``N = ceil((ln T)^gamma)``.

    Composite Simpson on ``panels`` panels; panels whose integrand exceeds ten
    times the median are re-integrated on ``refine`` sub-panels.  With
    ``phases`` the integrand is the minimum over that phase sample.
    ``xi_probe`` is carried for the caller; it does not change the value.
    """
    if T < 10:
        raise ValueError("T must be >= 10")
    if gamma <= 1:
        raise ValueError("gamma must exceed 1")
    N = math.ceil(math.log(T) ** gamma)
    K = float(spectrum_bound(f.sup_norm_bound))
    X = np.atleast_2d(as_array(x if phases is None else phases))
    E, w = _simpson_weights(-K, K, panels)
    lg, asym = _log_integrand(f, d, X, E, T, N, workers)
    # panel j spans nodes 2j..2j+2
    peak = np.maximum(np.maximum(lg[0:-1:2], lg[1::2]), lg[2::2])
    med = np.median(lg)
    hot = np.nonzero(peak > med + math.log(10))[0]
    terms = [lg + np.log(w)]
    if hot.size:
        h = 2 * K / panels
        # drop the coarse contributions of refined panels and add fine ones
        coarse = np.zeros(E.size)
        for j in hot:
            coarse[2 * j: 2 * j + 3] += (h / 6) * np.array([1.0, 4.0, 1.0])
        w_adj = w - coarse
        keep = w_adj > 1e-12 * h
        terms = [lg[keep] + np.log(w_adj[keep])]
        fine = []
        for j in hot:
            xf, wf = _simpson_weights(-K + j * h, -K + (j + 1) * h, refine)
            fine.append((xf, wf))
        xf = np.concatenate([p[0] for p in fine])
        wf = np.concatenate([p[1] for p in fine])
        lgf, _ = _log_integrand(f, d, X, xf, T, N, workers)
        terms.append(lgf + np.log(wf))
    log_value = float(logsumexp(np.concatenate(terms)))
    return DTIntegral(math.exp(log_value) if log_value > -745 else 0.0, log_value, N, K, int(hot.size),
                      float(np.max(np.abs(asym))))


@dataclass(frozen=True)
class DTOutsideBound:
    bound: float
    log_bound: float
    exp_term: float
    integral_term_log: float
    N: int
    constants: tuple = (1.0, 1.0)


def dt_outside_bound(f, d: Dynamics, x, T: float, gamma: float, integral: DTIntegral | None = None,
                     **kw) -> DTOutsideBound:
    """``e^{-N} + T^3 * integral`` with both absolute constants set to 1."""
    I = dt_integral(f, d, x, T, gamma, **kw) if integral is None else integral
    lt = 3 * math.log(T) + I.log_value
    lb = float(np.logaddexp(-I.N_used, lt))
    return DTOutsideBound(math.exp(lb), lb, math.exp(-I.N_used), lt, I.N_used)
