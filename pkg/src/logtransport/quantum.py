"""Time-averaged wavepacket spreading on a finite window.

The operator is ``psi(n-1) + psi(n+1) + lambda f(T^n x) psi(n)`` restricted to
sites ``-L..L``.  Averages use the weight ``(2/T) exp(-2t/T)``, which turns
``|<e^{itH} delta_s, delta_n>|^2`` into a closed-form Lorentzian sum over pairs
of eigenvalues.
"""

from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh_tridiagonal, expm

from .cocycle import sample
from .torus import Dynamics, as_array

log = logging.getLogger(__name__)

#: initial sites averaged over
INITIAL_SITES = (0, 1)
DEFAULT_LEAK_TOL = 1e-8
L_START = 64
L_CAP = 1 << 14
#: bytes allowed for the dense pair kernel before a window is refused
MEMORY_BUDGET = 2 * 1024 ** 3
BUFFER_FRACTION = 0.1


class WindowCapExceeded(RuntimeError):
    """No window up to the cap kept the leaked mass below tolerance."""


@dataclass(frozen=True)
class TruncatedOperator:
    L: int
    diagonal: np.ndarray
    x: np.ndarray | None = None
    dynamics: Dynamics | None = None
    potential: object = None

    @property
    def sites(self) -> np.ndarray:
        return np.arange(-self.L, self.L + 1)

    @property
    def size(self) -> int:
        return 2 * self.L + 1

    def dense(self) -> np.ndarray:
        M = self.size
        H = np.diag(self.diagonal.astype(float))
        idx = np.arange(M - 1)
        H[idx, idx + 1] = H[idx + 1, idx] = 1.0
        return H

    def spectrum_bound(self) -> int:
        """``K = max(4, ceil(||v||_inf) + 3)``; the spectrum lies in [-K+1, K-1]."""
        return spectrum_bound(float(np.max(np.abs(self.diagonal), initial=0.0)))


def spectrum_bound(v_sup: float) -> int:
    return max(4, math.ceil(v_sup) + 3)


def build(f, d: Dynamics, x, L: int) -> TruncatedOperator:
    """Window ``-L..L`` with ``v_n = lambda f(T^n x)``; site 0 carries x itself."""
    if L < 4:
        raise ValueError("L must be >= 4")
    x = as_array(x).reshape(-1)
    v = sample(f, d, x[None, :], np.arange(-L, L + 1))[0]
    return TruncatedOperator(int(L), v, x, d, f)


def free_operator(L: int) -> TruncatedOperator:
    if L < 4:
        raise ValueError("L must be >= 4")
    return TruncatedOperator(int(L), np.zeros(2 * L + 1))


@dataclass(frozen=True)
class SpectralData:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    window: int


def diagonalize(op: TruncatedOperator) -> SpectralData:
    E, Phi = eigh_tridiagonal(op.diagonal, np.ones(op.size - 1))
    return SpectralData(E, Phi, op.L)


def spectral_residual(op: TruncatedOperator, sd: SpectralData) -> tuple[float, float]:
    """``max_j ||H phi_j - E_j phi_j||`` and ``||Phi^T Phi - I||_max``."""
    Phi = sd.eigenvectors
    HPhi = op.diagonal[:, None] * Phi
    HPhi[1:] += Phi[:-1]
    HPhi[:-1] += Phi[1:]
    res = float(np.max(np.linalg.norm(HPhi - Phi * sd.eigenvalues, axis=0)))
    orth = float(np.max(np.abs(Phi.T @ Phi - np.eye(Phi.shape[1]))))
    return res, orth


@dataclass(frozen=True)
class AmplitudeProfile:
    T: float
    L: int
    a: np.ndarray                   # indexed by site + L
    truncation_leak: float
    leak_tol: float
    clip_mass: float = 0.0
    meta: dict = field(default_factory=dict, compare=False)

    @property
    def valid(self) -> bool:
        return self.truncation_leak < self.leak_tol

    @property
    def sites(self) -> np.ndarray:
        return np.arange(-self.L, self.L + 1)

    def __getitem__(self, n: int) -> float:
        return float(self.a[n + self.L]) if abs(n) <= self.L else 0.0

    def total(self) -> float:
        return float(math.fsum(self.a))

    def cumulative_from_center(self) -> np.ndarray:
        """Mass on ``|m| <= |n|`` for each site n."""
        ring = self.a.copy()
        ring[: self.L] = 0.0
        ring[self.L + 1:] += self.a[: self.L][::-1]
        cum = np.cumsum(ring[self.L:])
        return cum[np.abs(self.sites)]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n", "a", "cumulative"])
        for n, a, c in zip(self.sites.tolist(), self.a.tolist(), self.cumulative_from_center().tolist()):
            w.writerow([n, repr(a), repr(c)])
        return buf.getvalue()


def _buffer_width(L: int) -> int:
    return max(1, math.ceil(BUFFER_FRACTION * L))


def lorentzian_kernel(E: np.ndarray, T: float) -> np.ndarray:
    g2 = (2.0 / T) ** 2
    diff = E[:, None] - E[None, :]
    return g2 / (g2 + diff * diff)


def _check_memory(M: int):
    need = 3 * M * M * 8
    if need > MEMORY_BUDGET:
        raise WindowCapExceeded(
            f"window of {M} sites needs ~{need / 2**30:.1f} GiB for the pair kernel; "
            "the packet is spreading too fast for the exact average (free or ballistic regime?)")


def amplitudes(op: TruncatedOperator, T: float, leak_tol: float = DEFAULT_LEAK_TOL,
               spectral: SpectralData | None = None) -> AmplitudeProfile:
    """``a(n,T) = 1/2 sum_s sum_jk c_j c_k (2/T)^2 / ((2/T)^2 + (E_j - E_k)^2)``.

    ``c_j = phi_j(s) phi_j(n)`` for s in {0, 1}.  Negative round-off is
    clipped to zero and its mass recorded.
    """
    if not T > 0:
        raise ValueError("T must be positive")
    _check_memory(op.size)
    sd = diagonalize(op) if spectral is None else spectral
    Phi = sd.eigenvectors
    Kmat = lorentzian_kernel(sd.eigenvalues, T)
    a = np.zeros(op.size)
    for s in INITIAL_SITES:
        B = Phi * Phi[s + op.L]
        a += np.einsum("nj,nj->n", B @ Kmat, B)
    a *= 0.5
    neg = a < 0
    clip = float(-a[neg].sum())
    if neg.any():
        if a.min() < -1e-12:
            log.warning("amplitude round-off %.3g below -1e-12 clipped", a.min())
        a[neg] = 0.0
    b = _buffer_width(op.L)
    leak = float(a[:b].sum() + a[-b:].sum())
    return AmplitudeProfile(float(T), op.L, a, leak, leak_tol, clip)


def moments(prof: AmplitudeProfile, p: float) -> float:
    """``sum_n (1 + |n|)^p a(n,T)`` over the window."""
    if p < 0:
        raise ValueError("p must be >= 0")
    if not prof.valid:
        raise ValueError(f"profile at T={prof.T} leaks {prof.truncation_leak:.3g}; enlarge L")
    w = (1.0 + np.abs(prof.sites)) ** p
    return float(math.fsum(w * prof.a))


@dataclass(frozen=True)
class OutsideProbability:
    N: int
    P: float
    P_l: float
    P_r: float


def outside_probability(prof: AmplitudeProfile, N: int) -> OutsideProbability:
    """Mass on ``n < -N`` (left) and ``n > N`` (right)."""
    if N < 0 or N > prof.L:
        raise ValueError(f"N = {N} must lie in [0, L={prof.L}]")
    left = math.fsum(prof.a[: prof.L - N])
    right = math.fsum(prof.a[prof.L + N + 1:])
    return OutsideProbability(int(N), left + right, left, right)


def adaptive_profile(f, d: Dynamics, x, T: float, leak_tol: float = DEFAULT_LEAK_TOL,
                     L_start: int = L_START, L_cap: int = L_CAP, min_L: int = 0) -> AmplitudeProfile:
    """Double the window from ``L_start`` until the outer 10% holds < leak_tol."""
    if not 0 < leak_tol < 1:
        raise ValueError("leak_tol must lie in (0, 1)")
    L = max(L_start, 4)
    while L < min_L:
        L *= 2
    while L <= L_cap:
        prof = amplitudes(build(f, d, x, L), T, leak_tol)
        if prof.valid:
            return prof
        L *= 2
    raise WindowCapExceeded(f"no window up to L = {L_cap} contains the packet at T = {T}; "
                            "transport looks ballistic, use a smaller T")


# -- time-domain oracle ----------------------------------------------------------------


def time_average_oracle(op: TruncatedOperator, T: float, panel: float = 0.5,
                        horizon: float = 20.0, nodes: int = 16) -> np.ndarray:
    """a(n,T) by Gauss-Legendre quadrature of the weighted time integral.

    Propagates with matrix exponentials of the dense window, independent of
    the eigendecomposition.  The integral is cut at ``horizon * T``.
    """
    H = op.dense()
    M = op.size
    tau, w = np.polynomial.legendre.leggauss(nodes)
    tau = 0.5 * panel * (tau + 1)
    w = 0.5 * panel * w
    U_nodes = [expm(1j * t * H) for t in tau]
    U_panel = expm(1j * panel * H)
    psi = np.zeros((M, len(INITIAL_SITES)), dtype=complex)
    for i, s in enumerate(INITIAL_SITES):
        psi[s + op.L, i] = 1.0
    acc = np.zeros(M)
    n_panels = math.ceil(horizon * T / panel)
    for k in range(n_panels):
        t0 = k * panel
        for t, wt, U in zip(tau, w, U_nodes):
            phi = U @ psi
            acc += wt * (2.0 / T) * math.exp(-2.0 * (t0 + t) / T) * np.sum(np.abs(phi) ** 2, axis=1)
        psi = U_panel @ psi
    return 0.5 * acc
