"""Log-scale transport bounds for quasi-periodic Schrodinger operators.

Numerical companions to power-logarithmic transport bounds: torus dynamics,
potentials with certified approximants, overflow-safe transfer-matrix
cocycles, exact time-averaged wavepacket spreading and the estimators that
turn moment series into transport exponents.
"""

from .cocycle import (LogScaledMatrix, deviation_measure, growth_first_hit, inclusion_check, log_norms,
                      lyapunov, transfer)
from .equidistribution import Ball, PolySublevel, Union, delta_fit, fejer_hit_bound, hit_count, first_visit_check
from .potentials import CertifiedApprox, Potential, polynomialize, truncate_fourier
from .quantum import (AmplitudeProfile, TruncatedOperator, WindowCapExceeded, adaptive_profile, amplitudes, build,
                      moments, outside_probability)
from .torus import Dynamics, Frequency, TorusPoint, continued_fraction, diophantine_margin, golden_mean
from .transport import MomentSeries, dt_integral, dt_outside_bound, fit_beta, fit_beta_log, fit_s_log

__all__ = [
    "AmplitudeProfile", "Ball", "CertifiedApprox", "Dynamics", "Frequency", "LogScaledMatrix", "MomentSeries",
    "PolySublevel", "Potential", "TorusPoint", "TruncatedOperator", "Union", "WindowCapExceeded",
    "adaptive_profile", "amplitudes", "build", "continued_fraction", "delta_fit", "deviation_measure",
    "diophantine_margin", "dt_integral", "dt_outside_bound", "fejer_hit_bound", "fit_beta", "fit_beta_log",
    "fit_s_log", "golden_mean", "growth_first_hit", "hit_count", "inclusion_check", "first_visit_check", "log_norms",
    "lyapunov", "moments", "outside_probability", "polynomialize", "transfer", "truncate_fourier",
]
