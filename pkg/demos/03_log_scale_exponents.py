# ## Power-logarithmic exponents
#
# beta_log(p) is the slope of ln <|X|^p> against p ln ln T.  A synthetic
# (ln T)^4 series should give exactly 2 for p = 2.

import numpy as np

from logtransport import Dynamics, Potential, golden_mean
from logtransport.quantum import adaptive_profile, moments
from logtransport.transport import MomentSeries, fit_beta_log, scan_alpha

T = np.logspace(2, 6, 9)
print(fit_beta_log(MomentSeries(2.0, T, np.log(T) ** 4)))

# ### The one-frequency analytic model

d = Dynamics.shift([golden_mean()])
f = Potential.cosine(4.0)
profs = {t: adaptive_profile(f, d, [0.0], t) for t in T}
series = MomentSeries(2.0, T, [moments(p, 2) for p in profs.values()])
est = fit_beta_log(series)
print(f"beta_log(2) = {est.beta:.3e}  (+{est.beta_plus:.2e}, -{est.beta_minus:.2e})")

# outside probabilities beyond (ln T)^alpha - 2
for s in scan_alpha(profs, [0.0, 0.5, 1.0, 2.0]):
    print(f"alpha={s.alpha}: s+={s.s_plus:.3g} s-={s.s_minus:.3g} divergent={s.divergent}")
print("largest alpha with a measurable tail:", scan_alpha(profs, [1.0])[0].alpha_log_bound)
