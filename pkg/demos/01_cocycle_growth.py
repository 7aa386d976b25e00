# ## Transfer matrices of a quasi-periodic operator
#
# lambda cos on the circle, golden rotation.  Products are carried as a
# normalized matrix plus a log magnitude, so n = 10^5 is no problem.

import math

import numpy as np

from logtransport import Dynamics, Potential, golden_mean, lyapunov, transfer

f = Potential.cosine(4.0)
d = Dynamics.shift([golden_mean()])

A = transfer(f, d, [0.1], 0.0, 100_000)
print("log ||A_n|| / n at n = 1e5:", A.log_mag / 100_000)
print("det:", A.det)

# ### Lyapunov exponent against Herman's bound ln(lambda/2)

for n in (50, 100, 200, 400):
    est = lyapunov(f, d, 0.0, n, 4000, seed=1)
    print(f"n={n:4d}  L_n = {est.mean:.4f} +- {est.stderr:.4f}")
print("ln 2 =", math.log(2))

# ### Weak coupling: the exponent drops to zero below lambda = 2

for lam in (0.5, 1.0, 2.0, 3.0):
    est = lyapunov(Potential.cosine(lam), d, 0.0, 400, 2000, seed=2)
    print(f"lambda={lam}: L = {est.mean:.4f}, ln(lambda/2) = {math.log(lam / 2):+.4f}")

# the running maximum over j is what the integral criterion uses
from logtransport.cocycle import log_norms

run = log_norms(f, d, np.array([[0.1]]), [0.0], 60, running=True)[0, 0]
print("first few log norms:", np.round(run[:6], 3))
