# ## Time-averaged spreading of a wavepacket
#
# Start on sites {0, 1}, average |psi_t(n)|^2 against (2/T) e^{-2t/T} dt.
# The eigendecomposition of the window turns this into a Lorentzian pair sum.

import numpy as np

from logtransport import Dynamics, Potential, golden_mean
from logtransport.quantum import adaptive_profile, moments, outside_probability

d = Dynamics.shift([golden_mean()])

# ### Free Laplacian: ballistic, <|X|^2> ~ T^2

Ts = [10.0, 20.0, 40.0]
free = [adaptive_profile(Potential.zero(), d, [0.0], T, L_start=16) for T in Ts]
m = [moments(p, 2) for p in free]
print("free windows:", [p.L for p in free])
print("free slope:", np.polyfit(np.log(Ts), np.log(m), 1)[0])

# ### Strong coupling: the packet stays put

for T in (1e2, 1e4, 1e6):
    prof = adaptive_profile(Potential.cosine(4.0), d, [0.0], T)
    P = outside_probability(prof, 20)
    print(f"T={T:.0e}  L={prof.L}  <|X|^2>={moments(prof, 2):.4f}  P(20,T)={P.P:.2e}")

prof = adaptive_profile(Potential.cosine(4.0), d, [0.0], 1e4)
print(prof.to_csv().splitlines()[60:70])
