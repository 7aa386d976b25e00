# ## Bounding the outside probability by an energy integral
#
# P(N, T) <~ e^{-N} + T^3 * int dE / min max ||A_j^{E+i/T}||^2 with
# N = ceil((ln T)^gamma).  Everything is kept in log space.

from logtransport import Dynamics, Potential, golden_mean
from logtransport.quantum import adaptive_profile, outside_probability
from logtransport.transport import dt_integral, dt_outside_bound

d = Dynamics.shift([golden_mean()])
f = Potential.cosine(4.0)

for T in (1e2, 1e3, 1e4):
    I = dt_integral(f, d, [0.0], T, 2.5, panels=512)
    B = dt_outside_bound(f, d, [0.0], T, 2.5, integral=I)
    prof = adaptive_profile(f, d, [0.0], T, min_L=I.N_used + 1)
    P = outside_probability(prof, I.N_used).P
    print(f"T={T:.0e} N={I.N_used:4d} ln I={I.log_value:8.1f} ln bound={B.log_bound:8.1f} "
          f"P={P:.1e} refined panels={I.refined_panels}")

# free operator: the integral does not decay, the criterion says nothing
print("free:", dt_integral(Potential.zero(), d, [0.0], 1e3, 1.5, panels=256).log_value)
