# ## How often an orbit visits a small set
#
# Fejer-kernel majorants bound the visits of a Diophantine shift to a ball of
# radius eps; for a rotation the first visit to an interval of length ~1/q_n
# comes within q_n + q_{n-1} - 1 steps.

from logtransport import Dynamics, golden_mean
from logtransport.equidistribution import Ball, delta_fit, fejer_hit_bound, hit_count, first_visit_check
from logtransport.torus import continued_fraction, diophantine_margin

d = Dynamics.shift([golden_mean()], dioph_class="DC", A=1.0, c=0.3)
print(diophantine_margin(d.frequency, 100, A=1))

for N in (10 ** 3, 10 ** 4, 10 ** 5):
    b = fejer_hit_bound(d, [0.0], N ** -0.5, N)
    print(f"N={N:6d} hits={b.lhs:5d} bound={b.rhs:9.1f}")

cf = continued_fraction(golden_mean(), 20)
for n in (5, 8, 11):
    r = first_visit_check(cf, n, (0.1, 0.1 + 1.5 / cf.q(n)))
    print(f"q_{n}={r.q_n}: worst first visit {r.max_first_hit} <= {r.bound}")

# the skew-shift equidistributes too, with a smaller exponent
skew = Dynamics.skew_shift(golden_mean(), dim=2, dioph_class="SDC", A=1.0, c=0.3)
print(hit_count(skew, [0.0, 0.0], Ball((0.0, 0.0), 0.05), 10 ** 4).hits, "visits of 10^4 (expected", 100, ")")
print("fitted delta:", delta_fit(skew, [0.0, 0.0], [10 ** 3, 10 ** 4, 10 ** 5], delta_try=0.25).delta)
