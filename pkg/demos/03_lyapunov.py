"""
Lyapunov functions along a run
==============================

For convex and strongly convex objectives an energy built from <f>, <p^2>,
<x^2> and <{x, p}> should not increase along the discrete evolution.
"""

from qhdbench import GridSpec, QHDConfig, Schedule
from qhdbench.corpus import center, lookup, wrap_barrier
from qhdbench.observables import fit_decay_rate, lyapunov_trace, monotonicity_report

h = 1e-3
grid = GridSpec(1, 1024, 1.0)
objective = wrap_barrier(center(lookup("EXPABS")))
config = QHDConfig(grid, Schedule.strongly_convex(1.0), h, 3000, objective)

trace = lyapunov_trace(config, "strongly_convex", mu=1.0, every=1)
report = monotonicity_report(trace, slack=h)
print("violations:", len(report.violations), " max relative increase:", f"{report.max_relative_increase:.2e}")
print("fitted decay rate of E(t):", round(fit_decay_rate(trace), 3))
for i in range(0, len(trace), 500):
    print(f"t={trace.t[i]:.2f}  E={trace.energy[i]:.5f}  <f>={trace.expected_f[i]:.5f}")
