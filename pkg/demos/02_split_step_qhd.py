"""
Split-step QHD on a periodic grid
=================================

One step multiplies by a potential phase in position space and by an exact
kinetic phase in Fourier space.  The scheme is unitary and first order in
the step size.
"""

import numpy as np

from qhdbench import GridSpec, QHDConfig, Schedule, evolve
from qhdbench.corpus import lookup, rescale_to_hypercube, wrap_barrier
from qhdbench.engine import dense_propagator_reference, trajectory

grid = GridSpec(dim=1, n=512, half_width=1.0)
objective = wrap_barrier(rescale_to_hypercube(lookup("ABS"), 1.0))
config = QHDConfig(grid, Schedule.convex(), h=0.01, iterations=2000, objective=objective)

trace = evolve(config)
print("initial <f> - f*:", round(trace.initial_expected_f, 4))
print("best gap after 20 time units:", round(trace.terminal_gap, 5))
print("max norm drift:", float(np.max(np.abs(trace.norm - 1))))

# Trotter error against an exact exponential on a tiny grid
small = GridSpec(1, 16, 1.0)
square = lookup("SQUARE")
ref = dense_propagator_reference(QHDConfig(small, Schedule.convex(), 1 / 4096, 4096, square)).amplitudes
for h in (1 / 64, 1 / 128, 1 / 256):
    *_, (_, _, amps) = trajectory(QHDConfig(small, Schedule.convex(), h, round(1 / h), square))
    err = np.sqrt(np.sum(np.abs(amps - ref) ** 2) * small.spacing)
    print(f"h = 1/{round(1 / h)}: state error {err:.3e}")
