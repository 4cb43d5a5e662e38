"""
Classical baselines
===================

Projected subgradient descent with three step schedules, and a
learning-rate-free momentum method driven by noisy subgradients.  Both are
vectorized over independent starts.
"""

import numpy as np

from qhdbench.baselines import LFMSGDConfig, SubgradConfig, lfmsgd_run, random_starts, subgrad_run
from qhdbench.corpus import lookup

spec = lookup("EXPABS")
for sched, step in (("constant", 0.01), ("sqrt_decay", 1.0), ("strongly_convex", 1.0)):
    r = subgrad_run(spec, SubgradConfig(sched, step, budget=1000, x0=[1.0]), record=True)
    print(f"{sched:16s} best gap after 1000 queries: {r.best_gaps(0.0)[-1]:.2e}")

ackley = lookup("ACKLEY")
starts = random_starts(ackley, runs=500, seed=0)
r = lfmsgd_run(ackley, LFMSGDConfig(sigma=0.5, budget=2000, x0=starts, rng_seed=0))
gaps = r.value - ackley.known_min_value
print("LFMSGD on ACKLEY: median gap", round(float(np.median(gaps)), 3), " best", round(float(gaps.min()), 4))
