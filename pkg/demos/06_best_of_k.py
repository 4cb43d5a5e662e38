"""
Best-of-k scoring and a small benchmark
=======================================

QHD is scored exactly from its final distribution; baselines are scored by
resampling k-subsets of independent runs.  A plan file drives tuning and
evaluation for several algorithms at once.
"""

import tempfile
from pathlib import Path

import numpy as np

from qhdbench.grid import GridSpec, ProbabilityField, sample
from qhdbench.harness import best_of_k_exact, best_of_k_mc_many, run_suite

grid = GridSpec(1, 64, 1.0)
mass = np.random.default_rng(1).random(64) ** 3
field = ProbabilityField(grid, mass / mass.sum())
values = np.sin(3 * grid.axis) + grid.axis**2
draws = sample(field, 0, 5000)
idx = np.rint((draws[:, 0] + 1.0) / grid.spacing).astype(int)
mc = best_of_k_mc_many(values[idx], -1.0, [1, 10, 100], resamples=5000)
for k, est in mc.items():
    exact = best_of_k_exact(field, None, -1.0, k, values=values)
    print(f"k={k:<3} exact {exact:.4f}  MC {est.estimate:.4f} +- {est.stderr:.4f}")

plan = {
    "settings": {"N": 64, "T": 5.0, "h": 0.01, "budget": 500, "runs": 500, "tune_runs": 200,
                 "resamples": 1000, "tune_budget": 8},
    "entries": [{"function": "XINSHEYANG04", "algorithm": a, "k_values": [1, 10]} for a in ("QHD", "Subgrad", "LFMSGD")],
}
with tempfile.TemporaryDirectory() as out:
    for rep in run_suite(plan, out):
        print(f"{rep.algorithm:8s} {rep.parameter_name}={rep.parameters[10]:.4g}  best-of-10 gap {rep.gaps[10]:.3e}")
    print((Path(out) / "table.csv").read_text())
