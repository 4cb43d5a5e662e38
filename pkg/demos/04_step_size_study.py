"""
Plateau and rate versus step size
=================================

On a nonsmooth objective the discrete evolution stalls at a gap roughly
proportional to h.  Before the plateau, |x| decays like (kh)^-2.
"""

from qhdbench.harness import study_step_sizes

res = study_step_sizes("ABS", [0.2, 0.1, 0.05, 0.025], N=2048, T=20.0)
for h, gap, fit in zip(res.h_values, res.terminal_gaps, res.rate_fits):
    rate = "n/a" if fit is None else f"{fit.slope:+.2f}"
    print(f"h={h:<6} terminal gap {gap:.4f}  pre-plateau slope {rate}")
print("plateau-vs-h slope:", round(res.plateau_fit.slope, 3))
