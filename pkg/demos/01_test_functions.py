"""
The objective corpus
====================

Every benchmark function carries its box, known minimum and a hand-written
Clarke subgradient.  QHD works on a symmetric box, so functions are mapped
to [-L, L]^d and wrapped with a linear barrier outside it.
"""

import numpy as np

from qhdbench import corpus

# the whole corpus, one line per function
for name in corpus.available():
    s = corpus.lookup(name)
    print(f"{s.name:14s} d={s.dim}  f*={s.known_min_value:+.6f}  {s.convexity}")

# evaluation and a subgradient at a kink
ackley = corpus.lookup("ACKLEY")
print("ACKLEY(0, 0) =", corpus.evaluate(ackley, [0.0, 0.0]))
print("subgradient of |x| at 0:", corpus.clarke_subgradient(corpus.lookup("ABS"), [0.0]))

# rescaling moves the minimizer with the box
schwefel = corpus.rescale_to_hypercube(corpus.lookup("SCHWEFEL"), 1.0)
print("SCHWEFEL minimizer on [-1, 1]:", schwefel.known_min_points[0])

# outside the box the barrier grows linearly with the distance
wrapped = corpus.wrap_barrier(schwefel, growth_rate=1e3)
xs = np.array([[0.9], [1.0], [1.1], [1.2]])
print("barrier-wrapped values:", np.round(wrapped.values(xs), 3))
