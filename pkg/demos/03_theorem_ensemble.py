#!/usr/bin/env python
# The no-go theorem as an experiment: sample many qubit (x) qutrit couplings
# that conserve S_z + L2, measure S_n for a random direction n, and check that
# none is accurate while also repeatable or Yanase-compatible.
import numpy as np

from waylab import acceptance
from waylab.analysis import DELTA, search_counterexample, way_verdict
from waylab.linalg import spin_ops
from waylab.scheme import ConservedQuantity

reports = []
for seed in range(100):
    s, M, c = acceptance.ensemble_member(seed)
    reports.append(way_verdict(s, M, c, seed=seed))

acc = np.array([r.accuracy_error for r in reports])
print("schemes passing the gate:", sum(r.gate() for r in reports))
print("accuracy error  min/median/max: %.3f %.3f %.3f" % (acc.min(), np.median(acc), acc.max()))

# random draws could just be unlucky, so also optimize a Yanase-compatible
# coupling directly for accuracy
sx, _, sz = spin_ops(0.5)
c = ConservedQuantity(sz, np.diag([-1.0, 0.0, 1.0]))
res = search_counterexample(c, sx, [-0.5, 0.5, 0.5], seed=0, n_starts=4)
print(f"best accuracy error after optimization: {res.best_accuracy_error:.4f} "
      f"(gate {DELTA})")
