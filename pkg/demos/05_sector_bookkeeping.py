#!/usr/bin/env python
# Accurate S_x measurements that conserve the charge leave the probe in one of
# two configurations.  The overlap tr(rho+ rho-) of the two apparatus states
# splits into three squares; making it vanish kills one pair of vectors.
import numpy as np

from waylab import lastpage, zoo

rng = np.random.default_rng(3)
e = np.eye(3)   # apparatus labels -1, 0, 1
a, b, d, c = (rng.normal() + 1j * rng.normal()) * e[1], rng.normal() * e[2], rng.normal() * e[0], rng.normal() * e[1]
tr, terms = lastpage.distinguishability_trace(a, b, d, c)
print("random sector vectors: trace", tr, "terms", terms)

for k in (1, 2):
    U = zoo.wigner_lastpage(k).scheme.U.entries
    out0, out1 = U[:, 1].reshape(2, 3), U[:, 4].reshape(2, 3)
    print(f"scenario model {k}: classified as",
          lastpage.zero_trace_scenario(out0[0], out1[0], out0[1], out1[1]))

# product-form final states: only two of the four support patterns survive
for k in (1, 2, 3, 4):
    rep = lastpage.lastpage_case_analysis(k)
    print(k, "feasible" if rep.feasible else "infeasible:", rep.obstruction,
          "" if not rep.feasible else f"(outcomes distinguishable: {rep.pointer_distinguishable})")
