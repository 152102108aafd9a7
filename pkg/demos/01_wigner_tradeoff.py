#!/usr/bin/env python
# A spin-1/2 S_x measurement that conserves S_z + J_z cannot be perfect,
# but a bigger apparatus gets closer.  We look at the ideal (non-conserving)
# coupling first, then optimize the conserving family for growing n.
import numpy as np

from waylab import zoo
from waylab.analysis import way_verdict
from waylab.scheme import induced_povm

# the ideal coupling copies the S_x eigenbasis into the pointer perfectly
ideal = zoo.wigner_ideal()
print("ideal:", way_verdict(ideal.scheme, ideal.observable, ideal.conserved).to_dict())

# ... and for that reason cannot conserve S_z + J_z
ex = zoo.contra_expectations(ideal)
print("<S_z + J_z> in/out for spin up:  ", ex["up"])
print("<S_z + J_z> in/out for spin down:", ex["down"])

# conserving family: apparatus with 2n-1 charge grades and a neutral register.
# the third outcome ("no answer") happens with probability eta^2 for every input
for n in range(1, 7):
    opt = zoo.optimize_wigner_error(n, seed=0)
    print(f"n={n}  eta^2={opt.eta_sq:.12f}  1/(2n-1)={1 / (2 * n - 1):.12f}")

# the optimized scheme really has E_+- = (1 - eta^2) P_+- and E_0 = eta^2 * 1
b = zoo.wigner_approximate(3)
povm = induced_povm(b.scheme)
for x, e in povm:
    print(f"outcome {x:+.1f}:\n", np.round(e.entries.real, 6))
