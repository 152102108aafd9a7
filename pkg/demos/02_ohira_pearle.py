#!/usr/bin/env python
# Two spin-1/2 particles coupled by the rotation-invariant H = (S + J)^2.
# The coupling is accurate for S_x and conserves S_z + J_z, so by the
# theorem it has to give up both repeatability and the Yanase condition.
import numpy as np

from waylab import zoo
from waylab.analysis import noise_operator, way_verdict
from waylab.linalg import random_state

b = zoo.ohira_pearle()
s = b.scheme
up, dn = np.array([1.0, 0.0]), np.array([0.0, 1.0])

# U acts as a swap up to sign: the S_x state moves onto the probe spin
out = s.U.entries @ np.kron(up + dn, up) / np.sqrt(2)
print("U (psi_+ (x) up) =", np.round(out, 12))

r = way_verdict(s, b.observable, b.conserved, b.target)
print(r.to_dict())

# the noise operator vanishes, so the Ozawa bound has nothing to bound
N = noise_operator(s, b.observable)
print("max |N_ij| =", np.max(np.abs(N.entries)))

# ... which is consistent: its numerator <[N, L]> is zero for every input
rng = np.random.default_rng(0)
L = b.conserved.total().entries
vals = []
for _ in range(5):
    v = np.kron(random_state(rng, 2).amplitudes, s.phi.amplitudes)
    vals.append(abs(np.vdot(v, (N.entries @ L - L @ N.entries) @ v)))
print("numerators:", vals)
