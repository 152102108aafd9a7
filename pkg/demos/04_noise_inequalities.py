#!/usr/bin/env python
# Quantitative version: the noise eps^2 and the repeatability deviation mu^2
# of every zoo model against the commutator lower bounds, over random inputs.
from waylab import zoo
from waylab.analysis import epsilon_sq_global, mu_sq_global, sample_inequality_slacks

print(f"{'model':18s} {'eps^2 sup':>10s} {'mu^2 sup':>10s} {'min eps slack':>14s} {'min mu slack':>13s}")
for b in zoo.all_models():
    e, m = sample_inequality_slacks(b.scheme, b.observable, b.conserved, 500, seed=1)
    print(f"{b.name:18s} {epsilon_sq_global(b.scheme, b.observable):10.4f} "
          f"{mu_sq_global(b.scheme, b.observable):10.4f} {e:14.3e} {m:13.3e}")

# the approximate Wigner family: eps^2 tracks eta^2 / 4 as n grows
for n in (1, 2, 3, 5, 8):
    b = zoo.wigner_approximate(n)
    print(f"n={n}: eps^2 = {epsilon_sq_global(b.scheme, b.observable):.5f}, "
          f"eta^2/4 = {b.info['eta_sq'] / 4:.5f}")
