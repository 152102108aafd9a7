#!/usr/bin/env python
# Position measurement coupled through a momentum-conserving unitary.
# Calibration margin alpha and repeatability margin beta both fall off
# exponentially with the coupling strength lambda.
import numpy as np

from waylab import position as P

rows = P.stein_shimony_report(1.0, [0.5, 1, 2, 4, 8])
print(P.rows_to_csv(rows))
for r in rows:
    print(f"lambda={r.lam:4.1f}  alpha*e^lam={r.alpha * np.exp(r.lam):.6f}  "
          f"beta*(e^lam-1)={r.beta * np.expm1(r.lam):.6f}")

# the smearing density for a few couplings: narrower as lambda grows
for lam in (1.0, 3.0):
    d = P.density_e(P.PositionModelConfig(lam, profile="raised_cosine"))
    print(f"lambda={lam}: support half-width {d.support_half_width():.4f}, integral {d.integral():.12f}")

# pointer Q_A and apparatus momentum P_A do not commute, even on a grid
print("normalized [Q_A, P_A] on a 64-point grid:", P.grid_yanase_defect())

cfg = P.PositionModelConfig(2.0, profile="raised_cosine")
print(P.position_ozawa_check(cfg, n_states=50, seed=0).to_dict())
