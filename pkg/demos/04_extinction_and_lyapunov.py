"""
Extinction and the Lyapunov functional
======================================

When beta0 < delta even the fastest re-entry cannot compensate the losses:
the population dies out, and the functional J decreases along the way.
"""

# %%
import math

import numpy as np

from hemodyn import HistoryFunction, ModelParams, SimConfig, lyapunov_J, simulate

p = ModelParams(beta0=0.03, tau=5.0)
hist = HistoryFunction.analytic(lambda s: 1e9 * (1.0 + math.sin(3 * s)))
traj = simulate(p, hist, SimConfig(t_end=400.0))

# %%
# Sample J once a day.  Increments should never be positive.
days = np.arange(0.0, 401.0)
J = np.array([lyapunov_J(p, traj, t, panels=128) for t in days])
for t in (0, 10, 50, 100, 200, 400):
    print(f"t = {t:3d} d  x = {traj(float(t)):.3e}  J = {J[t]:.4e}")
print(f"largest daily increase of J: {np.diff(J).max():.2e}")
