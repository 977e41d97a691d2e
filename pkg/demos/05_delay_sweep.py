"""
Sweeping the delay
==================

Simulate and classify over a grid of tau, next to the spectral prediction.
The starting history matters: near x* the switch sits at tau_0, far from it
the large cycle already shows up below tau_0 (it coexists with the stable
equilibrium there).
"""

# %%
import math

from hemodyn import (HistoryFunction, ModelParams, hopf_summary, linearize,
                     stability_boundary, sweep_tau)

p = ModelParams()
lin = linearize(p)
s = hopf_summary(lin, p)
print(f"spectral tau_0 = {s.tau_0:.3f} d")

# %%
near = HistoryFunction.analytic(
    lambda t: lin.x_star * (1 + 1e-4 * math.sin(2 * math.pi * t / s.onset_period)))
for name, hist in (("near x*", near), ("phi = 1e8", HistoryFunction.constant(1e8))):
    rows = sweep_tau(p, (16.0, 20.0), 21, history=hist)
    print(name)
    for r in rows:
        period = f"{r.period:6.2f}" if r.period else "     -"
        print(f"  tau {r.tau:5.2f}  {r.classification:22s} period {period}  predicted {r.predicted}")
    print("  to_xstar -> sustained bracket:", stability_boundary(rows))
