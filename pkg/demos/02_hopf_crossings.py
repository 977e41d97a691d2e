"""
Imaginary-axis crossings
========================

For tau_min = 0 the purely imaginary roots of the characteristic equation
sit where sin(y)/y meets the level kappa.  Each crossing gives a delay tau_c
and a frequency omega_c.
"""

# %%
import math

import numpy as np

from hemodyn import ModelParams, char_delta, hopf_summary, linearize
from hemodyn.spectral import K, default_tables, h

p = ModelParams()
lin = linearize(p)
s = hopf_summary(lin, p)
c = s.crossings[0]
print(f"case {s.case_label}: tau_c = {c.tau_c:.4f} d, omega_c = {c.omega_c:.5f}/d, "
      f"period {c.period:.2f} d")
print(f"|Delta(i omega_c)| = {abs(char_delta(lin, p, c.tau_c, 1j * c.omega_c)):.1e}")

# %%
# The graph of K: the troughs u_k and peaks v_k are cosines of the tan x = x
# roots.  Print a coarse table instead of a figure.
tables = default_tables()
for y in np.linspace(0.0, 20.0, 11):
    print(f"K({y:5.1f}) = {K(y):+.4f}")
print("x_k :", np.round(tables.xs[:5], 6))
print("u_k :", np.round(tables.us[:3], 6))
print("v_k :", np.round(tables.vs[:3], 6))

# %%
# Moving kappa across the extrema changes how many crossings there are.
# The sign column says whether a root pair moves right (+1) or left (-1)
# as tau grows through tau_c.
for R in (1.5, 1.8, 1.9, 2.2, 2.5):
    n = 10.0
    q = ModelParams(delta=0.05, beta0=n * 0.05 / (n - R), n=n)
    sq = hopf_summary(linearize(q), q)
    signs = " ".join(f"{x.tau_c:.2f}({x.transversality:+d})" for x in sq.crossings)
    print(f"R = {R:.2f}  case {sq.case_label:5s} {signs or sq.note}")
