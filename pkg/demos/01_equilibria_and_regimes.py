"""
Equilibria and stability regimes
================================

Where does the stem cell population settle, and does the answer depend on
the cycle duration at all?
"""

# %%
# The clinical parameter set: death rate 0.05/day, maximal re-entry rate
# 1.77/day, Hill exponent 3, half-effect density 1.62e8 cells/kg.
from hemodyn import ModelParams, classify_regime, equilibria, linearize
from hemodyn.spectral import default_tables, h

p = ModelParams()
eq = equilibria(p)
print(f"x* = {eq.positive:.4e} cells/kg")

# %%
# Linearizing at x* gives beta* and the ratio R = n(beta0 - delta)/beta0.
# R decides everything that follows.
lin = linearize(p)
print(f"beta* = {lin.beta_star:.6f}/day, R = {lin.ratio:.4f}, kappa = {lin.kappa:.6f}")

# %%
# Three thresholds split the R axis: R <= 1 is stable for every delay,
# 1 < R < h(u0) too, and beyond h(u0) stability depends on tau.
threshold = h(default_tables().u0)
print(f"h(u0) = {threshold:.6f}")
for beta0 in (0.03, 0.05, 0.08, 0.10, 0.2, 1.77):
    q = p.replace(beta0=beta0)
    try:
        lq = linearize(q)
        R = f"{lq.ratio:.3f}"
    except ValueError:
        lq, R = None, "-"
    cls = classify_regime(lq, q)
    print(f"beta0 = {beta0:5.2f}  R = {R:>6}  {cls.regime.value:24s} {cls.reason}")
