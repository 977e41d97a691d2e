"""Model constants, the Hill re-entry rate, equilibria and linearization.

The state variable is the resting-phase stem cell density x(t) (cells/kg).
Cells leave the resting phase at rate ``delta + beta(x)`` and come back as
two daughter cells after a cycle whose duration is uniform on
``[tau_min, tau]``.
"""
from __future__ import annotations

import enum
import math
import sys
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

# Clinical reference values (cells/kg for theta, 1/day for rates).
DEFAULT_DELTA = 0.05
DEFAULT_BETA0 = 1.77
DEFAULT_N = 3.0
DEFAULT_THETA = 1.62e8

DEGENERATE_TOL = 1e-9
PROXIMITY_TOL = 1e-9
_LOG_FLOAT_MAX = math.log(sys.float_info.max)


class ParameterError(ValueError):
    """Raised when model constants violate their invariants."""


class LinearizationError(ValueError):
    """Raised when there is no positive equilibrium to linearize around."""


@dataclass(frozen=True)
class ModelParams:
    """The six model constants.

    Attributes
    ----------
    delta : float
        Death/differentiation rate in the resting phase, 1/day.
    beta0 : float
        Maximal re-entry rate into the cell cycle, 1/day.
    theta : float
        Density at which the re-entry rate is half-maximal, cells/kg.
    n : float
        Hill sensitivity exponent (any real >= 0).
    tau_min, tau : float
        Bounds of the uniform cycle-duration law, days.
    """

    delta: float = DEFAULT_DELTA
    beta0: float = DEFAULT_BETA0
    theta: float = DEFAULT_THETA
    n: float = DEFAULT_N
    tau_min: float = 0.0
    tau: float = 18.2

    def __post_init__(self):
        values = dict(delta=self.delta, beta0=self.beta0, theta=self.theta,
                      n=self.n, tau_min=self.tau_min, tau=self.tau)
        for name, value in values.items():
            if not isinstance(value, (int, float)) or math.isnan(value):
                raise ParameterError(f"{name} must be a real number, got {value!r}")
        if self.delta < 0:
            raise ParameterError(f"delta must be >= 0, got {self.delta}")
        if not self.beta0 > 0:
            raise ParameterError(f"beta0 must be > 0, got {self.beta0}")
        if not self.theta > 0:
            raise ParameterError(f"theta must be > 0, got {self.theta}")
        if self.n < 0:
            raise ParameterError(f"n must be >= 0, got {self.n}")
        if self.tau_min < 0:
            raise ParameterError(f"tau_min must be >= 0, got {self.tau_min}")
        if not (self.tau_min < self.tau < math.inf):
            raise ParameterError(
                f"need tau_min < tau < inf, got tau_min={self.tau_min}, tau={self.tau}")

    @property
    def window(self) -> float:
        """Length of the cycle-duration interval, tau - tau_min."""
        return self.tau - self.tau_min

    @property
    def ratio(self) -> float:
        """n (beta0 - delta) / beta0."""
        return self.n * (self.beta0 - self.delta) / self.beta0

    def replace(self, **changes) -> "ModelParams":
        values = dict(delta=self.delta, beta0=self.beta0, theta=self.theta,
                      n=self.n, tau_min=self.tau_min, tau=self.tau)
        values.update(changes)
        return ModelParams(**values)


@dataclass(frozen=True)
class Equilibria:
    trivial: float = 0.0
    positive: Optional[float] = None
    reason: str = ""


@dataclass(frozen=True)
class Linearization:
    """Coefficients of the equation linearized at the positive equilibrium.

    ``kappa`` is the level ``(delta + beta_star) / (2 beta_star)`` that the
    sinc function must reach at a purely imaginary root; it is only set when
    ``beta_star < 0``.
    """

    beta_star: float
    delta_plus_beta_star: float
    ratio: float
    kappa: Optional[float] = None
    x_star: float = math.nan


class Regime(str, enum.Enum):
    TRIVIAL_GLOBALLY_STABLE = "TrivialGloballyStable"
    DELAY_INDEPENDENT_STABLE = "DelayIndependentStable"
    DELAY_DEPENDENT = "DelayDependent"
    DEGENERATE = "Degenerate"
    NO_POSITIVE_EQUILIBRIUM = "NoPositiveEquilibrium"


@dataclass(frozen=True)
class RegimeClassification:
    regime: Regime
    reason: str
    warnings: tuple = field(default_factory=tuple)


def beta(params: ModelParams, x):
    """Hill re-entry rate ``beta0 theta^n / (theta^n + x^n)``.

    Accepts a scalar or an array of nonnegative densities.
    """
    if isinstance(x, (int, float)):
        if x < 0 or math.isnan(x):
            raise ValueError(f"density must be >= 0, got {x}")
        return params.beta0 / (1.0 + (x / params.theta) ** params.n)
    x = np.asarray(x, dtype=float)
    if np.any(~(x >= 0)):
        raise ValueError("density must be >= 0")
    return params.beta0 / (1.0 + (x / params.theta) ** params.n)


def equilibria(params: ModelParams) -> Equilibria:
    """Trivial and (when it exists) positive equilibrium.

    The positive one is ``theta (beta0/delta - 1)^(1/n)`` and exists iff
    ``beta0 > delta > 0`` and ``n > 0``.
    """
    if params.delta <= 0:
        return Equilibria(reason="delta = 0: beta(x) = delta has no positive root")
    if params.beta0 < params.delta:
        return Equilibria(reason="beta0 < delta: beta(x) < delta for all x >= 0")
    if params.beta0 == params.delta:
        return Equilibria(reason="beta0 = delta: the root of beta(x) = delta is x = 0")
    if params.n == 0:
        return Equilibria(reason="n = 0: beta is constant and never equals delta on x > 0")
    log_x = math.log(params.theta) + math.log(params.beta0 / params.delta - 1.0) / params.n
    if log_x > _LOG_FLOAT_MAX:
        return Equilibria(reason=f"x* = exp({log_x:.6g}) exceeds the floating-point range")
    x_star = params.theta * (params.beta0 / params.delta - 1.0) ** (1.0 / params.n)
    if not 0.0 < x_star < math.inf:
        return Equilibria(reason=f"x* = exp({log_x:.6g}) is not representable")
    return Equilibria(positive=x_star)


def linearize(params: ModelParams) -> Linearization:
    eq = equilibria(params)
    if eq.positive is None:
        raise LinearizationError(f"linearization undefined: {eq.reason}")
    ratio = params.ratio
    beta_star = params.delta * (1.0 - ratio)
    kappa = None
    if beta_star < 0:
        kappa = (params.delta + beta_star) / (2.0 * beta_star)
    return Linearization(beta_star=beta_star,
                         delta_plus_beta_star=params.delta + beta_star,
                         ratio=ratio, kappa=kappa, x_star=eq.positive)


def classify_regime(lin: Optional[Linearization], params: ModelParams) -> RegimeClassification:
    """Delay-independent classification of the long-term dynamics.

    ``lin`` may be ``None`` when no positive equilibrium exists.
    """
    from .spectral import default_tables, h

    warnings = []
    if params.beta0 < params.delta:
        return RegimeClassification(Regime.TRIVIAL_GLOBALLY_STABLE, "beta0 < delta")
    if params.beta0 == params.delta:
        return RegimeClassification(
            Regime.TRIVIAL_GLOBALLY_STABLE, "beta0 = delta",
            ("boundary beta0 = delta: global stability of 0 is not established",))
    if params.delta == 0:
        return RegimeClassification(
            Regime.NO_POSITIVE_EQUILIBRIUM, "delta = 0 with beta0 > 0: no equilibrium balance")

    ratio = lin.ratio if lin is not None else params.ratio
    threshold = h(default_tables().u0)
    if abs(ratio - 1.0) <= PROXIMITY_TOL:
        warnings.append("ratio within 1e-9 of 1 (beta_star ~ 0)")
    if abs(ratio - threshold) <= PROXIMITY_TOL:
        warnings.append("ratio within 1e-9 of h(u0)")
    warnings = tuple(warnings)

    if ratio <= 1.0:
        reason = "ratio <= 1 (beta_star >= 0)"
        if params.n == 0:
            reason = "n = 0: constant re-entry rate, ratio = 0"
        return RegimeClassification(Regime.DELAY_INDEPENDENT_STABLE, reason, warnings)
    if ratio < threshold:
        return RegimeClassification(
            Regime.DELAY_INDEPENDENT_STABLE, "1 < ratio < h(u0)", warnings)
    if abs(ratio - 2.0) <= DEGENERATE_TOL:
        return RegimeClassification(
            Regime.DEGENERATE, "ratio ~ 2 (delta + beta_star ~ 0)", warnings)
    return RegimeClassification(Regime.DELAY_DEPENDENT, "ratio >= h(u0)", warnings)
