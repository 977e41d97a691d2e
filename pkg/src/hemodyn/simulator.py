"""Fixed-step integration of the distributed-delay equation.

Two schemes share the same RK4 stepper and Hermite dense output:

``augmented``
    Carries ``z(t) = int_{tau_min}^{tau} F(x(t - r)) dr`` (``F(x) = beta(x) x``)
    as a second state.  Differentiating the moving window gives
    ``z' = F(x(t - tau_min)) - F(x(t - tau))``, so each step needs only two
    point-delay lookups.
``quadrature``
    Recomputes the window integral at every stage by composite Simpson over
    the dense output.  O(window/dt) per step; kept as an independent check.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .model import ModelParams

SCHEMES = ("augmented", "quadrature")
INTERPOLANTS = ("cubic-hermite", "linear")
NEGATIVITY_SLACK = 1e-9
_SNAP = 1e-9


class ConfigError(ValueError):
    pass


class SimulationAbort(RuntimeError):
    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


class CoverageError(ValueError):
    """A delayed value was requested outside the known solution."""


@dataclass(frozen=True, eq=False)
class HistoryFunction:
    """Initial data on ``[-tau, 0]``.

    Build with :meth:`constant`, :meth:`table` or :meth:`analytic`.  Tables
    are interpolated linearly (default) or with a monotone cubic (``pchip``),
    both of which preserve nonnegativity.
    """

    kind: str
    value: float = 0.0
    times: Optional[np.ndarray] = None
    values: Optional[np.ndarray] = None
    func: Optional[Callable] = None
    interp: str = "linear"
    _pchip: object = field(default=None, repr=False)

    @classmethod
    def constant(cls, value: float) -> "HistoryFunction":
        return cls(kind="constant", value=float(value))

    @classmethod
    def table(cls, times, values, interp: str = "linear") -> "HistoryFunction":
        times = np.asarray(times, dtype=float)
        values = np.asarray(values, dtype=float)
        if times.ndim != 1 or times.shape != values.shape or times.size < 2:
            raise ValueError("table history needs matching 1-d times/values with >= 2 points")
        if np.any(np.diff(times) <= 0):
            raise ValueError("table history times must be strictly increasing")
        if interp not in ("linear", "pchip"):
            raise ValueError(f"unknown table interpolation {interp!r}")
        pchip = None
        if interp == "pchip":
            from scipy.interpolate import PchipInterpolator

            pchip = PchipInterpolator(times, values, extrapolate=False)
        return cls(kind="table", times=times, values=values, interp=interp, _pchip=pchip)

    @classmethod
    def analytic(cls, func: Callable) -> "HistoryFunction":
        return cls(kind="sampled-analytic", func=func)

    def __call__(self, s):
        if self.kind == "constant":
            if np.ndim(s) == 0:
                return self.value
            return np.full(np.shape(s), self.value)
        if self.kind == "table":
            if self._pchip is not None:
                return self._pchip(s) if np.ndim(s) else float(self._pchip(s))
            out = np.interp(s, self.times, self.values)
            return out if np.ndim(s) else float(out)
        if np.ndim(s) == 0:
            return float(self.func(s))
        return np.array([self.func(si) for si in np.ravel(s)], dtype=float).reshape(np.shape(s))

    def validate(self, tau: float, samples: int = 2049):
        """Check the history is finite and nonnegative on ``[-tau, 0]``."""
        if self.kind == "table":
            if self.times[0] > -tau + 1e-12 * max(1.0, tau) or self.times[-1] < -1e-12:
                raise ValueError(
                    f"table history covers [{self.times[0]}, {self.times[-1]}], need [{-tau}, 0]")
        grid = np.linspace(-tau, 0.0, samples)
        vals = np.asarray(self(grid), dtype=float)
        if not np.all(np.isfinite(vals)):
            raise ValueError("history is not finite on [-tau, 0]")
        if np.any(vals < 0):
            raise ValueError("history must be nonnegative on [-tau, 0]")


@dataclass(frozen=True)
class SimConfig:
    dt: Optional[float] = None
    t_end: float = 600.0
    scheme: str = "augmented"
    quad_panels: int = 512
    interp: str = "cubic-hermite"

    def step(self, params: ModelParams) -> float:
        if self.dt is None:
            return min(0.05, params.window / 256.0)
        return float(self.dt)

    def validate(self, params: ModelParams) -> float:
        """Check the configuration against ``params``; returns the step size."""
        dt = self.step(params)
        if not (dt > 0 and math.isfinite(dt)):
            raise ConfigError(f"dt must be positive, got {dt}")
        if not self.t_end >= dt:
            raise ConfigError(f"t_end = {self.t_end} must be >= dt = {dt}")
        if dt > params.window / 4.0 * (1 + 1e-12):
            raise ConfigError(
                f"dt = {dt} does not resolve the kernel: need dt <= (tau - tau_min)/4 = "
                f"{params.window / 4.0}")
        if 0 < params.tau_min < dt:
            raise ConfigError(
                f"0 < tau_min = {params.tau_min} < dt = {dt}: the short delay would fall "
                "inside the current step; use tau_min = 0 or dt <= tau_min")
        if self.quad_panels < 2 or self.quad_panels % 2:
            raise ConfigError(f"quad_panels must be even and >= 2, got {self.quad_panels}")
        if self.scheme not in SCHEMES:
            raise ConfigError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")
        if self.interp not in INTERPOLANTS:
            raise ConfigError(f"interp must be one of {INTERPOLANTS}, got {self.interp!r}")
        return dt


def simpson_weights(panels: int) -> np.ndarray:
    """Composite Simpson weights for ``panels`` (even) subintervals of unit width."""
    if panels < 2 or panels % 2:
        raise ValueError(f"Simpson needs an even panel count >= 2, got {panels}")
    w = np.ones(panels + 1)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return w / 3.0


def reentry_flux(params: ModelParams, x):
    """F(x) = beta(x) x.  Tiny negative round-off is evaluated at 0."""
    xp = np.maximum(x, 0.0)
    return params.beta0 * x / (1.0 + (xp / params.theta) ** params.n)


def dense_eval(s, x, m, dt, upto, history, interp="cubic-hermite"):
    """Evaluate the stored solution at times ``s`` (array).

    ``x[i], m[i]`` are value and slope at ``i*dt`` for ``i <= upto``; times
    ``<= 0`` come from ``history``.  Times within 1e-9 steps of a grid point
    return the stored value.
    """
    s = np.asarray(s, dtype=float)
    out = np.empty_like(s)
    past = s <= 0.0
    if np.any(past):
        out[past] = history(s[past])
    fut = ~past
    if not np.any(fut):
        return out
    u = s[fut] / dt
    near = np.rint(u)
    snap = np.abs(u - near) < _SNAP
    i = np.floor(u).astype(np.int64)
    i = np.where(snap, near.astype(np.int64), i)
    if np.any(i > upto) or np.any((i == upto) & ~snap):
        raise CoverageError(f"requested t = {s[fut].max()} beyond known solution t = {upto * dt}")
    r = u - i
    i1 = np.minimum(i + 1, upto)
    x0, x1 = x[i], x[i1]
    if interp == "linear":
        val = x0 + r * (x1 - x0)
    else:
        m0, m1 = m[i], m[i1]
        r2 = r * r
        r3 = r2 * r
        val = ((2 * r3 - 3 * r2 + 1) * x0 + (r3 - 2 * r2 + r) * dt * m0
               + (-2 * r3 + 3 * r2) * x1 + (r3 - r2) * dt * m1)
    out[fut] = np.where(snap, x0, val)
    return out


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Solution on the uniform grid ``times = i*dt`` with Hermite dense output."""

    times: np.ndarray
    x: np.ndarray
    z: np.ndarray
    dx: np.ndarray
    params: ModelParams
    history: HistoryFunction
    config: SimConfig
    dt: float

    def __call__(self, t):
        scalar = np.ndim(t) == 0
        t = np.atleast_1d(np.asarray(t, dtype=float))
        if np.any(t < -self.params.tau - 1e-12) or np.any(t > self.times[-1] * (1 + 1e-12)):
            raise CoverageError(
                f"t outside [{-self.params.tau}, {self.times[-1]}]")
        out = dense_eval(t, self.x, self.dx, self.dt, len(self.x) - 1, self.history,
                         self.config.interp)
        return float(out[0]) if scalar else out

    @property
    def t_end(self) -> float:
        return float(self.times[-1])

    def window(self, t_a: float, t_b: float):
        """Grid samples with ``t_a <= t <= t_b``."""
        sel = (self.times >= t_a - 1e-9 * self.dt) & (self.times <= t_b + 1e-9 * self.dt)
        return self.times[sel], self.x[sel]


def _simpson(source, params: ModelParams, t: float, r_a: float, r_b: float, panels: int):
    r = np.linspace(r_a, r_b, panels + 1)
    vals = reentry_flux(params, np.asarray(source(t - r), dtype=float))
    return (r_b - r_a) / panels * float(np.dot(simpson_weights(panels), vals))


def _window_integral(source, t, params: ModelParams, panels: int):
    # the solution joins the history at s = 0 with a slope jump; splitting
    # the window there keeps Simpson at full order on both pieces
    lo, hi = params.tau_min, params.tau
    if isinstance(source, Trajectory) and lo < t < hi and panels >= 4:
        p_near = min(panels - 2, max(2, 2 * round(panels * (t - lo) / (2 * (hi - lo)))))
        return (_simpson(source, params, t, lo, t, p_near)
                + _simpson(source, params, t, t, hi, panels - p_near))
    return _simpson(source, params, t, lo, hi, panels)


def integral_term(source, t: float, params: ModelParams, config: Optional[SimConfig] = None):
    """``int_{tau_min}^{tau} F(x(t - r)) dr`` by composite Simpson.

    ``source`` is a Trajectory (dense output, history for negative times) or a
    HistoryFunction (then ``t`` must be 0 or less).  The factor
    ``2/(tau - tau_min)`` is left to the caller.
    """
    config = config or SimConfig()
    if isinstance(source, HistoryFunction):
        if t > 0:
            raise CoverageError("a history function only covers t <= 0")
    elif t - params.tau < -params.tau - 1e-12 or t > source.t_end * (1 + 1e-12):
        raise CoverageError(f"integral window at t = {t} is not covered by the trajectory")
    return _window_integral(source, t, params, config.quad_panels)


def init_augmented(history: HistoryFunction, params: ModelParams,
                   config: Optional[SimConfig] = None) -> float:
    """Initial augmented state ``z(0) = int_{tau_min}^{tau} F(phi(-r)) dr``."""
    return integral_term(history, 0.0, params, config)


def _abort_check(step, x_new, running_max):
    if not math.isfinite(x_new):
        raise SimulationAbort(f"non-finite state at step {step}", step)
    if x_new < -NEGATIVITY_SLACK * running_max:
        raise SimulationAbort(
            f"negative density {x_new:.3e} at step {step} (max so far {running_max:.3e})", step)


def simulate(params: ModelParams, history: HistoryFunction,
             config: Optional[SimConfig] = None) -> Trajectory:
    """Integrate from ``history`` on ``[-tau, 0]`` up to ``config.t_end``."""
    config = config or SimConfig()
    dt = config.validate(params)
    history.validate(params.tau)
    steps = int(math.ceil(config.t_end / dt - 1e-9))
    if config.scheme == "augmented":
        x, z, dx = _run_augmented(params, history, config, dt, steps)
    else:
        x, z, dx = _run_quadrature(params, history, config, dt, steps)
    times = np.arange(steps + 1) * dt
    return Trajectory(times=times, x=x, z=z, dx=dx, params=params, history=history,
                      config=config, dt=dt)


def _run_augmented(params, history, config, dt, steps):
    delta, b0, theta, n = params.delta, params.beta0, params.theta, params.n
    tau, tau_min = params.tau, params.tau_min
    c = 2.0 / params.window
    hermite = config.interp == "cubic-hermite"
    inv_dt = 1.0 / dt

    xs = [float(history(0.0))]
    zs = [init_augmented(history, params, config)]
    ms = []

    def F(v):
        return b0 * v / (1.0 + (max(v, 0.0) / theta) ** n)

    def slope(v, w):
        return -(delta + b0 / (1.0 + (max(v, 0.0) / theta) ** n)) * v + c * w

    def lookup(s):
        # stored solution at a past time s (< current step start)
        if s <= 0.0:
            u = s * inv_dt
            if u > -_SNAP:
                return xs[0]
            return float(history(s))
        u = s * inv_dt
        near = round(u)
        if abs(u - near) < _SNAP:
            return xs[near]
        i = int(u)
        r = u - i
        x0, x1 = xs[i], xs[i + 1]
        if not hermite:
            return x0 + r * (x1 - x0)
        r2 = r * r
        r3 = r2 * r
        return ((2 * r3 - 3 * r2 + 1) * x0 + (r3 - 2 * r2 + r) * dt * ms[i]
                + (-2 * r3 + 3 * r2) * x1 + (r3 - r2) * dt * ms[i + 1])

    xn, zn = xs[0], zs[0]
    ms.append(slope(xn, zn))
    running_max = abs(xn)
    half = 0.5 * dt
    f_far = F(lookup(-tau))
    for step in range(steps):
        t = step * dt
        f_far_mid = F(lookup(t + half - tau))
        f_far_end = F(lookup(t + dt - tau))
        if tau_min > 0:
            f_near0 = F(lookup(t - tau_min))
            f_near_mid = F(lookup(t + half - tau_min))
            f_near_end = F(lookup(t + dt - tau_min))

        k1x = ms[step]
        k1z = (f_near0 if tau_min > 0 else F(xn)) - f_far
        x2 = xn + half * k1x
        z2 = zn + half * k1z
        k2x = slope(x2, z2)
        k2z = (f_near_mid if tau_min > 0 else F(x2)) - f_far_mid
        x3 = xn + half * k2x
        z3 = zn + half * k2z
        k3x = slope(x3, z3)
        k3z = (f_near_mid if tau_min > 0 else F(x3)) - f_far_mid
        x4 = xn + dt * k3x
        z4 = zn + dt * k3z
        k4x = slope(x4, z4)
        k4z = (f_near_end if tau_min > 0 else F(x4)) - f_far_end

        xn = xn + dt / 6.0 * (k1x + 2 * k2x + 2 * k3x + k4x)
        zn = zn + dt / 6.0 * (k1z + 2 * k2z + 2 * k3z + k4z)
        running_max = max(running_max, abs(xn))
        _abort_check(step + 1, xn, running_max)
        xs.append(xn)
        zs.append(zn)
        ms.append(slope(xn, zn))
        f_far = f_far_end
    return np.array(xs), np.array(zs), np.array(ms)


def _run_quadrature(params, history, config, dt, steps):
    delta = params.delta
    c = 2.0 / params.window
    panels = config.quad_panels
    r = np.linspace(params.tau_min, params.tau, panels + 1)
    weights = simpson_weights(panels) * (params.window / panels)

    x = np.empty(steps + 1)
    m = np.empty(steps + 1)
    z = np.empty(steps + 1)
    x[0] = float(history(0.0))

    def window(t_s, upto, xn, k1, curv):
        # window integral at stage time t_s; nodes inside the current step
        # [t_n, t_s] use the local quadratic x_n + k1 s + curv s^2 / 2
        s_nodes = t_s - r
        t_n = upto * dt
        inside = s_nodes > t_n + _SNAP * dt
        vals = np.empty_like(s_nodes)
        if np.any(~inside):
            vals[~inside] = dense_eval(s_nodes[~inside], x, m, dt, upto, history, config.interp)
        if np.any(inside):
            s = s_nodes[inside] - t_n
            vals[inside] = xn + k1 * s + 0.5 * curv * s * s
        return float(np.dot(weights, reentry_flux(params, vals)))

    def slope(v, w):
        return -(delta + params.beta0 / (1.0 + (max(v, 0.0) / params.theta) ** params.n)) * v + c * w

    running_max = abs(x[0])
    half = 0.5 * dt
    w_guess = 0.0
    for step in range(steps + 1):
        t = step * dt
        xn = x[step]
        if step > 0:
            # the last Hermite piece needs the slope at t_n, which itself
            # depends on the window: seed it from the previous stage-4 window
            m[step] = slope(xn, w_guess)
        z[step] = window(t, step, xn, 0.0, 0.0)
        m[step] = k1 = slope(xn, z[step])
        if step == steps:
            break
        if step > 0:
            curv = (6.0 * (x[step - 1] - xn) + dt * (2.0 * m[step - 1] + 4.0 * k1)) / (dt * dt)
        else:
            curv = 0.0
        w_mid = window(t + half, step, xn, k1, curv)
        w_end = window(t + dt, step, xn, k1, curv)
        x2 = xn + half * k1
        k2 = slope(x2, w_mid)
        x3 = xn + half * k2
        k3 = slope(x3, w_mid)
        x4 = xn + dt * k3
        k4 = slope(x4, w_end)
        x_new = xn + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        w_guess = w_end
        running_max = max(running_max, abs(x_new))
        _abort_check(step + 1, x_new, running_max)
        x[step + 1] = x_new
    return x, z, m
