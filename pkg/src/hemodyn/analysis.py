"""Trajectory post-processing, the Lyapunov functional and delay sweeps."""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import model, spectral
from .model import Equilibria, ModelParams
from .simulator import (HistoryFunction, SimConfig, SimulationAbort, Trajectory,
                        reentry_flux, simpson_weights, simulate)

TO_ZERO = "to_zero"
TO_XSTAR = "to_xstar"
SUSTAINED = "sustained_oscillation"
UNDETERMINED = "undetermined"

TAIL_FRACTION = 0.4


@dataclass(frozen=True)
class PeriodEstimate:
    period: Optional[float]
    amplitude: float
    peak_times: tuple
    sustained: bool
    relative_spread: float
    amplitude_ratio: float = math.nan


@dataclass(frozen=True)
class Tolerances:
    """Thresholds used by :func:`classify_trajectory`."""

    zero_fraction: float = 1e-4
    xstar_deviation: float = 1e-3
    max_spread: float = 0.05
    amplitude_ratio: tuple = (0.95, 1.05)
    tail_fraction: float = TAIL_FRACTION


def _smooth(x, width=5):
    kernel = np.ones(width) / width
    out = np.convolve(x, kernel, mode="same")
    half = width // 2
    out[:half] = x[:half]
    out[-half:] = x[-half:]
    return out


def _peaks(t, y):
    """Strict local maxima over a 5-point stencil, refined by a parabola."""
    if y.size < 5:
        return np.array([]), np.array([])
    c = y[2:-2]
    strict = (c > y[1:-3]) & (c > y[:-4]) & (c > y[3:-1]) & (c > y[4:])
    idx = np.nonzero(strict)[0] + 2
    times, heights = [], []
    dt = t[1] - t[0]
    for i in idx:
        a, b, d = y[i - 1], y[i], y[i + 1]
        denom = a - 2 * b + d
        shift = 0.5 * (a - d) / denom if denom != 0 else 0.0
        times.append(t[i] + shift * dt)
        heights.append(b - 0.25 * (a - d) * shift)
    return np.array(times), np.array(heights)


def estimate_period(traj, window=None, tolerances: Tolerances = Tolerances()) -> PeriodEstimate:
    """Mean gap between successive peaks of the smoothed signal in ``window``.

    ``traj`` is a Trajectory or a ``(times, values)`` pair of uniform samples.
    """
    if isinstance(traj, Trajectory):
        t_all, x_all = traj.times, traj.x
    else:
        t_all, x_all = (np.asarray(v, dtype=float) for v in traj)
    if window is None:
        window = (t_all[0], t_all[-1])
    t_a, t_b = window
    dt = t_all[1] - t_all[0]
    sel = (t_all >= t_a - 1e-9 * dt) & (t_all <= t_b + 1e-9 * dt)
    t, x = t_all[sel], x_all[sel]
    if t.size == 0:
        raise ValueError(f"window {window} does not intersect the samples")

    y = _smooth(x)
    amplitude = 0.5 * float(x.max() - x.min())
    peak_t, _ = _peaks(t, y)
    if peak_t.size < 3:
        return PeriodEstimate(None, amplitude, tuple(peak_t), False, math.nan)

    gaps = np.diff(peak_t)
    period = float(gaps.mean())
    spread = float((gaps.max() - gaps.min()) / period)
    mid = 0.5 * (t[0] + t[-1])
    first, second = x[t <= mid], x[t >= mid]
    amp_first = 0.5 * (first.max() - first.min())
    amp_second = 0.5 * (second.max() - second.min())
    ratio = float(amp_second / amp_first) if amp_first > 0 else math.nan
    lo, hi = tolerances.amplitude_ratio
    sustained = spread < tolerances.max_spread and lo <= ratio <= hi
    return PeriodEstimate(period, amplitude, tuple(peak_t), bool(sustained), spread, ratio)


def tail_window(traj: Trajectory, fraction: float = TAIL_FRACTION):
    return traj.t_end * (1.0 - fraction), traj.t_end


def classify_trajectory(traj: Trajectory, eq: Optional[Equilibria] = None,
                        tolerances: Tolerances = Tolerances()) -> str:
    """Label the long-run behaviour from the tail of ``traj``."""
    if eq is None:
        eq = model.equilibria(traj.params)
    t_a, t_b = tail_window(traj, tolerances.tail_fraction)
    t, x = traj.window(t_a, t_b)
    initial = abs(traj.x[0])
    if initial > 0 and float(np.mean(x)) < tolerances.zero_fraction * initial:
        return TO_ZERO
    if eq.positive is not None:
        dev = np.abs(x / eq.positive - 1.0)
        half = dev.size // 2
        shrinking = dev[half:].max() <= dev[:half].max()
        if dev.max() < tolerances.xstar_deviation and shrinking:
            return TO_XSTAR
    estimate = estimate_period((t, x), tolerances=tolerances)
    if estimate.sustained:
        return SUSTAINED
    return UNDETERMINED


def hill_primitive(params: ModelParams, x: float, tol: float = 1e-10) -> float:
    """B(x) = int_0^x beta(s) s ds by adaptive Simpson (relative tolerance ``tol``)."""
    if x < 0:
        raise ValueError("B is defined for x >= 0")
    if x == 0:
        return 0.0
    # integrate in s/theta so the integrand is O(beta0)
    scale = params.theta

    def f(u):
        return params.beta0 * u / (1.0 + u ** params.n)

    a, b = 0.0, x / scale
    fa, fm, fb = f(a), f(0.5 * (a + b)), f(b)
    whole = (b - a) / 6.0 * (fa + 4 * fm + fb)
    total = _adaptive_simpson(f, a, b, fa, fm, fb, whole, tol * max(abs(whole), 1e-300), 50)
    return total * scale * scale


def _adaptive_simpson(f, a, b, fa, fm, fb, whole, tol, depth):
    m = 0.5 * (a + b)
    lm, rm = 0.5 * (a + m), 0.5 * (m + b)
    flm, frm = f(lm), f(rm)
    left = (m - a) / 6.0 * (fa + 4 * flm + fm)
    right = (b - m) / 6.0 * (fm + 4 * frm + fb)
    delta = left + right - whole
    if depth <= 0 or abs(delta) <= 15 * tol:
        return left + right + delta / 15.0
    return (_adaptive_simpson(f, a, m, fa, flm, fm, left, tol / 2, depth - 1)
            + _adaptive_simpson(f, m, b, fm, frm, fb, right, tol / 2, depth - 1))


def lyapunov_J(params: ModelParams, state, t: float = 0.0, panels: int = 512) -> float:
    """Lyapunov functional of the zero equilibrium evaluated on the segment ending at ``t``.

    ``J = B(x(t)) + 1/(tau - tau_min) int_{tau_min}^{tau} int_{-r}^{0} F(x(t + a))^2 da dr``

    ``state`` is a Trajectory or any callable of time covering ``[t - tau, t]``.
    The double integral is iterated composite Simpson with ``panels`` outer
    panels; the inner integrals are accumulated panel by panel.
    """
    if panels < 2 or panels % 2:
        raise ValueError("panels must be even and >= 2")
    if isinstance(state, Trajectory):
        if t - params.tau < -params.tau - 1e-9 or t > state.t_end + 1e-9:
            raise ValueError(f"segment [t - tau, t] at t = {t} is not covered")

    def G(times):
        return reentry_flux(params, np.asarray(state(times), dtype=float)) ** 2

    x_now = float(state(t))
    b_val = hill_primitive(params, max(x_now, 0.0))

    width = params.window
    h_out = width / panels
    r = params.tau_min + h_out * np.arange(panels + 1)
    # inner(r) = int_{-r}^{0} G(t + a) da
    if params.tau_min > 0:
        sub = 2 * max(1, int(math.ceil(params.tau_min / h_out / 2)))
        a_head = np.linspace(-params.tau_min, 0.0, sub + 1)
        head = params.tau_min / sub * float(np.dot(simpson_weights(sub), G(t + a_head)))
    else:
        head = 0.0
    # Simpson on each [r_j, r_{j+1}] with a midpoint sample
    mids = -(r[:-1] + 0.5 * h_out)
    g_nodes = G(t - r)
    g_mids = G(t + mids)
    pieces = h_out / 6.0 * (g_nodes[:-1] + 4 * g_mids + g_nodes[1:])
    inner = head + np.concatenate(([0.0], np.cumsum(pieces)))
    outer = h_out * float(np.dot(simpson_weights(panels), inner))
    return b_val + outer / width


@dataclass(frozen=True)
class SweepRow:
    tau: float
    classification: str
    period: Optional[float]
    final_mean: float
    predicted: Optional[str]
    error: str = ""


def _predicted(params: ModelParams, tau: float) -> Optional[str]:
    """Linear-stability prediction for the positive equilibrium (or zero) at ``tau``.

    None where the analytic enumeration does not apply (tau_min > 0, ratio 2).
    """
    eq = model.equilibria(params)
    if eq.positive is None:
        return "stable"
    lin = model.linearize(params)
    if lin.beta_star >= 0:
        return "stable"
    try:
        summary = spectral.hopf_summary(lin, params)
    except (spectral.UnsupportedConfiguration, spectral.DegenerateCase):
        return None
    if summary.tau_0 is None or tau < summary.tau_0:
        return "stable"
    if summary.tau_l is not None and tau <= summary.tau_l:
        return "unstable"
    # past the last destabilizing crossing: count net crossings of the right half-plane
    net = sum(c.transversality for c in summary.crossings if c.tau_c <= tau)
    return "unstable" if net > 0 else "stable"


def _sweep_row(args):
    params, tau, config, history, tolerances = args
    p = params.replace(tau=tau)
    predicted = _predicted(p, tau)
    try:
        traj = simulate(p, history, config)
    except SimulationAbort as exc:
        return SweepRow(tau, UNDETERMINED, None, math.nan, predicted, str(exc))
    label = classify_trajectory(traj, model.equilibria(p), tolerances)
    t_a, t_b = tail_window(traj, tolerances.tail_fraction)
    _, x_tail = traj.window(t_a, t_b)
    est = estimate_period(traj, (t_a, t_b), tolerances)
    return SweepRow(tau, label, est.period, float(np.mean(x_tail)), predicted)


def default_horizon(params: ModelParams, near_onset: bool = False) -> float:
    """Simulation length used by sweeps when no config is given.

    1500 d near the predicted onset and 600 d elsewhere, stretched to 50 tau
    so the tail holds several delay-scaled periods, and, when zero is the
    attractor, to 20 e-folds of its slowest linear decay.
    """
    horizon = max(1500.0 if near_onset else 600.0, 50.0 * params.tau)
    if params.beta0 < params.delta:
        lam0 = spectral.real_root(
            model.Linearization(beta_star=params.beta0,
                                delta_plus_beta_star=params.delta + params.beta0,
                                ratio=math.nan), params)
        horizon = max(horizon, 20.0 / abs(lam0))
    return float(math.ceil(horizon))


def sweep_tau(params: ModelParams, tau_range, steps: int, config: Optional[SimConfig] = None,
              history: Optional[HistoryFunction] = None, near_window: float = 2.0,
              tolerances: Tolerances = Tolerances(), workers: int = 1) -> list:
    """Simulate and classify on a uniform grid of delays.

    Without an explicit ``config.t_end`` the horizon is 1500 d within
    ``near_window`` days of the spectral tau_0 and 600 d elsewhere.
    """
    if steps < 2:
        raise ValueError("steps must be >= 2")
    history = history or HistoryFunction.constant(1e8)
    taus = np.linspace(tau_range[0], tau_range[1], steps)
    tau_0 = None
    try:
        lin = model.linearize(params)
        if lin.beta_star < 0 and params.tau_min == 0:
            tau_0 = spectral.hopf_summary(lin, params).tau_0
    except (model.LinearizationError, spectral.DegenerateCase):
        pass

    jobs = []
    for tau in taus:
        if config is None:
            near = tau_0 is not None and abs(tau - tau_0) <= near_window
            cfg = SimConfig(t_end=default_horizon(params.replace(tau=float(tau)), near))
        else:
            cfg = config
        jobs.append((params, float(tau), cfg, history, tolerances))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_sweep_row, jobs))
    else:
        rows = [_sweep_row(job) for job in jobs]
    return rows


def stability_boundary(rows, stable_label: str = TO_XSTAR, unstable_label: str = SUSTAINED):
    """Delays bracketing the switch from ``stable_label`` to ``unstable_label``.

    Returns ``(tau_lo, tau_hi)`` where ``tau_hi`` is the first row of the
    final run of ``unstable_label`` rows and ``tau_lo`` the last
    ``stable_label`` row before it; ``None`` if either is missing.  Rows in
    between (undetermined) widen the bracket.
    """
    labels = [r.classification for r in rows]
    start = None
    for i in range(len(labels) - 1, -1, -1):
        if labels[i] != unstable_label:
            break
        start = i
    if start is None:
        return None
    below = [i for i in range(start) if labels[i] == stable_label]
    if not below:
        return None
    return rows[below[-1]].tau, rows[start].tau
