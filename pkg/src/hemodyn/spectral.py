"""Characteristic equation at the positive equilibrium and its imaginary-axis crossings.

Linearizing at ``x*`` gives

    Delta(lam) = lam + delta + b - (2 b / (tau - tau_min)) * int_{tau_min}^{tau} exp(-lam r) dr

with ``b = beta_star``.  For ``tau_min = 0`` a root ``lam = i w`` exists at
delay ``tau`` iff ``y = w tau`` solves

    sin(y)/y = kappa,        (cos(y) - 1)/y**2 = 1/(2 b tau),

so the crossings are read off the monotone branches of ``K(y) = sin(y)/y``
between consecutive critical points ``x_k`` (solutions of ``tan x = x``).
"""
from __future__ import annotations

import cmath
import functools
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ._roots import bisect, bracketed_root
from .model import DEGENERATE_TOL, Linearization, ModelParams

DEFAULT_K_MAX = 32
BOUNDARY_TOL = 1e-9      # kappa vs u_k / v_k equality cases
DEGENERATE_Y_TOL = 1e-9  # y vs x_k in the transversality rule
SERIES_SWITCH = 1e-6     # |lam| (tau - tau_min) below which the kernel transform uses a series

POSITIVE = 1
NEGATIVE = -1
DEGENERATE = 0


class UnsupportedConfiguration(ValueError):
    """Input outside the analytic crossing enumeration (tau_min != 0, or kappa beyond the table)."""


class DegenerateCase(ValueError):
    """delta + beta_star = 0: the crossing system has no isolated solutions."""


def K(x):
    """sin(x)/x, extended by 1 at the origin."""
    if isinstance(x, (int, float)):
        if x < 0:
            raise ValueError(f"K is defined for x >= 0, got {x}")
        if x < 1e-4:
            return 1.0 - x * x / 6.0
        return math.sin(x) / x
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise ValueError("K is defined for x >= 0")
    return np.sinc(x / np.pi)


def K_prime(x):
    if x < 1e-4:
        return -x / 3.0
    return g(x) / (x * x)


def g(x):
    """x cos(x) - sin(x); vanishes exactly at the critical points of K."""
    if isinstance(x, (int, float)):
        return x * math.cos(x) - math.sin(x)
    x = np.asarray(x, dtype=float)
    return x * np.cos(x) - np.sin(x)


def h(x):
    """2(1 - x)/(1 - 2x) on [-1, 1/2]; h(1/2) is +inf."""
    if not (-1.0 <= x <= 0.5):
        raise ValueError(f"h is defined on [-1, 1/2], got {x}")
    if x == 0.5:
        return math.inf
    return 2.0 * (1.0 - x) / (1.0 - 2.0 * x)


@dataclass(frozen=True)
class TanFixedPoints:
    """Nonnegative solutions of tan(x) = x and the extreme values of K.

    ``xs[0] = 0`` and ``xs[k]`` lies in ``(k pi, k pi + pi/2)``.  The troughs
    of K are ``us[k] = cos(xs[2k+1])`` and the peaks ``vs[k] = cos(xs[2k])``.
    """

    xs: tuple
    us: tuple
    vs: tuple

    @property
    def k_max(self) -> int:
        return len(self.xs) - 1

    @property
    def x1(self) -> float:
        return self.xs[1]

    @property
    def u0(self) -> float:
        return self.us[0]

    def interval_of(self, y: float) -> int:
        """Index j with ``xs[j] <= y < xs[j+1]``."""
        if y < 0 or y >= self.xs[-1]:
            raise ValueError(f"y = {y} outside the tabulated range [0, {self.xs[-1]})")
        return int(np.searchsorted(self.xs, y, side="right")) - 1


def tan_fixed_points(k_max: int = DEFAULT_K_MAX) -> TanFixedPoints:
    if k_max < 1:
        raise ValueError("k_max must be >= 1")
    xs = [0.0]
    for k in range(1, k_max + 1):
        lo, hi = k * math.pi, k * math.pi + 0.5 * math.pi
        xs.append(bracketed_root(g, lambda x: -x * math.sin(x), lo, hi))
    us = tuple(math.cos(xs[2 * k + 1]) for k in range((k_max - 1) // 2 + 1))
    vs = tuple(math.cos(xs[2 * k]) for k in range(k_max // 2 + 1))
    return TanFixedPoints(tuple(xs), us, vs)


@functools.lru_cache(maxsize=None)
def default_tables() -> TanFixedPoints:
    return tan_fixed_points(DEFAULT_K_MAX)


@dataclass(frozen=True)
class CrossingPoint:
    """A purely imaginary root ``i omega_c`` at delay ``tau_c``.

    ``branch = (l, j)`` follows the usual (tau_{l,1}, tau_{l,2}) naming;
    ``transversality`` is the sign of dRe(lambda)/dtau, 0 when degenerate.
    """

    tau_c: float
    omega_c: float
    y: float
    branch: tuple
    transversality: int
    simple_root: bool = True

    @property
    def period(self) -> float:
        return 2.0 * math.pi / self.omega_c


@dataclass(frozen=True)
class HopfSummary:
    case_label: str
    k: Optional[int]
    crossings: tuple
    tau_0: Optional[float] = None
    tau_l: Optional[float] = None
    omega_0: Optional[float] = None
    onset_period: Optional[float] = None
    note: str = ""


def kernel_transform(lam: complex, tau_min: float, tau: float) -> complex:
    """int_{tau_min}^{tau} exp(-lam r) dr in closed form."""
    width = tau - tau_min
    z = lam * width
    if abs(z) < SERIES_SWITCH:
        series = width * (1.0 - z / 2.0 + z * z / 6.0 - z * z * z / 24.0)
        return cmath.exp(-lam * tau_min) * series
    return (cmath.exp(-lam * tau_min) - cmath.exp(-lam * tau)) / lam


def char_delta(lin: Linearization, params: ModelParams, tau: float, lam: complex) -> complex:
    """Characteristic function Delta(lam) at delay ``tau`` (tau_min from ``params``)."""
    if not tau > params.tau_min:
        raise ValueError(f"tau must exceed tau_min = {params.tau_min}")
    b = lin.beta_star
    lam = complex(lam)
    if b == 0.0:
        return lam + params.delta
    return lam + params.delta + b - 2.0 * b / (tau - params.tau_min) * kernel_transform(
        lam, params.tau_min, tau)


def real_root(lin: Linearization, params: ModelParams, tau: Optional[float] = None) -> float:
    """The unique real root of Delta when beta_star >= 0."""
    if lin.beta_star < 0:
        raise ValueError("real_root needs beta_star >= 0; uniqueness fails otherwise")
    tau = params.tau if tau is None else tau
    if lin.beta_star == 0.0:
        return -params.delta

    def f(lam):
        return char_delta(lin, params, tau, lam).real

    lo, hi = -1.0, 1.0
    while f(lo) > 0:
        lo *= 2.0
    while f(hi) < 0:
        hi *= 2.0
    return bisect(f, lo, hi, xtol=0.0)


def _lemma_case(kappa: float, tables: TanFixedPoints):
    """Locate kappa among the troughs u_k / peaks v_k of K.

    Returns ``(case_label, k, last_index)`` where ``last_index`` is the
    largest critical-point index whose branch must be scanned.
    """
    us, vs = tables.us, tables.vs
    if kappa < 0:
        if kappa < us[0] - BOUNDARY_TOL:
            return "none", None, 0
        for j, u in enumerate(us):
            if abs(kappa - u) <= BOUNDARY_TOL:
                return "(ii)", j, 2 * j + 2
        for k in range(len(us) - 1):
            if us[k] < kappa < us[k + 1]:
                return "(i)", k, 2 * k + 2
    else:
        for j, v in enumerate(vs[1:], start=1):
            if abs(kappa - v) <= BOUNDARY_TOL:
                return "(iv)", j, 2 * j + 1
        if kappa > vs[1]:
            return "(v)", 0, 1
        for k in range(1, len(vs) - 1):
            if vs[k + 1] < kappa < vs[k]:
                return "(iii)", k, 2 * k + 1
    raise UnsupportedConfiguration(
        f"kappa = {kappa} lies beyond the tabulated extrema; need k_max >= "
        f"{required_k_max(kappa)}, have {tables.k_max}")


def required_k_max(kappa: float) -> int:
    """Table size that brackets ``kappa`` among the extrema of K.

    Uses ``|cos x_j| ~ 1/x_j`` with ``x_j ~ (j + 1/2) pi``, padded by a few
    indices.
    """
    if kappa == 0:
        raise DegenerateCase("kappa = 0 (R = 2) has infinitely many crossings")
    j = 1.0 / (math.pi * abs(kappa))
    return max(DEFAULT_K_MAX, int(math.ceil(j)) + 6)


def expected_count(case_label: str, k: Optional[int]) -> int:
    """Number of solutions of the crossing system for a given case."""
    return {"none": 0, "(i)": 2 * (k or 0) + 2, "(ii)": 2 * (k or 0) + 1,
            "(iii)": 2 * (k or 0) + 1, "(iv)": 2 * (k or 0), "(v)": 1}[case_label]


def _branch_label(kappa: float, j: int, tangential: bool) -> tuple:
    # j indexes the monotone branch [x_j, x_{j+1}]; for a tangential crossing
    # j is the critical point itself.
    if kappa < 0:
        if tangential:
            return ((j + 1) // 2, 1)
        return (j // 2 + 1, 1) if j % 2 == 0 else ((j + 1) // 2, 2)
    if tangential:
        return (j // 2, 2)
    if j == 0:
        return (1, 1)
    return ((j + 1) // 2, 2) if j % 2 == 1 else (j // 2 + 1, 1)


def transversality(crossing, tables: Optional[TanFixedPoints] = None) -> int:
    """Sign of dRe(lambda)/dtau from the position of y among the x_k.

    +1 on (x_{2k}, x_{2k+1}), -1 on (x_{2k+1}, x_{2k+2}), 0 within 1e-9 of an x_k.
    ``crossing`` may be a CrossingPoint or the bare value of y.
    """
    tables = tables or default_tables()
    y = crossing.y if isinstance(crossing, CrossingPoint) else float(crossing)
    j = tables.interval_of(y)
    if abs(y - tables.xs[j]) < DEGENERATE_Y_TOL or abs(tables.xs[j + 1] - y) < DEGENERATE_Y_TOL:
        return DEGENERATE
    return POSITIVE if j % 2 == 0 else NEGATIVE


def _check_enumerable(lin: Linearization, params: ModelParams):
    if params.tau_min != 0:
        raise UnsupportedConfiguration(
            "analytic crossing enumeration requires tau_min = 0")
    if abs(lin.ratio - 2.0) <= DEGENERATE_TOL:
        raise DegenerateCase("delta + beta_star = 0 (ratio = 2): no isolated crossings")


def _enumerate(lin: Linearization, params: ModelParams, tables: TanFixedPoints):
    _check_enumerable(lin, params)
    if lin.beta_star >= 0:
        return "none", None, []
    kappa = lin.kappa
    case, k, last = _lemma_case(kappa, tables)
    if case == "none":
        return case, k, []
    if last > tables.k_max:
        raise UnsupportedConfiguration(
            f"case {case} with k = {k} needs x_{last}; raise k_max above {tables.k_max}")

    b = lin.beta_star
    xs = tables.xs

    def make(y, j, tangential):
        tau_c = y * y / (2.0 * b * (math.cos(y) - 1.0))
        omega_c = y / tau_c
        if tangential:
            sign = DEGENERATE
            simple = abs(2.0 + lin.delta_plus_beta_star * tau_c) > 1e-9 * max(1.0, tau_c)
        else:
            sign = transversality(y, tables)
            simple = True
        return CrossingPoint(tau_c=tau_c, omega_c=omega_c, y=y,
                             branch=_branch_label(kappa, j, tangential),
                             transversality=sign, simple_root=simple)

    def f(y):
        return K(y) - kappa

    crossings = []
    for j in range(last):
        a, c = xs[j], xs[j + 1]
        fa, fc = f(a), f(c)
        if j >= 1 and abs(fa) <= BOUNDARY_TOL:
            crossings.append(make(a, j, True))
            fa = 0.0
        if abs(fc) <= BOUNDARY_TOL:
            fc = 0.0
        if fa * fc < 0:
            y = bracketed_root(f, K_prime, a, c)
            crossings.append(make(y, j, False))
    crossings.sort(key=lambda cp: cp.tau_c)
    return case, k, crossings


def find_crossings(lin: Linearization, params: ModelParams, k_max: int = DEFAULT_K_MAX,
                   tables: Optional[TanFixedPoints] = None) -> list:
    """All purely imaginary characteristic roots (omega > 0), ordered by tau_c."""
    tables = tables or (default_tables() if k_max == DEFAULT_K_MAX else tan_fixed_points(k_max))
    return _enumerate(lin, params, tables)[2]


def hopf_summary(lin: Linearization, params: ModelParams, k_max: int = DEFAULT_K_MAX,
                 tables: Optional[TanFixedPoints] = None) -> HopfSummary:
    """Case label, signed crossings, first Hopf delay tau_0 and last destabilizing tau_l."""
    tables = tables or (default_tables() if k_max == DEFAULT_K_MAX else tan_fixed_points(k_max))
    case, k, crossings = _enumerate(lin, params, tables)
    if not crossings:
        return HopfSummary(case_label="none", k=None, crossings=(),
                           note="stable for all delays")
    regular = [c for c in crossings if c.transversality != DEGENERATE]
    tau_0 = omega_0 = period = None
    if regular:
        first = min(regular, key=lambda c: c.tau_c)
        tau_0, omega_0, period = first.tau_c, first.omega_c, first.period
    positive = [c.tau_c for c in crossings if c.transversality == POSITIVE]
    tau_l = max(positive) if positive else None
    note = ""
    if any(c.transversality == DEGENERATE for c in crossings):
        note = "tangential crossing at a critical point of K (boundary case)"
    return HopfSummary(case_label=case, k=k, crossings=tuple(crossings), tau_0=tau_0,
                       tau_l=tau_l, omega_0=omega_0, onset_period=period, note=note)
