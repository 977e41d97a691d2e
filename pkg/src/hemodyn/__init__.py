"""Delay model of stem cell proliferation with a distributed cell-cycle delay.

Equilibria and linearization (:mod:`hemodyn.model`), characteristic roots and
Hopf crossings (:mod:`hemodyn.spectral`), fixed-step simulation
(:mod:`hemodyn.simulator`) and trajectory analysis (:mod:`hemodyn.analysis`).
"""
from .model import (Equilibria, Linearization, LinearizationError, ModelParams,
                    ParameterError, Regime, RegimeClassification, beta,
                    classify_regime, equilibria, linearize)
from .spectral import (CrossingPoint, DegenerateCase, HopfSummary, TanFixedPoints,
                       UnsupportedConfiguration, char_delta, default_tables,
                       find_crossings, hopf_summary, real_root, tan_fixed_points,
                       transversality)
from .simulator import (ConfigError, HistoryFunction, SimConfig, SimulationAbort,
                        Trajectory, integral_term, simulate)
from .analysis import (PeriodEstimate, SweepRow, Tolerances, classify_trajectory,
                       estimate_period, lyapunov_J, stability_boundary, sweep_tau)

__version__ = "0.1.0"

__all__ = [
    "ModelParams", "Equilibria", "Linearization", "Regime", "RegimeClassification",
    "ParameterError", "LinearizationError", "beta", "equilibria", "linearize",
    "classify_regime",
    "TanFixedPoints", "CrossingPoint", "HopfSummary", "UnsupportedConfiguration",
    "DegenerateCase", "tan_fixed_points", "default_tables", "char_delta", "real_root",
    "find_crossings", "hopf_summary", "transversality",
    "HistoryFunction", "SimConfig", "Trajectory", "ConfigError", "SimulationAbort",
    "simulate", "integral_term",
    "PeriodEstimate", "Tolerances", "SweepRow", "estimate_period", "classify_trajectory",
    "lyapunov_J", "sweep_tau", "stability_boundary",
]
