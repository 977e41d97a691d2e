"""``hemodyn`` command line.

Every command accepts the model flags ``--delta --beta0 --theta --n
--tau-min --tau`` and an optional ``--config`` file of ``key = value`` lines
using the same names (``#`` starts a comment).  Flags win over the file,
the file wins over the built-in defaults.

Exit codes: 0 success, 2 invalid or missing parameters, 3 degenerate or
unsupported analysis case, 4 runtime abort or unwritable output.
"""
from __future__ import annotations

import argparse
import csv
import io
import math
import sys
from pathlib import Path

import numpy as np

from . import analysis, model, spectral
from .model import ModelParams
from .simulator import (ConfigError, HistoryFunction, SimConfig, SimulationAbort,
                        simulate)

TRAJECTORY_SCHEMA = ("t", "x", "z")
HOPF_SCHEMA = ("index", "branch", "tau_c", "omega_c", "y", "transversality")
SWEEP_SCHEMA = ("tau", "classification", "period", "final_mean", "predicted")
QUANTITY_SCHEMA = ("quantity", "value")

EXIT_OK, EXIT_PARAMS, EXIT_DEGENERATE, EXIT_RUNTIME = 0, 2, 3, 4

MODEL_DEFAULTS = {
    "delta": model.DEFAULT_DELTA,
    "beta0": model.DEFAULT_BETA0,
    "theta": model.DEFAULT_THETA,
    "n": model.DEFAULT_N,
    "tau-min": 0.0,
    "tau": 18.2,
}
COMMAND_KEYS = {
    "equilibria": (),
    "linearize": (),
    "chareq": ("lambda-re", "lambda-im"),
    "hopf": ("k-max",),
    "simulate": ("dt", "t-end", "history", "scheme", "quad-panels"),
    "sweep": ("tau-from", "tau-to", "steps", "dt", "t-end", "history"),
}
COMMAND_DEFAULTS = {
    "lambda-re": 0.0, "lambda-im": 0.0, "k-max": spectral.DEFAULT_K_MAX,
    "dt": None, "t-end": None, "history": "const:1e8", "scheme": "augmented",
    "quad-panels": 512, "tau-from": None, "tau-to": None, "steps": None,
}
FLOAT_KEYS = {"delta", "beta0", "theta", "n", "tau-min", "tau", "lambda-re", "lambda-im",
              "dt", "t-end", "tau-from", "tau-to"}
INT_KEYS = {"k-max", "quad-panels", "steps"}


class UsageError(Exception):
    """Bad or missing input; maps to exit code 2."""


class OutputError(Exception):
    """Destination not writable; maps to exit code 4."""


def format_number(value) -> str:
    """Render one CSV field.

    Floats get 9 significant digits, in scientific notation (``1.00000000e8``)
    when ``|v| >= 1e6`` or ``|v| < 1e-3``; zero is ``0``; absent values
    (None, NaN) are empty.
    """
    if value is None:
        return ""
    if isinstance(value, str):
        return value
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    v = float(value)
    if math.isnan(v):
        return ""
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    if v == 0.0:
        return "0"
    mantissa, exp = f"{v:.8e}".split("e")
    exp = int(exp)
    if exp >= 6 or exp < -3:
        return f"{mantissa}e{exp}"
    return f"{v:.{8 - exp}f}"


def write_csv(rows, schema, destination=None):
    """Write ``rows`` (sequences or mappings keyed by ``schema``) as CSV.

    ``destination`` is a path, a text stream, or None for standard output.
    """
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(schema)
    for row in rows:
        if isinstance(row, dict):
            row = [row.get(col) for col in schema]
        if len(row) != len(schema):
            raise ValueError(f"row {row!r} does not match schema {schema}")
        writer.writerow([format_number(v) for v in row])
    text = buf.getvalue()
    if destination is None:
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    if hasattr(destination, "write"):
        destination.write(text)
        return
    try:
        with open(destination, "w", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise OutputError(f"cannot write {destination}: {exc}") from exc


def read_config(path) -> dict:
    """Parse a ``key = value`` file; keys may use ``-`` or ``_``."""
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    values = {}
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        key = key.replace("_", "-")
        if not key or not value:
            raise UsageError(f"{path}:{lineno}: empty key or value")
        values[key] = value
    return values


def _convert(key, raw):
    if raw is None:
        return None
    try:
        if key in FLOAT_KEYS:
            return float(raw)
        if key in INT_KEYS:
            return int(raw)
    except ValueError as exc:
        raise UsageError(f"invalid value for {key}: {raw!r}") from exc
    return raw


def resolve(command, flags: dict, config: dict) -> dict:
    """Merge flag > config > default for every key the command uses.

    Returns ``{key: (value, source)}``.
    """
    keys = list(MODEL_DEFAULTS) + list(COMMAND_KEYS[command])
    unknown = set(config) - set(MODEL_DEFAULTS) - {k for ks in COMMAND_KEYS.values() for k in ks}
    if unknown:
        raise UsageError(f"unknown config keys: {', '.join(sorted(unknown))}")
    resolved = {}
    for key in keys:
        if flags.get(key) is not None:
            resolved[key] = (_convert(key, flags[key]), "flag")
        elif key in config:
            resolved[key] = (_convert(key, config[key]), "config")
        else:
            default = MODEL_DEFAULTS.get(key, COMMAND_DEFAULTS.get(key))
            resolved[key] = (default, "default")
    return resolved


def _params(values) -> ModelParams:
    try:
        return ModelParams(delta=values["delta"], beta0=values["beta0"], theta=values["theta"],
                           n=values["n"], tau_min=values["tau-min"], tau=values["tau"])
    except model.ParameterError as exc:
        raise UsageError(str(exc)) from exc


def parse_history(text: str) -> HistoryFunction:
    """``const:<value>`` or ``file:<path>`` (two columns: time, value)."""
    kind, _, arg = text.partition(":")
    if kind == "const":
        try:
            return HistoryFunction.constant(float(arg))
        except ValueError as exc:
            raise UsageError(f"bad constant history {text!r}") from exc
    if kind == "file":
        times, vals = [], []
        try:
            with open(arg) as fh:
                for line in fh:
                    line = line.split("#", 1)[0].strip()
                    if not line:
                        continue
                    parts = [p.strip() for p in line.replace(",", " ").split()]
                    try:
                        t, v = float(parts[0]), float(parts[1])
                    except (ValueError, IndexError):
                        if not times:
                            continue  # header
                        raise UsageError(f"bad history line {line!r}")
                    times.append(t)
                    vals.append(v)
        except OSError as exc:
            raise UsageError(f"cannot read history file {arg}: {exc}") from exc
        try:
            return HistoryFunction.table(times, vals)
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
    raise UsageError(f"history must be const:<value> or file:<path>, got {text!r}")


def _cmd_equilibria(values, out):
    params = _params(values)
    eq = model.equilibria(params)
    if eq.positive is None:
        print(f"positive equilibrium absent: {eq.reason}", file=sys.stderr)
    write_csv([("trivial", eq.trivial), ("positive", eq.positive)], QUANTITY_SCHEMA, out)


def _cmd_linearize(values, out):
    params = _params(values)
    lin = model.linearize(params)
    regime = model.classify_regime(lin, params)
    rows = [
        ("x_star", lin.x_star),
        ("beta_star", lin.beta_star),
        ("delta_plus_beta_star", lin.delta_plus_beta_star),
        ("ratio", lin.ratio),
        ("kappa", lin.kappa),
        ("h_u0", spectral.h(spectral.default_tables().u0)),
        ("regime", regime.regime.value),
    ]
    for warning in regime.warnings:
        print(f"warning: {warning}", file=sys.stderr)
    write_csv(rows, QUANTITY_SCHEMA, out)


def _cmd_chareq(values, out):
    params = _params(values)
    lin = model.linearize(params)
    lam = complex(values["lambda-re"], values["lambda-im"])
    d = spectral.char_delta(lin, params, params.tau, lam)
    write_csv([("re", d.real), ("im", d.imag), ("abs", abs(d))], QUANTITY_SCHEMA, out)


def _sign_label(sign):
    return {spectral.POSITIVE: "+1", spectral.NEGATIVE: "-1"}.get(sign, "degenerate")


def _cmd_hopf(values, out):
    params = _params(values)
    lin = model.linearize(params)
    summary = spectral.hopf_summary(lin, params, k_max=values["k-max"])
    rows = [(i, f"{c.branch[0]}-{c.branch[1]}", c.tau_c, c.omega_c, c.y,
             _sign_label(c.transversality)) for i, c in enumerate(summary.crossings, 1)]
    print(f"case {summary.case_label}"
          + (f", tau_0 = {summary.tau_0:.6g} d, onset period = {summary.onset_period:.6g} d"
             if summary.tau_0 is not None else "")
          + (f"; {summary.note}" if summary.note else ""), file=sys.stderr)
    write_csv(rows, HOPF_SCHEMA, out)


def _sim_config(values, scheme="augmented"):
    kwargs = dict(scheme=scheme, dt=values.get("dt"))
    if values.get("t-end") is not None:
        kwargs["t_end"] = values["t-end"]
    if values.get("quad-panels") is not None:
        kwargs["quad_panels"] = values["quad-panels"]
    return SimConfig(**kwargs)


def _cmd_simulate(values, out):
    params = _params(values)
    scheme = values["scheme"]
    if scheme not in ("augmented", "quadrature"):
        raise UsageError(f"--scheme must be augmented or quadrature, got {scheme!r}")
    history = parse_history(values["history"])
    config = _sim_config(values, scheme)
    try:
        config.validate(params)
        history.validate(params.tau)
    except (ConfigError, ValueError) as exc:
        raise UsageError(str(exc)) from exc
    traj = simulate(params, history, config)
    write_csv(zip(traj.times, traj.x, traj.z), TRAJECTORY_SCHEMA, out)


def _cmd_sweep(values, out):
    params = _params(values)
    if values["tau-from"] is None or values["tau-to"] is None or values["steps"] is None:
        raise UsageError("sweep needs --tau-from, --tau-to and --steps")
    if values["steps"] < 2:
        raise UsageError("--steps must be >= 2")
    if not values["tau-from"] > params.tau_min:
        raise UsageError("--tau-from must exceed --tau-min")
    config = None
    if values.get("dt") is not None or values.get("t-end") is not None:
        config = _sim_config(values)
    history = parse_history(values["history"])
    rows = analysis.sweep_tau(params, (values["tau-from"], values["tau-to"]), values["steps"],
                              config=config, history=history)
    write_csv([(r.tau, r.classification, r.period, r.final_mean, r.predicted) for r in rows],
              SWEEP_SCHEMA, out)


COMMANDS = {
    "equilibria": _cmd_equilibria,
    "linearize": _cmd_linearize,
    "chareq": _cmd_chareq,
    "hopf": _cmd_hopf,
    "simulate": _cmd_simulate,
    "sweep": _cmd_sweep,
}


FLAG_HELP = {
    "delta": "death/differentiation rate, 1/day",
    "beta0": "maximal re-entry rate, 1/day",
    "theta": "half-effect density, cells/kg",
    "n": "Hill exponent",
    "tau-min": "shortest cycle duration, days",
    "tau": "longest cycle duration, days",
    "lambda-re": "real part of lambda, 1/day",
    "lambda-im": "imaginary part of lambda, 1/day",
    "k-max": "number of tan(x) = x roots to tabulate",
    "dt": "step size, days",
    "t-end": "horizon, days",
    "history": "const:<value> or file:<path> (columns: time, value)",
    "scheme": "augmented or quadrature",
    "quad-panels": "Simpson panels for window integrals (even)",
    "tau-from": "first delay of the sweep grid, days",
    "tau-to": "last delay of the sweep grid, days",
    "steps": "number of grid points (>= 2)",
}
EPILOG = ("exit codes: 0 success, 2 invalid or missing parameters, "
          "3 degenerate or unsupported case, 4 runtime abort or unwritable output")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key = value file with defaults for any flag")
    common.add_argument("-o", "--output", help="CSV destination (default: standard output)")
    for key, default in MODEL_DEFAULTS.items():
        common.add_argument(f"--{key}", dest=key, default=None, metavar="X",
                            help=f"{FLAG_HELP[key]} (default {default:g})")

    parser = argparse.ArgumentParser(
        prog="hemodyn", epilog=EPILOG,
        description="Stem cell model with a distributed cycle delay: equilibria, "
                    "Hopf crossings, simulation and delay sweeps.")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "equilibria": "trivial and positive equilibria",
        "linearize": "linearization at the positive equilibrium",
        "chareq": "evaluate the characteristic function at lambda",
        "hopf": "purely imaginary crossings and Hopf delays (tau_min = 0)",
        "simulate": "integrate from a history function",
        "sweep": "simulate and classify over a grid of delays",
    }
    for name, keys in COMMAND_KEYS.items():
        p = sub.add_parser(name, parents=[common], help=helps[name], epilog=EPILOG)
        for key in keys:
            p.add_argument(f"--{key}", dest=key, default=None, metavar="X", help=FLAG_HELP[key])
    return parser


def parse_and_dispatch(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    flags = vars(args)
    try:
        config = read_config(args.config) if args.config else {}
        resolved = resolve(args.command, flags, config)
        values = {key: value for key, (value, _) in resolved.items()}
        COMMANDS[args.command](values, args.output)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARAMS
    except (model.LinearizationError, spectral.DegenerateCase,
            spectral.UnsupportedConfiguration) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except SimulationAbort as exc:
        print(f"error: simulation aborted: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except OutputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


def main():
    sys.exit(parse_and_dispatch())


if __name__ == "__main__":
    main()
