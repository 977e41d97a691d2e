import csv
import io
import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from hemodyn import cli
from hemodyn.cli import (HOPF_SCHEMA, SWEEP_SCHEMA, TRAJECTORY_SCHEMA, OutputError,
                         format_number, parse_and_dispatch, read_config, resolve, write_csv)


def run(argv, capsys):
    code = parse_and_dispatch(argv)
    out, err = capsys.readouterr()
    return code, out, err


def parse(text):
    return list(csv.reader(io.StringIO(text)))


# --- formatting --------------------------------------------------------------

@pytest.mark.parametrize("value, text", [
    (0, "0"), (0.0, "0"), (None, ""), (math.nan, ""), (7, "7"),
    (1e8, "1.00000000e8"), (-2.5e7, "-2.50000000e7"), (1e-4, "1.00000000e-4"),
    (0.5, "0.500000000"), (123.456, "123.456000"), (18.12697528441038, "18.1269753"),
    (999999.99999, "1.00000000e6"), (0.001, "0.00100000000"), ("to_xstar", "to_xstar"),
])
def test_format_number(value, text):
    assert format_number(value) == text


@given(st.floats(allow_nan=False, allow_infinity=False))
def test_round_trip_precision(v):
    back = float(format_number(v))
    assert back == v or abs(back - v) <= 5e-9 * abs(v)


def test_header_only():
    buf = io.StringIO()
    write_csv([], TRAJECTORY_SCHEMA, buf)
    assert buf.getvalue() == "t,x,z\n"


def test_trajectory_point():
    buf = io.StringIO()
    write_csv([(0.0, 1e8, 2.60797853e9)], TRAJECTORY_SCHEMA, buf)
    assert buf.getvalue() == "t,x,z\n0,1.00000000e8,2.60797853e9\n"


def test_mapping_rows_and_absent_fields():
    buf = io.StringIO()
    write_csv([{"tau": 12.0, "classification": "to_xstar", "final_mean": 5e8}], SWEEP_SCHEMA, buf)
    assert buf.getvalue().splitlines()[1] == "12.0000000,to_xstar,,5.00000000e8,"


def test_schema_mismatch():
    with pytest.raises(ValueError):
        write_csv([(1, 2)], TRAJECTORY_SCHEMA, io.StringIO())


def test_unwritable_destination(tmp_path):
    with pytest.raises(OutputError):
        write_csv([], HOPF_SCHEMA, tmp_path / "missing" / "out.csv")


# --- configuration -----------------------------------------------------------

def test_config_grammar(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# clinical\n delta = 0.06  # trailing\n\ntau_min=1\n")
    assert read_config(cfg) == {"delta": "0.06", "tau-min": "1"}
    bad = tmp_path / "bad.cfg"
    bad.write_text("delta 0.06\n")
    with pytest.raises(cli.UsageError):
        read_config(bad)


def test_precedence_is_traceable():
    resolved = resolve("simulate", {"beta0": "2.0", "dt": None}, {"beta0": "1.5", "delta": "0.06"})
    assert resolved["beta0"] == (2.0, "flag")
    assert resolved["delta"] == (0.06, "config")
    assert resolved["n"] == (3.0, "default")
    assert resolved["dt"] == (None, "default")
    assert {src for _, src in resolved.values()} <= {"flag", "config", "default"}


def test_config_file_used(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("beta0 = 0.03\n")
    code, out, _ = run(["equilibria", "--config", str(cfg)], capsys)
    assert code == 0 and parse(out)[2] == ["positive", ""]
    code, out, _ = run(["equilibria", "--config", str(cfg), "--beta0", "1.77"], capsys)
    assert parse(out)[2] == ["positive", "5.26867199e8"]


# --- commands and exit codes -------------------------------------------------

def test_hopf_clinical(capsys):
    code, out, err = run(["hopf", "--delta", "0.05", "--beta0", "1.77", "--theta", "1.62e8",
                          "--n", "3", "--tau-min", "0"], capsys)
    assert code == 0
    rows = parse(out)
    assert rows[0] == list(HOPF_SCHEMA)
    assert len(rows) == 2
    assert float(rows[1][2]) == pytest.approx(18.1, abs=0.1)
    assert float(rows[1][3]) == pytest.approx(0.138, abs=1e-3)
    assert rows[1][5] == "+1"
    assert "case (v)" in err


def test_equilibria_absent(capsys):
    code, out, err = run(["equilibria", "--delta", "0.05", "--beta0", "0.03", "--theta", "1.62e8",
                          "--n", "3", "--tau-min", "0", "--tau", "10"], capsys)
    assert code == 0
    assert parse(out) == [["quantity", "value"], ["trivial", "0"], ["positive", ""]]
    assert "absent" in err


def test_linearize_and_chareq(capsys):
    code, out, _ = run(["linearize"], capsys)
    assert code == 0 and dict(parse(out)[1:])["regime"] == "DelayDependent"
    code, out, _ = run(["chareq", "--tau", "18.12697528441038",
                        "--lambda-im", "0.13797576280676307"], capsys)
    assert code == 0 and float(dict(parse(out)[1:])["abs"]) < 1e-9


@pytest.mark.parametrize("argv", [
    ["simulate", "--tau", "2", "--tau-min", "2"],
    ["simulate", "--tau", "1", "--tau-min", "2"],
    ["equilibria", "--delta", "abc"],
    ["simulate", "--history", "ramp:3"],
    ["simulate", "--history", "const:-1", "--t-end", "1"],
    ["simulate", "--dt", "10"],
    ["simulate", "--scheme", "euler"],
    ["sweep", "--tau-from", "10"],
    ["hopf", "--unknown"],
    [],
])
def test_invalid_parameters_exit_2(argv, capsys):
    assert run(argv, capsys)[0] == 2


def test_unknown_config_key_exit_2(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("gamma = 1\n")
    assert run(["equilibria", "--config", str(cfg)], capsys)[0] == 2


@pytest.mark.parametrize("argv", [
    ["hopf", "--tau-min", "1"],
    ["hopf", "--beta0", "0.1", "--n", "4"],
    ["linearize", "--beta0", "0.03"],
])
def test_degenerate_exit_3(argv, capsys):
    code, _, err = run(argv, capsys)
    assert code == 3 and err.startswith("error:")


def test_runtime_abort_exit_4(capsys):
    code, _, err = run(["simulate", "--delta", "100", "--beta0", "150", "--t-end", "1"], capsys)
    assert code == 4 and "step" in err


def test_unwritable_output_exit_4(tmp_path, capsys):
    dest = tmp_path / "nope" / "x.csv"
    assert run(["hopf", "-o", str(dest)], capsys)[0] == 4


def test_history_file(tmp_path, capsys):
    hist = tmp_path / "phi.csv"
    hist.write_text("t,value\n-20,1e8\n0,2e8\n")
    code, out, _ = run(["simulate", "--history", f"file:{hist}", "--t-end", "0.1"], capsys)
    assert code == 0
    assert parse(out)[1][:2] == ["0", "2.00000000e8"]


def test_simulation_file_round_trip(tmp_path, capsys):
    dest = tmp_path / "fig.csv"
    code, _, _ = run(["simulate", "--tau", "18.2", "--dt", "0.05", "--t-end", "1000",
                      "-o", str(dest)], capsys)
    assert code == 0
    rows = parse(dest.read_text())
    assert rows[0] == ["t", "x", "z"]
    assert len(rows) == 1 + 20001
    assert float(rows[-1][0]) == 1000.0
    assert all(len(r) == 3 and all(math.isfinite(float(v)) for v in r) for r in rows[1:])


def test_output_is_deterministic(tmp_path, capsys):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for dest in (a, b):
        assert run(["simulate", "--t-end", "50", "--scheme", "quadrature", "-o", str(dest)],
                   capsys)[0] == 0
    assert a.read_bytes() == b.read_bytes()


def test_sweep_command(capsys):
    code, out, _ = run(["sweep", "--tau-from", "10", "--tau-to", "12", "--steps", "2",
                        "--t-end", "200"], capsys)
    assert code == 0
    rows = parse(out)
    assert rows[0] == list(SWEEP_SCHEMA) and len(rows) == 3
    assert [r[4] for r in rows[1:]] == ["stable", "stable"]
