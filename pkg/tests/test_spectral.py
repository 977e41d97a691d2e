import cmath
import math

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st
from scipy.optimize import brentq, minimize_scalar

from hemodyn import ModelParams, linearize
from hemodyn import spectral
from hemodyn.spectral import (DEGENERATE, NEGATIVE, POSITIVE, DegenerateCase, K,
                              UnsupportedConfiguration, char_delta, default_tables,
                              expected_count, find_crossings, g, h, hopf_summary,
                              real_root, tan_fixed_points, transversality)

from conftest import params_for_ratio

TABLES = default_tables()
X1 = 4.493409457909064
U0 = -0.21723362821122164
# Frozen crossing for the clinical parameters.
TAU_C = 18.12697528441038
OMEGA_C = 0.13797576280676307
Y_C = 2.5010832422458633


def g_root(k):
    return brentq(g, k * math.pi, k * math.pi + math.pi / 2, xtol=1e-15, rtol=1e-15)


# --- K, g, h -------------------------------------------------------------------

def test_K_values():
    assert K(0.0) == 1.0
    assert abs(K(math.pi)) < 1e-16
    assert K(X1) == pytest.approx(U0, abs=1e-15)
    np.testing.assert_allclose(K(np.array([0.0, math.pi / 2])), [1.0, 2 / math.pi])


def test_K_rejects_negative():
    with pytest.raises(ValueError):
        K(-0.1)


def test_u0_golden_section_oracle():
    res = minimize_scalar(K, bracket=(3.5, 4.5, 5.5), method="golden", tol=1e-10)
    assert res.fun == pytest.approx(TABLES.u0, abs=1e-12)
    assert TABLES.u0 == pytest.approx(-0.2172336, abs=1e-7)


def test_g_values():
    assert g(0.0) == 0.0
    assert g(math.pi) == pytest.approx(-math.pi, rel=1e-15)
    assert abs(g(TABLES.x1)) < 1e-10


def test_h_values():
    assert h(0.0) == 2.0
    assert h(TABLES.u0) == pytest.approx(h(math.cos(g_root(1))), abs=1e-13)
    assert h(TABLES.u0) == pytest.approx(1.6971229182979033, abs=1e-14)
    assert 1.6970 <= h(TABLES.u0) <= 1.6972
    assert h(TABLES.vs[1]) == pytest.approx(2.3455, abs=1e-4)
    assert h(0.5) == math.inf
    for bad in (-1.01, 0.51):
        with pytest.raises(ValueError):
            h(bad)


def test_h_strictly_increasing():
    grid = np.linspace(-1.0, 0.5, 20001)[:-1]
    vals = np.array([h(x) for x in grid])
    assert np.all(np.diff(vals) > 0)


# --- fixed-point tables ------------------------------------------------------

@pytest.mark.parametrize("k, frozen", [(1, 4.493409457909064), (2, 7.725251836937707),
                                       (3, 10.904121659428899)])
def test_fixed_points_against_brentq(k, frozen):
    tables = tan_fixed_points(k)
    assert tables.xs[k] == pytest.approx(g_root(k), abs=1e-12)
    assert tables.xs[k] == pytest.approx(frozen, abs=1e-13)


def test_table_entries():
    assert TABLES.vs[1] == pytest.approx(0.128375, abs=1e-6)
    assert TABLES.us[1] == pytest.approx(-0.091325, abs=1e-6)


def test_table_invariants():
    xs, us, vs = TABLES.xs, TABLES.us, TABLES.vs
    assert xs[0] == 0.0
    for k, x in enumerate(xs[1:], start=1):
        assert k * math.pi < x < k * math.pi + math.pi / 2
        assert abs(x * math.cos(x) - math.sin(x)) < 1e-12
        assert K(x) == pytest.approx(math.cos(x), abs=1e-10)
    assert all(-1 < u < 0 for u in us) and all(np.diff(us) > 0)
    assert vs[0] == 1.0
    assert all(0 < v < 0.5 for v in vs[1:]) and all(np.diff(vs) < 0)


def test_u0_is_global_minimum_of_K():
    grid = np.linspace(0.0, 200.0, 1_000_001)
    assert K(grid).min() == pytest.approx(math.cos(TABLES.x1), abs=1e-6)


def test_tables_need_one_root():
    with pytest.raises(ValueError):
        tan_fixed_points(0)


# --- characteristic function -------------------------------------------------

def test_char_delta_at_zero(clinical, clinical_lin):
    d0 = char_delta(clinical_lin, clinical, 10.0, 0.0)
    assert d0.real == pytest.approx(clinical.delta - clinical_lin.beta_star, rel=1e-14)
    assert d0.real == pytest.approx(3 * 0.05 * (1 - 0.05 / 1.77), rel=1e-13)
    assert d0.real == pytest.approx(0.145763, abs=1e-6)


def test_char_delta_vanishes_at_crossing(clinical, clinical_lin):
    assert abs(char_delta(clinical_lin, clinical, TAU_C, 1j * OMEGA_C)) < 1e-9


def test_char_delta_linear_case():
    p = ModelParams(delta=0.05, beta0=0.10, n=2)
    lin = linearize(p)
    assert char_delta(lin, p, 7.0, -0.05) == 0


def test_char_delta_series_branch_is_continuous(clinical, clinical_lin):
    lam_small = 1e-8 / clinical.window
    series = char_delta(clinical_lin, clinical, clinical.tau, lam_small)
    direct = lam_small + clinical.delta + clinical_lin.beta_star - 2 * clinical_lin.beta_star * (
        (1 - cmath.exp(-lam_small * clinical.tau)) / lam_small) / clinical.tau
    assert abs(series - direct) < 1e-8


def test_real_root_examples():
    p = ModelParams(delta=0.05, beta0=0.10, n=1, tau=10.0)
    lin = linearize(p)
    lam0 = real_root(lin, p)
    assert lam0 < 0
    assert abs(char_delta(lin, p, 10.0, lam0)) < 1e-12
    lo, hi = char_delta(lin, p, 10.0, lam0 - 1).real, char_delta(lin, p, 10.0, lam0 + 1).real
    assert lo * hi < 0
    zero = ModelParams(delta=0.05, beta0=0.10, n=2)
    assert real_root(linearize(zero), zero) == -0.05


def test_real_root_refuses_negative_beta_star(clinical, clinical_lin):
    with pytest.raises(ValueError):
        real_root(clinical_lin, clinical)


@given(st.floats(0.01, 0.5), st.floats(0.01, 0.999), st.floats(0.5, 60.0), st.floats(0.0, 5.0))
def test_real_root_nulls_delta(delta, R, tau, tau_min):
    p = params_for_ratio(R, n=3.0, delta=delta, tau=tau + tau_min, tau_min=tau_min)
    lin = linearize(p)
    lam0 = real_root(lin, p)
    assert lam0 < 0
    assert abs(char_delta(lin, p, p.tau, lam0)) < 1e-12


# --- crossings ---------------------------------------------------------------

def test_clinical_crossing(clinical, clinical_lin):
    crossings = find_crossings(clinical_lin, clinical)
    assert len(crossings) == 1
    c = crossings[0]
    assert 0 < c.y < math.pi
    assert c.tau_c == pytest.approx(TAU_C, rel=1e-12)
    assert c.omega_c == pytest.approx(OMEGA_C, rel=1e-12)
    assert c.y == pytest.approx(Y_C, rel=1e-12)
    assert c.transversality == POSITIVE
    assert c.period == pytest.approx(45.53832629270745, rel=1e-12)


def test_clinical_summary(clinical, clinical_lin):
    s = hopf_summary(clinical_lin, clinical)
    assert s.case_label == "(v)"
    assert s.tau_0 == s.tau_l == pytest.approx(TAU_C, rel=1e-12)
    assert s.onset_period == pytest.approx(45.5, abs=0.1)


def test_ratio_1_8_two_crossings():
    assert h(TABLES.us[0]) < 1.8 < h(TABLES.us[1])
    p = params_for_ratio(1.8, n=3.0)
    lin = linearize(p)
    s = hopf_summary(lin, p)
    assert s.case_label == "(i)" and s.k == 0
    c1, c2 = s.crossings
    assert math.pi < c1.y < TABLES.x1 < c2.y < 2 * math.pi
    assert c1.tau_c < c2.tau_c
    assert (c1.transversality, c2.transversality) == (POSITIVE, NEGATIVE)
    assert s.tau_0 == s.tau_l == c1.tau_c
    for c in s.crossings:
        assert abs(char_delta(lin, p, c.tau_c, 1j * c.omega_c)) < 1e-9


def test_ratio_1_5_no_crossings():
    p = params_for_ratio(1.5, n=3.0)
    lin = linearize(p)
    assert find_crossings(lin, p) == []
    s = hopf_summary(lin, p)
    assert s.case_label == "none" and s.note == "stable for all delays"
    # kappa = -0.5 lies below u0, so K never reaches it
    assert lin.kappa == pytest.approx(-0.5)
    vals = K(np.linspace(0.0, 100.0, 200001)) - lin.kappa
    assert np.all(vals > 0)


def test_stable_branch_has_no_crossings():
    p = ModelParams(delta=0.05, beta0=0.10, n=1)
    assert find_crossings(linearize(p), p) == []


def test_enumeration_refuses_positive_tau_min(clinical):
    p = clinical.replace(tau_min=1.0)
    with pytest.raises(UnsupportedConfiguration):
        find_crossings(linearize(p), p)


def test_enumeration_refuses_ratio_two():
    p = ModelParams(delta=0.05, beta0=0.1, n=4)
    with pytest.raises(DegenerateCase):
        hopf_summary(linearize(p), p)


def test_table_too_small_is_reported():
    p = params_for_ratio(1.99)
    lin = linearize(p)
    with pytest.raises(UnsupportedConfiguration, match="k_max"):
        find_crossings(lin, p)
    km = spectral.required_k_max(lin.kappa)
    s = hopf_summary(lin, p, k_max=km)
    assert len(s.crossings) == expected_count(s.case_label, s.k)


def representative(case, k):
    """Ratio R placing kappa in the requested case of the crossing count lemma."""
    us, vs = TABLES.us, TABLES.vs
    kappa = {
        "(i)": lambda: 0.5 * (us[k] + us[k + 1]),
        "(ii)": lambda: us[k],
        "(iii)": lambda: 0.5 * (vs[k] + vs[k + 1]),
        "(iv)": lambda: vs[k],
        "(v)": lambda: 0.5 * (vs[1] + 0.5),
    }[case]()
    return params_for_ratio(h(kappa))


@pytest.mark.parametrize("case, k", [("(i)", 0), ("(i)", 3), ("(ii)", 1), ("(ii)", 2),
                                     ("(iii)", 1), ("(iii)", 4), ("(iv)", 1), ("(iv)", 2),
                                     ("(v)", 0)])
def test_case_counts(case, k):
    p = representative(case, k)
    lin = linearize(p)
    s = hopf_summary(lin, p)
    assert s.case_label == case
    assert s.k == k
    assert len(s.crossings) == expected_count(case, k)
    taus = [c.tau_c for c in s.crossings]
    assert taus == sorted(taus) and taus[0] > 0
    degenerate = [c for c in s.crossings if c.transversality == DEGENERATE]
    assert len(degenerate) == (1 if case in ("(ii)", "(iv)") else 0)
    for c in s.crossings:
        assert abs(char_delta(lin, p, c.tau_c, 1j * c.omega_c)) < 1e-9


@pytest.mark.parametrize("y, sign", [(Y_C, POSITIVE), (5.5, NEGATIVE), (X1, DEGENERATE),
                                     (9.0, POSITIVE), (0.0, DEGENERATE)])
def test_transversality_rule(y, sign):
    assert transversality(y) == sign


def test_expected_counts():
    assert [expected_count(c, 2) for c in ("(i)", "(ii)", "(iii)", "(iv)", "(v)", "none")] == \
        [6, 5, 5, 4, 1, 0]


# --- randomized properties ---------------------------------------------------

threshold = h(TABLES.u0)


@st.composite
def delay_dependent(draw):
    delta = draw(st.floats(0.005, 0.5))
    R = draw(st.floats(threshold + 1e-6, 12.0))
    assume(abs(R - 2) > 0.02)
    n = R + draw(st.floats(0.05, 10.0))
    return ModelParams(delta=delta, beta0=n * delta / (n - R), n=n)


@given(delay_dependent())
def test_random_crossings_null_delta_and_match_counts(p):
    lin = linearize(p)
    s = hopf_summary(lin, p)
    assert len(s.crossings) == expected_count(s.case_label, s.k)
    taus = [c.tau_c for c in s.crossings]
    assert all(a < b for a, b in zip(taus, taus[1:]))
    for c in s.crossings:
        assert c.tau_c > 0 and c.omega_c > 0
        assert c.y == pytest.approx(c.omega_c * c.tau_c, rel=1e-12)
        assert abs(K(c.y) - lin.kappa) < 1e-10
        assert abs((math.cos(c.y) - 1) / c.y ** 2 - 1 / (2 * lin.beta_star * c.tau_c)) < 1e-10
        assert abs(char_delta(lin, p, c.tau_c, 1j * c.omega_c)) < 1e-9
        assert c.transversality == int(np.sign(-g(c.y)))
    if s.crossings:
        assert s.tau_0 == min(c.tau_c for c in s.crossings if c.transversality != DEGENERATE)
        assert s.tau_l == max(c.tau_c for c in s.crossings if c.transversality == POSITIVE)


@given(delay_dependent())
def test_branch_scan_finds_nothing_extra(p):
    lin = linearize(p)
    ys = np.array([c.y for c in find_crossings(lin, p)])
    grid = np.arange(1e-3, TABLES.xs[-1], 1e-3)
    f = K(grid) - lin.kappa
    hits = grid[:-1][np.sign(f[:-1]) != np.sign(f[1:])]
    for y in hits:
        assert np.min(np.abs(ys - y)) < 2e-3
