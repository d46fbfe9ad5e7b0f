import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from krein.asympt import (ck_series_Q, embedded_scan, fit_sin, growth_exponent, subordinacy_sandwich,
                          write_fit_csv, write_scan_csv)
from krein.coeffs import SampledFunction, TailModel, make_family, uniform_grid

# 1 + 0.1 int_0^1 e^{-is} ds = 1 + 0.1 (sin 1 + i (cos 1 - 1)), mpmath
S1_STEP = complex(1.08414709848079, -0.04596976941318603)


def test_fit_sin_exact():
    x = np.linspace(0, 100, 20001)
    f = fit_sin(x, 2.5 * np.sin(1.3 * x + 0.7), 1.3)
    assert f.C == pytest.approx(2.5, abs=1e-10)
    assert f.phi == pytest.approx(0.7, abs=1e-10)


def test_fit_sin_extrapolates_one_over_x():
    x = np.linspace(0, 400, 40001)
    u = (1 + 3 / (x + 1)) * np.sin(x + 0.2)
    f = fit_sin(x, u, 1.0)
    assert f.C == pytest.approx(1.0, abs=1e-3)
    assert f.decaying
    assert len(f.panel_C) == 8


def test_fit_sin_window_checks():
    x = np.linspace(0, 10, 1001)
    with pytest.raises(ValueError, match="4 periods"):
        fit_sin(x, np.sin(x), 1.0)
    with pytest.raises(ValueError, match="inside"):
        fit_sin(x, np.sin(x), 1.0, window=(5, 20, 4))
    with pytest.raises(ValueError):
        fit_sin(x, np.sin(x), -1.0)


def test_growth_exponent():
    x = np.linspace(1, 1000, 5000)
    assert growth_exponent(x, 3 * x ** 1.7) == pytest.approx(1.7, abs=1e-12)
    with pytest.raises(ValueError):
        growth_exponent(np.linspace(50, 100, 10), x[:10])
    with pytest.raises(ValueError, match="nonpositive"):
        growth_exponent(x, -x)


def test_subordinacy_free():
    lam = 1.2
    x = np.linspace(0, 400, 40001)
    u, du = np.sin(lam * x) / lam, np.cos(lam * x)
    v, dv = np.cos(lam * x), -lam * np.sin(lam * x)
    d = subordinacy_sandwich(x, u, du, v, dv, 0.0)
    assert d.verdict == "pass"
    assert d.exponent_u == pytest.approx(1.0, abs=0.02)
    assert d.wronskian == pytest.approx(-1.0)
    with pytest.raises(ValueError, match="dependent"):
        subordinacy_sandwich(x, u, du, 2 * u, 2 * du, 0.0)


def test_subordinacy_short_range_undecided():
    x = np.linspace(1, 5, 401)
    d = subordinacy_sandwich(x, np.sin(x), np.cos(x), np.cos(x), -np.sin(x), 0.0)
    assert d.verdict == "undecided"


def test_subordinacy_detects_power_mismatch():
    x = np.linspace(0, 1000, 100001)
    u, v = (x + 1) ** -0.8 * np.sin(x), (x + 1) ** 0.8 * np.cos(x)
    d = subordinacy_sandwich(x, u, np.gradient(u, x), v, np.gradient(v, x), 0.1)
    assert d.verdict == "fail"
    assert d.exponent_u < 0.5 < 2.0 < d.exponent_v


def test_embedded_scan_free_has_no_dip():
    z = SampledFunction.zeros(uniform_grid(100.0, 1.0))
    s = embedded_scan(z, np.linspace(0.1, 4, 20), 100.0, 1e-10)
    assert not s.minima
    assert np.all(s.tail_ratio > 0.5)
    with pytest.raises(ValueError):
        embedded_scan(z, [0.0, 1.0], 10.0)


def test_embedded_scan_vnw_dip(tmp_path):
    b = make_family("vnw", grid=uniform_grid(220.0, 0.05))
    E = [0.8, 0.9, 0.96, 1.0, 1.04, 1.1, 1.2]
    s = embedded_scan(b.q, E, 200.0, 1e-10)
    assert [m[0] for m in s.minima] == [1.0]
    assert s.minima[0][2] < 1e-6
    write_scan_csv(tmp_path / "s.csv", s)
    assert (tmp_path / "s.csv").read_text().splitlines()[0] == "E,alpha_star,tail_ratio"


def test_series_order_one_closed_form():
    A = SampledFunction(np.linspace(0, 1, 101), np.full(101, 0.1))
    e = ck_series_Q(A, 1.0, 1, np.linspace(0, 1, 101))
    assert abs(e.partial_sum[0] - S1_STEP) < 1e-11
    assert e.order == 1 and len(e.terms) == 1


def test_series_converges_to_ode():
    A = SampledFunction.from_callable(lambda s: 0.05 * (np.asarray(s) + 1) ** -1.5,
                                      uniform_grid(500.0, 0.05), tail=TailModel(0.05, 1.5))
    x = uniform_grid(500.0, 0.05)
    gaps = [ck_series_Q(A, 0.9, k, x, compare=True).gap for k in range(4)]
    assert all(b < a for a, b in zip(gaps, gaps[1:]))
    assert gaps[3] < 0.1 ** 4 / 24
    e = ck_series_Q(A, 0.9, 3, x)
    assert abs(e.Q[0] - 1) < 1e-12


def test_series_argument_checks():
    A = SampledFunction(np.linspace(0, 1, 11), np.ones(11), tail=TailModel(1.0, 0.5))
    with pytest.raises(ValueError, match="order"):
        ck_series_Q(A, 1.0, 6, np.linspace(0, 1, 11))
    with pytest.raises(ValueError, match="non-convergent"):
        ck_series_Q(A, 0.0, 1, np.linspace(0, 1, 11))


def test_fit_csv(tmp_path):
    x = np.linspace(0, 100, 10001)
    write_fit_csv(tmp_path / "f.csv", [fit_sin(x, np.sin(x), 1.0)])
    lines = (tmp_path / "f.csv").read_text().splitlines()
    assert lines[0] == "lambda,C,phi,last_residual" and len(lines) == 2


@settings(max_examples=25, deadline=None)
@given(C=st.floats(0.1, 10.0), phi=st.floats(0.0, 2 * math.pi - 1e-6), lam=st.floats(0.7, 3.0))
def test_fit_sin_recovers_parameters(C, phi, lam):
    x = np.linspace(0, 80, 16001)
    f = fit_sin(x, C * np.sin(lam * x + phi), lam)
    assert f.C == pytest.approx(C, rel=1e-8)
    assert abs(np.angle(np.exp(1j * (f.phi - phi)))) < 1e-8


@settings(max_examples=10, deadline=None)
@given(lam=st.floats(0.3, 2.0))
def test_series_Q_modulus_property(lam):
    # |Q| is constant in x only without coefficient; with small A it stays near 1
    A = SampledFunction.from_callable(lambda s: 0.02 * np.exp(-np.asarray(s)), uniform_grid(40.0, 0.05))
    e = ck_series_Q(A, lam, 2, uniform_grid(40.0, 0.05))
    assert np.max(np.abs(np.abs(e.Q) - 1)) < 0.05
