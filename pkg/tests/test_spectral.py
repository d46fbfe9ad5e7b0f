import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from krein.coeffs import SampledFunction, uniform_grid
from krein.spectral import (SpectralDensityEstimate, calibrate_normalization, estimate_Pi,
                            rho_from_sigma, secC_lemma_check, weighted_log_integral, weyl_density,
                            weyl_m, write_density_csv)

# i sqrt(4 + 0.01 i), mpmath
M_FREE = complex(-0.00249999804687957, 2.00000156249695)
# -pi ln(2 pi), mpmath
T1_FREE = -5.77386109003276


def _const(c, xmax=60.0):
    return SampledFunction.from_callable(lambda x: np.full_like(np.asarray(x, float), c),
                                         uniform_grid(xmax, 0.5))


def test_weyl_m_free():
    m = weyl_m(_const(0.0), 4 + 0.01j, 60.0, 1e-12)
    assert abs(m[0] - M_FREE) < 1e-9


def test_weyl_m_constant_potential():
    z = np.array([0.5 + 0.2j, 3.0 + 0.05j])
    m = weyl_m(_const(1.0), z, 60.0, 1e-12)
    ref = 1j * np.sqrt(z - 1.0)
    assert np.max(np.abs(m - ref)) < 1e-9


def test_weyl_m_requires_upper_half_plane():
    with pytest.raises(ValueError):
        weyl_m(_const(0.0), 1.0 - 0.1j, 10.0)


def test_weyl_density_constant_potential():
    E = np.array([1.5, 2.0, 4.0])
    w = weyl_density(_const(1.0, 200.0), E, xmax=200.0, tol=1e-11)
    assert np.max(np.abs(w.density - np.sqrt(E - 1) / np.pi)) < 1e-4
    assert w.method == "weyl" and not w.point_masses
    with pytest.raises(ValueError, match="floor"):
        weyl_density(_const(0.0), [0.01])
    with pytest.raises(ValueError, match="rungs"):
        weyl_density(_const(0.0), [1.0], eps_ladder=(0.1, 0.05))


def test_density_estimate_validation():
    with pytest.raises(ValueError, match="method"):
        SpectralDensityEstimate(np.ones(3), np.ones(3), "guess")
    with pytest.raises(ValueError, match="shapes"):
        SpectralDensityEstimate(np.ones(3), np.ones(2), "weyl")


def test_t1_free_density():
    lam = np.geomspace(1e-12, 1e12, 4001)
    v, finite = weighted_log_integral(
        SpectralDensityEstimate.closed_form(lambda t: np.sqrt(t) / (2 * np.pi), lam), "t1")
    assert v == pytest.approx(T1_FREE, abs=1e-3) and finite


def test_t1_symmetric_density_vanishes():
    # int ln(lam)/(sqrt(lam)(1+lam)) = 0 by lam -> 1/lam
    lam = np.geomspace(1e-14, 1e14, 4001)
    v, _ = weighted_log_integral(SpectralDensityEstimate.closed_form(lambda t: t, lam), "t1")
    assert abs(v) < 1e-4
    with pytest.raises(ValueError, match="lambda > 0"):
        weighted_log_integral(SpectralDensityEstimate.closed_form(np.ones_like, np.linspace(0, 1, 9)), "t1")


def test_int2_known_value():
    # ln d = lam^2/(1+lam^2) = sin^2(theta), whose integral over (-pi/2, pi/2) is pi/2
    lam = np.tan(np.linspace(0.0, math.pi / 2 - 1e-9, 2001))
    v, finite = weighted_log_integral(
        SpectralDensityEstimate.closed_form(lambda t: np.exp(t * t / (1 + t * t)), lam), "int2")
    assert v == pytest.approx(math.pi / 2, abs=1e-8) and finite


def test_log_integral_rejects_nonpositive_density():
    lam = np.linspace(0.0, 5.0, 11)
    with pytest.raises(ValueError, match="not positive"):
        weighted_log_integral(SpectralDensityEstimate.closed_form(lambda t: t - 1, lam), "int2")
    with pytest.raises(ValueError, match="kind"):
        weighted_log_integral(SpectralDensityEstimate.closed_form(np.ones_like, lam), "t3")


def test_rho_from_sigma_flat():
    alpha = np.linspace(0.0, 3.0, 301)
    sig = SpectralDensityEstimate(alpha, np.ones_like(alpha), "closed_form", point_masses=[(1.0, 0.25)])
    t = np.linspace(0.0, 4.0, 41)
    rho = rho_from_sigma(sig, t)
    jump = np.where(t >= 1.0, 0.5, 0.0)
    assert np.max(np.abs(rho.cumulative - (2 / 3 * t ** 1.5 + jump))) < 1e-10
    assert np.max(np.abs(rho.density - np.sqrt(t))) < 1e-12
    assert rho.point_masses == [(1.0, 0.5)]
    with pytest.raises(ValueError, match="covers"):
        rho_from_sigma(sig, [10.0])


def test_calibration_and_csv(tmp_path):
    p = np.linspace(1, 2, 5)
    a = SpectralDensityEstimate(p, 3 * p, "weyl")
    b = SpectralDensityEstimate(p, p, "closed_form")
    cal, c, spread = calibrate_normalization(a, b)
    assert c == pytest.approx(3.0) and spread < 1e-15
    assert np.allclose(cal.density, a.density)
    write_density_csv(tmp_path / "d.csv", cal)
    lines = (tmp_path / "d.csv").read_text().splitlines()
    assert lines[0] == "param,density,method,normalization" and len(lines) == 6


def test_estimate_Pi_free_holds():
    d = estimate_Pi(_const(0.0), [1j, 0.5 + 1j], 40.0, n_positions=401)
    assert d.verdict == "hold" and d.consistent
    assert abs(d.per_lambda[0]["Pi"] - 1) < 1e-9
    # int_0^40 |e^{i i r}|^2 dr = (1 - e^-80)/2
    assert d.per_lambda[0]["norm_P"] == pytest.approx(0.5, abs=1e-8)
    with pytest.raises(ValueError):
        estimate_Pi(_const(0.0), [1.0], 10.0)


def test_oscillation_check_exponential_oracle():
    # A = -e^-x: T = -e^-x/2, int |A T| = 1/4, int A^2 = 1/2
    A = SampledFunction.from_callable(lambda s: -np.exp(-np.asarray(s)), uniform_grid(60.0, 1.0))
    d = secC_lemma_check(A, 60.0, 1e-10)
    assert d["L1_AT"] == pytest.approx(0.25, abs=1e-7)
    assert d["L2_A"] == pytest.approx(0.5, abs=1e-7)
    assert d["sup_Pstar_last_decade_growth"] < 1e-3
    with pytest.raises(ValueError):
        secC_lemma_check(SampledFunction(np.array([0.0, 1.0]), np.array([0.0, np.inf])), 1.0)


@settings(max_examples=15, deadline=None)
@given(c=st.floats(-2.0, 2.0), E=st.floats(0.3, 5.0), eps=st.floats(0.05, 1.0))
def test_weyl_m_in_upper_half_plane(c, E, eps):
    m = weyl_m(_const(c, 40.0), E + 1j * eps, 40.0, 1e-9)
    assert m[0].imag > 0


@settings(max_examples=25, deadline=None)
@given(k=st.floats(0.1, 10.0))
def test_int2_scaling_property(k):
    # ln(k d) adds pi ln k over the whole line
    lam = np.tan(np.linspace(0.0, math.pi / 2 - 1e-6, 2001))
    base = SpectralDensityEstimate.closed_form(lambda t: 1 + t * t, lam)
    scaled = SpectralDensityEstimate.closed_form(lambda t: k * (1 + t * t), lam)
    v0, _ = weighted_log_integral(base, "int2")
    v1, _ = weighted_log_integral(scaled, "int2")
    assert v1 - v0 == pytest.approx(math.pi * math.log(k), abs=1e-5)
