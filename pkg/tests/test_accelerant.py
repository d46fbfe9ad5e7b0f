import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from krein.accelerant import (AccelerantKernel, ResolventError, positivity_min_eig, pp_from_resolvent,
                              read_kernel_csv, solve_resolvent, trapezoid_nodes)
from krein.coeffs import SampledFunction
from krein.systems import integrate_krein


def test_trapezoid_weights_sum():
    t, w = trapezoid_nodes(2.0, 11)
    assert t[-1] == 2.0 and w.sum() == pytest.approx(2.0)


def test_zero_kernel():
    H = AccelerantKernel.constant(0.0, 1.0)
    assert positivity_min_eig(H, 1.0, 32) == pytest.approx(1.0)
    s = solve_resolvent(H, 1.0, 32)
    assert np.all(s.Gamma == 0) and np.all(s.A_trace == 0)


def test_positivity_of_constant_kernels():
    # I + c * (rank one of norm r): smallest eigenvalue min(1, 1 + c r)
    assert positivity_min_eig(AccelerantKernel.constant(-2.0, 1.0), 1.0, 256) == pytest.approx(-1.0, abs=1e-12)
    assert positivity_min_eig(AccelerantKernel.constant(0.5, 1.0), 1.0, 64) == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(ValueError):
        positivity_min_eig(AccelerantKernel.constant(0.5, 1.0), 1.0, 4)


def test_negative_kernel_is_rejected():
    with pytest.raises(ResolventError, match="not positive"):
        solve_resolvent(AccelerantKernel.constant(-2.0, 1.0), 1.0, 64)


def test_constant_kernel_trace():
    s = solve_resolvent(AccelerantKernel.constant(1.0, 1.0), 1.0, 65, np.linspace(0, 1, 9))
    assert np.max(np.abs(s.A_trace - 1 / (1 + s.rho))) < 1e-13
    assert s.A_trace[-1] == pytest.approx(0.5, abs=1e-14)
    assert s.A().grid[0] == 0.0


def test_rank_one_complex_kernel():
    # H(t) = c exp(i w t) has resolvent c exp(i w (t - s))/(1 + c r)
    c, w, r = 0.7, 1.3, 2.0
    H = AccelerantKernel.from_callable(lambda t: c * np.exp(1j * w * np.asarray(t)), r, 4001)
    s = solve_resolvent(H, r, 129, [0.5, 2.0])
    assert np.max(np.abs(s.A_trace - c * np.exp(-1j * w * s.rho) / (1 + c * s.rho))) < 1e-9
    assert np.max(np.abs(s.Gamma - s.Gamma.conj().T)) < 1e-13


def test_constant_kernel_rejects_complex():
    with pytest.raises(ValueError):
        AccelerantKernel.constant(1j, 1.0)


def test_rho_grid_validation():
    with pytest.raises(ValueError):
        solve_resolvent(AccelerantKernel.constant(1.0, 1.0), 1.0, 16, [1.5])


def test_smooth_kernel_second_order():
    H = AccelerantKernel.from_callable(lambda t: np.exp(-np.asarray(t) ** 2), 2.0)
    ref = solve_resolvent(H, 2.0, 1025, [2.0]).A_trace[0]
    errs = [abs(solve_resolvent(H, 2.0, n + 1, [2.0]).A_trace[0] - ref) for n in (64, 128, 256)]
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(orders >= 1.8)


def test_two_routes_agree():
    sol = solve_resolvent(AccelerantKernel.constant(1.0, 1.0), 1.0, 256)
    A = SampledFunction.from_callable(lambda s: 1 / (1 + np.asarray(s)), np.linspace(0, 1, 65))
    for lam in (0.0, 0.5, 2.0):
        P, S = pp_from_resolvent(sol, lam)
        kt = integrate_krein(A, lam, 1.0, 1e-12, positions=[0.0, 1.0])
        assert abs(P - kt.P[-1]) < 1e-4 and abs(S - kt.Pstar[-1]) < 1e-4
        assert abs(abs(P) - abs(S)) < 1e-4


def test_kernel_csv(tmp_path):
    p = tmp_path / "k.csv"
    t = np.linspace(0, 1, 11)
    p.write_text("t,re,im\n" + "".join(f"{a},{np.exp(-a)},0\n" for a in t))
    K = read_kernel_csv(p)
    assert K.r == 1.0 and not K.H.is_complex
    assert K(-0.5) == pytest.approx(np.exp(-0.5), abs=1e-4)
    p.write_text("t,re,im\n0,1,0.5\n1,1,0\n")
    with pytest.raises(ValueError, match="real"):
        read_kernel_csv(p)
    p.write_text("t,value\n0,1\n")
    with pytest.raises(ValueError, match="header"):
        read_kernel_csv(p)


@settings(max_examples=20, deadline=None)
@given(c=st.floats(0.0, 3.0), w=st.floats(-2.0, 2.0))
def test_resolvent_hermitian_symmetry(c, w):
    H = AccelerantKernel.from_callable(lambda t: c * np.exp(-np.asarray(t)) * np.exp(1j * w * np.asarray(t)),
                                       1.0, 257)
    s = solve_resolvent(H, 1.0, 33)
    assert np.max(np.abs(s.Gamma - s.Gamma.conj().T)) < 1e-12


@settings(max_examples=20, deadline=None)
@given(c=st.floats(0.0, 5.0), r=st.floats(0.2, 3.0))
def test_positive_constant_kernel_trace_property(c, r):
    s = solve_resolvent(AccelerantKernel.constant(c, r), r, 33, [r])
    assert s.A_trace[-1] == pytest.approx(c / (1 + c * s.rho[-1]), abs=1e-12)
