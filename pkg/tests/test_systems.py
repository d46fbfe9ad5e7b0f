import numpy as np
import pytest

from krein.coeffs import SampledFunction, make_family, uniform_grid
from krein.riccati import kappa_of
from krein.systems import (IntegrationError, default_positions, integrate_dirac, integrate_krein,
                           integrate_Q, sl_solutions, sl_sweep, transfer_matrix,
                           write_trajectory_csv)

KAPPA = kappa_of(0.2)


@pytest.fixture(scope="module")
def gamma02():
    return make_family("power_tail_W", {"gamma": 0.2, "sign": -1}, grid=uniform_grid(400.0, 0.1))


def _zero():
    return SampledFunction.zeros(uniform_grid(10.0, 1.0))


def test_free_krein():
    x = default_positions(50.0)
    kt = integrate_krein(_zero(), 2.0, 50.0, 1e-12, positions=x)
    assert np.max(np.abs(kt.P - np.exp(2j * x))) < 1e-10
    assert np.max(np.abs(kt.Pstar - 1)) < 1e-12
    assert np.max(np.abs(kt.Q - 1)) < 1e-10
    assert kt.P[0] == 1 and kt.Pstar[0] == 1


def test_constant_A_at_zero_lambda():
    A = SampledFunction.from_callable(lambda x: np.full_like(np.asarray(x, float), 0.3),
                                      uniform_grid(5.0, 0.5))
    kt = integrate_krein(A, 0.0, 2.0, 1e-12, positions=np.linspace(0, 2, 21))
    # e^{-0.6} (mpmath)
    assert kt.P[-1] == pytest.approx(0.548811636094026444814525208708, abs=1e-10)
    assert np.allclose(kt.P, kt.Pstar, atol=1e-12)


def test_conservation_gamma02(gamma02):
    kt = integrate_krein(gamma02.A, 1.0, 200.0, 1e-11)
    assert np.max(kt.conserved_residuals) < 1e-8
    assert np.max(np.abs(kt.Q * np.exp(1j * kt.positions) - kt.P)) < 1e-12


def test_upper_half_plane_monotone(gamma02):
    kt = integrate_krein(gamma02.A, 1.0 + 0.5j, 50.0, 1e-10)
    assert np.all(np.abs(kt.Pstar) >= np.abs(kt.P) - 1e-10)


def test_norm_accumulator():
    kt = integrate_krein(_zero(), 1j, 20.0, 1e-11, positions=np.linspace(0, 20, 201), with_norm=True)
    assert kt.norm_P[-1] == pytest.approx(0.5 * (1 - np.exp(-40.0)), abs=1e-9)


def test_free_dirac():
    x = default_positions(30.0)
    d = integrate_dirac(_zero(), None, 3.0, 30.0, 1e-12, positions=x)
    assert np.max(np.abs(d.Phi - np.cos(3 * x))) < 1e-10
    assert np.max(np.abs(d.Psi - np.sin(3 * x))) < 1e-10


def test_dirac_zero_lambda(gamma02):
    x = np.linspace(0, 20, 201)
    d = integrate_dirac(gamma02.a, None, 0.0, 20.0, 1e-11, positions=x)
    assert np.all(d.Psi == 0)
    assert np.max(np.abs(d.Phi - (x + 1) ** -KAPPA)) < 1e-9


def test_reduction_identity(gamma02):
    x = np.linspace(0, 100, 1001)
    kt = integrate_krein(gamma02.A, 1.3, 100.0, 1e-11, positions=x)
    d = integrate_dirac(gamma02.a, None, 1.3, 50.0, 1e-11, positions=x / 2)
    red = np.exp(0.65j * x) * (d.Phi + 1j * d.Psi)
    assert np.max(np.abs(kt.P - red)) < 1e-7


def test_Q_matches_conj_Pstar(gamma02):
    Q = integrate_Q(gamma02.A, 1.0, 100.0, 1e-11, check_against_krein=True)
    assert Q.meta["krein_gap"] < 1e-8
    with pytest.raises(ValueError):
        integrate_Q(gamma02.A, 1.0 + 1j, 10.0, check_against_krein=True)


def test_Q_bound_gamma02(gamma02):
    Q = integrate_Q(gamma02.A, 1.0, 400.0, 1e-10)
    x = Q.grid
    assert np.all(np.abs(Q.values) <= ((x + 2) / 2) ** KAPPA * (1 + 1e-8))


def test_factorization_consistency(gamma02):
    # u = Psi/lam from the Dirac system solves -u'' + (a^2 + a')u = lam^2 u
    x = np.linspace(0, 60, 601)
    d = integrate_dirac(gamma02.a, None, 0.9, 60.0, 1e-11, positions=x)
    v, dv, u, du = sl_solutions(gamma02.q, 0.9, x, 1e-11)
    assert np.max(np.abs(d.Psi / 0.9 - u)) < 1e-7


def test_transfer_matrix_free():
    ts = transfer_matrix(_zero(), 1.5, [0.0, 1.0, 7.3], 1e-12)
    for t in ts:
        x = t.position
        ref = np.array([[np.cos(1.5 * x), np.sin(1.5 * x) / 1.5],
                        [-1.5 * np.sin(1.5 * x), np.cos(1.5 * x)]])
        assert np.max(np.abs(t.matrix - ref)) < 1e-10
        assert t.det == pytest.approx(1.0, abs=1e-8)


def test_transfer_matrix_det_any_potential(gamma02):
    for t in transfer_matrix(gamma02.q, 0.7, np.linspace(1, 100, 12), 1e-11):
        assert abs(t.det - 1) < 1e-8


def test_transfer_matrix_vnw_grows():
    b = make_family("vnw", grid=uniform_grid(220.0, 0.05))
    ts = transfer_matrix(b.q, 1.0, [50.0, 100.0, 200.0], 1e-11)
    norms = [np.linalg.norm(t.matrix, 2) for t in ts]
    assert norms[0] < norms[1] < norms[2]
    assert norms[2] / norms[1] > 3.0


def test_transfer_matrix_det_drift_raises(gamma02):
    with pytest.raises(IntegrationError, match="smaller tolerance"):
        transfer_matrix(gamma02.q, 3.0, [200.0], 1e-3)


def test_sl_sweep_backward_from_midpoint():
    z = _zero()
    y = sl_sweep(z, [4.0], np.array([0.0]), 1e-12, grams=True, x0=3.0)[0, :, -1]
    # v = cos(2(x-3)), u = sin(2(x-3))/2 evaluated at 0
    assert y[0] == pytest.approx(np.cos(6.0), abs=1e-10)
    assert y[2] == pytest.approx(-np.sin(6.0) / 2, abs=1e-10)
    # oriented Gram integral from 3 to 0 of v^2
    assert y[4] == pytest.approx(-(1.5 + np.sin(12.0) / 8), abs=1e-9)
    with pytest.raises(ValueError):
        sl_sweep(z, [1.0], np.array([1.0, 4.0]), x0=2.0)


def test_positions_validation():
    with pytest.raises(ValueError):
        integrate_krein(_zero(), 1.0, 5.0, positions=[0.0, 2.0, 1.0])
    with pytest.raises(ValueError):
        integrate_krein(_zero(), 1.0, 0.0)


def test_trajectory_csv(tmp_path):
    kt = integrate_krein(_zero(), 1.0, 1.0, positions=np.linspace(0, 1, 3))
    p = tmp_path / "t.csv"
    write_trajectory_csv(p, kt)
    lines = p.read_text().splitlines()
    assert lines[0].startswith("# lambda=1")
    assert lines[1] == "x,re_P,im_P,re_Pstar,im_Pstar"
    assert len(lines) == 5
