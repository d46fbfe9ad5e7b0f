"""Krein, Dirac and Sturm-Liouville systems on the half-line.

All complex equations are integrated as real systems of twice the dimension,
since the phase-stripped equation ``Q' = -A exp(-i lam x) conj(Q)`` is not
holomorphic.  Integration is adaptive (DOP853) with relative tolerance ``tol``
and absolute tolerance ``1e-3 tol``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from .coeffs import SampledFunction

__all__ = [
    "IntegrationError",
    "KreinTrajectory",
    "DiracTrajectory",
    "TransferMatrixSample",
    "default_positions",
    "integrate_krein",
    "integrate_dirac",
    "integrate_Q",
    "transfer_matrix",
    "sl_solutions",
    "sl_sweep",
    "write_trajectory_csv",
]


class IntegrationError(RuntimeError):
    def __init__(self, msg, last_position):
        super().__init__(f"{msg} (last good position {last_position:.6g})")
        self.last_position = last_position


@dataclass(frozen=True, eq=False)
class KreinTrajectory:
    lam: complex
    positions: np.ndarray
    P: np.ndarray
    Pstar: np.ndarray
    Q: np.ndarray
    conserved_residuals: np.ndarray
    stats: dict = field(default_factory=dict)
    norm_P: np.ndarray | None = None


@dataclass(frozen=True, eq=False)
class DiracTrajectory:
    lam: float
    positions: np.ndarray
    Phi: np.ndarray
    Psi: np.ndarray
    stats: dict = field(default_factory=dict)


@dataclass(frozen=True)
class TransferMatrixSample:
    position: float
    matrix: np.ndarray

    @property
    def det(self) -> float:
        return float(np.linalg.det(self.matrix))


def default_positions(xmax: float, step: float = 0.1) -> np.ndarray:
    n = int(np.clip(round(xmax / step), 100, 20000)) + 1
    return np.linspace(0.0, xmax, n)


def _positions(positions, xmax):
    if positions is None:
        return default_positions(xmax)
    x = np.asarray(positions, dtype=float)
    if x[0] < 0 or np.any(np.diff(x) <= 0):
        raise ValueError("positions must be increasing and nonnegative")
    return x


def _max_step(coeffs, xmax):
    """Half the largest node spacing of interpolated coefficients on ``[0, xmax]``."""
    caps = []
    for f in coeffs:
        if f is None or f.exact is not None:
            continue
        g = f.grid[f.grid <= xmax]
        if g.size >= 2:
            caps.append(0.5 * np.diff(g).max())
    return min(caps) if caps else np.inf


def _solve(rhs, y0, x, tol, max_step=np.inf, atol=None, t0=0.0):
    xmax = float(x[-1])
    atol = 1e-3 * tol if atol is None else atol
    if xmax == t0:
        return np.asarray(y0, dtype=float)[:, None] * np.ones(x.size), {"nfev": 0}
    sol = solve_ivp(rhs, (t0, xmax), y0, method="DOP853", t_eval=x, rtol=tol,
                    atol=atol, max_step=max_step)
    if sol.status != 0:
        last = float(sol.t[-1]) if sol.t.size else 0.0
        raise IntegrationError(sol.message, last)
    return sol.y, {"nfev": int(sol.nfev), "rtol": tol, "atol": atol, "max_step": float(max_step)}


def integrate_krein(A: SampledFunction, lam: complex, rmax: float, tol: float = 1e-9,
                    positions=None, with_norm: bool = False) -> KreinTrajectory:
    """Integrate ``P' = i lam P - conj(A) P*``, ``P*' = -A P`` from ``P = P* = 1``.

    With ``with_norm`` the running integral ``int_0^r |P|^2`` is carried along
    and returned as ``norm_P``.
    """
    if rmax <= 0:
        raise ValueError("rmax must be positive")
    lam = complex(lam)
    x = _positions(positions, rmax)
    ilam = 1j * lam

    def rhs(r, y):
        a = complex(A(r))
        P = complex(y[0], y[1])
        S = complex(y[2], y[3])
        dP = ilam * P - a.conjugate() * S
        dS = -a * P
        out = [dP.real, dP.imag, dS.real, dS.imag]
        if with_norm:
            out.append(P.real * P.real + P.imag * P.imag)
        return out

    y0 = [1.0, 0.0, 1.0, 0.0] + ([0.0] if with_norm else [])
    y, stats = _solve(rhs, y0, x, tol, _max_step([A], x[-1]))
    P = y[0] + 1j * y[1]
    S = y[2] + 1j * y[3]
    Q = np.exp(-ilam * x) * P
    resid = np.abs(np.abs(P) ** 2 - np.abs(S) ** 2)
    return KreinTrajectory(lam, x, P, S, Q, resid, stats, y[4] if with_norm else None)


def integrate_dirac(a: SampledFunction, b: SampledFunction | None, lam: float, xmax: float,
                    tol: float = 1e-9, positions=None) -> DiracTrajectory:
    """Integrate ``Phi' = -lam Psi - a Phi + b Psi``, ``Psi' = lam Phi + b Phi + a Psi``.

    ``Phi(0) = 1``, ``Psi(0) = 0``; ``b=None`` means ``b = 0``.
    """
    lam = float(lam)
    x = _positions(positions, xmax)

    def rhs(r, y):
        av = float(a(r))
        bv = 0.0 if b is None else float(b(r))
        return [-lam * y[1] - av * y[0] + bv * y[1], lam * y[0] + bv * y[0] + av * y[1]]

    y, stats = _solve(rhs, [1.0, 0.0], x, tol, _max_step([a, b], x[-1]))
    return DiracTrajectory(lam, x, y[0], y[1], stats)


def integrate_Q(A: SampledFunction, lam: complex, xmax: float, tol: float = 1e-9,
                positions=None, check_against_krein: bool = False) -> SampledFunction:
    """Integrate ``Q' = -A exp(-i lam x) conj(Q)``, ``Q(0) = 1``.

    Returns the samples as a complex :class:`SampledFunction`.  With
    ``check_against_krein`` (real ``lam``, real ``A``) the result is compared
    with ``conj(P*)`` from :func:`integrate_krein` and the gap stored in
    ``meta["krein_gap"]``; a gap above ``1e3 tol`` raises.
    """
    lam = complex(lam)
    x = _positions(positions, xmax)

    def rhs(r, y):
        a = complex(A(r))
        d = -a * np.exp(-1j * lam * r) * complex(y[0], -y[1])
        return [d.real, d.imag]

    y, stats = _solve(rhs, [1.0, 0.0], x, tol, _max_step([A], x[-1]))
    Q = y[0] + 1j * y[1]
    meta = dict(stats)
    if check_against_krein:
        if lam.imag != 0 or A.is_complex:
            raise ValueError("Q = conj(P*) is only checked for real lam and real A")
        kt = integrate_krein(A, lam, x[-1], tol, positions=x)
        gap = float(np.max(np.abs(Q - np.conj(kt.Pstar))))
        meta["krein_gap"] = gap
        if gap > 1e3 * tol:
            raise AssertionError(f"Q and conj(P*) differ by {gap:.3e}")
    return SampledFunction(x, Q, meta=meta)


def sl_sweep(q: SampledFunction, energies, positions, tol: float = 1e-10,
             grams: bool = False, x0: float = 0.0):
    """Fundamental solutions of ``-u'' + q u = E u`` for many energies at once.

    Returns an array of shape ``(len(energies), k, len(positions))`` with
    ``k = 4`` rows ``v, v', u, u'`` (``v(x0)=1, v'(x0)=0``; ``u(x0)=0,
    u'(x0)=1``), plus three Gram integrals ``int v^2, int u v, int u^2`` taken
    from ``x0`` to each position (oriented, so negative when integrating
    backwards) when ``grams`` is set.  ``positions`` must be monotone and on
    one side of ``x0``.
    """
    E = np.atleast_1d(np.asarray(energies, dtype=float))
    x = np.asarray(positions, dtype=float)
    x0 = float(x0)
    fwd = x[-1] >= x0
    if np.any((x - x0) * (1 if fwd else -1) < 0) or (
            x.size > 1 and np.any(np.diff(x) * (1 if fwd else -1) <= 0)):
        raise ValueError("positions must move monotonically away from x0")
    k = 7 if grams else 4
    n = E.size

    def rhs(r, y):
        y = y.reshape(n, k)
        qv = float(q(r))
        d = np.empty_like(y)
        d[:, 0] = y[:, 1]
        d[:, 1] = (qv - E) * y[:, 0]
        d[:, 2] = y[:, 3]
        d[:, 3] = (qv - E) * y[:, 2]
        if grams:
            d[:, 4] = y[:, 0] * y[:, 0]
            d[:, 5] = y[:, 0] * y[:, 2]
            d[:, 6] = y[:, 2] * y[:, 2]
        return d.ravel()

    y0 = np.zeros((n, k))
    y0[:, 0] = 1.0
    y0[:, 3] = 1.0
    pad = x[0] != x0
    x_eval = np.concatenate([[x0], x]) if pad else x
    y, _ = _solve(rhs, y0.ravel(), x_eval, tol, _max_step([q], max(x0, x_eval[-1])), t0=x0)
    y = y.reshape(n, k, -1)
    return y[:, :, 1:] if pad else y


def sl_solutions(q: SampledFunction, lam: float, positions, tol: float = 1e-10):
    """``(v, v', u, u')`` at ``positions`` for energy ``lam**2``."""
    y = sl_sweep(q, [float(lam) ** 2], positions, tol)[0]
    return y[0], y[1], y[2], y[3]


def transfer_matrix(q: SampledFunction, lam: float, positions, tol: float = 1e-10,
                    det_tol: float = 1e-6) -> list:
    """Transfer matrices of ``-u'' + q u = lam^2 u`` from 0 to each position.

    The matrix maps ``(u(0), u'(0))`` to ``(u(x), u'(x))``; its determinant is
    the Wronskian and must stay 1.  The drift is measured relative to the
    larger of 1 and the two products ``v u'``, ``u v'`` whose difference is
    the determinant; growing solutions make those products large and their
    difference cannot be resolved better than that in floating point.

    Raises
    ------
    IntegrationError
        If the relative drift exceeds ``det_tol`` at some position.
    """
    x = np.atleast_1d(np.asarray(positions, dtype=float))
    v, dv, u, du = sl_solutions(q, lam, x, tol)
    out = []
    for i, xi in enumerate(x):
        M = np.array([[v[i], u[i]], [dv[i], du[i]]])
        d = v[i] * du[i] - u[i] * dv[i]
        scale = max(1.0, abs(v[i] * du[i]), abs(u[i] * dv[i]))
        if abs(d - 1.0) > det_tol * scale:
            raise IntegrationError(f"transfer-matrix determinant drifted to {d:.10g}; "
                                   "use a smaller tolerance", float(x[i - 1]) if i else 0.0)
        out.append(TransferMatrixSample(float(xi), M))
    return out


def write_trajectory_csv(path, traj: KreinTrajectory) -> None:
    """Write ``x,re_P,im_P,re_Pstar,im_Pstar`` with the spectral parameter in a header comment."""
    with open(path, "w", newline="") as fh:
        fh.write(f"# lambda={traj.lam.real:.15g}{traj.lam.imag:+.15g}j\n")
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["x", "re_P", "im_P", "re_Pstar", "im_Pstar"])
        for x, P, S in zip(traj.positions, traj.P, traj.Pstar):
            wr.writerow([f"{x:.12g}", f"{P.real:.12e}", f"{P.imag:.12e}",
                         f"{S.real:.12e}", f"{S.imag:.12e}"])
