"""Accelerant route: positivity, resolvent and the continuous polynomials.

The resolvent equation

    Gamma_r(t, s) + int_0^r H(t - u) Gamma_r(u, s) du = H(t - s)

is discretized with the composite trapezoid rule on uniform nodes (Nystrom).
Its boundary trace ``A(r) = Gamma_r(0, r)`` is the coefficient of the Krein
system, which makes this module an independent check on the ODE route.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .coeffs import SampledFunction

__all__ = [
    "AccelerantKernel",
    "ResolventSolution",
    "ResolventError",
    "trapezoid_nodes",
    "positivity_min_eig",
    "solve_resolvent",
    "pp_from_resolvent",
    "read_kernel_csv",
]


class ResolventError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class AccelerantKernel:
    """Hermitian kernel ``H`` given on ``t >= 0``; ``H(-t) = conj(H(t))``."""

    H: SampledFunction
    r: float

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        val = self.H(np.abs(t))
        if self.H.is_complex or np.iscomplexobj(val):
            val = np.where(t < 0, np.conj(val), val)
        return val

    @classmethod
    def constant(cls, c: complex, r: float):
        grid = np.linspace(0.0, r, 9)
        if np.iscomplexobj(c) and np.imag(c) != 0:
            raise ValueError("a constant Hermitian kernel must be real")
        c = float(np.real(c))
        return cls(SampledFunction.from_callable(lambda t: np.full_like(np.asarray(t, float), c),
                                                 grid), r)

    @classmethod
    def from_callable(cls, f, r: float, n: int = 1025):
        return cls(SampledFunction.from_callable(f, np.linspace(0.0, r, n)), r)


@dataclass(frozen=True, eq=False)
class ResolventSolution:
    n: int
    nodes: np.ndarray
    weights: np.ndarray
    Gamma: np.ndarray
    rho: np.ndarray
    A_trace: np.ndarray
    min_eig: float
    cond: float

    def A(self) -> SampledFunction:
        """The trace ``A(rho)`` as a sampled function."""
        return SampledFunction(self.rho, self.A_trace, meta={"source": "resolvent", "n": self.n})


def trapezoid_nodes(r: float, n: int):
    t = np.linspace(0.0, r, n)
    w = np.full(n, r / (n - 1))
    w[[0, -1]] *= 0.5
    return t, w


def _kernel_matrix(H, t):
    return H(t[:, None] - t[None, :])


def positivity_min_eig(H: AccelerantKernel, r: float, n: int = 128) -> float:
    """Smallest eigenvalue of the Nystrom discretization of ``phi + int_0^r H(. - s) phi(s) ds``.

    The trapezoid matrix ``I + K W`` is similar to the Hermitian
    ``I + W^1/2 K W^1/2``, whose eigenvalues are returned.  A positive value
    certifies the positivity condition at this resolution.
    """
    if n < 8:
        raise ValueError("n must be at least 8")
    t, w = trapezoid_nodes(r, n)
    sw = np.sqrt(w)
    M = np.eye(n) + sw[:, None] * _kernel_matrix(H, t) * sw[None, :]
    return float(linalg.eigvalsh(M)[0])


def _threshold(n):
    return 1e-8 * n


def solve_resolvent(H: AccelerantKernel, r: float, n: int = 128, rho_grid=None) -> ResolventSolution:
    """Discretized resolvent on ``[0, r]`` and the trace ``A(rho) = Gamma_rho(0, rho)``.

    ``rho_grid`` selects trace points; each is snapped to the nearest node of
    the ``n``-point grid on ``[0, r]`` and solved independently on the leading
    block of nodes (same spacing).  ``A(0) = H(0)``.  The full ``Gamma_r`` is
    returned for ``rho = r``.

    Raises
    ------
    ResolventError
        If the discretized operator is not positive or is ill-conditioned.
    """
    t, w = trapezoid_nodes(r, n)
    K = _kernel_matrix(H, t)
    sw = np.sqrt(w)
    M = np.eye(n) + sw[:, None] * K * sw[None, :]
    evals = linalg.eigvalsh(M)
    min_eig = float(evals[0])
    if min_eig <= _threshold(n):
        raise ResolventError(f"kernel not positive at this resolution (min eigenvalue {min_eig:.3e})")
    cond = float(evals[-1] / evals[0])
    if cond > 1e12:
        raise ResolventError(f"ill-conditioned resolvent system (condition {cond:.3e})")

    if rho_grid is None:
        idx = np.arange(n)
    else:
        rho_grid = np.asarray(rho_grid, dtype=float)
        if np.any(rho_grid < 0) or np.any(rho_grid > r * (1 + 1e-12)):
            raise ValueError("rho_grid must lie in [0, r]")
        idx = np.unique(np.rint(rho_grid / (r / (n - 1))).astype(int))
    h = r / (n - 1)
    A_trace = np.empty(idx.size, dtype=K.dtype)
    for j, k in enumerate(idx):
        if k == 0:
            A_trace[j] = K[0, 0]
            continue
        m = k + 1
        wk = np.full(m, h)
        wk[[0, -1]] *= 0.5
        lhs = np.eye(m) + K[:m, :m] * wk[None, :]
        col = linalg.solve(lhs, K[:m, k])
        A_trace[j] = col[0]

    Gamma = linalg.solve(np.eye(n) + K * w[None, :], K)
    return ResolventSolution(n, t, w, Gamma, t[idx], A_trace, min_eig, cond)


def pp_from_resolvent(sol: ResolventSolution, lam: complex):
    """``P(r, lam)`` and ``P*(r, lam)`` at ``r = nodes[-1]`` from the stored ``Gamma_r``.

    ``P = exp(i lam r)(1 - int Gamma_r(s, 0) exp(-i lam s) ds)`` and
    ``P* = 1 - int Gamma_r(0, s) exp(i lam s) ds``, both by the trapezoid rule.
    """
    s, w = sol.nodes, sol.weights
    r = s[-1]
    lam = complex(lam)
    P = np.exp(1j * lam * r) * (1 - np.sum(w * sol.Gamma[:, 0] * np.exp(-1j * lam * s)))
    Pstar = 1 - np.sum(w * sol.Gamma[0, :] * np.exp(1j * lam * s))
    return complex(P), complex(Pstar)


def read_kernel_csv(path, r: float | None = None) -> AccelerantKernel:
    """Read a kernel file with header ``t,re,im`` sampled on ``[0, r]``."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if [h.strip() for h in rows[0]] != ["t", "re", "im"]:
        raise ValueError("kernel CSV header must be t,re,im")
    data = np.array([[float(v) for v in row] for row in rows[1:] if row])
    vals = data[:, 1] + 1j * data[:, 2]
    if not np.any(data[:, 2]):
        vals = data[:, 1]
    if np.iscomplexobj(vals) and abs(vals[0].imag) > 1e-12:
        raise ValueError("H(0) must be real for a Hermitian kernel")
    return AccelerantKernel(SampledFunction(data[:, 0], vals), float(r if r is not None else data[-1, 0]))
