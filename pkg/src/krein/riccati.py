"""Riccati representation ``q = a^2 + a'`` by contraction.

Integrating the Riccati equation from ``x`` to infinity gives the fixed-point
problem ``a = B a`` with ``B g(x) = int_x^inf g^2 - W(x)``.  When
``|W(x)| <= gamma/(x+1)`` with ``gamma < 1/4``, ``B`` maps the ball
``|g| <= kappa/(x+1)``, ``kappa = (1 - sqrt(1 - 4 gamma))/2``, into itself and
contracts the metric ``sup (x+1)|g1 - g2|`` by ``2 kappa``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from .coeffs import SampledFunction, TailModel

__all__ = [
    "RiccatiSolution",
    "HypothesisError",
    "ConvergenceError",
    "kappa_of",
    "riccati_grid",
    "weighted_metric",
    "solve_contraction",
    "potentials_from_a",
    "fixed_point_residual",
]


class HypothesisError(ValueError):
    """``|W(x)|(x+1) <= gamma`` fails somewhere on the grid."""


class ConvergenceError(RuntimeError):
    def __init__(self, msg, history):
        super().__init__(msg)
        self.history = history


@dataclass(frozen=True, eq=False)
class RiccatiSolution:
    a: SampledFunction
    kappa: float
    gamma: float
    iterations: int
    final_residual: float
    contraction_rates: list = field(default_factory=list)


def kappa_of(gamma: float) -> float:
    if not 0 <= gamma <= 0.25:
        raise ValueError(f"gamma must lie in [0, 1/4], got {gamma}")
    return (1.0 - math.sqrt(1.0 - 4.0 * gamma)) / 2.0


def riccati_grid(xmax: float = 1e9, n: int = 4001) -> np.ndarray:
    """Nodes uniform in ``log(x+1)`` from 0 to ``xmax``."""
    return np.expm1(np.linspace(0.0, math.log1p(xmax), n))


def weighted_metric(x, g1, g2) -> float:
    return float(np.max((np.asarray(x) + 1.0) * np.abs(np.asarray(g1) - np.asarray(g2))))


def _tail_squares(x, g):
    """``int_x^inf g^2`` at every node, with ``g = c/(x+1)`` past the last node."""
    t = np.log1p(x)
    # g^2 dx = g^2 (x+1) dt
    sp = CubicSpline(t, g * g * (x + 1.0))
    h = np.diff(t)
    c3, c2, c1, c0 = sp.c
    # panel integrals from local coefficients, summed from the far end so that
    # the small far-field values are not lost to cancellation
    panels = h * (c0 + h * (c1 / 2 + h * (c2 / 3 + h * c3 / 4)))
    c = g[-1] * (x[-1] + 1.0)
    out = np.empty_like(g)
    out[-1] = c * c / (x[-1] + 1.0)
    out[:-1] = out[-1] + np.cumsum(panels[::-1])[::-1]
    return out


def solve_contraction(W: SampledFunction, gamma: float, tol: float = 1e-10,
                      max_iter: int = 500) -> RiccatiSolution:
    """Fixed point of ``B g = int_x^inf g^2 - W`` by Picard iteration from ``-W``.

    ``W`` should be sampled on a grid reaching far enough that
    ``(x+1) >= 10/tol`` at its last node (see :func:`riccati_grid`); the tail
    of each iterate is continued as ``c/(x+1)``.

    Raises
    ------
    HypothesisError
        If ``|W(x)|(x+1) > gamma`` at some node.
    ConvergenceError
        If the weighted residual is still above ``tol`` after ``max_iter``.
    """
    if not 0 < gamma < 0.25:
        raise ValueError(f"gamma must satisfy 0 < gamma < 1/4, got {gamma}")
    x = W.grid
    w = np.asarray(W.values, dtype=float)
    excess = (x + 1.0) * np.abs(w) - gamma
    worst = int(np.argmax(excess))
    if excess[worst] > 1e-12 * max(gamma, 1.0):
        raise HypothesisError(f"|W|(x+1) = {excess[worst] + gamma:.6g} exceeds gamma = {gamma} "
                              f"at x = {x[worst]:.6g}")
    kappa = kappa_of(gamma)

    g = -w
    history, rates = [], []
    for k in range(1, max_iter + 1):
        g_new = _tail_squares(x, g) - w
        d = weighted_metric(x, g_new, g)
        if history and history[-1] > 0:
            rates.append(d / history[-1])
        history.append(d)
        g = g_new
        if d <= tol:
            break
    else:
        raise ConvergenceError(f"no convergence after {max_iter} iterations, "
                               f"residual {history[-1]:.3e}", history)

    c = float(g[-1] * (x[-1] + 1.0))
    a = SampledFunction(x, g, tail=TailModel(c, 1.0), meta={"method": "contraction"})
    return RiccatiSolution(a, kappa, gamma, k, d, rates)


def fixed_point_residual(a: SampledFunction, W: SampledFunction) -> float:
    """``sup (x+1)|a - (int_x^inf a^2 - W)|`` over the nodes of ``a``."""
    x = a.grid
    g = np.asarray(a.values, dtype=float)
    return weighted_metric(x, g, _tail_squares(x, g) - W(x))


def potentials_from_a(a: SampledFunction):
    """``q = a^2 + a'`` and ``q1 = a^2 - a'`` on the interior nodes of ``a``.

    ``a'`` is the derivative of the not-a-knot cubic spline through the
    samples; the two end nodes, where the spline is least accurate, are
    dropped.
    """
    if a.grid.size < 6:
        raise ValueError("grid too coarse for the spline derivative stencil (need >= 6 nodes)")
    x = a.grid[1:-1]
    v = np.asarray(a.values)[1:-1]
    da = a.spline()(x, 1)
    meta = {"derivative": "cubic spline (not-a-knot), interior nodes"}
    return (SampledFunction(x, v * v + da, meta=dict(meta)),
            SampledFunction(x, v * v - da, meta=dict(meta)))
