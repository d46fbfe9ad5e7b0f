"""Asymptotics of generalized eigenfunctions.

Sinusoidal fits ``u ~ C sin(lam x + phi)``, power-law growth of ``int u^2``,
subordinacy-type exponent comparisons, scans for square-integrable
solutions at positive energy, and the multilinear (iterated oscillatory
integral) series for the phase-stripped Krein solution.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_simpson
from scipy.interpolate import CubicSpline
from scipy.optimize import minimize_scalar

from .coeffs import SampledFunction, oscillatory_tail
from .systems import integrate_Q, sl_sweep

__all__ = [
    "AsymptoticFit",
    "SubordinacyDiagnostics",
    "SeriesEvaluation",
    "EmbeddedScan",
    "fit_sin",
    "growth_exponent",
    "subordinacy_sandwich",
    "embedded_scan",
    "ck_series_Q",
    "write_scan_csv",
    "write_fit_csv",
]


@dataclass(frozen=True, eq=False)
class AsymptoticFit:
    lam: float
    C: float
    phi: float
    panel_centers: np.ndarray
    panel_C: np.ndarray
    panel_phi: np.ndarray
    residual_curve: np.ndarray
    decaying: bool
    alpha: float | None = None


def fit_sin(x, u, lam: float, window=None, alpha: float | None = None) -> AsymptoticFit:
    """Fit ``u(x) ~ C sin(lam x + phi)`` over far-field panels.

    ``window = (x_lo, x_hi, panels)``.  On each panel ``u`` is fitted by
    ``a sin(lam x) + b cos(lam x)`` (linear least squares).  The asymptotic
    ``(a, b)`` is the intercept of a straight-line fit of the panel values
    against ``1/x``; then ``C = hypot(a, b)``, ``phi = atan2(b, a)``.  The
    residual curve is the RMS of ``u - C sin(lam x + phi)`` on each panel and
    ``decaying`` records whether it decreases overall (negative log-log slope
    and the last value below the first).
    """
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    if lam <= 0:
        raise ValueError("lam must be positive")
    if window is None:
        window = (x[0] + 0.5 * (x[-1] - x[0]), x[-1], 8)
    lo, hi, panels = window
    if lo < x[0] or hi > x[-1] * (1 + 1e-12):
        raise ValueError("window must lie inside the trajectory")
    period = 2 * math.pi / lam
    if hi - lo < 4 * period:
        raise ValueError(f"window of length {hi - lo:.4g} is shorter than 4 periods ({4 * period:.4g})")
    panels = int(panels)
    edges = np.linspace(lo, hi, panels + 1)
    centers, ab, sel_list = [], [], []
    for a, b in zip(edges[:-1], edges[1:]):
        sel = (x >= a) & (x <= b)
        if sel.sum() < 3:
            raise ValueError("panel contains fewer than 3 samples")
        M = np.column_stack([np.sin(lam * x[sel]), np.cos(lam * x[sel])])
        coef = np.linalg.lstsq(M, u[sel], rcond=None)[0]
        centers.append(0.5 * (a + b))
        ab.append(coef)
        sel_list.append(sel)
    centers = np.array(centers)
    ab = np.array(ab)
    if panels >= 2:
        V = np.column_stack([np.ones(panels), 1.0 / centers])
        a_inf, b_inf = np.linalg.lstsq(V, ab, rcond=None)[0][0]
    else:
        a_inf, b_inf = ab[0]
    C = float(math.hypot(a_inf, b_inf))
    phi = float(math.atan2(b_inf, a_inf) % (2 * math.pi))
    if 2 * math.pi - phi < 1e-10:  # roundoff just below a full turn
        phi = 0.0
    resid = np.array([
        math.sqrt(np.mean((u[s] - C * np.sin(lam * x[s] + phi)) ** 2)) for s in sel_list
    ])
    slope = np.polyfit(np.log(centers), np.log(np.maximum(resid, 1e-300)), 1)[0] if panels >= 2 else 0.0
    decaying = bool(panels >= 2 and slope < 0 and resid[-1] < resid[0])
    return AsymptoticFit(float(lam), C, phi, centers, np.hypot(ab[:, 0], ab[:, 1]),
                         np.arctan2(ab[:, 1], ab[:, 0]) % (2 * math.pi), resid, decaying, alpha)


def growth_exponent(x, f, decade=None) -> float:
    """Slope of ``log f`` against ``log x`` over the trailing decade."""
    x = np.asarray(x, dtype=float)
    f = np.asarray(f, dtype=float)
    hi = x[-1]
    lo = hi / 10 if decade is None else decade[0]
    if x[0] > lo or lo <= 0:
        raise ValueError("need at least a decade of x range with x > 0")
    sel = (x >= lo) & (x <= hi)
    if np.any(f[sel] <= 0):
        raise ValueError("nonpositive values in the fit range")
    return float(np.polyfit(np.log(x[sel]), np.log(f[sel]), 1)[0])


@dataclass(frozen=True, eq=False)
class SubordinacyDiagnostics:
    exponent_u: float
    exponent_v: float
    verdict: str
    zeta_max: float
    zeta_divergent: np.ndarray
    eta: float
    wronskian: float


def subordinacy_sandwich(x, u, du, v, dv, kappa: float, slack: float = 0.1,
                         zetas=None) -> SubordinacyDiagnostics:
    """Compare growth of ``int u^2`` and ``int v^2`` with ``x^(1 -+ 2 kappa)``.

    The verdict is ``pass`` when both growth exponents lie in
    ``[1 - 2 kappa - slack, 1 + 2 kappa + slack]``, ``fail`` otherwise and
    ``undecided`` when less than a decade of positive ``x`` is available.
    ``zeta_divergent`` lists the candidate ``zeta`` for which
    ``(int u^2)(int v^2)^-zeta`` increases over the trailing decade;
    ``zeta_max`` is the largest of them and ``eta = 2 zeta_max/(1 + zeta_max)``
    the matching power-law continuity exponent.
    """
    x = np.asarray(x, dtype=float)
    u, du, v, dv = (np.asarray(a, dtype=float) for a in (u, du, v, dv))
    W = u * dv - du * v
    scale = np.sqrt((u * u + du * du) * (v * v + dv * dv))
    if np.median(np.abs(W) / np.maximum(scale, 1e-300)) < 1e-8:
        raise ValueError("u and v are linearly dependent (Wronskian ~ 0)")
    Nu = cumulative_simpson(u * u, x=x, initial=0.0)
    Nv = cumulative_simpson(v * v, x=x, initial=0.0)
    if x[-1] / max(x[1], 1e-300) < 10:
        return SubordinacyDiagnostics(np.nan, np.nan, "undecided", np.nan, np.array([]), np.nan,
                                      float(np.median(W)))
    eu = growth_exponent(x, Nu)
    ev = growth_exponent(x, Nv)
    band = (1 - 2 * kappa - slack, 1 + 2 * kappa + slack)
    ok = band[0] <= eu <= band[1] and band[0] <= ev <= band[1]
    zetas = np.arange(0.05, 3.0001, 0.05) if zetas is None else np.asarray(zetas, dtype=float)
    sel = x >= x[-1] / 10
    lx = np.log(x[sel])
    div = np.array([z for z in zetas
                    if np.polyfit(lx, np.log(Nu[sel]) - z * np.log(Nv[sel]), 1)[0] > 0])
    zmax = float(div.max()) if div.size else float("nan")
    return SubordinacyDiagnostics(eu, ev, "pass" if ok else "fail", zmax, div,
                                  2 * zmax / (1 + zmax) if div.size else float("nan"),
                                  float(np.median(W)))


@dataclass(frozen=True, eq=False)
class EmbeddedScan:
    energies: np.ndarray
    alpha_star: np.ndarray
    tail_ratio: np.ndarray
    minima: list
    xmax: float
    threshold: float


def _ratio(alpha, G_tail, G_head):
    c = np.array([math.cos(alpha), math.sin(alpha)])
    return float(c @ G_tail @ c) / float(c @ G_head @ c)


def embedded_scan(q: SampledFunction, energies, xmax: float, tol: float = 1e-10,
                  dip_factor: float = 0.1, n_alpha: int = 64) -> EmbeddedScan:
    """Scan energies for square-integrable solution candidates.

    For each energy the solution ``y`` minimizing
    ``int_{xmax/2}^{xmax} y^2 / int_0^{xmax/2} y^2`` is found by a coarse scan
    of ``n_alpha`` angles refined by golden-section search, and reported by
    its boundary angle ``alpha`` (``y(0) = cos alpha``, ``y'(0) = sin alpha``
    up to scale).  Local minima of the profile below ``dip_factor`` times its
    median are reported as ``(energy, alpha, ratio)``.

    The family is parametrized by the Cauchy data at ``xmax/2`` and
    integrated outwards from there.  Near an embedded eigenvalue the
    solutions fixed at 0 grow while the minimizer decays, and forming the
    quotient from them would cancel every significant digit.
    """
    E = np.asarray(energies, dtype=float)
    if np.any(E <= 0):
        raise ValueError("energies must be positive")
    mid = 0.5 * xmax
    fwd = sl_sweep(q, E, np.array([xmax]), tol, grams=True, x0=mid)[:, :, -1]
    bwd = sl_sweep(q, E, np.array([0.0]), tol, grams=True, x0=mid)[:, :, -1]

    def gram(y, sign):
        G = np.empty((E.size, 2, 2))
        G[:, 0, 0], G[:, 0, 1], G[:, 1, 1] = y[:, 4], y[:, 5], y[:, 6]
        G[:, 1, 0] = G[:, 0, 1]
        return sign * G

    G_tail, G_head = gram(fwd, 1.0), gram(bwd, -1.0)
    # Cauchy data at 0 of the basis fixed at the midpoint
    C0 = np.stack([bwd[:, [0, 1]], bwd[:, [2, 3]]], axis=-1)
    thetas = np.linspace(0.0, math.pi, n_alpha, endpoint=False)
    step = thetas[1] - thetas[0]
    a_star = np.empty(E.size)
    ratio = np.empty(E.size)
    for i in range(E.size):
        Gt, Gh = G_tail[i], G_head[i]
        coarse = [_ratio(a, Gt, Gh) for a in thetas]
        t0 = thetas[int(np.argmin(coarse))]
        res = minimize_scalar(_ratio, bracket=(t0 - step, t0, t0 + step), args=(Gt, Gh),
                              method="golden", tol=1e-10)
        t_best = res.x if res.fun <= min(coarse) else t0
        y0, dy0 = C0[i] @ np.array([math.cos(t_best), math.sin(t_best)])
        a_star[i] = math.atan2(dy0, y0) % math.pi
        ratio[i] = min(res.fun, min(coarse))
    thr = dip_factor * float(np.median(ratio))
    minima = []
    for i in range(E.size):
        left = ratio[i - 1] if i > 0 else np.inf
        right = ratio[i + 1] if i < E.size - 1 else np.inf
        if ratio[i] < thr and ratio[i] <= left and ratio[i] <= right:
            minima.append((float(E[i]), float(a_star[i]), float(ratio[i])))
    return EmbeddedScan(E, a_star, ratio, minima, float(xmax), thr)


@dataclass(frozen=True, eq=False)
class SeriesEvaluation:
    order: int
    x: np.ndarray
    terms: list
    term_norms: np.ndarray
    partial_sum: np.ndarray
    Q: np.ndarray
    Q_inf: complex
    gap: float | None = None
    Q_ode: np.ndarray | None = None


def _inward_integral(x, f):
    """``int_x^{x[-1]} f`` at every node, exact for the interpolating cubic."""
    sp = CubicSpline(x, f)
    h = np.diff(x)
    c3, c2, c1, c0 = sp.c
    panels = h * (c0 + h * (c1 / 2 + h * (c2 / 3 + h * c3 / 4)))
    out = np.zeros(x.size, dtype=complex)
    out[:-1] = np.cumsum(panels[::-1])[::-1]
    return out


def ck_series_Q(A: SampledFunction, lam: float, order: int, x_grid, compare: bool = False,
                tol: float = 1e-11) -> SeriesEvaluation:
    """Iterated oscillatory integrals for ``Q' = -A exp(-i lam x) conj(Q)``.

    Term ``j`` is ``S_j(x) = int_x^inf A(s1) e^{-i lam s1} int_{s1}^inf
    A(s2) e^{+i lam s2} ...`` with ``j`` nested integrals of alternating
    phase, built from the innermost level outward on ``x_grid``.  The first
    level includes the tail beyond the grid in closed form from the tail
    model of ``A``; deeper levels neglect it.

    ``partial_sum = 1 + S_1 + ... + S_order``.  Since ``Q = Q_inf`` at
    infinity and the conjugation alternates, the solution with ``Q(0) = 1``
    is ``Q = Q_inf (1 + S_2 + ...) + conj(Q_inf) (S_1 + S_3 + ...)``, with
    ``Q_inf`` solved from the condition at ``x = 0``.  With ``compare`` the
    gap ``max |Q - Q_ode|`` against :func:`integrate_Q` is recorded.
    """
    if not 0 <= order <= 5:
        raise ValueError("order must lie in 0..5")
    x = np.asarray(x_grid, dtype=float)
    lam = float(lam)
    Ax = np.asarray(A(x), dtype=float)
    if A.tail is not None:
        p = A.tail.exponent
        if (lam == 0 and p <= 1) or p <= 0:
            raise ValueError(f"tail exponent {p} gives a non-convergent first term")

    def first_level_tail(sign):
        if A.tail is None:
            return 0.0
        t = A.tail
        X = x[-1] + t.shift
        if t.kind == "power":
            val = oscillatory_tail(t.exponent, sign * lam, X) if lam else X ** (1 - t.exponent) / (t.exponent - 1)
            return t.amplitude * np.exp(-1j * sign * lam * t.shift) * val
        raise ValueError("only power tail models are supported for the series")

    terms = []
    for j in range(1, order + 1):
        # level k carries phase exp((-1)^k i lam s); build from level j down to 1
        inner = np.ones(x.size, dtype=complex)
        for k in range(j, 0, -1):
            sign = -1.0 if k % 2 else 1.0
            integrand = Ax * np.exp(1j * sign * lam * x) * inner
            level = _inward_integral(x, integrand)
            if k == j:
                level = level + first_level_tail(sign)
            inner = level
        terms.append(inner)
    norms = np.array([np.max(np.abs(t)) for t in terms])
    partial = 1.0 + sum(terms) if terms else np.ones(x.size, dtype=complex)
    even = 1.0 + sum(terms[1::2]) if order >= 2 else np.ones(x.size, dtype=complex)
    odd = sum(terms[0::2]) if order >= 1 else np.zeros(x.size, dtype=complex)
    # Q_inf e0 + conj(Q_inf) o0 = 1, as a real 2x2 system
    e0, o0 = complex(even[0]), complex(odd[0])
    M = np.array([[e0.real + o0.real, -e0.imag + o0.imag], [e0.imag + o0.imag, e0.real - o0.real]])
    qr, qi = np.linalg.solve(M, [1.0, 0.0])
    Q_inf = complex(qr, qi)
    Q = Q_inf * even + Q_inf.conjugate() * odd
    gap, Q_ode = None, None
    if compare:
        Q_ode = integrate_Q(A, lam, x[-1], tol, positions=x).values
        gap = float(np.max(np.abs(Q - Q_ode)))
    return SeriesEvaluation(order, x, terms, norms, partial, Q, Q_inf, gap, Q_ode)


def write_scan_csv(path, scan: EmbeddedScan) -> None:
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["E", "alpha_star", "tail_ratio"])
        for e, a, r in zip(scan.energies, scan.alpha_star, scan.tail_ratio):
            wr.writerow([f"{e:.12g}", f"{a:.10e}", f"{r:.10e}"])


def write_fit_csv(path, fits) -> None:
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["lambda", "C", "phi", "last_residual"])
        for f in fits:
            wr.writerow([f"{f.lam:.12g}", f"{f.C:.10e}", f"{f.phi:.10e}",
                         f"{f.residual_curve[-1]:.10e}"])
