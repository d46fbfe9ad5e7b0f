"""Spectral densities, Szego-type integrals and Krein-system diagnostics."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.integrate import cumulative_simpson, simpson, solve_ivp
from scipy.interpolate import CubicSpline

from .coeffs import SampledFunction
from .systems import IntegrationError, integrate_krein

__all__ = [
    "SpectralDensityEstimate",
    "ConditionsDiagnostics",
    "estimate_Pi",
    "weighted_log_integral",
    "rho_from_sigma",
    "weyl_m",
    "weyl_density",
    "calibrate_normalization",
    "secC_lemma_check",
    "write_density_csv",
]


@dataclass(frozen=True, eq=False)
class SpectralDensityEstimate:
    """Density samples on a spectral-parameter grid.

    ``point_masses`` holds ``(location, weight)`` candidates; ``cumulative``
    optionally holds the distribution function on the same grid.
    """

    param: np.ndarray
    density: np.ndarray
    method: str
    point_masses: list = field(default_factory=list)
    normalization: float = 1.0
    normalization_note: str = ""
    cumulative: np.ndarray | None = None

    def __post_init__(self):
        if self.method not in ("weyl", "pi_limit", "closed_form"):
            raise ValueError(f"unknown method tag {self.method!r}")
        param = np.asarray(self.param, dtype=float)
        dens = np.asarray(self.density, dtype=float)
        if param.shape != dens.shape:
            raise ValueError("param and density shapes differ")
        object.__setattr__(self, "param", param)
        object.__setattr__(self, "density", dens)

    @classmethod
    def closed_form(cls, f, param, **kw):
        param = np.asarray(param, dtype=float)
        return cls(param, f(param), "closed_form", **kw)


@dataclass(frozen=True, eq=False)
class ConditionsDiagnostics:
    lambdas: list
    per_lambda: list
    verdict: str
    consistent: bool


def _trend_flag(rel_change, tol, fail_at=0.25):
    if rel_change <= tol:
        return True
    if rel_change >= fail_at:
        return False
    return None


def estimate_Pi(A: SampledFunction, lambdas, rmax: float, tol: float = 1e-9,
                drift_tol: float = 1e-3, n_positions: int = 4001) -> ConditionsDiagnostics:
    """Check the equivalent conditions on the Krein system at points of the upper half-plane.

    For each ``lam`` the system is integrated to ``rmax`` and compared at
    ``rmax/2``: the relative increment of ``int_0^r |P|^2`` (convergence),
    the relative growth of ``sup |P*|`` (boundedness) and the change of
    ``P*`` itself (existence of ``Pi = lim P*``).  ``Pi`` is extrapolated by
    two-point Richardson assuming a ``1/r`` error.  A flag is ``True`` when
    the change is below ``drift_tol``, ``False`` when it exceeds 25 percent
    and ``None`` (undecided) in between.
    """
    lambdas = [complex(l) for l in np.atleast_1d(lambdas)]
    if any(l.imag <= 0 for l in lambdas):
        raise ValueError("every lambda needs Im lambda > 0")
    x = np.linspace(0.0, rmax, n_positions)
    half = (n_positions - 1) // 2
    rows = []
    for lam in lambdas:
        kt = integrate_krein(A, lam, rmax, tol, positions=x, with_norm=True)
        N = kt.norm_P
        absS = np.abs(kt.Pstar)
        sup_half, sup_full = absS[: half + 1].max(), absS.max()
        d_norm = (N[-1] - N[half]) / max(N[-1], 1e-300)
        d_sup = sup_full / sup_half - 1.0
        d_Pi = abs(kt.Pstar[-1] - kt.Pstar[half]) / max(1.0, abs(kt.Pstar[-1]))
        flags = {
            "norm_converges": _trend_flag(d_norm, drift_tol),
            "Pstar_bounded": _trend_flag(d_sup, drift_tol),
            "Pi_exists": _trend_flag(d_Pi, drift_tol),
        }
        vals = list(flags.values())
        if all(v is True for v in vals):
            verdict = "hold"
        elif any(v is False for v in vals):
            verdict = "fail"
        else:
            verdict = "undecided"
        rows.append({
            "lambda": lam,
            "Pi": complex(2 * kt.Pstar[-1] - kt.Pstar[half]),
            "Pstar_end": complex(kt.Pstar[-1]),
            "norm_P": float(N[-1]),
            "sup_Pstar": float(sup_full),
            "drift": {"norm": float(d_norm), "sup": float(d_sup), "Pi": float(d_Pi)},
            "flags": flags,
            "verdict": verdict,
        })
    verdicts = {r["verdict"] for r in rows}
    overall = verdicts.pop() if len(verdicts) == 1 else "undecided"
    consistent = all(
        r["flags"]["norm_converges"] == r["flags"]["Pstar_bounded"]
        for r in rows
        if r["flags"]["norm_converges"] is not None and r["flags"]["Pstar_bounded"] is not None
    )
    return ConditionsDiagnostics(lambdas, rows, overall, consistent)


def _window_integral(lam, dens, kind):
    if kind == "t1":
        if np.any(lam <= 0):
            raise ValueError("the t1 integral needs lambda > 0")
        s = np.log(lam)
        # dlam/(sqrt(lam)(1+lam)) = sqrt(lam)/(1+lam) ds
        return simpson(np.log(dens) * np.sqrt(lam) / (1 + lam), x=s)
    if kind == "int2":
        theta = np.arctan(lam)
        # dlam/(1+lam^2) = dtheta
        val = simpson(np.log(dens), x=theta)
        return 2 * val if lam[0] >= 0 else val
    raise ValueError(f"unknown kind {kind!r}; use 'int2' or 't1'")


def weighted_log_integral(density: SpectralDensityEstimate, kind: str, window=None,
                          rtol: float = 0.01):
    """Szego-type logarithmic integral of a density.

    ``kind="int2"`` integrates ``ln d(lam)/(1+lam^2)`` in ``theta = arctan lam``
    (a grid on ``lam >= 0`` is taken as half of an even density on the whole
    line); ``kind="t1"`` integrates ``ln d(lam)/(sqrt(lam)(1+lam))`` in
    ``s = ln lam``, which removes the endpoint singularity of the weight.

    Returns ``(value, finite)``: ``finite`` is set when the value changes by
    less than ``rtol`` (relative) both when the upper window end is halved
    and when every other node is dropped.
    """
    lam, dens = density.param, density.density
    if window is not None:
        keep = (lam >= window[0]) & (lam <= window[1])
        lam, dens = lam[keep], dens[keep]
    if lam.size < 5:
        raise ValueError("need at least 5 nodes in the window")
    bad = np.flatnonzero(dens <= 0)
    if bad.size:
        raise ValueError(f"density not positive at nodes {lam[bad][:10].tolist()}")
    value = float(_window_integral(lam, dens, kind))

    hi = lam[-1] / 2
    k = np.searchsorted(lam, hi, side="right")
    halved = float(_window_integral(lam[:k], dens[:k], kind)) if k >= 5 else np.nan
    coarse = float(_window_integral(lam[::2], dens[::2], kind))
    scale = max(abs(value), 1e-12)
    finite = bool(np.isfinite(halved)
                  and abs(halved - value) <= rtol * scale
                  and abs(coarse - value) <= rtol * scale)
    return value, finite


def rho_from_sigma(sigma_hat: SpectralDensityEstimate, t_grid) -> SpectralDensityEstimate:
    """``rho(t) = 2 int_0^sqrt(t) alpha^2 dsigma_hat(alpha)`` on ``t_grid``.

    The density ``rho'(t) = sqrt(t) sigma_hat'(sqrt(t))`` is attached with
    normalization 1; :func:`calibrate_normalization` measures the constant
    relating it to a Weyl-function density.  Point masses ``(alpha0, w)``
    become jumps ``2 alpha0^2 w`` at ``t = alpha0^2``.
    """
    t = np.asarray(t_grid, dtype=float)
    alpha = sigma_hat.param
    if np.any(t < 0):
        raise ValueError("t_grid must be nonnegative")
    if math.sqrt(t.max()) > alpha[-1] * (1 + 1e-12) or alpha[0] > 0:
        raise ValueError(f"sigma_hat covers [{alpha[0]}, {alpha[-1]}] but t_grid needs "
                         f"[0, {math.sqrt(t.max())}]")
    sp = CubicSpline(alpha, alpha * alpha * sigma_hat.density)
    anti = sp.antiderivative()
    rho = 2 * (anti(np.sqrt(t)) - anti(0.0))
    masses = []
    for a0, w in sigma_hat.point_masses:
        rho = rho + np.where(t >= a0 * a0, 2 * a0 * a0 * w, 0.0)
        masses.append((a0 * a0, 2 * a0 * a0 * w))
    dens = np.sqrt(t) * CubicSpline(alpha, sigma_hat.density)(np.sqrt(t))
    return SpectralDensityEstimate(t, dens, sigma_hat.method, masses, 1.0,
                                   "rho'(t) = sqrt(t) sigma_hat'(sqrt(t)); constant not calibrated",
                                   cumulative=rho)


def weyl_m(q: SampledFunction, z, xmax: float, tol: float = 1e-10):
    """Weyl function ``m(z) = psi'(0)/psi(0)`` of the solution decaying at infinity.

    The Riccati variable ``m = psi'/psi`` obeys ``m' = q - z - m^2`` and is
    integrated from ``xmax`` down to 0, seeded with ``i sqrt(z - q(xmax))``.
    In this form the inward growth of ``psi`` never overflows.
    """
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    if np.any(z.imag <= 0):
        raise ValueError("Weyl function needs Im z > 0")
    n = z.size
    seed = 1j * np.sqrt(z - complex(q(xmax)))
    seed = np.where(seed.imag < 0, -seed, seed)

    def rhs(x, y):
        m = y[:n] + 1j * y[n:]
        d = float(q(x)) - z - m * m
        return np.concatenate([d.real, d.imag])

    sol = solve_ivp(rhs, (xmax, 0.0), np.concatenate([seed.real, seed.imag]), method="DOP853",
                    rtol=tol, atol=1e-3 * tol)
    if sol.status != 0:
        raise IntegrationError(sol.message, float(sol.t[-1]))
    m0 = sol.y[:n, -1] + 1j * sol.y[n:, -1]
    if not np.all(np.isfinite(m0)):
        raise IntegrationError("Weyl function overflowed", 0.0)
    return m0


def _neville_zero(eps, vals):
    """Polynomial extrapolation of ``vals(eps)`` to ``eps = 0``."""
    p = list(vals)
    n = len(eps)
    for k in range(1, n):
        for i in range(n - k):
            p[i] = (eps[i + k] * p[i] - eps[i] * p[i + 1]) / (eps[i + k] - eps[i])
    return p[0]


def weyl_density(q: SampledFunction, energies, eps_ladder=(0.08, 0.04, 0.02, 0.01),
                 xmax: float = 200.0, tol: float = 1e-10, energy_floor: float = 0.05,
                 atom_slope: float = -0.7) -> SpectralDensityEstimate:
    """Spectral density ``Im m(E + i0)/pi`` of ``-u'' + q u`` with Dirichlet condition.

    ``Im m(E + i eps)`` is computed for every rung of ``eps_ladder`` and
    extrapolated to ``eps = 0`` by Richardson (Neville) extrapolation.  When
    ``Im m`` grows like ``1/eps`` (log-log slope below ``atom_slope``) the
    energy is listed as a point-mass candidate with weight ``eps Im m``.
    """
    E = np.asarray(energies, dtype=float)
    eps = np.sort(np.asarray(eps_ladder, dtype=float))[::-1]
    if eps.size < 3:
        raise ValueError("eps_ladder needs at least 3 rungs")
    if np.any(E < energy_floor):
        raise ValueError(f"energies below the floor {energy_floor}")
    z = (E[:, None] + 1j * eps[None, :]).ravel()
    m = weyl_m(q, z, xmax, tol).reshape(E.size, eps.size)
    im = m.imag
    dens = np.array([_neville_zero(eps, row) for row in im]) / np.pi
    slope = np.polyfit(np.log(eps), np.log(np.maximum(im, 1e-300)).T, 1)[0]
    masses = [(float(E[i]), float(eps[-1] * im[i, -1]))
              for i in np.flatnonzero(slope < atom_slope)]
    return SpectralDensityEstimate(E, dens, "weyl", masses, 1.0,
                                   "density = Im m(E+i0)/pi, Dirichlet condition at 0")


def calibrate_normalization(weyl: SpectralDensityEstimate, other: SpectralDensityEstimate):
    """Measure the constant ``c`` with ``weyl = c * other`` on the shared grid.

    Returns ``(calibrated_other, c, spread)`` where ``spread`` is the relative
    spread ``(max - min)/mean`` of the pointwise ratio.
    """
    if not np.allclose(weyl.param, other.param):
        raise ValueError("densities must share the parameter grid")
    ratio = weyl.density / other.density
    c = float(np.mean(ratio))
    spread = float((ratio.max() - ratio.min()) / abs(c))
    cal = replace(other, density=other.density * c, normalization=c,
                  normalization_note=f"measured against weyl_density, relative spread {spread:.2e}")
    return cal, c, spread


def _loglog_slope(x, y):
    keep = (x > 0) & (y > 0)
    if keep.sum() < 2:
        return float("nan")
    return float(np.polyfit(np.log(x[keep]), np.log(y[keep]), 1)[0])


def secC_lemma_check(A: SampledFunction, xmax: float, tol: float = 1e-9, step: float | None = None,
                     pad: float = 40.0) -> dict:
    """Numbers behind the conditions on an oscillating Krein coefficient.

    Computes on ``[0, xmax]``

    * the tail functional ``T(x) = e^x int_x^inf e^-s A(s) ds`` (from
      ``T' = T - A`` integrated inward from ``xmax + pad``), its supremum over
      the last decade and the power-law decay of its envelope;
    * the running ``L1`` norm of ``A T``;
    * ``sup |P*(x, i)|``, from the Krein system at ``lam = i`` (the rescaled
      form ``P = e^-x Q`` is the same system), and its growth over the last
      decade;
    * the running ``L2`` norm of ``A`` with its slope against ``ln x`` over
      the last decade.
    """
    if step is None:
        step = 0.005
    x = np.linspace(0.0, xmax, int(round(xmax / step)) + 1)
    Ax = np.asarray(A(x), dtype=float)
    if not np.all(np.isfinite(Ax)):
        raise ValueError("A must be bounded on the grid")

    # where A underflows to 0 the embedded error estimates are both 0 and
    # scipy forms 0/0; the step is still accepted correctly
    with np.errstate(invalid="ignore"):
        sol = solve_ivp(lambda s, y: [y[0] - float(A(s))], (xmax + pad, 0.0), [0.0],
                        method="DOP853", t_eval=x[::-1], rtol=tol, atol=1e-3 * tol,
                        max_step=0.25)
    if sol.status != 0:
        raise IntegrationError(sol.message, float(sol.t[-1]))
    T = sol.y[0][::-1]

    L1 = cumulative_simpson(np.abs(Ax * T), x=x, initial=0.0)
    L2 = cumulative_simpson(Ax * Ax, x=x, initial=0.0)

    kt = integrate_krein(A, 1j, xmax, tol, positions=x[::10])
    absS = np.abs(kt.Pstar)
    xs = kt.positions
    lo = xmax / 10
    decade = x >= lo
    sup_before = absS[xs <= lo].max()
    sup_all = absS.max()

    # envelope of |T|: maxima over 20 log-spaced windows of the last decade
    edges = np.geomspace(lo, xmax, 21)
    env_x, env = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        sel = (x >= a) & (x <= b)
        if sel.any():
            env_x.append(np.sqrt(a * b))
            env.append(np.abs(T[sel]).max())
    i_lo = np.searchsorted(x, lo)
    return {
        "xmax": float(xmax),
        "tail_functional_sup_last_decade": float(np.abs(T[decade]).max()),
        "tail_functional_decay_exponent": _loglog_slope(np.array(env_x), np.array(env)),
        "L1_AT": float(L1[-1]),
        "L1_AT_last_decade": float(L1[-1] - L1[i_lo]),
        "sup_Pstar": float(sup_all),
        "sup_Pstar_last_decade_growth": float(sup_all / sup_before - 1.0),
        "L2_A": float(L2[-1]),
        "L2_A_last_decade": float(L2[-1] - L2[i_lo]),
        "L2_A_log_slope": float((L2[-1] - L2[i_lo]) / math.log(xmax / lo)),
    }


def write_density_csv(path, est: SpectralDensityEstimate) -> None:
    """Write ``param,density,method,normalization`` rows."""
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["param", "density", "method", "normalization"])
        for p, d in zip(est.param, est.density):
            wr.writerow([f"{p:.12g}", f"{d:.12e}", est.method, f"{est.normalization:.12g}"])
