"""Coefficient functions on the half-line.

A :class:`SampledFunction` holds samples of a real or complex function on a
strictly increasing grid, an optional closed-form evaluator and an optional
power-law tail model used beyond the last node.  :func:`make_family` builds
the potential families used throughout the package, :func:`tail_integral`
computes ``W(x) = int_x^inf q`` and :func:`cos_transform_synthesize` builds a
potential from samples of its cosine transform.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable

import mpmath
import numpy as np
from scipy import special
from scipy.interpolate import CubicSpline

__all__ = [
    "TailModel",
    "SampledFunction",
    "CoefficientBundle",
    "FAMILIES",
    "uniform_grid",
    "make_family",
    "tail_integral",
    "smooth_cutoff",
    "filon_cos",
    "filon_sin",
    "cos_transform_synthesize",
    "read_csv",
    "write_csv",
]


@dataclass(frozen=True)
class TailModel:
    """Power-law tail ``c (x + shift)^(-p)``, optionally times ``sin(w x + phi)``.

    ``kind`` is ``"power"`` or ``"sin"``; a cosine tail is a sine tail with
    ``phase + pi/2``.
    """

    amplitude: float
    exponent: float
    kind: str = "power"
    freq: float = 0.0
    phase: float = 0.0
    shift: float = 1.0

    def __post_init__(self):
        if not math.isfinite(self.exponent):
            raise ValueError("tail exponent must be finite")
        if self.kind not in ("power", "sin"):
            raise ValueError(f"unknown tail kind {self.kind!r}")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        base = self.amplitude * (x + self.shift) ** (-self.exponent)
        if self.kind == "sin":
            base = base * np.sin(self.freq * x + self.phase)
        return base

    def integral_from(self, x: float) -> float:
        """``int_x^inf`` of the tail model, in closed form."""
        X = x + self.shift
        if X <= 0:
            raise ValueError("tail model evaluated at or left of its singularity")
        p = self.exponent
        if self.kind == "power" or self.freq == 0.0:
            s = 1.0 if self.kind == "power" else math.sin(self.phase)
            if p <= 1:
                raise ValueError(f"divergent tail integral: exponent {p} <= 1")
            return s * self.amplitude * X ** (1 - p) / (p - 1)
        if p <= 0:
            raise ValueError(f"divergent oscillatory tail integral: exponent {p} <= 0")
        val = oscillatory_tail(p, self.freq, X)
        return float(self.amplitude * (np.exp(1j * (self.phase - self.freq * self.shift)) * val).imag)

    def antiderivative_model(self) -> "TailModel":
        """Leading-order tail model of ``int_x^inf`` of this tail."""
        if self.kind == "power":
            return TailModel(self.amplitude / (self.exponent - 1), self.exponent - 1,
                             shift=self.shift)
        return TailModel(self.amplitude / self.freq, self.exponent, "sin", self.freq,
                         self.phase + math.pi / 2, self.shift)


def oscillatory_tail(p: float, w: float, X: float) -> complex:
    """``int_X^inf t^(-p) exp(i w t) dt`` for ``X > 0``, ``p > 0``, ``w != 0``."""
    if w < 0:
        return oscillatory_tail(p, -w, X).conjugate()
    z = -1j * w
    val = mpmath.power(z, p - 1) * mpmath.gammainc(1 - p, z * X)
    return complex(val)


@dataclass(frozen=True, eq=False)
class SampledFunction:
    """Samples of a function on ``[grid[0], grid[-1]]`` plus a tail model.

    Evaluation uses ``exact`` when a closed form is attached.  Otherwise the
    samples are interpolated by a not-a-knot cubic spline inside the grid;
    beyond the last node the tail model is used (zero when there is none).
    """

    grid: np.ndarray
    values: np.ndarray
    tail: TailModel | None = None
    exact: Callable | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float)
        values = np.asarray(self.values)
        if values.dtype.kind not in "fc":
            values = values.astype(float)
        if grid.ndim != 1 or grid.size < 2:
            raise ValueError("grid must be one-dimensional with at least two nodes")
        if np.any(np.diff(grid) <= 0):
            raise ValueError("grid must be strictly increasing")
        if grid[0] < 0:
            raise ValueError("grid must lie in x >= 0")
        if values.shape != grid.shape:
            raise ValueError("values and grid shapes differ")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)

    @classmethod
    def from_callable(cls, f, grid, tail=None, meta=None):
        grid = np.asarray(grid, dtype=float)
        return cls(grid, f(grid), tail=tail, exact=f, meta=dict(meta or {}))

    @classmethod
    def zeros(cls, grid):
        def zero(x):
            return np.zeros_like(np.asarray(x, dtype=float))

        return cls.from_callable(zero, grid)

    @property
    def is_complex(self) -> bool:
        return self.values.dtype.kind == "c"

    @property
    def xmax(self) -> float:
        return float(self.grid[-1])

    def spline(self) -> CubicSpline:
        sp = self.__dict__.get("_spline")
        if sp is None:
            sp = CubicSpline(self.grid, self.values)
            object.__setattr__(self, "_spline", sp)
        return sp

    def __call__(self, x):
        if self.exact is not None:
            return self.exact(x)
        x = np.asarray(x, dtype=float)
        inside = self.spline()(np.minimum(x, self.grid[-1]))
        if np.all(x <= self.grid[-1]):
            return inside
        outside = self.tail(x) if self.tail is not None else np.zeros_like(x)
        return np.where(x <= self.grid[-1], inside, outside)

    def derivative(self, x=None):
        """Derivative of the interpolating spline (at the nodes by default)."""
        if self.grid.size < 4:
            raise ValueError("grid too coarse for the cubic derivative stencil")
        x = self.grid if x is None else np.asarray(x, dtype=float)
        return self.spline()(x, 1)

    def resample(self, grid) -> "SampledFunction":
        grid = np.asarray(grid, dtype=float)
        return SampledFunction(grid, self(grid), self.tail, self.exact, dict(self.meta))


@dataclass(frozen=True, eq=False)
class CoefficientBundle:
    """Consistent coefficient functions for one potential.

    ``A`` is the Krein coefficient ``A(x) = a(x/2)/2`` and ``b`` the imaginary
    part coefficient (zero for a real accelerant).  Fields a family cannot
    give in closed form are ``None``.
    """

    q: SampledFunction | None
    W: SampledFunction | None
    a: SampledFunction | None = None
    A: SampledFunction | None = None
    b: SampledFunction | None = None
    qhat: SampledFunction | None = None
    provenance: dict = field(default_factory=dict)

    def residuals(self) -> dict:
        """Interior residuals of ``W' = -q``, ``q = a^2 + a'`` and ``A(x) = a(x/2)/2``."""
        out = {}
        if self.q is not None and self.W is not None:
            g = self.W.grid
            h = np.diff(g).min() * 1e-3
            x = g[1:-1]
            dW = (self.W(x + h) - self.W(x - h)) / (2 * h)
            out["W_prime_plus_q"] = float(np.max(np.abs(dW + self.q(x))))
        if self.q is not None and self.a is not None:
            g = self.a.grid
            h = np.diff(g).min() * 1e-3
            x = g[1:-1]
            da = (self.a(x + h) - self.a(x - h)) / (2 * h)
            out["riccati"] = float(np.max(np.abs(self.a(x) ** 2 + da - self.q(x))))
        if self.a is not None and self.A is not None:
            x = self.A.grid[self.A.grid / 2 <= self.a.xmax]
            out["A_half_a"] = float(np.max(np.abs(self.A(x) - 0.5 * self.a(x / 2))))
        return out


def uniform_grid(xmax: float, step: float = 0.05, x0: float = 0.0) -> np.ndarray:
    n = int(round((xmax - x0) / step)) + 1
    return np.linspace(x0, xmax, max(n, 2))


def _as_grid(grid):
    if grid is None:
        return uniform_grid(100.0)
    if isinstance(grid, dict):
        return uniform_grid(float(grid.get("xmax", 100.0)), float(grid.get("step", 0.05)))
    return np.asarray(grid, dtype=float)


def _free(params, grid):
    z = SampledFunction.zeros(grid)
    return dict(q=z, W=z, a=z, A=z, b=z)


def _power_tail_W(params, grid):
    gamma = float(params.get("gamma", 0.2))
    sign = float(params.get("sign", -1.0))
    p = float(params.get("power", 1.0))
    strict = bool(params.get("strict", False))
    if not gamma > 0:
        raise ValueError(f"power_tail_W needs gamma > 0, got {gamma}")
    if sign not in (-1.0, 1.0):
        raise ValueError(f"sign must be +1 or -1, got {sign}")
    if p <= 0:
        raise ValueError(f"power must be positive, got {p}")
    if strict and (gamma >= 0.25 or p < 1):
        raise ValueError(f"strict regime needs gamma < 1/4 and power >= 1 (gamma={gamma}, power={p})")
    g = sign * gamma

    W = SampledFunction.from_callable(lambda x: g * (np.asarray(x) + 1.0) ** (-p), grid,
                                      tail=TailModel(g, p))
    q = SampledFunction.from_callable(lambda x: g * p * (np.asarray(x) + 1.0) ** (-p - 1), grid,
                                      tail=TailModel(g * p, p + 1))
    out = dict(q=q, W=W)
    disc = 1.0 + 4.0 * g
    if p == 1.0 and disc >= 0:
        # small root of c = c^2 - g
        c = (1.0 - math.sqrt(disc)) / 2.0
        out["a"] = SampledFunction.from_callable(lambda x: c / (np.asarray(x) + 1.0), grid,
                                                 tail=TailModel(c, 1.0), meta={"c": c})
        out["A"] = SampledFunction.from_callable(lambda x: c / (np.asarray(x) + 2.0), grid,
                                                 tail=TailModel(c, 1.0, shift=2.0))
        out["b"] = SampledFunction.zeros(grid)
    return out


def _vnw(params, grid):
    amp = float(params.get("amplitude", 8.0))

    def q(x):
        x = np.asarray(x, dtype=float)
        return 2 * amp * np.sinc(2 * x / np.pi)

    def W(x):
        x = np.asarray(x, dtype=float)
        return amp * (np.pi / 2 - special.sici(2 * x)[0])

    return dict(q=SampledFunction.from_callable(q, grid, TailModel(amp, 1.0, "sin", 2.0, 0.0, 0.0)),
                W=SampledFunction.from_callable(W, grid, TailModel(amp / 2, 1.0, "sin", 2.0, np.pi / 2, 0.0)))


def _oscillatory_A(params, grid):
    alpha = float(params.get("alpha", 0.25))
    beta = float(params.get("beta", 1.6))
    scale = float(params.get("scale", 1.0))
    if alpha <= 0 or beta <= 0:
        raise ValueError("oscillatory_A needs alpha > 0 and beta > 0")

    def A(x):
        x = np.asarray(x, dtype=float)
        return scale * (x * x + 1) ** (-alpha) * np.sin(x ** beta)

    def dA(x):
        x = np.asarray(x, dtype=float)
        env = (x * x + 1) ** (-alpha)
        with np.errstate(divide="ignore", invalid="ignore"):
            inner = np.where(x > 0, beta * x ** (beta - 1), 0.0 if beta > 1 else np.inf)
        return scale * (-2 * alpha * x * env / (x * x + 1) * np.sin(x ** beta)
                        + env * inner * np.cos(x ** beta))

    def a(x):
        return 2 * A(2 * np.asarray(x, dtype=float))

    def q(x):
        x = np.asarray(x, dtype=float)
        return a(x) ** 2 + 4 * dA(2 * x)

    return dict(q=SampledFunction.from_callable(q, grid), W=None,
                a=SampledFunction.from_callable(a, grid),
                A=SampledFunction.from_callable(A, grid),
                b=SampledFunction.zeros(grid))


def _gaussian_qhat(params, grid):
    scale = float(params.get("scale", 1.0))
    width = float(params.get("width", 1.0))
    # qhat(w) = scale exp(-(w/width)^2)  <->  q(x) = scale width exp(-(width x)^2/4)/sqrt(pi)
    omega = uniform_grid(float(params.get("omega_max", 12.0 * width)),
                         float(params.get("omega_step", 0.01 * width)))

    def qhat(w):
        return scale * np.exp(-(np.asarray(w, dtype=float) / width) ** 2)

    def q(x):
        x = np.asarray(x, dtype=float)
        return scale * width * np.exp(-(width * x) ** 2 / 4) / math.sqrt(math.pi)

    def W(x):
        return scale * special.erfc(width * np.asarray(x, dtype=float) / 2)

    return dict(q=SampledFunction.from_callable(q, grid), W=SampledFunction.from_callable(W, grid),
                qhat=SampledFunction.from_callable(qhat, omega))


def _constant_A(params, grid):
    c = float(params.get("c", 0.1))

    def const(v):
        return lambda x: np.full_like(np.asarray(x, dtype=float), v)

    return dict(q=SampledFunction.from_callable(const(4 * c * c), grid), W=None,
                a=SampledFunction.from_callable(const(2 * c), grid),
                A=SampledFunction.from_callable(const(c), grid),
                b=SampledFunction.zeros(grid))


FAMILIES = {
    "free": _free,
    "power_tail_W": _power_tail_W,
    "vnw": _vnw,
    "oscillatory_A": _oscillatory_A,
    "gaussian_qhat": _gaussian_qhat,
    "constant_A": _constant_A,
}


def make_family(name: str, params: dict | None = None, grid=None) -> CoefficientBundle:
    """Build a coefficient bundle for a named family.

    Parameters
    ----------
    name : str
        One of ``free``, ``power_tail_W`` (``W = sign gamma (x+1)^-power``),
        ``vnw`` (``q = 8 sin(2x)/x``), ``oscillatory_A``
        (``A = (x^2+1)^-alpha sin(x^beta)``), ``gaussian_qhat``
        (``qhat = exp(-w^2)``) and ``constant_A``.
    params : dict, optional
        Family parameters.
    grid : array_like or dict, optional
        Grid nodes, or ``{"xmax": ..., "step": ...}``.
    """
    if name not in FAMILIES:
        raise ValueError(f"unknown family {name!r}; known: {sorted(FAMILIES)}")
    params = dict(params or {})
    fields = FAMILIES[name](params, _as_grid(grid))
    return CoefficientBundle(provenance={"family": name, "params": params}, **fields)


def _gauss_panels(f, grid, order=8):
    """Integrals of ``f`` over every grid interval by Gauss-Legendre panels."""
    t, w = np.polynomial.legendre.leggauss(order)
    lo, hi = grid[:-1], grid[1:]
    mid, half = (lo + hi) / 2, (hi - lo) / 2
    x = mid[:, None] + half[:, None] * t[None, :]
    return (f(x) * w[None, :]).sum(axis=1) * half


def tail_integral(q: SampledFunction) -> SampledFunction:
    """``W(x) = int_x^inf q(s) ds`` on the grid of ``q``.

    Grid intervals are integrated by 8-point Gauss-Legendre panels on the
    closed form when one is attached, otherwise exactly on the interpolating
    spline; the part beyond the grid comes from the tail model in closed form.
    """
    g = q.grid
    tail_part = q.tail.integral_from(g[-1]) if q.tail is not None else 0.0
    if q.exact is not None:
        panels = _gauss_panels(q.exact, g)
    else:
        anti = q.spline().antiderivative()
        panels = np.diff(anti(g))
    inner = np.concatenate([np.cumsum(panels[::-1])[::-1], [0.0]])
    W = inner + tail_part
    tail = q.tail.antiderivative_model() if q.tail is not None else None
    return SampledFunction(g, W, tail=tail, meta={"rule": "gauss8-panels" if q.exact else "spline"})


def smooth_cutoff(omega, halfwidth: float = 1.0):
    """Even C-infinity cutoff: 1 for ``|w| <= halfwidth/2``, 0 for ``|w| >= halfwidth``."""
    t = np.abs(np.asarray(omega, dtype=float)) / halfwidth
    s = np.clip(2 * t - 1, 0.0, 1.0)

    def bump(u):
        with np.errstate(divide="ignore"):
            return np.where(u > 0, np.exp(-1 / np.where(u > 0, u, 1.0)), 0.0)

    num = bump(1 - s)
    return num / (num + bump(s))


def _filon_weights(theta):
    """Filon-Simpson coefficients alpha, beta, gamma with small-theta series."""
    theta = np.asarray(theta, dtype=float)
    small = np.abs(theta) < 1e-2
    th = np.where(small, 1.0, theta)
    s, c = np.sin(th), np.cos(th)
    t3 = th ** 3
    alpha = (th ** 2 + th * s * c - 2 * s * s) / t3
    beta = 2 * (th * (1 + c * c) - 2 * s * c) / t3
    gamma = 4 * (s - th * c) / t3
    t = theta
    alpha_s = 2 * t ** 3 / 45 - 2 * t ** 5 / 315 + 2 * t ** 7 / 4725
    beta_s = 2 / 3 + 2 * t ** 2 / 15 - 4 * t ** 4 / 105 + 2 * t ** 6 / 567
    gamma_s = 4 / 3 - 2 * t ** 2 / 15 + t ** 4 / 210 - t ** 6 / 11340
    return (np.where(small, alpha_s, alpha), np.where(small, beta_s, beta),
            np.where(small, gamma_s, gamma))


def _check_filon(f, h):
    f = np.asarray(f)
    if f.shape[0] < 3 or f.shape[0] % 2 == 0:
        raise ValueError("Filon quadrature needs an odd number (>= 3) of uniform samples")
    if h <= 0:
        raise ValueError("sample spacing must be positive")
    return f


def filon_cos(f, h: float, k, x0: float = 0.0):
    """``int_{x0}^{x0+(n-1)h} f(x) cos(k x) dx`` by Filon's rule.

    ``f`` holds ``n`` (odd) samples on a uniform grid.  Accurate for any ``k``,
    in particular when ``k h`` is not small.
    """
    f = _check_filon(f, h)
    k = np.atleast_1d(np.asarray(k, dtype=float))
    n = f.shape[0]
    x = x0 + h * np.arange(n)
    a, b, g = _filon_weights(k * h)
    ck = np.cos(np.outer(k, x))
    sk = np.sin(np.outer(k, x))
    even = ck[:, 0::2] @ f[0::2] - 0.5 * (ck[:, 0] * f[0] + ck[:, -1] * f[-1])
    odd = ck[:, 1::2] @ f[1::2]
    ends = f[-1] * sk[:, -1] - f[0] * sk[:, 0]
    return h * (a * ends + b * even + g * odd)


def filon_sin(f, h: float, k, x0: float = 0.0):
    """``int_{x0}^{x0+(n-1)h} f(x) sin(k x) dx`` by Filon's rule."""
    f = _check_filon(f, h)
    k = np.atleast_1d(np.asarray(k, dtype=float))
    n = f.shape[0]
    x = x0 + h * np.arange(n)
    a, b, g = _filon_weights(k * h)
    ck = np.cos(np.outer(k, x))
    sk = np.sin(np.outer(k, x))
    even = sk[:, 0::2] @ f[0::2] - 0.5 * (sk[:, 0] * f[0] + sk[:, -1] * f[-1])
    odd = sk[:, 1::2] @ f[1::2]
    ends = f[0] * ck[:, 0] - f[-1] * ck[:, -1]
    return h * (a * ends + b * even + g * odd)


def cos_transform_synthesize(qhat: SampledFunction, cutoff_halfwidth: float = 1.0, x=None):
    """Potential, its smooth-cutoff remainder and tail integral from a cosine transform.

    ``qhat`` is split as ``qhat(0) chi + psihat`` with the smooth cutoff
    ``chi`` of :func:`smooth_cutoff`.  Returns ``(q, psi, W)`` sampled on
    ``x`` where ``q = (2/pi) int qhat(w) cos(w x) dw``, ``psi`` is the same
    transform of ``psihat`` and ``W(x) = int_x^inf psi``, computed as
    ``-(2/pi) int psihat(w) sin(w x)/w dw``.  ``qhat`` must be sampled on a
    uniform grid starting at ``w = 0`` with an odd number of nodes.
    """
    w = qhat.grid
    h = float(w[1] - w[0])
    if w[0] != 0.0 or not np.allclose(np.diff(w), h, rtol=1e-9, atol=0):
        raise ValueError("qhat must be sampled on a uniform grid starting at 0")
    if h > cutoff_halfwidth / 16:
        raise ValueError(f"qhat spacing {h} too coarse to resolve the cutoff "
                         f"(need <= {cutoff_halfwidth / 16})")
    vals = np.asarray(qhat.values, dtype=float)
    if vals.size % 2 == 0:
        w, vals = w[:-1], vals[:-1]
    if x is None:
        x = uniform_grid(min(np.pi / h / 4, 200.0), min(0.05, np.pi / w[-1]))
    x = np.asarray(x, dtype=float)

    chi = smooth_cutoff(w, cutoff_halfwidth)
    q0 = vals[0]
    psihat = vals - q0 * chi
    # psihat vanishes at 0; psihat/w extended by linear extrapolation there
    ratio = np.empty_like(psihat)
    ratio[1:] = psihat[1:] / w[1:]
    ratio[0] = 2 * ratio[1] - ratio[2]

    q = (2 / np.pi) * filon_cos(vals, h, x)
    psi = (2 / np.pi) * filon_cos(psihat, h, x)
    W = -(2 / np.pi) * filon_sin(ratio, h, x)
    meta = {"q0": float(q0), "cutoff_halfwidth": cutoff_halfwidth, "rule": "filon"}
    return (SampledFunction(x, q, meta=dict(meta)), SampledFunction(x, psi, meta=dict(meta)),
            SampledFunction(x, W, meta=dict(meta)))


def read_csv(path) -> SampledFunction:
    """Read ``x,value`` (real) or ``x,re,im`` (complex) coefficient files."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header = [h.strip() for h in rows[0]]
    data = np.array([[float(v) for v in r] for r in rows[1:] if r], dtype=float)
    if header == ["x", "value"]:
        return SampledFunction(data[:, 0], data[:, 1])
    if header == ["x", "re", "im"]:
        return SampledFunction(data[:, 0], data[:, 1] + 1j * data[:, 2])
    raise ValueError(f"unrecognised coefficient header {header}")


def write_csv(path, f: SampledFunction) -> None:
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        if f.is_complex:
            wr.writerow(["x", "re", "im"])
            for x, v in zip(f.grid, f.values):
                wr.writerow([f"{x:.15g}", f"{v.real:.15g}", f"{v.imag:.15g}"])
        else:
            wr.writerow(["x", "value"])
            for x, v in zip(f.grid, f.values):
                wr.writerow([f"{x:.15g}", f"{v:.15g}"])
