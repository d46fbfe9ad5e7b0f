"""Pipelines behind the ``krein run`` presets.

Each pipeline takes a validated :class:`~krein.cli.ScenarioConfig` and a
:class:`Report` collector, writes CSV tables through the collector and
records named pass/fail checks.  A failing stage is recorded and the
pipeline moves on, so partial results survive numeric failures.
"""

from __future__ import annotations

import contextlib
import csv
import math
import os
import traceback
from concurrent.futures import ThreadPoolExecutor

import numpy as np
from scipy.integrate import cumulative_simpson

from . import accelerant, asympt, coeffs, riccati, spectral, systems
from .coeffs import SampledFunction, TailModel

PRESETS = {
    "free_baseline": ("zero potential: closed-form Krein, Dirac and Weyl-density checks",
                      "a = b = 0: P = exp(i lam r), P* = 1, Phi = cos, Psi = sin"),
    "thm1_regime": ("Riccati contraction, eigenfunction bounds, sandwich growth, density, no embedded dip",
                    "|W| <= gamma/(x+1), gamma < 1/4: bounded eigenfunctions, purely a.c. spectrum"),
    "thm2_lp_tails": ("bounded transfer matrices for W = (x+1)^-0.8 and the iterated series for Q",
                      "W in L^p via a = -W: bounded transfer matrices, iterated series for Q"),
    "thm3_smooth_qhat": ("potential synthesized from a smooth cosine transform and its spectral checks",
                         "potentials given by a smooth cosine transform qhat"),
    "vnw": ("embedded-eigenvalue scan for q = 8 sin(2x)/x, stability under xmax doubling",
            "q = 8 sin(2x)/x: embedded eigenvalue at energy 1"),
    "secC_example_grid": ("tail functional, sup|P*(x,i)| and L2 growth over an (alpha, beta) grid",
                          "A = (x^2+1)^-alpha sin(x^beta): bounded P*(x, i) when 2 alpha + beta/2 > 1"),
    "accelerant_roundtrip": ("resolvent trace for H = const, Nystrom order and two-route P, P*",
                             "Gamma + H Gamma = H, A(r) = Gamma_r(0, r), P and P* from Gamma"),
}


def fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.12e}"
    return str(v)


def _plain(v):
    """JSON-friendly copy of numpy scalars, complex numbers and containers."""
    if isinstance(v, dict):
        return {str(k): _plain(x) for k, x in v.items()}
    if isinstance(v, (list, tuple, np.ndarray)):
        return [_plain(x) for x in v]
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (complex, np.complexfloating)):
        return {"re": float(v.real), "im": float(v.imag)}
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else str(v)
    return v


class Report:
    """Collects files and checks for one scenario run."""

    def __init__(self, out_dir, threads: int = 1):
        self.out_dir = out_dir
        self.threads = max(1, int(threads))
        self.files = []
        self.checks = []
        self.info = {}

    def path(self, name):
        return os.path.join(self.out_dir, name)

    def add_file(self, name):
        if name not in self.files:
            self.files.append(name)
        return self.path(name)

    def table(self, name, header, rows):
        with open(self.add_file(name), "w", newline="") as fh:
            wr = csv.writer(fh, lineterminator="\n")
            wr.writerow(header)
            for row in rows:
                wr.writerow([fmt(v) for v in row])

    def check(self, name, passed, value=None, threshold=None, note=""):
        self.checks.append({"name": name, "passed": bool(passed), "value": _plain(value),
                            "threshold": _plain(threshold), "note": note})

    @contextlib.contextmanager
    def stage(self, name):
        try:
            yield
        except Exception as exc:  # recorded, run continues
            self.checks.append({"name": name, "passed": False, "value": None, "threshold": None,
                                "note": f"error: {type(exc).__name__}: {exc}",
                                "traceback": traceback.format_exc(limit=3)})

    def map(self, fn, items):
        """Ordered map, threaded when ``threads > 1``."""
        items = list(items)
        if self.threads == 1 or len(items) < 2:
            return [fn(i) for i in items]
        with ThreadPoolExecutor(max_workers=self.threads) as ex:
            return list(ex.map(fn, items))


def _lam_tag(lam):
    return f"{lam:g}".replace("-", "m")


def _grid_energies(band, n):
    return np.linspace(float(band[0]), float(band[1]), int(n))


def _u_bounds(x, u, kappa, lam):
    """Largest ratios of ``|u|`` to the two eigenfunction envelopes."""
    derived = (x + 1.0) ** kappa / lam
    stated = derived / 2.0 ** kappa
    return float(np.max(np.abs(u) / derived)), float(np.max(np.abs(u) / stated))


# ---------------------------------------------------------------- free

def run_free_baseline(cfg, rep: Report):
    xmax = cfg.xmax
    x = systems.default_positions(xmax, 0.1)
    zero = SampledFunction.zeros(coeffs.uniform_grid(xmax, 1.0))
    tol = min(cfg.tol, 1e-12)

    with rep.stage("krein_closed_form"):
        def one(lam):
            kt = systems.integrate_krein(zero, lam, xmax, tol, positions=x)
            systems.write_trajectory_csv(rep.add_file(f"traj_lambda_{_lam_tag(lam)}.csv"), kt)
            return max(np.max(np.abs(kt.P - np.exp(1j * lam * x))), np.max(np.abs(kt.Pstar - 1)))
        err = max(rep.map(one, cfg.lambdas))
        rep.check("krein_closed_form", err <= 1e-10, err, 1e-10, "P = exp(i lam r), P* = 1")

    with rep.stage("dirac_closed_form"):
        def one(lam):
            d = systems.integrate_dirac(zero, None, lam, xmax, tol, positions=x)
            return max(np.max(np.abs(d.Phi - np.cos(lam * x))), np.max(np.abs(d.Psi - np.sin(lam * x))))
        err = max(rep.map(one, cfg.lambdas))
        rep.check("dirac_closed_form", err <= 1e-10, err, 1e-10, "Phi = cos, Psi = sin")

    E = _grid_energies(cfg.energy_band, cfg.n_energies)
    with rep.stage("weyl_density_free"):
        w = spectral.weyl_density(zero, E, cfg.eps_ladder, xmax=min(xmax, 200.0), tol=cfg.tol)
        err = float(np.max(np.abs(w.density - np.sqrt(E) / np.pi)))
        rep.check("weyl_density_free", err <= 1e-4, err, 1e-4, "density = sqrt(E)/pi")
        alpha = np.linspace(0.0, math.sqrt(E[-1]) * 1.01, 2001)
        sig = spectral.SpectralDensityEstimate(alpha, np.ones_like(alpha), "closed_form")
        cal, c, spread = spectral.calibrate_normalization(w, spectral.rho_from_sigma(sig, E))
        rep.check("normalization_consistency", spread < 1e-3, spread, 1e-3,
                  f"measured constant {c:.10g}")
        spectral.write_density_csv(rep.add_file("density_weyl.csv"), w)
        spectral.write_density_csv(rep.add_file("density_rho_from_sigma.csv"), cal)

    with rep.stage("szego_integrals"):
        lam = np.geomspace(1e-12, 1e12, 4001)
        v, finite = spectral.weighted_log_integral(
            spectral.SpectralDensityEstimate.closed_form(lambda t: np.sqrt(t) / (2 * np.pi), lam), "t1")
        ref = -math.pi * math.log(2 * math.pi)
        rep.check("t1_free_density", abs(v - ref) <= 1e-3 and finite, v, ref, "tolerance 1e-3")
        lam2 = np.linspace(0.0, 1e3, 4001)
        v2, finite2 = spectral.weighted_log_integral(
            spectral.SpectralDensityEstimate.closed_form(np.ones_like, lam2), "int2")
        rep.check("int2_unit_density", v2 == 0.0 and finite2, v2, 0.0)

    with rep.stage("embedded_scan_free"):
        s = asympt.embedded_scan(zero, _grid_energies(cfg.scan_band, cfg.n_scan), min(xmax, 200.0), cfg.tol)
        asympt.write_scan_csv(rep.add_file("scan.csv"), s)
        rep.check("embedded_scan_no_dip", not s.minima, len(s.minima), 0)


# ---------------------------------------------------------------- |W| <= gamma/(x+1)

def run_thm1_regime(cfg, rep: Report):
    gamma = float(cfg.params.get("gamma", 0.2))
    xmax = cfg.xmax
    kappa = riccati.kappa_of(gamma)
    rep.info["kappa"] = kappa
    bundle = coeffs.make_family("power_tail_W", {"gamma": gamma, "sign": -1, "strict": True},
                                grid=coeffs.uniform_grid(xmax, cfg.step))

    sol = None
    with rep.stage("riccati_contraction"):
        Wr = coeffs.make_family("power_tail_W", {"gamma": gamma, "sign": -1},
                                grid=riccati.riccati_grid()).W
        sol = riccati.solve_contraction(Wr, gamma, tol=1e-10)
        x = sol.a.grid
        err = riccati.weighted_metric(x, sol.a.values, kappa / (x + 1))
        rep.check("riccati_closed_form", err <= 1e-8, err, 1e-8, "a = kappa/(x+1)")
        rate = max(sol.contraction_rates)
        rep.check("contraction_rate", rate <= 2 * kappa + 0.05, rate, 2 * kappa + 0.05)
        omega = float(np.max((x + 1) * np.abs(sol.a.values)))
        rep.check("omega_membership", omega <= kappa + 1e-12, omega, kappa + 1e-12)
        rep.table("riccati_a.csv", ["x", "value"], zip(x[::10], sol.a.values[::10]))

    a = sol.a if sol is not None else bundle.a
    A = SampledFunction.from_callable(lambda s: 0.5 * a(np.asarray(s) / 2),
                                      coeffs.uniform_grid(2 * xmax, 1.0), tail=TailModel(kappa / 2, 1.0, shift=2.0))
    a_fn = SampledFunction.from_callable(lambda s: a(s), coeffs.uniform_grid(xmax, 1.0))
    xs = np.linspace(0.0, xmax, int(xmax * 10) + 1)

    with rep.stage("Q_bound"):
        def one(lam):
            Q = systems.integrate_Q(A, lam, xmax, cfg.tol, positions=xs).values
            return float(np.max(np.abs(Q) / ((xs + 2) / 2) ** kappa))
        worst = max(rep.map(one, cfg.lambdas))
        rep.check("Q_bound", worst <= 1 + 1e-8, worst, 1.0, "|Q| <= ((x+2)/2)^kappa")

    us = {}
    with rep.stage("u_bound"):
        def one(lam):
            d = systems.integrate_dirac(a_fn, None, lam, xmax, cfg.tol, positions=xs)
            return d.Psi / lam
        for lam, u in zip(cfg.lambdas, rep.map(one, cfg.lambdas)):
            us[lam] = u
        ratios = [_u_bounds(xs, us[l], kappa, l) for l in cfg.lambdas]
        worst = max(r[0] for r in ratios)
        rep.check("u_bound", worst <= 1 + 1e-8, worst, 1.0, "|u| <= (x+1)^kappa/lam")
        rep.info["u_bound_with_2_pow_kappa"] = {fmt(l): r[1] for l, r in zip(cfg.lambdas, ratios)}
        rep.table("u_bound.csv", ["lambda", "ratio_to_(x+1)^k/lam", "ratio_to_(x+1)^k/(2^k lam)"],
                  [(l, r[0], r[1]) for l, r in zip(cfg.lambdas, ratios)])

    with rep.stage("growth_and_fit"):
        band = (1 - 2 * kappa - 0.1, 1 + 2 * kappa + 0.1)
        exps, fits = [], []
        for lam, u in us.items():
            N = cumulative_simpson(u * u, x=xs, initial=0.0)
            exps.append(asympt.growth_exponent(xs, N))
            fits.append(asympt.fit_sin(xs, u, lam, (xmax / 8, xmax, 14)))
        ok = all(band[0] <= e <= band[1] for e in exps)
        rep.check("growth_exponent", ok, exps, list(band))
        asympt.write_fit_csv(rep.add_file("fits.csv"), fits)
        f1 = [f for f in fits if f.lam == 1.0]
        if f1:
            rep.check("fit_residual_decreasing", f1[0].decaying, f1[0].residual_curve[-1], None,
                      "lambda = 1 residual curve")

    with rep.stage("subordinacy"):
        v, dv, u, du = systems.sl_solutions(bundle.q, 1.0, xs[1:], cfg.tol)
        d = asympt.subordinacy_sandwich(xs[1:], u, du, v, dv, kappa)
        rep.check("subordinacy_sandwich", d.verdict == "pass", [d.exponent_u, d.exponent_v],
                  [1 - 2 * kappa - 0.1, 1 + 2 * kappa + 0.1], f"zeta_max {d.zeta_max}, eta {d.eta}")

    with rep.stage("conservation_random"):
        rng = np.random.default_rng(cfg.seed)
        lams = rng.uniform(*cfg.lambda_band, size=cfg.n_samples)
        xr = np.linspace(0.0, xmax / 2, 2001)
        res = rep.map(lambda l: float(np.max(
            systems.integrate_krein(A, l, xmax / 2, cfg.tol, positions=xr).conserved_residuals)), lams)
        rep.table("conservation.csv", ["lambda", "max_conserved_residual"], zip(lams, res))
        rep.check("conservation", max(res) <= 1e-7, max(res), 1e-7)

    with rep.stage("weyl_density_positive"):
        E = _grid_energies(cfg.energy_band, cfg.n_energies)
        w = spectral.weyl_density(bundle.q, E, cfg.eps_ladder, xmax=min(xmax, 200.0), tol=cfg.tol)
        spectral.write_density_csv(rep.add_file("density_weyl.csv"), w)
        rep.check("weyl_density_positive", bool(np.all(w.density > 0)) and not w.point_masses,
                  float(w.density.min()), 0.0)

    with rep.stage("embedded_scan_no_dip"):
        s = asympt.embedded_scan(bundle.q, _grid_energies(cfg.scan_band, cfg.n_scan),
                                 min(xmax, 200.0), cfg.tol)
        asympt.write_scan_csv(rep.add_file("scan.csv"), s)
        rep.check("embedded_scan_no_dip", not s.minima, float(s.tail_ratio.min()), s.threshold)


# ---------------------------------------------------------------- L^p tails

def run_thm2_lp_tails(cfg, rep: Report):
    p = float(cfg.params.get("power", 0.8))
    amp = float(cfg.params.get("amplitude", 1.0))
    xmax = cfg.xmax
    grid = coeffs.uniform_grid(xmax, cfg.step)
    fam = coeffs.make_family("power_tail_W", {"gamma": amp, "sign": 1, "power": p}, grid=grid)
    W, q = fam.W, fam.q
    # a = -W gives q* = a^2 + a' = W^2 - W' = W^2 + q
    qstar = SampledFunction.from_callable(lambda s: W(s) ** 2 + q(s), grid)

    with rep.stage("transfer_bounded"):
        rng = np.random.default_rng(cfg.seed)
        lams = np.sort(rng.uniform(*cfg.lambda_band, size=cfg.n_samples))
        pos = np.linspace(1.0, xmax, int(xmax) )
        chunks = np.array_split(lams, max(1, min(rep.threads, lams.size)))
        ys = rep.map(lambda ch: systems.sl_sweep(qstar, ch ** 2, pos, cfg.tol), chunks)
        y = np.concatenate(ys)
        norms = np.sqrt(y[:, 0] ** 2 + y[:, 1] ** 2 + y[:, 2] ** 2 + y[:, 3] ** 2)
        half = pos <= xmax / 2
        growth = norms[:, ~half].max(axis=1) / norms[:, half].max(axis=1)
        bounded = growth <= 1.5
        frac = float(bounded.mean())
        rep.table("transfer_bounded.csv", ["lambda", "sup_norm", "growth_ratio", "bounded"],
                  zip(lams, norms.max(axis=1), growth, bounded))
        rep.check("transfer_bounded_fraction", frac >= cfg.pass_fraction, frac, cfg.pass_fraction,
                  "sup over the second half <= 1.5 x sup over the first half")

    with rep.stage("series_vs_ode"):
        c, p1 = 0.05, 1.5
        A = SampledFunction.from_callable(lambda s: c * (np.asarray(s) + 1) ** -p1,
                                          coeffs.uniform_grid(2000.0, 0.05), tail=TailModel(c, p1))
        bound = (c / (p1 - 1)) ** 4 / 24
        xg = coeffs.uniform_grid(2000.0, 0.05)
        rows, worst, mono = [], 0.0, True
        for lam in (0.7, 1.3):
            gaps = [asympt.ck_series_Q(A, lam, k, xg, compare=True).gap for k in range(0, 4)]
            mono = mono and all(g2 <= g1 for g1, g2 in zip(gaps, gaps[1:]))
            worst = max(worst, gaps[3])
            rows += [(lam, k, g) for k, g in enumerate(gaps)]
        rep.table("series_gaps.csv", ["lambda", "order", "gap"], rows)
        rep.check("series_order3_gap", worst <= bound, worst, bound, "(int |A|)^4/24")
        rep.check("series_gap_monotone", mono, None, None, "gap decreases with order")


# ---------------------------------------------------------------- cosine-transform potentials

def run_thm3_smooth_qhat(cfg, rep: Report):
    fam = coeffs.make_family("gaussian_qhat", cfg.params, grid=coeffs.uniform_grid(cfg.xmax, cfg.step))
    halfwidth = float(cfg.params.get("cutoff_halfwidth", 1.0))
    x = coeffs.uniform_grid(min(cfg.xmax, 40.0), 0.05)
    q = psi = Wpsi = None

    with rep.stage("synthesis"):
        q, psi, Wpsi = coeffs.cos_transform_synthesize(fam.qhat, halfwidth, x)
        err = float(np.max(np.abs(q.values - fam.q(x))))
        rep.check("synthesis_closed_form", err <= 1e-6, err, 1e-6, "q = exp(-x^2/4)/sqrt(pi)")
        dW = Wpsi.spline()(x[2:-2], 1)
        err = float(np.max(np.abs(dW + psi.values[2:-2])))
        rep.check("W_prime_equals_minus_psi", err <= 1e-4, err, 1e-4, "spline derivative of W")
        rep.table("synthesis.csv", ["x", "q", "psi", "W"], zip(x, q.values, psi.values, Wpsi.values))

    with rep.stage("round_trip"):
        omega = np.linspace(0.0, 4.0, 81)
        xf = coeffs.uniform_grid(40.0, 0.01)
        # q = (2/pi) int qhat cos  <=>  qhat = int q cos
        back = coeffs.filon_cos(fam.q(xf), 0.01, omega)
        err = float(np.max(np.abs(back - fam.qhat(omega))))
        rep.check("cosine_round_trip", err <= 1e-6, err, 1e-6, "band [0, 4]")

    with rep.stage("spectral_checks"):
        qq = fam.q
        E = _grid_energies(cfg.energy_band, cfg.n_energies)
        w = spectral.weyl_density(qq, E, cfg.eps_ladder, xmax=min(cfg.xmax, 200.0), tol=cfg.tol)
        spectral.write_density_csv(rep.add_file("density_weyl.csv"), w)
        rep.check("weyl_density_positive", bool(np.all(w.density > 0)), float(w.density.min()), 0.0)
        xs = np.linspace(0.0, cfg.xmax, int(cfg.xmax * 10) + 1)
        fits = []
        for lam in cfg.lambdas:
            v, dv, u, du = systems.sl_solutions(qq, lam, xs, cfg.tol)
            fits.append(asympt.fit_sin(xs, u, lam, (cfg.xmax / 4, cfg.xmax, 8)))
        asympt.write_fit_csv(rep.add_file("fits.csv"), fits)
        worst = max(float(f.residual_curve.max()) for f in fits)
        rep.check("sin_asymptotics", worst <= 1e-6, worst, 1e-6, "far-field residual of C sin(lam x + phi)")


# ---------------------------------------------------------------- von Neumann-Wigner

def run_vnw(cfg, rep: Report):
    xmax = cfg.xmax
    bundle = coeffs.make_family("vnw", cfg.params, grid=coeffs.uniform_grid(2 * xmax, cfg.step))
    E = _grid_energies(cfg.scan_band, cfg.n_scan)
    dE = float(E[1] - E[0]) if E.size > 1 else 0.0

    with rep.stage("tail_integral"):
        W = coeffs.tail_integral(bundle.q)
        err = float(abs(W(50.0) - bundle.W(50.0)))
        rep.check("tail_integral_at_50", err <= 1e-6, err, 1e-6, "against 8 (pi/2 - Si(100))")

    with rep.stage("embedded_scan"):
        scans = rep.map(lambda xm: asympt.embedded_scan(bundle.q, E, xm, cfg.tol), [xmax, 2 * xmax])
        rows = []
        for xm, s in zip([xmax, 2 * xmax], scans):
            asympt.write_scan_csv(rep.add_file(f"scan_xmax_{xm:g}.csv"), s)
            rows += [(xm, e, a, r, r / np.median(s.tail_ratio)) for e, a, r in s.minima]
        rep.table("dips.csv", ["xmax", "E", "alpha_star", "tail_ratio", "depth_vs_median"], rows)
        locs = [[m[0] for m in s.minima] for s in scans]
        hit = [[e for e in l if abs(e - 1.0) <= 0.02] for l in locs]
        ok = all(len(h) >= 1 for h in hit)
        stable = ok and abs(hit[0][0] - hit[1][0]) <= dE * (1 + 1e-9)
        rep.info["dips"] = {f"{xm:g}": s.minima for xm, s in zip([xmax, 2 * xmax], scans)}
        rep.check("dip_at_energy_1", ok, locs, [0.98, 1.02])
        rep.check("dip_stable_under_doubling", stable, locs, dE)

    with rep.stage("transfer_growth"):
        ts = systems.transfer_matrix(bundle.q, 1.0, [xmax / 2, xmax], cfg.tol)
        n1, n2 = (np.linalg.norm(t.matrix, 2) for t in ts)
        rep.check("transfer_norm_grows", n2 / n1 > 1.5, n2 / n1, 1.5, "energy 1, x = xmax/2 to xmax")


# ---------------------------------------------------------------- oscillating Krein coefficient

def run_secC_example_grid(cfg, rep: Report):
    xmax = cfg.xmax

    def osc(alpha, beta):
        return coeffs.make_family("oscillatory_A", {"alpha": alpha, "beta": beta},
                                  grid=coeffs.uniform_grid(xmax, 1.0)).A

    with rep.stage("anchor_example"):
        d = spectral.secC_lemma_check(osc(0.25, 1.6), xmax, cfg.tol)
        rep.info["anchor"] = d
        g = d["sup_Pstar_last_decade_growth"]
        rep.check("anchor_Pstar_plateau", g < 0.01, g, 0.01, "alpha 0.25, beta 1.6")
        s = d["L2_A_log_slope"]
        rep.check("anchor_L2_log_growth", s >= 0.3, s, 0.3, "running int A^2 per unit ln x")

    with rep.stage("exponential_example"):
        A = SampledFunction.from_callable(lambda s: -np.exp(-np.asarray(s)), coeffs.uniform_grid(xmax, 1.0))
        d = spectral.secC_lemma_check(A, xmax, cfg.tol)
        rep.info["exponential"] = d
        ok = d["sup_Pstar_last_decade_growth"] < 0.01 and d["L2_A_last_decade"] < 1e-8
        rep.check("exponential_bounded_and_L2", ok,
                  [d["sup_Pstar_last_decade_growth"], d["L2_A_last_decade"]], [0.01, 1e-8])

    with rep.stage("pi_limit_anchor"):
        diag = spectral.estimate_Pi(osc(0.25, 1.6), [1j], xmax, cfg.tol)
        rep.info["pi_limit_anchor"] = diag.per_lambda
        rep.check("anchor_conditions_hold", diag.verdict == "hold", diag.verdict, "hold")

    with rep.stage("grid"):
        # survey at half range: the cost of resolving sin(x^beta) grows like xmax^beta
        xg = xmax / 2
        pts = [(a, b) for a in cfg.secC_alphas for b in cfg.secC_betas]
        res = rep.map(lambda ab: spectral.secC_lemma_check(osc(*ab), xg, cfg.tol, step=0.01), pts)
        margin = [2 * a + b / 2 - 1 for a, b in pts]
        rep.table("secC_grid.csv",
                  ["alpha", "beta", "margin", "sup_Pstar", "sup_Pstar_growth",
                   "L1_AT", "L2_A_log_slope", "tail_decay_exponent"],
                  [(a, b, m, d["sup_Pstar"], d["sup_Pstar_last_decade_growth"],
                    d["L1_AT"], d["L2_A_log_slope"], d["tail_functional_decay_exponent"])
                   for (a, b), m, d in zip(pts, margin, res)])
        # with margin m the relevant tails decay like x^-m; below 0.25 a plateau
        # is not decidable on this range and the point is only reported
        bad = [ab for ab, m, d in zip(pts, margin, res)
               if m >= 0.25 and d["sup_Pstar_last_decade_growth"] >= 0.01]
        rep.check("grid_plateau_when_margin_clear", not bad, bad, [],
                  "points with 2 alpha + beta/2 - 1 >= 0.25")


# ---------------------------------------------------------------- accelerant

def _orders(errs):
    errs = np.asarray(errs, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.log2(errs[:-1] / errs[1:])


def run_accelerant_roundtrip(cfg, rep: Report):
    c = float(cfg.params.get("c", 1.0))
    r = float(cfg.params.get("r", 1.0))
    ns = list(cfg.resolvent_n)

    with rep.stage("positivity"):
        m_neg = accelerant.positivity_min_eig(accelerant.AccelerantKernel.constant(-2.0, 1.0), 1.0, 256)
        rep.check("positivity_detects_negative", m_neg < 0, m_neg, 0.0, "H = -2, r = 1 (limit -1)")
        m = accelerant.positivity_min_eig(accelerant.AccelerantKernel.constant(c, r), r, ns[-1])
        rep.check("positivity_constant_kernel", m > 0, m, 0.0)

    with rep.stage("constant_kernel_trace"):
        H = accelerant.AccelerantKernel.constant(c, r)
        rho = np.linspace(0.0, r, 9)
        sols = [accelerant.solve_resolvent(H, r, n, rho) for n in ns]
        # trace points are snapped to quadrature nodes, so compare at sol.rho
        errs = [float(np.max(np.abs(s.A_trace - c / (1 + c * s.rho)))) for s in sols]
        orders = _orders(errs)
        ok = bool(np.all(orders >= 1.8)) or max(errs) <= 1e-12
        rep.check("constant_kernel_order", ok, {"errors": errs, "orders": orders}, 1.8,
                  "the trapezoid rule is exact for constant H; errors at roundoff count as converged")
        rep.table("trace_constant.csv", ["n", "rho", "A", "exact"],
                  [(n, p, a, c / (1 + c * p)) for n, s in zip(ns, sols) for p, a in zip(s.rho, s.A_trace)])

    with rep.stage("smooth_kernel_order"):
        Hs = accelerant.AccelerantKernel.from_callable(lambda t: np.exp(-np.asarray(t) ** 2), 2.0)
        # n + 1 nodes so that the spacing halves exactly
        nn = [n + 1 for n in ns]
        ref = accelerant.solve_resolvent(Hs, 2.0, 4 * ns[-1] + 1, [2.0]).A_trace[0]
        errs = [abs(accelerant.solve_resolvent(Hs, 2.0, n, [2.0]).A_trace[0] - ref) for n in nn]
        orders = _orders(errs)
        rep.check("smooth_kernel_order", bool(np.all(orders >= 1.8)), {"errors": errs, "orders": orders}, 1.8,
                  "H = exp(-t^2), r = 2, reference at 4x resolution")

    with rep.stage("two_route"):
        H = accelerant.AccelerantKernel.constant(c, r)
        sol = accelerant.solve_resolvent(H, r, ns[-1])
        A = SampledFunction.from_callable(lambda s: c / (1 + c * np.asarray(s)), coeffs.uniform_grid(r, r / 64))
        rows, worst = [], 0.0
        for lam in [0.0] + list(cfg.lambdas):
            P, S = accelerant.pp_from_resolvent(sol, lam)
            kt = systems.integrate_krein(A, lam, r, min(cfg.tol, 1e-11), positions=[0.0, r])
            g = max(abs(P - kt.P[-1]), abs(S - kt.Pstar[-1]))
            worst = max(worst, g)
            rows.append((lam, P.real, P.imag, S.real, S.imag, g))
        rep.table("two_route.csv", ["lambda", "re_P", "im_P", "re_Pstar", "im_Pstar", "gap"], rows)
        rep.check("two_route_equivalence", worst <= 1e-4, worst, 1e-4, f"n = {ns[-1]}")

    if cfg.kernel_file:
        with rep.stage("kernel_file"):
            K = accelerant.read_kernel_csv(cfg.kernel_file)
            m = accelerant.positivity_min_eig(K, K.r, ns[-1])
            rep.check("kernel_file_positive", m > 0, m, 0.0)
            sol = accelerant.solve_resolvent(K, K.r, ns[-1], np.linspace(0.0, K.r, 33))
            rows = [(p, complex(a).real, complex(a).imag) for p, a in zip(sol.rho, sol.A_trace)]
            rep.table("trace_kernel_file.csv", ["rho", "re_A", "im_A"], rows)


# ---------------------------------------------------------------- custom coefficients

def load_coefficients(entry, xmax, step):
    """``{"family": name, "params": {...}}`` or ``{"file": path, "role": "q" | "A"}``."""
    if "family" in entry:
        return coeffs.make_family(entry["family"], entry.get("params", {}),
                                  grid=coeffs.uniform_grid(xmax, step))
    f = coeffs.read_csv(entry["file"])
    if entry.get("role", "q") == "q":
        return coeffs.CoefficientBundle(q=f, W=None, provenance={"file": entry["file"]})
    return coeffs.CoefficientBundle(q=None, W=None, A=f, provenance={"file": entry["file"]})


def run_custom(cfg, rep: Report):
    bundle = load_coefficients(cfg.coefficients, cfg.xmax, cfg.step)
    if bundle.q is not None and not bundle.q.is_complex:
        with rep.stage("weyl_density"):
            E = _grid_energies(cfg.energy_band, cfg.n_energies)
            w = spectral.weyl_density(bundle.q, E, cfg.eps_ladder, xmax=min(cfg.xmax, bundle.q.xmax),
                                      tol=cfg.tol)
            spectral.write_density_csv(rep.add_file("density_weyl.csv"), w)
            rep.check("weyl_density_nonnegative", bool(np.all(w.density >= 0)), float(w.density.min()), 0.0)
        with rep.stage("embedded_scan"):
            s = asympt.embedded_scan(bundle.q, _grid_energies(cfg.scan_band, cfg.n_scan),
                                     min(cfg.xmax, bundle.q.xmax), cfg.tol)
            asympt.write_scan_csv(rep.add_file("scan.csv"), s)
            rep.info["dips"] = s.minima
    if bundle.A is not None:
        with rep.stage("krein_trajectories"):
            rmax = min(cfg.xmax, bundle.A.xmax)

            def one(lam):
                kt = systems.integrate_krein(bundle.A, lam, rmax, cfg.tol)
                systems.write_trajectory_csv(rep.add_file(f"traj_lambda_{_lam_tag(lam)}.csv"), kt)
                return float(np.max(kt.conserved_residuals))
            res = max(rep.map(one, cfg.lambdas))
            rep.check("conservation", res <= 100 * cfg.tol * max(1.0, rmax), res, 100 * cfg.tol * max(1.0, rmax))


RUNNERS = {
    "free_baseline": run_free_baseline,
    "thm1_regime": run_thm1_regime,
    "thm2_lp_tails": run_thm2_lp_tails,
    "thm3_smooth_qhat": run_thm3_smooth_qhat,
    "vnw": run_vnw,
    "secC_example_grid": run_secC_example_grid,
    "accelerant_roundtrip": run_accelerant_roundtrip,
    "custom": run_custom,
}
