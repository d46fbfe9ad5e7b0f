"""
Krein and Dirac systems: free case and a long-range coefficient
================================================================

With no coefficient the Krein polynomials are explicit.  For the
potential ``q = -0.2/(x+1)^2`` the Riccati equation has the exact solution
``a = kappa/(x+1)`` and the solutions grow at most like ``(x+1)^kappa``.
"""

import numpy as np

from krein.coeffs import SampledFunction, TailModel, make_family, uniform_grid
from krein.riccati import kappa_of, riccati_grid, solve_contraction
from krein.systems import integrate_krein, integrate_Q, sl_solutions
from krein.asympt import fit_sin

# free system: P = exp(i lam r), P* = 1
zero = SampledFunction.zeros(uniform_grid(10.0, 1.0))
x = np.linspace(0.0, 50.0, 501)
kt = integrate_krein(zero, 1.5, 50.0, 1e-12, positions=x)
print("free case, max |P - exp(i lam r)|:", np.max(np.abs(kt.P - np.exp(1.5j * x))))

# solve a^2 + a' = q for W = -gamma/(x+1) by contraction
gamma = 0.2
kappa = kappa_of(gamma)
W = make_family("power_tail_W", {"gamma": gamma, "sign": -1}, grid=riccati_grid()).W
sol = solve_contraction(W, gamma, tol=1e-10)
g = sol.a.grid
print(f"kappa = {kappa:.10f}, iterations = {sol.iterations}")
print("weighted error against kappa/(x+1):", np.max((g + 1) * np.abs(sol.a.values - kappa / (g + 1))))

# the Krein coefficient A(x) = a(x/2)/2 and the phase-stripped solution Q
A = SampledFunction.from_callable(lambda s: 0.5 * sol.a(np.asarray(s) / 2), uniform_grid(800.0, 1.0),
                                  tail=TailModel(kappa / 2, 1.0, shift=2.0))
xs = np.linspace(0.0, 400.0, 4001)
Q = integrate_Q(A, 1.0, 400.0, 1e-10, positions=xs).values
print("max |Q| / ((x+2)/2)^kappa:", np.max(np.abs(Q) / ((xs + 2) / 2) ** kappa))

# u solves -u'' + q u = lam^2 u with u(0) = 0, u'(0) = 1
q = make_family("power_tail_W", {"gamma": gamma, "sign": -1}, grid=uniform_grid(400.0, 0.05)).q
for lam in (0.5, 1.0, 2.0):
    v, dv, u, du = sl_solutions(q, lam, xs, 1e-11)
    ratio = np.max(np.abs(u) / ((xs + 1) ** kappa / lam))
    f = fit_sin(xs, u / (xs + 1) ** kappa, lam, (50.0, 400.0, 14))
    print(f"lam {lam}: max |u| lam/(x+1)^kappa = {ratio:.4f}, "
          f"u/(x+1)^kappa ~ {f.C:.4f} sin(lam x + {f.phi:.4f})")
