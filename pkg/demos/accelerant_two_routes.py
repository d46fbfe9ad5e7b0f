"""
Two routes to the Krein polynomials
===================================

For the constant accelerant ``H = c`` the resolvent is ``c/(1 + c r)``.
The polynomials obtained from the discretized resolvent are compared with
those from integrating the Krein system with ``A(r) = c/(1 + c r)``.
"""

import numpy as np

from krein.accelerant import AccelerantKernel, positivity_min_eig, pp_from_resolvent, solve_resolvent
from krein.coeffs import SampledFunction, uniform_grid
from krein.systems import integrate_krein

c, r = 1.0, 1.0
H = AccelerantKernel.constant(c, r)
print("smallest eigenvalue of I + H:", positivity_min_eig(H, r, 256))
print("H = -2 is not positive:", positivity_min_eig(AccelerantKernel.constant(-2.0, r), r, 256))

sol = solve_resolvent(H, r, 256, np.linspace(0.0, r, 5))
for p, a in zip(sol.rho, sol.A_trace):
    print(f"A({p:.2f}) = {a:.12f}, exact {c / (1 + c * p):.12f}")

sol = solve_resolvent(H, r, 256)
A = SampledFunction.from_callable(lambda s: c / (1 + c * np.asarray(s)), uniform_grid(r, r / 64))
for lam in (0.0, 1.0, 3.0):
    P, S = pp_from_resolvent(sol, lam)
    kt = integrate_krein(A, lam, r, 1e-12, positions=[0.0, r])
    print(f"lam {lam}: |P_resolvent - P_ode| = {abs(P - kt.P[-1]):.2e}, "
          f"|P*_resolvent - P*_ode| = {abs(S - kt.Pstar[-1]):.2e}")

# a smooth kernel converges at second order
Hs = AccelerantKernel.from_callable(lambda t: np.exp(-np.asarray(t) ** 2), 2.0)
ref = solve_resolvent(Hs, 2.0, 1025, [2.0]).A_trace[0]
errs = [abs(solve_resolvent(Hs, 2.0, n + 1, [2.0]).A_trace[0] - ref) for n in (64, 128, 256)]
print("exp(-t^2) trace errors:", ", ".join(f"{e:.2e}" for e in errs),
      "orders:", ", ".join(f"{o:.2f}" for o in np.log2(np.array(errs[:-1]) / np.array(errs[1:]))))
