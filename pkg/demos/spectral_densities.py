"""
Spectral densities and logarithmic integrals
============================================

The Weyl function of the free operator gives the density ``sqrt(E)/pi``.
Its logarithmic integral is finite, while a density decaying like
``exp(-E)`` makes the integral diverge as the window grows.
"""

import math

import numpy as np

from krein.coeffs import SampledFunction, make_family, uniform_grid
from krein.spectral import (SpectralDensityEstimate, calibrate_normalization, rho_from_sigma,
                            secC_lemma_check, weighted_log_integral, weyl_density)

E = np.linspace(0.25, 4.0, 16)
zero = SampledFunction.zeros(uniform_grid(200.0, 1.0))
w = weyl_density(zero, E, xmax=200.0, tol=1e-10)
print("max |density - sqrt(E)/pi|:", np.max(np.abs(w.density - np.sqrt(E) / np.pi)))

# the same measure built from a flat density in the square-root variable
alpha = np.linspace(0.0, 2.02, 2001)
sig = SpectralDensityEstimate(alpha, np.ones_like(alpha), "closed_form")
_, c, spread = calibrate_normalization(w, rho_from_sigma(sig, E))
print(f"ratio of the two normalizations: {c:.8f} (1/pi = {1 / math.pi:.8f}), spread {spread:.1e}")

lam = np.geomspace(1e-12, 1e12, 4001)
v, finite = weighted_log_integral(
    SpectralDensityEstimate.closed_form(lambda t: np.sqrt(t) / (2 * np.pi), lam), "t1")
print(f"log integral of sqrt(lam)/(2 pi): {v:.6f} (exact {-math.pi * math.log(2 * math.pi):.6f}), "
      f"finite: {finite}")
lam = np.geomspace(1e-12, 500.0, 4001)
v, finite = weighted_log_integral(SpectralDensityEstimate.closed_form(lambda t: np.exp(-t), lam), "t1")
print(f"log integral of exp(-lam) up to 500: {v:.2f}, finite: {finite}")

# an oscillating coefficient outside L^2 with bounded P*(x, i)
A = make_family("oscillatory_A", {"alpha": 0.25, "beta": 1.6}, grid=uniform_grid(200.0, 1.0)).A
d = secC_lemma_check(A, 200.0, 1e-9)
print(f"sup |P*(x, i)| = {d['sup_Pstar']:.4f}, growth over the last decade {d['sup_Pstar_last_decade_growth']:.1e}")
print(f"int_0^x A^2 grows by {d['L2_A_log_slope']:.3f} per unit of ln x")
