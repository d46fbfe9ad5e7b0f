"""
An eigenvalue embedded in the continuous spectrum
=================================================

The potential ``q = -8 sin(2x)/x + O(1/x^2)`` of Wigner and von Neumann
has a square-integrable solution at energy 1.  The scan below measures,
for each energy, how small the far half of a solution can be made
relative to its near half.
"""

import numpy as np

from krein.asympt import embedded_scan
from krein.coeffs import make_family, uniform_grid
from krein.systems import transfer_matrix

E = np.linspace(0.8, 1.2, 21)
for xmax in (200.0, 400.0):
    b = make_family("vnw", grid=uniform_grid(xmax + 20.0, 0.05))
    s = embedded_scan(b.q, E, xmax, 1e-10)
    print(f"xmax {xmax:g}: median ratio {np.median(s.tail_ratio):.2e}")
    for e, alpha, r in s.minima:
        print(f"  dip at E = {e:.3f}, boundary angle {alpha:.5f}, ratio {r:.2e}")

# the generic solution at E = 1 grows, so the transfer matrix does too; the
# determinant is a difference of products of size |T|^2, so its drift is
# judged relative to that
b = make_family("vnw", grid=uniform_grid(420.0, 0.05))
for t in transfer_matrix(b.q, 1.0, [100.0, 200.0, 400.0], 1e-11):
    n = np.linalg.norm(t.matrix, 2)
    print(f"x = {t.position:5.0f}: |T| = {n:.3e}, (det - 1)/|T|^2 = {(t.det - 1) / n ** 2:.1e}")
