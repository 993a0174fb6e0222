"""Roots, interlacing and root separation of hyperbolic polynomials.

The principal symbol P(x, tau) = tau^2 - x^2 (1 + x^2/4) has two real roots
that meet at x = 0. Their separation ratio stays bounded anyway, which is
what the energy method needs.
"""

import numpy as np

from properhyp import (
    HPoly,
    check_interlacing,
    estimate_co_constant,
    monic_tau_derivative,
    nuij_regularize,
    peyser_bounds,
    point_poly,
    roots_at,
)
from properhyp.hyperpoly import poly_from_roots

P = HPoly(["0", "-x^2*(1+x^2/4)"])
for x in (-1.0, 0.0, 0.5):
    p = roots_at(P, x)
    print(f"x={x:+.1f}: roots {p.roots}, clusters {p.clusters}")

est = estimate_co_constant(P, np.linspace(-1, 1, 201))
print(f"separation constant M = {est.M:.4f} (bounded: {est.bounded})")

# a triple root at 0 and its nearby strictly hyperbolic approximants
p = point_poly(poly_from_roots([0.0, 0.0, 0.0]))
for eps in (1e-1, 1e-2, 1e-3):
    q = nuij_regularize(p, eps)
    print(f"eps={eps:g}: roots / eps = {np.round(q.roots / eps, 6)}")

# roots of dP/dtau sit inside the windows of the interlacing inequality
roots = np.array([-2.0, -0.5, 1.0, 3.0])
lam = monic_tau_derivative(point_poly(poly_from_roots(roots)), 3).roots
for j, l in enumerate(lam):
    lo, hi = peyser_bounds(roots, j)
    print(f"derivative root {l:+.4f} in [{lo:+.4f}, {hi:+.4f}]")
print("interlaced with margin 1/m:", check_interlacing(roots, lam, 1 / 4, two_sided=True))
