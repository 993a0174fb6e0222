"""Writing lower-order symbols in the basis of reduced polynomials.

A lower-order term is harmless when its symbol is a combination of the
reduced polynomials of the principal part with bounded coefficients. The
second example has no such combination at x = 0, and its coefficients grow
like 1/(2x) nearby.
"""

import numpy as np

from properhyp import HPoly, check_proper, lagrange_decompose, minnorm_decompose, point_poly
from properhyp.hyperpoly import poly_from_roots

p = point_poly(poly_from_roots([-1.0, 0.0, 2.0]))
R = np.array([1.0, 0.0, -1.0])  # tau^2 - 1
print("Lagrange coefficients      :", lagrange_decompose(R, p))

q = point_poly(poly_from_roots([0.0, 0.0, 1.0]))
dec = minnorm_decompose([1.0, 0.0, 0.0], q)
print("min-norm, double root at 0 :", dec.coeffs, "residual", dec.residual)

P = HPoly(["0", "-(1+x^2)", "0", "x^2"])  # (tau^2 - x^2)(tau^2 - 1)
R3 = ["0", "1", "0", "-1"]  # tau^2 - 1, as a degree-3 symbol in (tau, xi)
for x in (0.1, 0.01, 0.001, 0.0):
    c = check_proper(R3, P, 3, [(0.0, x)])
    status = f"C0 = {c.C0:.4g}, 1/(2x) = {1 / (2 * x):.4g}" if c.ok else f"fails: {c.reason}"
    print(f"x = {x:<6}: {status}")
