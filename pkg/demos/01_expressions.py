"""Coefficient formulas: parse, evaluate, differentiate.

Problem files give every coefficient as a formula in t and x. This script
shows what the parser accepts and how derivatives are formed symbolically.
"""

import numpy as np

from properhyp import ExprSyntaxError, diff_expr, parse_expr

a = parse_expr("-x^2*(1+x^2/4)")
print("a(x)        =", a)
print("a(0.5)      =", a(0.0, 0.5))
print("da/dx       =", diff_expr(a, "x"))

xs = np.linspace(-1, 1, 5)
print("vectorised  :", a(0.0, xs))

# the derivative agrees with a central difference
h = 1e-6
fd = (a(0, 0.3 + h) - a(0, 0.3 - h)) / (2 * h)
print(f"d/dx at 0.3 : symbolic {diff_expr(a, 'x')(0, 0.3):.10f}, difference {fd:.10f}")

# malformed input reports the character offset
try:
    parse_expr("sin(x) * (1 + t")
except ExprSyntaxError as exc:
    print(f"syntax error at offset {exc.offset}: {exc}")
