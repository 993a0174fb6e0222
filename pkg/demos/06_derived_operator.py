"""The equation satisfied by u_x, and its check.

Differentiating L u = f in x gives L1 u_x = f_x plus terms in d_t^d u. The
derived problem keeps the principal part; only the lower-order table and
the forcing change. Solving both side by side shows that the second
solution tracks the gradient of the first.
"""

import numpy as np

from properhyp import Grid, Problem, check_l1_hypotheses, derived_operator, solve_derived
from properhyp.solver import tx_grid

problem = Problem(
    m=2,
    a=["0", "-x^2*(1+x^2/4)"],
    r=[["-x"], ["0.5", "t*x"]],
    phi=["(1-(x/0.5)^2)^3", "0"],
    T=0.5,
    domain=(-0.5, 0.5),
)
der = derived_operator(problem)
for d, row in enumerate(der.problem.r):
    print(f"R_{d}: {[str(e) for e in row]}   correction: {der.corrections[d]}")

for d, c in enumerate(check_l1_hypotheses(problem, tx_grid(problem, 41, 3))):
    print(f"derived R_{d}: proper {c.ok}, C0 {c.C0:.4g}")

base, U, _, V = solve_derived(problem, Grid(2e-3))
x = base.nodes
inside = (x > base.cone_lo[-1]) & (x < base.cone_hi[-1])
dU = np.gradient(U, x, axis=1)
rel = np.linalg.norm(V[:, inside] - dU[:, inside]) / np.linalg.norm(dU[:, inside])
print(f"relative gap between derived solution and d/dx of the base solution: {rel:.3%}")
