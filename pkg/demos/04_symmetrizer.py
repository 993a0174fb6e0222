"""The symmetrizer of the first-order block system.

For each block the matrix Q = W^T W, built from the reduced polynomials,
makes Q A symmetric. verify_bounds samples the constants the energy
estimate depends on.
"""

import numpy as np

from properhyp import Problem, assemble_block_system, jannelli_q, point_poly, sylvester_matrix, verify_bounds
from properhyp.hyperpoly import poly_from_roots

p = point_poly(poly_from_roots([-1.0, 0.5, 2.0]))
Q, psi = jannelli_q(p)
A = sylvester_matrix(p.coeffs)
QA = Q @ A
print("Q =\n", np.round(Q, 4))
print("asymmetry of QA :", np.abs(QA - QA.T).max())
print("det Q           :", np.linalg.det(Q), "= prod of squared root gaps", np.prod([1.5, 3.0, 1.5]) ** 2)

problem = Problem(m=2, a=["0", "-x^2*(1+x^2/4)"], r=[["-1"], ["0.5", "0"]], T=0.5)
bs = assemble_block_system(problem)
xs = np.linspace(*problem.base, 101)
report = verify_bounds(bs, xs, n_random_v=200, tgrid=np.linspace(0, problem.T, 3))
print(report.to_json())
