"""Approximating a double characteristic by strictly hyperbolic problems.

u_tt = 0 has the double root tau = 0. Replacing P by P - eps dP/dtau
separates the roots; the solutions converge as eps -> 0 and the energy
constants stay bounded.
"""

from pathlib import Path

from properhyp import nuij_sweep
from properhyp.problemfile import load_problem

problem, settings = load_problem(Path(__file__).parent / "problems" / "double_root.toml")
report = nuij_sweep(problem, settings.grid, [0.2, 0.1, 0.05, 0.025])
for e in report.entries:
    print(
        f"eps={e['eps']:<6} C_emp={e['C_emp']:.4f} transfer ok={e['transfer_ok']}"
        f" distance to previous={e.get('distance_prev', float('nan')):.3e}"
    )
print(f"Cauchy: {report.cauchy}, observed order {report.slope:.2f}")
