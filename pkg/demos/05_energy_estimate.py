"""Energy on shrinking cones for the wave equation and a degenerate example.

A Lax-Friedrichs solve records the symmetrizer energy on the cone
|x - x0| <= rho0 - tau_max t. For u_tt = u_xx the energy should stay flat,
up to a drift that halves with the mesh width.
"""

from pathlib import Path

from properhyp import Grid, solve, verify_energy_estimate
from properhyp.problemfile import load_problem

HERE = Path(__file__).parent / "problems"

wave, _ = load_problem(HERE / "wave.toml")
for dx in (2e-3, 1e-3, 5e-4):
    trace, _ = solve(wave, Grid(dx))
    chk = verify_energy_estimate(trace)
    print(f"wave dx={dx:g}: steps {len(trace.t) - 1}, drift {trace.drift:.3%}, C_emp {chk.C_emp:.4f}")

var, _ = load_problem(HERE / "variable.toml")
coarse, _ = solve(var, Grid(2e-3))
fine, _ = solve(var, Grid(1e-3))
chk = verify_energy_estimate(coarse, fine)
print(f"degenerate example: C_emp {chk.C_emp:.4f}, refined {chk.C_refined:.4f}, pass {chk.passed}")

out = Path("energy_trace.csv")
out.write_text(fine.to_csv())
print(f"trace written to {out} (columns: {fine.to_csv().splitlines()[0]})")
