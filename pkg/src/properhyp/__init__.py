"""Weakly hyperbolic equations in one space variable.

Hyperbolic polynomials and their reduced polynomials, proper
decompositions, Jannelli symmetrizers of the first-order block reduction,
Nuij regularisation, and a Lax-Friedrichs harness that measures the energy
estimate on shrinking cones.
"""

from .coeff_expr import Expr, ExprEvalError, ExprSyntaxError, diff_expr, eval_expr, parse_expr
from .decomposition import (
    Decomposition,
    Infeasible,
    InterlacingFailure,
    MultipleRoots,
    ProperCheck,
    check_proper,
    fisk_split,
    lagrange_decompose,
    minnorm_decompose,
    second_order_decompose,
    transfer_bound,
    transfer_to_nuij,
)
from .hyperpoly import (
    HPoly,
    NotHyperbolic,
    PointPoly,
    StrictnessFailure,
    bireduced_polys,
    check_interlacing,
    derived_co_constant,
    estimate_co_constant,
    monic_tau_derivative,
    nuij_map,
    nuij_regularize,
    peyser_bounds,
    point_poly,
    reduced_polys,
    roots_at,
)
from .hypotheses import check_hypotheses
from .solver import (
    CFLViolation,
    Grid,
    NonFinite,
    Problem,
    check_l1_hypotheses,
    derived_operator,
    initial_state,
    nuij_sweep,
    solve,
    solve_derived,
    verify_energy_estimate,
)
from .symmetrizer import (
    BlockSystem,
    assemble_block_system,
    eigen_rows,
    jannelli_q,
    sylvester_matrix,
    verify_bounds,
)

__version__ = "0.1.0"
