"""Finite-difference solution of the first-order reduction on shrinking cones.

The scalar problem ``P(x; d_t, d_x) u - sum_d R_d(t, x; d_t, d_x) u = f`` with
Cauchy data ``d_t^j u(0, .) = phi_j`` is rewritten as ``U_t = A U_x + B U + F``
(see :mod:`properhyp.symmetrizer`) and integrated with the Lax-Friedrichs
scheme. The energy ``E(t) = 1/2 int_{I_t} (Q U, U) dx`` is recorded on the
cone ``I_t = [x0 - rho(t), x0 + rho(t)]``, ``rho(t) = rho0 - tau_max t``.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field, replace
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from .coeff_expr import ZERO, Const, Expr, ExprEvalError, as_expr, diff_expr, eval_expr
from .decomposition import ProperCheck, check_proper, minnorm_decompose, transfer_bound, transfer_to_nuij
from .hyperpoly import HPoly, NotHyperbolic, monic_tau_derivative
from .symmetrizer import BlockSystem, assemble_block_system, weak_coercivity

__all__ = [
    "Problem",
    "Grid",
    "EnergyTrace",
    "EnergyCheck",
    "CFLViolation",
    "NonFinite",
    "DerivedOperator",
    "SweepReport",
    "initial_state",
    "solve",
    "solve_derived",
    "verify_energy_estimate",
    "derived_operator",
    "check_l1_hypotheses",
    "nuij_coefficients",
    "nuij_sweep",
    "l2_distance",
    "tx_grid",
]

MAX_CFL = 0.9


class CFLViolation(ValueError):
    """Time step too large for the Courant condition."""


class NonFinite(ArithmeticError):
    """The discrete solution blew up."""

    def __init__(self, step, x):
        super().__init__(f"non-finite value at step {step}, x={x!r}")
        self.step = step
        self.x = x


@dataclass(frozen=True)
class Problem:
    """Scalar Cauchy problem of order ``m`` in one space variable.

    ``r[d][k]`` multiplies ``tau^(d-k) xi^k`` in ``R_d``; ``phi[j]`` is the
    datum for ``d_t^j u``. If ``domain`` is given the data are extended by
    zero outside it.
    """

    m: int
    a: Tuple[Expr, ...]
    r: Tuple[Tuple[Expr, ...], ...]
    f: Expr = ZERO
    phi: Tuple[Expr, ...] = ()
    x0: float = 0.0
    rho0: float = 1.0
    T: float = 1.0
    domain: Optional[Tuple[float, float]] = None

    def __post_init__(self):
        object.__setattr__(self, "a", tuple(as_expr(e) for e in self.a))
        r = self.r if self.r else [[0.0] * (d + 1) for d in range(self.m)]
        object.__setattr__(self, "r", tuple(tuple(as_expr(e) for e in row) for row in r))
        phi = self.phi if self.phi else [0.0] * self.m
        object.__setattr__(self, "phi", tuple(as_expr(e) for e in phi))
        object.__setattr__(self, "f", as_expr(self.f))
        self.validate()

    def validate(self):
        m = self.m
        if m < 1:
            raise ValueError("order m must be >= 1")
        if len(self.a) != m:
            raise ValueError(f"expected {m} principal coefficients, got {len(self.a)}")
        if len(self.r) != m or any(len(self.r[d]) != d + 1 for d in range(m)):
            raise ValueError("lower-order table must have rows of length 1, 2, ..., m")
        if len(self.phi) != m:
            raise ValueError(f"expected {m} initial data, got {len(self.phi)}")
        if any("t" in a.free_vars() for a in self.a):
            raise ValueError("principal coefficients must not depend on t")
        if any("t" in p.free_vars() for p in self.phi):
            raise ValueError("initial data must not depend on t")
        if not self.rho0 > 0:
            raise ValueError("rho0 must be positive")
        if not self.T > 0:
            raise ValueError("T must be positive")
        if self.domain is not None and not self.domain[0] < self.domain[1]:
            raise ValueError("domain must be an interval lo < hi")

    @property
    def principal(self) -> HPoly:
        return HPoly(self.a)

    @property
    def base(self) -> Tuple[float, float]:
        return self.x0 - self.rho0, self.x0 + self.rho0


@dataclass(frozen=True)
class Grid:
    """Uniform mesh. ``dt`` defaults to ``cfl * dx / tau_max``."""

    dx: float
    cfl: float = 0.5
    dt: Optional[float] = None

    def __post_init__(self):
        if not self.dx > 0:
            raise ValueError("dx must be positive")
        if not 0 < self.cfl <= MAX_CFL:
            raise CFLViolation(f"CFL number {self.cfl} outside (0, {MAX_CFL}]")

    def time_step(self, tau_max: float) -> float:
        # tau_max == 0 (e.g. tau^m): no propagation, unit speed scale
        speed = tau_max if tau_max > 0 else 1.0
        limit = self.cfl * self.dx / speed
        if self.dt is None:
            return limit
        if self.dt > MAX_CFL * self.dx / speed * (1 + 1e-12):
            raise CFLViolation(f"dt={self.dt} exceeds {MAX_CFL} dx / tau_max = {MAX_CFL * self.dx / speed}")
        return float(self.dt)


@dataclass
class EnergyTrace:
    """Per-step record of a run.

    ``forcing_norm`` and ``dt_norms`` are squared ``L^2(I_t)`` norms;
    ``dt_norms[:, d]`` is for ``d_t^d u``.
    """

    t: np.ndarray
    energy: np.ndarray
    forcing_norm: np.ndarray
    dt_norms: np.ndarray
    cone_lo: np.ndarray
    cone_hi: np.ndarray
    tau_max: float = 0.0
    gamma: float = float("nan")
    nodes: np.ndarray = field(default=None, repr=False)
    dx: float = float("nan")
    dt: float = float("nan")

    @property
    def columns(self) -> List[str]:
        m = self.dt_norms.shape[1]
        return ["t", "energy", "forcing_norm"] + [f"dt_norm_{d}" for d in range(m)] + ["cone_lo", "cone_hi"]

    @property
    def drift(self) -> float:
        """``max_t |E(t) - E(0)| / E(0)`` (0 if ``E(0) == 0``)."""
        e0 = self.energy[0]
        return float(np.max(np.abs(self.energy - e0)) / e0) if e0 > 0 else 0.0

    def forcing_integral(self) -> np.ndarray:
        """``int_0^t |F|^2`` by the trapezoidal rule at each recorded time."""
        out = np.zeros_like(self.t)
        if len(self.t) > 1:
            out[1:] = np.cumsum(0.5 * (self.forcing_norm[1:] + self.forcing_norm[:-1]) * np.diff(self.t))
        return out

    def to_csv(self, digits: int = 10) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        rows = np.column_stack((self.t, self.energy, self.forcing_norm, self.dt_norms, self.cone_lo, self.cone_hi))
        for row in rows:
            w.writerow([f"{v:.{digits}g}" for v in row])
        return buf.getvalue()


# ---------------------------------------------------------------------------
# integration

def _nodes(problem: Problem, dx: float, n_steps: int) -> np.ndarray:
    # padding keeps the one-cell-per-step stencil spread away from the cone
    pad = n_steps * dx + 2 * dx
    k = int(math.ceil((problem.rho0 + pad) / dx))
    return problem.x0 + dx * np.arange(-k, k + 1)


def _data_mask(problem: Problem, x):
    if problem.domain is None:
        return np.ones_like(x, dtype=bool)
    lo, hi = problem.domain
    return (x >= lo) & (x <= hi)


def _eval_nodes(e: Expr, t: float, x: np.ndarray, mask=None) -> np.ndarray:
    out = np.zeros_like(x)
    sel = np.ones_like(x, dtype=bool) if mask is None else mask
    if sel.any():
        out[sel] = np.broadcast_to(eval_expr(e, t, x[sel]), x[sel].shape)
    return out


def initial_state(problem: Problem, x) -> np.ndarray:
    """Stacked ``U(0, x)`` of shape ``(N, len(x))``.

    Entry ``d_t^j d_x^(d-j) u`` of block ``d`` is ``d_x^(d-j) phi_j``, with
    the x-derivatives taken symbolically.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    m = problem.m
    mask = _data_mask(problem, x)
    rows = []
    for d in range(m):
        for j in range(d + 1):
            e = problem.phi[j]
            for _ in range(d - j):
                e = diff_expr(e, "x")
            rows.append(_eval_nodes(e, 0.0, x, mask))
    return np.array(rows)


def _apply(M0, M, V):
    if M0 is not None:
        return V @ M0.T
    return np.einsum("nij,nj->ni", M[1:-1], V)


class _Integrator:
    """Lax-Friedrichs stepping of one block system on a fixed mesh."""

    def __init__(self, problem: Problem, bs: BlockSystem, x: np.ndarray, dx: float, dt: float):
        self.problem = problem
        self.bs = bs
        self.x = x
        self.dx = dx
        self.dt = dt
        xc = np.clip(x, *problem.base)
        self.xc = xc
        self.A = bs.A(xc)
        self.alpha = bs.alpha_part(xc)
        self.Q = bs.Q(xc)
        self.time_dep = any(
            "t" in r.free_vars() for row in bs.r for r in row
        )
        self.rho = None if self.time_dep else bs.rho_part(0.0, xc)
        # x-independent matrices take the cheaper 2-D product
        self.A0 = self.A[0] if np.all(self.A == self.A[0]) else None
        B = self.alpha + (0.0 if self.rho is None else self.rho)
        self.B0 = B[0] if self.rho is not None and np.all(B == B[0]) else None
        self.forced = not bs.f.is_const(0.0)
        self.last = [d * (d + 1) // 2 + d for d in range(problem.m)]
        self.U = initial_state(problem, x).T.copy()
        self.n = 0

    @property
    def t(self) -> float:
        return self.n * self.dt

    def B(self, t):
        return self.alpha + (self.bs.rho_part(t, self.xc) if self.time_dep else self.rho)

    def f(self, t):
        if not self.forced:
            return np.zeros_like(self.x)
        return np.broadcast_to(eval_expr(self.bs.f, t, self.xc), self.x.shape)

    def step(self, extra=None):
        U, t = self.U, self.t
        lam = self.dt / (2 * self.dx)
        new = np.empty_like(U)
        up, um = U[2:], U[:-2]
        new[1:-1] = 0.5 * (up + um) + lam * _apply(self.A0, self.A, up - um)
        new[1:-1] += self.dt * _apply(self.B0, self.B(t) if self.B0 is None else None, U[1:-1])
        src = self.f(t) if extra is None else self.f(t) + extra
        new[1:-1, -1] += self.dt * src[1:-1]
        new[0], new[-1] = new[1], new[-2]
        self.n += 1
        bad = ~np.isfinite(new)
        if bad.any():
            i = int(np.argmax(bad.any(axis=1)))
            raise NonFinite(self.n, float(self.x[i]))
        self.U = new

    def cone(self, t, tau_max):
        rho = self.problem.rho0 - tau_max * t
        x0, x = self.problem.x0, self.x
        lo = int(math.ceil((x0 - rho - x[0]) / self.dx - 1e-9))
        hi = int(math.floor((x0 + rho - x[0]) / self.dx + 1e-9))
        return lo, hi, x0 - rho, x0 + rho

    def record(self, tau_max, extra=None):
        t = self.t
        lo, hi, clo, chi = self.cone(t, tau_max)
        if hi - lo < 1:
            return t, 0.0, 0.0, np.zeros(self.problem.m), clo, chi
        sl = slice(lo, hi + 1)
        U = self.U[sl]
        dens = np.einsum("ni,nij,nj->n", U, self.Q[sl], U)
        f = self.f(t) if extra is None else self.f(t) + extra
        energy = 0.5 * np.trapezoid(dens, dx=self.dx)
        fn = np.trapezoid(f[sl] ** 2, dx=self.dx)
        dtn = np.trapezoid(U[:, self.last] ** 2, dx=self.dx, axis=0)
        return t, float(energy), float(fn), dtn, clo, chi


def _horizon(problem: Problem, tau_max: float) -> float:
    return min(problem.T, problem.rho0 / tau_max) if tau_max > 0 else problem.T


def _setup(problem: Problem, grid: Grid, tau_max: Optional[float] = None):
    bs = assemble_block_system(problem)
    if tau_max is not None:
        bs.tau_max = max(bs.tau_max, tau_max)
    dt = grid.time_step(bs.tau_max)
    T0 = _horizon(problem, bs.tau_max)
    n_steps = max(1, int(math.ceil(T0 / dt - 1e-9)))
    dt = T0 / n_steps
    x = _nodes(problem, grid.dx, n_steps)
    return bs, dt, n_steps, x


def _run(integrators, n_steps, tau_max, couple=None):
    """Advance integrators in lockstep; ``couple(n, ints)`` returns extra forcing per integrator."""
    records = [[] for _ in integrators]
    # overflow is reported as NonFinite by step()
    with np.errstate(over="ignore", invalid="ignore"):
        _loop(integrators, records, n_steps, tau_max, couple)
    return records


def _loop(integrators, records, n_steps, tau_max, couple):
    for n in range(n_steps + 1):
        extras = couple(integrators) if couple else [None] * len(integrators)
        for rec, it, ex in zip(records, integrators, extras):
            rec.append(it.record(tau_max, ex))
        if n == n_steps:
            break
        for it, ex in zip(integrators, extras):
            it.step(ex)


def _trace(rec, it: _Integrator, tau_max, gamma) -> EnergyTrace:
    t, e, fn, dtn, lo, hi = zip(*rec)
    return EnergyTrace(
        t=np.array(t), energy=np.array(e), forcing_norm=np.array(fn), dt_norms=np.array(dtn),
        cone_lo=np.array(lo), cone_hi=np.array(hi), tau_max=tau_max, gamma=gamma,
        nodes=it.x, dx=it.dx, dt=it.dt,
    )


def _gamma(bs, problem):
    return weak_coercivity(bs, np.linspace(*problem.base, 201))


def solve(problem: Problem, grid: Grid, tau_max: Optional[float] = None):
    """Integrate up to ``T0 = min(T, rho0 / tau_max)``.

    Coefficients are frozen outside the cone base (which the cone never
    sees), so ``tau_max`` from the base bounds every propagation speed. An
    explicit ``tau_max`` (e.g. shared across a sweep) can only increase it.

    Returns ``(trace, U_final)`` with ``U_final`` of shape ``(N, nodes)``;
    node coordinates are ``trace.nodes``.
    """
    bs, dt, n_steps, x = _setup(problem, grid, tau_max)
    it = _Integrator(problem, bs, x, grid.dx, dt)
    rec = _run([it], n_steps, bs.tau_max)[0]
    return _trace(rec, it, bs.tau_max, _gamma(bs, problem)), it.U.T.copy()


@dataclass
class EnergyCheck:
    C_emp: float
    passed: bool
    C_refined: Optional[float] = None
    time_derivative_ok: bool = True
    time_derivative_constant: float = float("nan")

    def to_dict(self):
        return {
            "C_emp": self.C_emp,
            "C_refined": self.C_refined,
            "pass": self.passed,
            "time_derivative_ok": self.time_derivative_ok,
            "time_derivative_constant": self.time_derivative_constant,
        }


def _c_emp(trace: EnergyTrace) -> float:
    denom = np.maximum(trace.energy[0] + trace.forcing_integral(), 1e-30)
    return float(np.max(trace.energy / denom))


def verify_energy_estimate(trace: EnergyTrace, refined: Optional[EnergyTrace] = None) -> EnergyCheck:
    """Empirical constant ``C`` in ``E(t) <= C (E(0) + int_0^t |F|^2)``.

    With ``refined`` (a run at half the mesh size) the check also requires
    the two constants to agree within a factor 2. The time-derivative bound
    ``sum_d |d_t^d u|^2 <= (2 C / gamma)(E(0) + int |F|^2)`` is checked with
    the weak-coercivity constant ``gamma`` stored on the trace.
    """
    C = _c_emp(trace)
    ok = math.isfinite(C)
    Cr = None
    if refined is not None:
        Cr = _c_emp(refined)
        lo, hi = sorted((C, Cr))
        ok = ok and math.isfinite(Cr) and (hi <= 2 * lo or hi < 1e-12)
    denom = trace.energy[0] + trace.forcing_integral()
    td_ok, const = True, float("nan")
    if trace.gamma > 0 and math.isfinite(C):
        const = 2 * C / trace.gamma
        lhs = trace.dt_norms.sum(axis=1)
        td_ok = bool(np.all(lhs <= const * denom * (1 + 1e-9) + 1e-300))
    elif np.any(trace.dt_norms > 0):
        td_ok = False
    return EnergyCheck(C_emp=C, passed=bool(ok), C_refined=Cr, time_derivative_ok=td_ok, time_derivative_constant=const)


def l2_distance(U1, U2, nodes, lo, hi) -> float:
    """``L^2([lo, hi])`` distance of two stacked states (all components)."""
    sel = (nodes >= lo - 1e-12) & (nodes <= hi + 1e-12)
    if sel.sum() < 2:
        return 0.0
    diff = np.sum((np.asarray(U1)[:, sel] - np.asarray(U2)[:, sel]) ** 2, axis=0)
    return float(math.sqrt(np.trapezoid(diff, nodes[sel])))


# ---------------------------------------------------------------------------
# derived operator

@dataclass(frozen=True)
class DerivedOperator:
    """The problem satisfied by ``u_x``.

    ``problem.f`` is only ``d_x f``; the full right-hand side adds
    ``sum_d corrections[d] * d_t^d u`` with ``u`` the base solution.
    """

    problem: Problem
    corrections: Tuple[Expr, ...]


def derived_operator(problem: Problem) -> DerivedOperator:
    """``L^(1) = P - sum_d R_d^(1)`` with ``L^(1) u_x = d_x(L u) + sum_d (d_x r_{d,0}) d_t^d u``.

    ``R_{m-1}^(1) = R_{m-1} - P'`` and ``R_d^(1) = R_d + R'_{d+1}`` for
    ``d <= m - 2``, where the prime is ``(1/xi) d_x`` with the ``xi^(-1)``
    term of ``R'_{d+1}`` moved into the corrections.
    """
    m = problem.m
    dx = lambda e: diff_expr(e, "x")  # noqa: E731
    r1 = [list(row) for row in problem.r]
    for j in range(m):
        r1[m - 1][j] = r1[m - 1][j] - dx(problem.a[j])
    for d in range(m - 1):
        for k in range(d + 1):
            r1[d][k] = r1[d][k] + dx(problem.r[d + 1][k + 1])
    corrections = tuple(dx(problem.r[d][0]) for d in range(m))
    derived = replace(
        problem,
        r=tuple(tuple(row) for row in r1),
        f=dx(problem.f),
        phi=tuple(dx(p) for p in problem.phi),
    )
    return DerivedOperator(problem=derived, corrections=corrections)


def solve_derived(problem: Problem, grid: Grid):
    """Solve for ``u_x`` through ``L^(1)``, feeding the corrections from ``u``.

    Both systems share the mesh and are advanced in lockstep, so the
    correction at step ``n`` uses the base solution at step ``n``. Returns
    ``(trace_base, U_base, trace_derived, U_derived)``.
    """
    der = derived_operator(problem)
    bs0, dt, n_steps, x = _setup(problem, grid)
    bs1 = assemble_block_system(der.problem)
    bs1.tau_max = bs0.tau_max
    base = _Integrator(problem, bs0, x, grid.dx, dt)
    deriv = _Integrator(der.problem, bs1, x, grid.dx, dt)
    corr = der.corrections

    def couple(ints):
        t = ints[0].t
        extra = np.zeros_like(x)
        for d, c in enumerate(corr):
            if not c.is_const(0.0):
                extra += np.broadcast_to(eval_expr(c, t, base.xc), x.shape) * ints[0].U[:, base.last[d]]
        return [None, extra]

    rec0, rec1 = _run([base, deriv], n_steps, bs0.tau_max, couple)
    return (
        _trace(rec0, base, bs0.tau_max, _gamma(bs0, problem)), base.U.T.copy(),
        _trace(rec1, deriv, bs0.tau_max, _gamma(bs1, der.problem)), deriv.U.T.copy(),
    )


def tx_grid(problem: Problem, n_x: int = 41, n_t: int = 3):
    """Tensor grid of ``(t, x)`` pairs over ``[0, T] x`` cone base."""
    xs = np.linspace(*problem.base, n_x)
    ts = np.linspace(0.0, problem.T, n_t)
    return [(t, x) for t in ts for x in xs]


def check_l1_hypotheses(problem: Problem, grid) -> List[ProperCheck]:
    """Proper-decomposition checks of every ``R_d^(1)`` w.r.t. ``P^(d+1)``.

    ``grid`` is an iterable of ``(t, x)`` pairs.
    """
    der = derived_operator(problem).problem
    grid = list(grid)
    P = der.principal
    return [check_proper(der.r[d], P, d, grid) for d in range(der.m)]


# ---------------------------------------------------------------------------
# Nuij sweep

def nuij_coefficients(a: Sequence, eps: float, times: Optional[int] = None) -> Tuple[Expr, ...]:
    """Principal coefficients after ``times`` (default ``m - 1``) Nuij maps ``P - eps dP/dtau``."""
    c = [Const(1.0)] + [as_expr(e) for e in a]
    m = len(c) - 1
    times = m - 1 if times is None else times
    for _ in range(times):
        c = [c[0]] + [c[k] - Const(eps * (m - k + 1)) * c[k - 1] for k in range(1, m + 1)]
    return tuple(c[1:])


@dataclass
class SweepReport:
    epsilons: List[float]
    entries: List[dict]
    cauchy: bool
    slope: Optional[float]
    tau_max: float

    @property
    def passed(self) -> bool:
        return all(e.get("ok", False) for e in self.entries)

    def to_dict(self):
        return {
            "epsilons": self.epsilons,
            "entries": self.entries,
            "cauchy": self.cauchy,
            "slope": self.slope,
            "tau_max": self.tau_max,
            "pass": self.passed,
        }

    def to_json(self, **kw):
        return json.dumps(self.to_dict(), sort_keys=True, **kw)


def _transfer_check(problem: Problem, a_eps, xs) -> Tuple[bool, float]:
    """Re-expand every ``R_d`` on the Nuij approximant and compare with the closed-form bound."""
    worst = 0.0
    P, Pe = HPoly(problem.a), HPoly(a_eps)
    for x in xs:
        for d in range(problem.m):
            R = [eval_expr(r, 0.0, x) for r in problem.r[d]]
            if not np.any(R):
                continue
            p = monic_tau_derivative(P, d + 1, x).point
            pe = monic_tau_derivative(Pe, d + 1, x).point
            ell = minnorm_decompose(R, p).coeffs
            got = np.abs(transfer_to_nuij(ell, p, pe).coeffs)
            bound = transfer_bound(ell, p, pe)
            ratio = np.max(np.where(bound > 0, got / np.where(bound > 0, bound, 1), np.where(got > 1e-12, np.inf, 0)))
            worst = max(worst, float(ratio))
    return worst <= 1 + 1e-9, worst


def nuij_sweep(problem: Problem, grid: Grid, epsilons: Sequence[float], n_check: int = 21) -> SweepReport:
    """Solve with the principal part replaced by its Nuij approximants.

    All runs share one mesh, time step and cone, fixed by the largest
    ``tau_max`` among the approximants and the original; the data are the
    same for every ``eps``. Distances are ``L^2(I_T)`` norms of the full
    stacked state at the final time.
    """
    eps = [float(e) for e in epsilons]
    if not eps:
        raise ValueError("no epsilons")
    if any(e <= 0 for e in eps) or any(b >= a for a, b in zip(eps, eps[1:])):
        raise ValueError("epsilons must be positive and strictly decreasing")
    variants = [(e, replace(problem, a=nuij_coefficients(problem.a, e))) for e in eps]
    tau = 0.0
    for _, pr in [(0.0, problem)] + variants:
        tau = max(tau, assemble_block_system(pr).tau_max)
    xs = np.linspace(*problem.base, n_check)

    base_U = None
    try:
        tr0, base_U = solve(problem, grid, tau_max=tau)
    except (NotHyperbolic, NonFinite, ExprEvalError):
        tr0 = None

    entries, finals = [], []
    for e, pr in variants:
        entry = {"eps": e}
        try:
            tr, U = solve(pr, grid, tau_max=tau)
            chk = verify_energy_estimate(tr)
            ok_t, ratio = _transfer_check(problem, pr.a, xs)
            lo, hi = tr.cone_lo[-1], tr.cone_hi[-1]
            entry.update(
                C_emp=chk.C_emp,
                energy_final=float(tr.energy[-1]),
                transfer_ok=ok_t,
                transfer_ratio=ratio,
                ok=bool(chk.passed and ok_t),
            )
            if base_U is not None:
                entry["distance_to_base"] = l2_distance(U, base_U, tr.nodes, lo, hi)
            if finals:
                entry["distance_prev"] = l2_distance(U, finals[-1][0], tr.nodes, lo, hi)
            finals.append((U, tr))
        except (NotHyperbolic, NonFinite, ExprEvalError, ArithmeticError, ValueError) as exc:
            entry.update(ok=False, error=str(exc))
            finals.append((None, None))
        entries.append(entry)

    dists = [en["distance_prev"] for en in entries if "distance_prev" in en]
    cauchy = all(b <= a * (1 + 1e-9) for a, b in zip(dists, dists[1:]))
    slope = None
    pts = [(en["eps"], en["distance_to_base"]) for en in entries if en.get("distance_to_base", 0) > 0]
    if len(pts) >= 2:
        le, ld = np.log([p[0] for p in pts]), np.log([p[1] for p in pts])
        slope = float(np.polyfit(le, ld, 1)[0])
    return SweepReport(epsilons=eps, entries=entries, cauchy=bool(cauchy), slope=slope, tau_max=tau)
