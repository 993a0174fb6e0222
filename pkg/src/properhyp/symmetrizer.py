"""Jannelli symmetrizers and the block first-order system.

Vector convention: ``vec(p)`` lists the coefficients of ``p`` by *ascending*
powers of ``tau`` (constant term first, leading coefficient last). This is
the ordering in which the rows ``vec(P_khat)`` are left eigenvectors of the
Sylvester (companion) matrix with last row ``-a_d, ..., -a_1``, and in which
``vec(R_d) . u^(d)`` equals ``R_d(t, x; d_t, d_x) u`` for
``u^(d) = (d_x^d u, d_t d_x^(d-1) u, ..., d_t^d u)``.

Two independent routes to the symmetrizer are provided: ``jannelli_q``
builds ``W^T W`` from the roots, ``symmetrizer_from_coeffs`` builds it from
the coefficients through Newton power sums (no roots), together with its
exact x-derivative. The block system uses the second route.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from .coeff_expr import ZERO, as_expr, diff_expr, eval_expr
from .hyperpoly import (
    HPoly,
    PointPoly,
    monic_derivative_coeffs,
    point_poly,
    reduced_polys,
)

__all__ = [
    "SylvesterBlock",
    "BlockSystem",
    "BoundReport",
    "sylvester_matrix",
    "eigen_rows",
    "jannelli_q",
    "psi_diag",
    "sylvester_block",
    "power_sums",
    "symmetrizer_from_coeffs",
    "psi_from_coeffs",
    "assemble_block_system",
    "verify_bounds",
    "block_sizes",
    "weak_coercivity",
]


def block_sizes(m: int) -> List[int]:
    return list(range(1, m + 1))


def sylvester_matrix(coeffs) -> np.ndarray:
    """Companion matrix of a monic polynomial (descending coefficients).

    Ones on the superdiagonal, last row ``-a_d, ..., -a_1``.
    """
    c = np.asarray(coeffs, dtype=float)
    d = len(c) - 1
    A = np.zeros((d, d))
    if d > 1:
        A[np.arange(d - 1), np.arange(1, d)] = 1.0
    A[-1, :] = 0.0 - c[:0:-1]
    return A


def eigen_rows(p: PointPoly) -> np.ndarray:
    """``W`` whose row ``k`` is ``vec(P_khat)`` (ascending powers)."""
    return np.array([w[::-1] for w in reduced_polys(p)])


def psi_diag(roots) -> np.ndarray:
    """``(psi_{m-1}, ..., psi_1, 1)``; ``psi_k`` is the k-th elementary
    symmetric function of the squared roots."""
    sq = np.asarray(roots, dtype=float) ** 2
    e = np.array([1.0])
    for s in sq:
        e = np.append(e, 0.0) + s * np.concatenate(([0.0], e))
    # e[k] = e_k(sq)
    m = len(sq)
    return e[m - 1::-1].copy() if m else np.array([])


def jannelli_q(p: PointPoly):
    """``(Q, psi)`` with ``Q = W^T W`` and ``psi`` the diagonal of ``Psi``."""
    W = eigen_rows(p)
    return W.T @ W, psi_diag(p.roots)


@dataclass(frozen=True)
class SylvesterBlock:
    d: int
    A: np.ndarray
    Q: np.ndarray
    W: np.ndarray
    psi: np.ndarray
    lam: np.ndarray


def sylvester_block(coeffs) -> SylvesterBlock:
    p = coeffs if isinstance(coeffs, PointPoly) else point_poly(coeffs)
    Q, psi = jannelli_q(p)
    return SylvesterBlock(
        d=p.degree, A=sylvester_matrix(p.coeffs), Q=Q, W=eigen_rows(p), psi=psi, lam=p.roots.copy()
    )


# ---------------------------------------------------------------------------
# root-free route (vectorised over points, with exact x-derivatives)

def power_sums(c, dc=None, nmax=None):
    """Newton power sums ``s_n = sum_k tau_k^n`` for ``n = 0..nmax``.

    ``c`` has shape ``(..., m+1)`` (monic, descending). If ``dc`` is given,
    the x-derivatives ``ds_n`` are propagated alongside.
    """
    c = np.asarray(c, dtype=float)
    m = c.shape[-1] - 1
    nmax = 2 * (m - 1) if nmax is None else nmax
    shape = c.shape[:-1]
    s = np.zeros(shape + (nmax + 1,))
    ds = np.zeros_like(s)
    s[..., 0] = m
    for n in range(1, nmax + 1):
        acc = np.zeros(shape)
        dacc = np.zeros(shape)
        for i in range(1, min(n - 1, m) + 1):
            acc += c[..., i] * s[..., n - i]
            if dc is not None:
                dacc += dc[..., i] * s[..., n - i] + c[..., i] * ds[..., n - i]
        if n <= m:
            acc += n * c[..., n]
            if dc is not None:
                dacc += n * dc[..., n]
        s[..., n] = -acc
        ds[..., n] = -dacc
    return (s, ds) if dc is not None else s


def symmetrizer_from_coeffs(c, dc=None):
    """``Q = W^T W`` from coefficients alone, optionally with ``dQ/dx``.

    The row ``w_k`` holds the synthetic-division quotients
    ``b_j(tau_k) = sum_{l<=j} a_l tau_k^(j-l)`` (coefficient of
    ``tau^(m-1-j)``), so ``Q`` is a bilinear form in the coefficients whose
    kernel entries are power sums.
    """
    c = np.asarray(c, dtype=float)
    m = c.shape[-1] - 1
    shape = c.shape[:-1]
    if dc is None:
        s = power_sums(c)
        ds = None
    else:
        dc = np.asarray(dc, dtype=float)
        s, ds = power_sums(c, dc)
    # G[j, j'] = sum_k b_j(tau_k) b_j'(tau_k), indices in descending order
    G = np.zeros(shape + (m, m))
    dG = np.zeros_like(G) if dc is not None else None
    for j in range(m):
        for jp in range(j, m):
            acc = np.zeros(shape)
            dacc = np.zeros(shape)
            for l in range(j + 1):
                for lp in range(jp + 1):
                    n = j - l + jp - lp
                    acc += c[..., l] * c[..., lp] * s[..., n]
                    if dc is not None:
                        dacc += (
                            dc[..., l] * c[..., lp] * s[..., n]
                            + c[..., l] * dc[..., lp] * s[..., n]
                            + c[..., l] * c[..., lp] * ds[..., n]
                        )
            G[..., j, jp] = G[..., jp, j] = acc
            if dc is not None:
                dG[..., j, jp] = dG[..., jp, j] = dacc
    # ascending index i corresponds to descending j = m - 1 - i
    Q = G[..., ::-1, ::-1]
    if dc is None:
        return Q
    return Q, dG[..., ::-1, ::-1]


def psi_from_coeffs(c):
    """Diagonal of ``Psi`` from coefficients via ``(-1)^m P(tau) P(-tau)``."""
    c = np.asarray(c, dtype=float)
    m = c.shape[-1] - 1
    powers = np.arange(m, -1, -1)
    cm = c * (-1.0) ** powers  # coefficients of P(-tau)
    shape = c.shape[:-1]
    prod = np.zeros(shape + (2 * m + 1,))
    for i in range(m + 1):
        for j in range(m + 1):
            prod[..., i + j] += c[..., i] * cm[..., j]
    prod *= (-1.0) ** m
    # even powers only: sigma-polynomial coefficients (descending in sigma)
    sig = prod[..., ::2]
    e = sig * (-1.0) ** np.arange(m + 1)  # e_k of squared roots
    return e[..., m - 1::-1]


# ---------------------------------------------------------------------------
# block system

@dataclass
class BlockSystem:
    """Matrices of ``U_t = A U_x + B U + F`` and its block symmetrizer.

    Evaluators accept a scalar ``x`` (returning ``(N, N)``) or an array
    (returning ``(n, N, N)``).
    """

    m: int
    a: tuple
    r: tuple
    f: object
    tau_max: float
    da: tuple = field(default=(), repr=False)

    @property
    def N(self) -> int:
        return self.m * (self.m + 1) // 2

    @property
    def offsets(self) -> List[int]:
        return [d * (d - 1) // 2 for d in range(1, self.m + 1)]

    # -- coefficient helpers ------------------------------------------------
    def _coeffs(self, x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        cols = [np.ones_like(x)] + [np.broadcast_to(eval_expr(a, 0.0, x), x.shape) for a in self.a]
        dcols = [np.zeros_like(x)] + [np.broadcast_to(eval_expr(a, 0.0, x), x.shape) for a in self.da]
        return np.stack(cols, -1), np.stack(dcols, -1)

    def block_coeffs(self, x):
        """List over ``d = 1..m`` of (coeffs, dcoeffs) of ``P^(d)``, shape ``(n, d+1)``."""
        c, dc = self._coeffs(x)
        out = []
        for d in range(1, self.m + 1):
            scale = monic_derivative_coeffs(np.ones(self.m + 1), d)
            out.append((c[:, : d + 1] * scale, dc[:, : d + 1] * scale))
        return out

    @staticmethod
    def _squeeze(M, x):
        return M[0] if np.ndim(x) == 0 else M

    def _assemble(self, x, blocks):
        n = np.atleast_1d(np.asarray(x, dtype=float)).shape[0]
        M = np.zeros((n, self.N, self.N))
        for off, B in zip(self.offsets, blocks):
            d = B.shape[-1]
            M[:, off:off + d, off:off + d] = B
        return self._squeeze(M, x)

    @staticmethod
    def _companions(c):
        n, d1 = c.shape
        d = d1 - 1
        A = np.zeros((n, d, d))
        if d > 1:
            A[:, np.arange(d - 1), np.arange(1, d)] = 1.0
        A[:, -1, :] = 0.0 - c[:, :0:-1]
        return A

    def A(self, x):
        return self._assemble(x, [self._companions(c) for c, _ in self.block_coeffs(x)])

    def A_x(self, x):
        blocks = []
        for c, dc in self.block_coeffs(x):
            dA = np.zeros((c.shape[0], c.shape[1] - 1, c.shape[1] - 1))
            dA[:, -1, :] = -dc[:, :0:-1]
            blocks.append(dA)
        return self._assemble(x, blocks)

    def Q(self, x):
        return self._assemble(x, [symmetrizer_from_coeffs(c) for c, _ in self.block_coeffs(x)])

    def QA_x(self, x):
        """Exact ``d/dx (Q A)`` blockwise: ``Q' A + Q A'``."""
        blocks = []
        for c, dc in self.block_coeffs(x):
            Q, dQ = symmetrizer_from_coeffs(c, dc)
            A = self._companions(c)
            dA = np.zeros_like(A)
            dA[:, -1, :] = -dc[:, :0:-1]
            blocks.append(dQ @ A + Q @ dA)
        return self._assemble(x, blocks)

    def Xi(self, x):
        blocks = [np.einsum("ni,ij->nij", psi_from_coeffs(c), np.eye(c.shape[1] - 1)) for c, _ in self.block_coeffs(x)]
        return self._assemble(x, blocks)

    def alpha_part(self, x):
        """The x-only part of ``B`` (the ``alpha_d`` coupling rows)."""
        n = np.atleast_1d(np.asarray(x, dtype=float)).shape[0]
        M = np.zeros((n, self.N, self.N))
        offs = self.offsets
        for d, (c, _) in enumerate(self.block_coeffs(x)[:-1], start=1):
            row = offs[d - 1] + d - 1
            M[:, row, offs[d]:offs[d] + d + 1] = c[:, ::-1]
        return self._squeeze(M, x)

    def rho_part(self, t, x):
        """The lower-order rows ``rho_d`` (last row of the last block)."""
        xa = np.atleast_1d(np.asarray(x, dtype=float))
        M = np.zeros((xa.shape[0], self.N, self.N))
        offs = self.offsets
        last = self.N - 1
        for d in range(self.m):
            for k, r in enumerate(self.r[d]):
                if r.is_const(0.0):
                    continue
                # coefficient of tau^(d-k) xi^k sits at ascending position d - k
                M[:, last, offs[d] + d - k] = np.broadcast_to(eval_expr(r, t, xa), xa.shape)
        return self._squeeze(M, x)

    def B(self, t, x):
        return self.alpha_part(x) + self.rho_part(t, x)

    def F(self, t, x):
        xa = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.zeros((xa.shape[0], self.N))
        out[:, -1] = np.broadcast_to(eval_expr(self.f, t, xa), xa.shape)
        return out[0] if np.ndim(x) == 0 else out


def _tau_max(a, xgrid):
    P = HPoly(a)
    c = P.coeffs_at(np.asarray(xgrid, dtype=float))
    return max(float(np.max(np.abs(point_poly(ci, x=float(x)).roots))) for ci, x in zip(c, xgrid))


def assemble_block_system(problem, xgrid=None) -> BlockSystem:
    """Block system of ``problem`` (needs ``m``, ``a``, ``r``, ``f``).

    ``tau_max`` is the largest root modulus over ``xgrid`` (default: 401
    points on the cone base of the problem). Raises ``NotHyperbolic`` if the
    principal symbol has complex roots on the grid.
    """
    m = problem.m
    a = tuple(as_expr(e) for e in problem.a)
    r = tuple(tuple(as_expr(e) for e in row) for row in problem.r)
    if len(a) != m or len(r) != m or any(len(r[d]) != d + 1 for d in range(m)):
        raise ValueError("inconsistent coefficient table")
    if xgrid is None:
        xgrid = np.linspace(problem.x0 - problem.rho0, problem.x0 + problem.rho0, 401)
    da = tuple(diff_expr(e, "x") for e in a)
    if any("t" in e.free_vars() for e in a):
        raise ValueError("principal coefficients must depend on x only")
    f = as_expr(getattr(problem, "f", ZERO))
    return BlockSystem(m=m, a=a, r=r, f=f, tau_max=_tau_max(a, xgrid), da=da)


# ---------------------------------------------------------------------------
# bound verification

@dataclass
class BoundReport:
    """Empirical constants; each entry has ``value``, ``ceiling``/``floor`` and ``pass``."""

    entries: Dict[str, dict]
    tau_max: float
    n_points: int
    n_vectors: int

    @property
    def passed(self) -> bool:
        return all(e["pass"] for e in self.entries.values())

    def __getitem__(self, key):
        return self.entries[key]["value"]

    def to_dict(self):
        return {
            "tau_max": self.tau_max,
            "n_points": self.n_points,
            "n_vectors": self.n_vectors,
            "pass": self.passed,
            "constants": self.entries,
        }

    def to_json(self, **kw):
        return json.dumps(self.to_dict(), sort_keys=True, **kw)


def _ratio(num, den, tiny):
    mask = den > tiny
    return np.where(mask, num / np.where(mask, den, 1.0), np.nan)


def weak_coercivity(bs: BlockSystem, x) -> float:
    """Largest ``g`` with ``(Q_d v, v) >= g v_last^2`` for every block and every ``x``.

    Exact: ``g = min_d 1 / (Q_d^+)_{last,last}``, or 0 if the last unit vector
    leaves the range of some ``Q_d``.
    """
    return _weak_coercivity(bs.Q(np.atleast_1d(np.asarray(x, dtype=float))), bs.m)


def _weak_coercivity(Qx, m):
    best = np.inf
    offs = [d * (d - 1) // 2 for d in range(1, m + 1)]
    for off, d in zip(offs, range(1, m + 1)):
        blocks = Qx[:, off:off + d, off:off + d]
        pinv = np.linalg.pinv(blocks, hermitian=True)
        e = np.zeros(d)
        e[-1] = 1.0
        # e must lie in the range of Q_d, otherwise no such g exists
        resid = np.linalg.norm(np.einsum("nij,njk,k->ni", blocks, pinv, e) - e, axis=1)
        if np.any(resid > 1e-6):
            return 0.0
        best = min(best, float(np.min(1.0 / pinv[:, -1, -1])))
    return best


def verify_bounds(
    bs: BlockSystem,
    xgrid,
    n_random_v: int = 1000,
    tgrid: Sequence[float] = (0.0,),
    seed: int = 0,
    ceilings: Optional[Dict[str, float]] = None,
    exact: bool = False,
) -> BoundReport:
    """Estimate the constants of the symmetrizer inequalities on a grid.

    Ratios are sampled over ``xgrid`` (and ``tgrid`` for ``B``) and
    ``n_random_v`` random unit vectors; ``exact=True`` computes ``Gamma0``,
    ``Gamma1`` and ``Gamma2`` by (generalised) eigenvalues instead. The weak
    coercivity constant is always computed exactly.

    Keys: ``QQbdd``, ``QQA`` (ceiling ``tau_max``), ``QQAp``, ``AAp``,
    ``Gamma1``/``Gamma2`` (``Gamma1 (Xi V,V) <= (Q V,V) <= Gamma2 (Xi V,V)``),
    ``Gamma3`` and ``weak_coercivity``.
    """
    ceil = {"QQbdd": 1e8, "QQAp": 1e8, "AAp": 1e8, "Gamma2": 1e8, "Gamma3": 1e8, "QQA": bs.tau_max}
    if ceilings:
        ceil.update(ceilings)
    xgrid = np.asarray(xgrid, dtype=float)
    rng = np.random.default_rng(seed)
    V = rng.standard_normal((n_random_v, bs.N))
    V /= np.linalg.norm(V, axis=1, keepdims=True)

    Qx = bs.Q(xgrid)
    Ax = bs.A(xgrid)
    Xx = bs.Xi(xgrid)
    QAp = bs.QA_x(xgrid)
    Apx = bs.A_x(xgrid)

    def quad(M):
        return np.einsum("vi,xij,vj->xv", V, M, V)

    q = quad(Qx)
    xi = quad(Xx)
    tiny = 1e-12
    qa = np.abs(quad(Qx @ Ax))
    entries = {}

    def put(name, value, lower=False, bound=None):
        if lower:
            entries[name] = {"value": value, "floor": 0.0, "pass": bool(np.isfinite(value) and value > 0.0)}
        else:
            lim = ceil[name] if bound is None else bound
            ok = bool(np.isfinite(value) and value <= lim * (1 + 1e-9) + 1e-12)
            entries[name] = {"value": value, "ceiling": lim, "pass": ok}

    if exact:
        put("QQbdd", float(np.max(np.linalg.eigvalsh(Qx))))
    else:
        put("QQbdd", float(np.max(q)))
    put("QQA", float(np.nanmax(_ratio(qa, q, tiny))) if np.any(q > tiny) else 0.0)
    put("QQAp", float(np.nanmax(np.nan_to_num(_ratio(np.abs(quad(QAp)), xi, tiny), nan=0.0))))
    put("AAp", float(np.nanmax(np.nan_to_num(_ratio(np.einsum("xvi,xvi->xv", np.einsum("xij,vj->xvi", Apx, V), np.einsum("xij,vj->xvi", Apx, V)), xi, tiny), nan=0.0))))
    if exact:
        g1, g2 = _exact_gammas(Qx, Xx)
    else:
        ratio = _ratio(q, xi, tiny)
        g1, g2 = float(np.nanmin(ratio)), float(np.nanmax(ratio))
    put("Gamma1", g1, lower=True)
    put("Gamma2", g2)
    g3 = 0.0
    for t in tgrid:
        QB = Qx @ bs.B(float(t), xgrid)
        g3 = max(g3, float(np.nanmax(np.nan_to_num(_ratio(np.abs(quad(QB)), q, tiny), nan=0.0))))
    put("Gamma3", g3)
    put("weak_coercivity", _weak_coercivity(Qx, bs.m), lower=True)
    return BoundReport(entries=entries, tau_max=bs.tau_max, n_points=len(xgrid), n_vectors=n_random_v)


def _exact_gammas(Qx, Xx):
    lo, hi = np.inf, 0.0
    for Q, X in zip(Qx, Xx):
        dx = np.diag(X)
        keep = dx > 1e-14
        if not np.all(keep):
            # directions with (Xi v, v) = 0 must also be null for Q
            if np.linalg.norm(Q[np.ix_(~keep, ~keep)]) > 1e-9 * (1 + np.linalg.norm(Q)):
                return 0.0, np.inf
        s = 1.0 / np.sqrt(dx[keep])
        ev = np.linalg.eigvalsh(Q[np.ix_(keep, keep)] * s[:, None] * s[None, :])
        lo, hi = min(lo, float(ev[0])), max(hi, float(ev[-1]))
    return lo, hi
