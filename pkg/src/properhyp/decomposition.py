"""Proper decompositions with respect to the reduced polynomials.

A polynomial ``R`` of degree ``< m`` decomposes properly with respect to a
hyperbolic ``P`` of degree ``m`` when ``R = sum_k l_k P_khat`` with bounded
coefficients ``l_k``. At a single point this is a small linear system
``W^T l = vec(R)`` whose rows are the reduced polynomials; this module solves
it, ties coefficients of coinciding roots, checks boundedness over grids,
splits ``R`` into interlaced parts and re-expands it on Nuij approximants.

All coefficient vectors are in descending powers of ``tau``; shorter inputs
are padded with leading zeros.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from .coeff_expr import as_expr, eval_expr
from .hyperpoly import (
    UNBOUNDED_THRESHOLD,
    HPoly,
    NotHyperbolic,
    PointPoly,
    check_interlacing,
    monic_tau_derivative,
    point_poly,
    poly_from_roots,
    reduced_polys,
)

__all__ = [
    "MultipleRoots",
    "Infeasible",
    "InterlacingFailure",
    "Decomposition",
    "ProperCheck",
    "lagrange_decompose",
    "minnorm_decompose",
    "check_proper",
    "second_order_decompose",
    "fisk_split",
    "transfer_to_nuij",
    "transfer_bound",
]

INFEASIBLE_RTOL = 1e-7


class MultipleRoots(ValueError):
    """Lagrange coefficients need simple roots."""


class Infeasible(ValueError):
    """``R`` is not in the span of the reduced polynomials at this point."""

    def __init__(self, residual, x=float("nan")):
        super().__init__(f"not in the span of the reduced polynomials at x={x!r} (residual {residual:.3e})")
        self.residual = residual
        self.x = x


class InterlacingFailure(ArithmeticError):
    """A polynomial expected to interlace with ``P`` does not (numerically)."""


def _pad(R, n):
    R = np.atleast_1d(np.asarray(R, dtype=float))
    if len(R) > n:
        if np.any(R[: len(R) - n] != 0.0):
            raise ValueError(f"degree of R exceeds {n - 1}")
        return R[len(R) - n:]
    return np.concatenate((np.zeros(n - len(R)), R))


@dataclass
class Decomposition:
    """Coefficients of a decomposition at one point.

    For ``order == "second"`` the coefficients follow ``pairs`` (0-based
    ``(h, k)`` with ``h < k``).
    """

    coeffs: np.ndarray
    residual: float
    order: str = "first"
    pairs: Optional[Tuple[Tuple[int, int], ...]] = None
    x: float = float("nan")

    @property
    def bound(self) -> float:
        return float(np.max(np.abs(self.coeffs))) if len(self.coeffs) else 0.0

    def as_dict(self) -> Dict[Tuple[int, int], float]:
        if self.pairs is None:
            return {(k,): float(v) for k, v in enumerate(self.coeffs)}
        return {pq: float(v) for pq, v in zip(self.pairs, self.coeffs)}


def lagrange_decompose(R, p: PointPoly) -> np.ndarray:
    """``l_j = R(tau_j) / P_jhat(tau_j)`` for a polynomial with simple roots."""
    if not p.is_strict:
        raise MultipleRoots(f"multiple roots at x={p.x!r}: {p.clusters}")
    R = _pad(R, p.degree)
    t = p.roots
    # P_jhat(tau_j) as a product of root differences: evaluating the expanded
    # reduced polynomial loses digits when roots are close
    den = np.array([np.prod(tj - np.delete(t, j)) for j, tj in enumerate(t)])
    return np.polyval(R, t) / den


def _tied_minnorm(basis, groups, r, x):
    """Min-norm ``l`` with ``basis.T @ l = r`` and ``l`` constant on each group.

    Writing ``l = T c`` with ``T`` the group indicator, the Euclidean norm of
    ``l`` is ``|D^(1/2) c|`` (``D`` = group sizes); solve for ``D^(1/2) c`` by
    least squares, which returns the min-norm solution.
    """
    n = basis.shape[0]
    T = np.zeros((n, len(groups)))
    for i, g in enumerate(groups):
        T[list(g), i] = 1.0
    sizes = T.sum(axis=0)
    M = basis.T @ T / np.sqrt(sizes)
    y, *_ = np.linalg.lstsq(M, r, rcond=None)
    coeffs = T @ (y / np.sqrt(sizes))
    residual = float(np.linalg.norm(basis.T @ coeffs - r))
    if residual > INFEASIBLE_RTOL * (1.0 + np.linalg.norm(r)):
        raise Infeasible(residual, x)
    return coeffs, residual


def minnorm_decompose(R, p: PointPoly) -> Decomposition:
    """Minimum-norm decomposition of ``R`` on the reduced polynomials of ``p``.

    Coefficients of roots in the same multiplicity cluster are tied. Raises
    :class:`Infeasible` if the residual exceeds ``1e-7 (1 + |R|)``.
    """
    R = _pad(R, p.degree)
    basis = np.array(reduced_polys(p))
    coeffs, residual = _tied_minnorm(basis, p.clusters, R, p.x)
    return Decomposition(coeffs=coeffs, residual=residual, x=p.x)


def second_order_decompose(S, p: PointPoly) -> Decomposition:
    """Min-norm decomposition of ``S`` (degree ``<= m - 2``) on bi-reduced polynomials.

    Pairs whose bi-reduced polynomials coincide (same clusters removed) are
    tied.
    """
    m = p.degree
    if m < 2:
        raise ValueError("need m >= 2")
    S = np.atleast_1d(np.asarray(S, dtype=float))
    if len(S) > m - 1 and np.any(S[: len(S) - (m - 1)] != 0.0):
        raise ValueError(f"second-order decomposition needs degree <= {m - 2}")
    S = _pad(S, m - 1)
    pairs = tuple(itertools.combinations(range(m), 2))
    roots = p.roots
    basis = np.array([poly_from_roots(np.delete(roots, [h, k])) for h, k in pairs])
    labels = p.cluster_of()
    keyed: Dict[Tuple[int, int], list] = {}
    for i, (h, k) in enumerate(pairs):
        keyed.setdefault(tuple(sorted((labels[h], labels[k]))), []).append(i)
    coeffs, residual = _tied_minnorm(basis, list(keyed.values()), S, p.x)
    return Decomposition(coeffs=coeffs, residual=residual, order="second", pairs=pairs, x=p.x)


@dataclass
class ProperCheck:
    """Outcome of a proper-decomposition check over a grid.

    ``C0`` is the supremum of the coefficient magnitudes (``inf`` on failure);
    ``fail_point`` is ``(t, x)`` of the first failure and ``reason`` says why.
    """

    C0: float
    ok: bool
    worst_point: Tuple[float, float] = (float("nan"), float("nan"))
    fail_point: Optional[Tuple[float, float]] = None
    reason: str = ""
    samples: int = 0


def check_proper(R: Sequence, P: HPoly, d: int, grid) -> ProperCheck:
    """Check that ``R(t, x; tau)`` decomposes properly w.r.t. the monic derivative ``P^(d+1)``.

    Parameters
    ----------
    R : sequence of Expr/str/float
        ``r_0, ..., r_d``, the coefficients of ``tau^d, ..., tau^0``.
    P : HPoly
    d : int
        Degree bound of ``R``; the reference polynomial is ``P^(d+1)``, i.e.
        ``d^(m-1-d) P / dtau^(m-1-d)`` normalised to be monic.
    grid : iterable of ``(t, x)``
    """
    R = [as_expr(r) for r in R]
    if len(R) > d + 1:
        raise ValueError(f"R has {len(R)} coefficients, more than d + 1 = {d + 1}")
    m = P.m
    if not 0 <= d <= m - 1:
        raise ValueError(f"need 0 <= d <= m - 1, got {d}")
    grid = [(float(t), float(x)) for t, x in grid]
    best, worst = 0.0, (float("nan"), float("nan"))
    cache = {}
    for t, x in grid:
        if x not in cache:
            try:
                cache[x] = monic_tau_derivative(P, d + 1, x).point
            except NotHyperbolic:
                return ProperCheck(np.inf, False, fail_point=(t, x), reason="not hyperbolic", samples=len(grid))
        ref = cache[x]
        rv = [eval_expr(r, t, x) for r in R]
        try:
            dec = minnorm_decompose(rv, ref)
        except Infeasible:
            return ProperCheck(np.inf, False, fail_point=(t, x), reason="infeasible", samples=len(grid))
        if dec.bound > best:
            best, worst = dec.bound, (t, x)
        if best > UNBOUNDED_THRESHOLD:
            return ProperCheck(np.inf, False, fail_point=(t, x), reason="unbounded", samples=len(grid))
    return ProperCheck(best, True, worst_point=worst, samples=len(grid))


def fisk_split(R, p: PointPoly, ell, zeta: Optional[float] = None):
    """Write ``R = zeta P' + (r_0 - m zeta) Ptilde`` with ``Ptilde`` interlaced with ``p``.

    ``zeta`` defaults to ``max(ell) + 1`` so that every ``zeta - l_k`` is
    positive. Returns ``(zeta, Ptilde)`` with ``Ptilde`` monic (descending
    coefficients). Raises :class:`InterlacingFailure` if ``Ptilde`` fails the
    hyperbolicity or interlacing check.
    """
    m = p.degree
    R = _pad(R, m)
    ell = np.asarray(ell, dtype=float)
    if zeta is None:
        zeta = float(np.max(ell)) + 1.0
    if np.any(zeta - ell <= 0):
        raise ValueError("zeta must exceed every coefficient")
    r0 = R[0]
    denom = m * zeta - r0
    if denom <= 0:
        raise ValueError("degenerate split: m * zeta == r_0")
    dp = np.polyder(p.coeffs)
    ptilde = (zeta * dp - R) / denom
    try:
        q = point_poly(ptilde, x=p.x)
    except NotHyperbolic as exc:
        raise InterlacingFailure(str(exc)) from exc
    if not check_interlacing(p.roots, q.roots, 0.0):
        raise InterlacingFailure(f"roots {q.roots} do not interlace {p.roots}")
    return zeta, q.coeffs


def _shift_and_gap(p: PointPoly, p_eps: PointPoly):
    shift = float(np.max(np.abs(p_eps.roots - p.roots)))
    gap = float(np.min(np.diff(p_eps.roots))) if p_eps.degree > 1 else np.inf
    return shift, gap


def transfer_bound(ell, p: PointPoly, p_eps: PointPoly) -> np.ndarray:
    """Per-coefficient bounds for the re-expansion on ``p_eps``.

    With ``q = max shift / min gap`` (``C1/C2`` at a fixed ``eps``), a reduced
    polynomial of ``p`` contributes at most ``(1 + q)^(m-1)`` to its own
    coefficient and ``q (1 + q)^(m-2)`` to each other one.
    """
    m = p.degree
    shift, gap = _shift_and_gap(p, p_eps)
    q = shift / gap
    diag = (1.0 + q) ** (m - 1)
    off = q * (1.0 + q) ** (m - 2) if m >= 2 else 0.0
    a = np.abs(np.asarray(ell, dtype=float))
    return diag * a + off * (a.sum() - a)


def transfer_to_nuij(ell, p: PointPoly, p_eps: PointPoly) -> Decomposition:
    """Re-expand ``sum l_k P_khat`` on the reduced polynomials of the strict ``p_eps``."""
    ell = np.asarray(ell, dtype=float)
    R = np.sum([l * w for l, w in zip(ell, reduced_polys(p))], axis=0)
    coeffs = lagrange_decompose(R, p_eps)
    residual = float(np.linalg.norm(np.array(reduced_polys(p_eps)).T @ coeffs - R))
    return Decomposition(coeffs=coeffs, residual=residual, x=p_eps.x)
