"""Pointwise machinery for hyperbolic polynomials in ``tau``.

Conventions
-----------
* Coefficient vectors are monic and in *descending* powers of ``tau``:
  ``[1, a_1, ..., a_m]`` stands for ``tau^m + a_1 tau^(m-1) + ... + a_m``.
* Root indices are 0-based and roots are sorted ascending.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb
from typing import Dict, List, Sequence, Tuple

import numpy as np

from .coeff_expr import Expr, as_expr, eval_expr

__all__ = [
    "NotHyperbolic",
    "StrictnessFailure",
    "HPoly",
    "PointPoly",
    "MonicDerivative",
    "CoEstimate",
    "point_poly",
    "roots_at",
    "reduced_polys",
    "bireduced_polys",
    "monic_derivative_coeffs",
    "monic_tau_derivative",
    "nuij_map",
    "nuij_regularize",
    "peyser_bounds",
    "check_interlacing",
    "estimate_co_constant",
    "derived_co_constant",
    "poly_from_roots",
    "UNBOUNDED_THRESHOLD",
]

UNBOUNDED_THRESHOLD = 1e8


class NotHyperbolic(ValueError):
    """The polynomial has a non-real root (beyond tolerance)."""

    def __init__(self, x, imag, coeffs=None):
        super().__init__(f"polynomial not hyperbolic at x={x!r}: imaginary part {imag:.3e}")
        self.x = x
        self.imag = imag
        self.coeffs = coeffs


class StrictnessFailure(ArithmeticError):
    """Nuij regularization produced a numerically vanishing root gap."""


def _tol_imag(coeffs):
    return 1e-8 * (1.0 + np.max(np.abs(coeffs)))


_SQRT_EPS = float(np.sqrt(np.finfo(float).eps))


def _tol_cluster(roots):
    if not len(roots):
        return 1e-7
    spread = roots[-1] - roots[0]
    # a double root comes back split by ~ sqrt(eps) * |tau|
    return max(1e-7 * (1.0 + spread), 8 * _SQRT_EPS * (1.0 + float(np.max(np.abs(roots)))))


def poly_from_roots(roots) -> np.ndarray:
    """Monic coefficients of ``prod (tau - r)`` by repeated synthetic multiplication."""
    c = np.array([1.0])
    for r in roots:
        c = np.append(c, 0.0) - r * np.concatenate(([0.0], c))
    return c


@dataclass(frozen=True)
class PointPoly:
    """A hyperbolic polynomial frozen at one point.

    ``clusters`` partitions ``range(m)`` into maximal runs of roots closer than
    the clustering tolerance; roots inside a cluster are replaced by the
    cluster mean, so their reduced polynomials coincide exactly.
    """

    coeffs: np.ndarray
    roots: np.ndarray
    clusters: Tuple[Tuple[int, ...], ...]
    x: float = float("nan")

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @property
    def spread(self) -> float:
        return float(self.roots[-1] - self.roots[0]) if self.degree else 0.0

    @property
    def tol_cluster(self) -> float:
        return _tol_cluster(self.roots)

    @property
    def is_strict(self) -> bool:
        return all(len(c) == 1 for c in self.clusters)

    def cluster_of(self) -> np.ndarray:
        """Cluster label of each root."""
        labels = np.empty(self.degree, dtype=int)
        for i, c in enumerate(self.clusters):
            labels[list(c)] = i
        return labels

    def __call__(self, tau):
        return np.polyval(self.coeffs, tau)


def _cluster(roots):
    tol = _tol_cluster(roots)
    clusters = []
    current = [0]
    for j in range(1, len(roots)):
        if roots[j] - roots[j - 1] <= tol:
            current.append(j)
        else:
            clusters.append(tuple(current))
            current = [j]
    if len(roots):
        clusters.append(tuple(current))
    return tuple(clusters)


def _companion(c):
    d = len(c) - 1
    A = np.zeros((d, d))
    A[np.arange(d - 1), np.arange(1, d)] = 1.0
    A[-1, :] = -c[:0:-1]
    return A


def _group_eigs(z, radius):
    """Single-linkage groups of eigenvalues closer than ``radius``."""
    order = np.argsort(z.real)
    groups = []
    for i in order:
        for g in groups:
            if np.min(np.abs(z[g] - z[i])) <= radius:
                g.append(i)
                break
        else:
            groups.append([i])
    # merge transitively linked groups
    merged = True
    while merged:
        merged = False
        for a, b in itertools.combinations(range(len(groups)), 2):
            if np.min(np.abs(z[groups[a]][:, None] - z[groups[b]][None, :])) <= radius:
                groups[a] += groups.pop(b)
                merged = True
                break
    return groups


def _merge_complex_groups(z, c, tol_imag):
    """Average eigenvalue groups that contain complex members.

    Radii grow geometrically; the first merge whose real roots rebuild the
    coefficients to ``1e-8`` relative wins. ``None`` if no radius works.
    """
    d = len(z)
    scale = 1.0 + np.max(np.abs(c))
    for radius in scale * np.logspace(-7, -1, 13):
        roots = []
        ok = True
        for g in _group_eigs(z, radius):
            if np.max(np.abs(z[g].imag)) <= tol_imag:
                roots.extend(z[g].real)
                continue
            mean = z[g].mean()
            if abs(mean.imag) > tol_imag:
                ok = False
                break
            roots.extend([mean.real] * len(g))
        if not ok or len(roots) != d:
            continue
        roots = np.sort(np.array(roots))
        if np.max(np.abs(poly_from_roots(roots) - c)) <= 1e-8 * np.max(np.abs(c)):
            return roots
    return None


def point_poly(coeffs, x: float = float("nan")) -> PointPoly:
    """Roots and clusters of a monic real polynomial known to be hyperbolic.

    Roots are eigenvalues of the balanced companion matrix (LAPACK ``geev``
    balances by default). Eigenvalues of a multiple root scatter into a small
    complex ring; when the raw imaginary parts exceed ``tol_imag`` we average
    each tight group of eigenvalues (the mean of a cluster is well
    conditioned) and accept the result only if the real roots reproduce the
    coefficients. Raises :class:`NotHyperbolic` otherwise.
    """
    c = np.asarray(coeffs, dtype=float)
    if c.ndim != 1 or len(c) < 2:
        raise ValueError("need a polynomial of degree >= 1")
    if c[0] != 1.0:
        if c[0] == 0.0:
            raise ValueError("leading coefficient vanishes")
        c = c / c[0]
    if not np.all(np.isfinite(c)):
        raise ValueError(f"non-finite coefficients at x={x!r}")
    d = len(c) - 1
    tol_imag = _tol_imag(c)
    z = np.linalg.eigvals(_companion(c)) if d > 1 else np.array([-c[1]], dtype=complex)
    imag = float(np.max(np.abs(z.imag))) if d else 0.0
    if imag <= tol_imag:
        roots = np.sort(z.real)
    else:
        roots = _merge_complex_groups(z, c, tol_imag)
        if roots is None:
            raise NotHyperbolic(x, imag, c)
    clusters = _cluster(roots)
    for cl in clusters:
        if len(cl) > 1:
            roots[list(cl)] = roots[list(cl)].mean()
    return PointPoly(coeffs=c, roots=roots, clusters=clusters, x=x)


class HPoly:
    """Monic polynomial ``tau^m + a_1(x) tau^(m-1) + ... + a_m(x)``.

    Parameters
    ----------
    coeffs : sequence of Expr or str or float
        ``a_1, ..., a_m`` (the leading 1 is implicit).
    """

    def __init__(self, coeffs: Sequence):
        self.a: Tuple[Expr, ...] = tuple(as_expr(c) for c in coeffs)
        if len(self.a) < 1:
            raise ValueError("degree must be >= 1")

    @property
    def m(self) -> int:
        return len(self.a)

    def coeffs_at(self, x, t=0.0) -> np.ndarray:
        """Coefficient vector ``[1, a_1(x), ..., a_m(x)]``; for array ``x``
        the result has shape ``(len(x), m + 1)``."""
        x = np.asarray(x, dtype=float)
        cols = [np.ones_like(x)] + [np.broadcast_to(eval_expr(a, t, x), x.shape) for a in self.a]
        return np.stack(cols, axis=-1)

    def __repr__(self):
        return f"HPoly({[str(a) for a in self.a]})"


@dataclass(frozen=True)
class MonicDerivative:
    """``(d!/m!) d^(m-d)/dtau^(m-d) P`` as a monic degree-``d`` polynomial."""

    d: int
    coeffs: np.ndarray
    roots: np.ndarray
    point: PointPoly = field(repr=False, default=None)


def roots_at(P: HPoly, x: float) -> PointPoly:
    """Sorted real roots of ``P(x; .)``; raises :class:`NotHyperbolic`."""
    return point_poly(P.coeffs_at(float(x)), x=float(x))


def reduced_polys(p: PointPoly) -> List[np.ndarray]:
    """The ``m`` reduced polynomials ``prod_{j != k} (tau - tau_j)``."""
    r = p.roots
    return [poly_from_roots(np.delete(r, k)) for k in range(len(r))]


def bireduced_polys(p: PointPoly) -> Dict[Tuple[int, int], np.ndarray]:
    """Bi-reduced polynomials keyed by 0-based pairs ``(h, k)``, ``h < k``."""
    r = p.roots
    return {
        (h, k): poly_from_roots(np.delete(r, [h, k]))
        for h, k in itertools.combinations(range(len(r)), 2)
    }


def monic_derivative_coeffs(coeffs, d: int) -> np.ndarray:
    """Coefficients of the monic ``(m-d)``-th derivative of a monic polynomial.

    The coefficient of ``tau^(d-k)`` is ``a_k * C(d, k) / C(m, k)``; the ratio is
    formed exactly as a fraction before conversion to float.
    """
    c = np.asarray(coeffs, dtype=float)
    m = len(c) - 1
    if not 1 <= d <= m:
        raise ValueError(f"need 1 <= d <= m, got d={d}, m={m}")
    scale = [float(Fraction(comb(d, k), comb(m, k))) for k in range(d + 1)]
    return c[: d + 1] * np.array(scale)


def monic_tau_derivative(P, d: int, x: float = float("nan")) -> MonicDerivative:
    """Monic ``tau``-derivative of order ``m - d`` of ``P`` at ``x``.

    ``P`` may be an :class:`HPoly` (evaluated at ``x``), a :class:`PointPoly`
    or a coefficient vector.
    """
    if isinstance(P, HPoly):
        c = P.coeffs_at(float(x))
    elif isinstance(P, PointPoly):
        c = P.coeffs
        x = P.x
    else:
        c = np.asarray(P, dtype=float)
    cd = monic_derivative_coeffs(c, d)
    pp = point_poly(cd, x=x)
    return MonicDerivative(d=d, coeffs=cd, roots=pp.roots, point=pp)


def _nuij_coeffs(c, eps):
    m = len(c) - 1
    dc = np.polyder(c) if m > 0 else np.array([0.0])
    return c - eps * np.concatenate(([0.0], dc))


def nuij_map(p: PointPoly, eps: float) -> PointPoly:
    """``P - eps * dP/dtau`` with fresh roots."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    return point_poly(_nuij_coeffs(p.coeffs, eps), x=p.x)


def nuij_regularize(p: PointPoly, eps: float) -> PointPoly:
    """``m - 1`` applications of the Nuij map; the result is strictly hyperbolic."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    c = p.coeffs
    # roots are found in coordinates centred on the mean root; translation
    # commutes with d/dtau, and a root cluster away from 0 would otherwise
    # make the expanded coefficients ill-conditioned
    shift = float(p.roots.mean()) if p.degree else 0.0
    cs = poly_from_roots(p.roots - shift)
    for _ in range(p.degree - 1):
        c = _nuij_coeffs(c, eps)
        cs = _nuij_coeffs(cs, eps)
    qs = point_poly(cs, x=p.x)
    q = PointPoly(coeffs=c, roots=qs.roots + shift, clusters=qs.clusters, x=p.x)
    gaps = np.diff(q.roots)
    if len(gaps) and gaps.min() < 1e-14:
        raise StrictnessFailure(f"root gap {gaps.min():.3e} after Nuij regularization (eps={eps})")
    return q


def peyser_bounds(taus, j: int) -> Tuple[float, float]:
    """Bounds for the ``j``-th root (0-based) of the derivative.

    With ``g = taus[j+1] - taus[j]`` and ``m = len(taus)``::

        taus[j] + g/(m - j)  <=  lambda_j  <=  taus[j+1] - g/(j + 2)

    (the 1-based form has denominators ``m - j + 1`` and ``j + 1``).
    """
    taus = np.asarray(taus, dtype=float)
    m = len(taus)
    if not 0 <= j <= m - 2:
        raise IndexError(f"j={j} out of range for m={m}")
    g = taus[j + 1] - taus[j]
    return float(taus[j] + g / (m - j)), float(taus[j + 1] - g / (j + 2))


def check_interlacing(taus, lams, eta: float = 0.0, two_sided: bool = False) -> bool:
    """Whether ``tau_j <= lam_j <= tau_{j+1} - eta (tau_{j+1} - tau_j)``.

    With ``two_sided`` the lower bound becomes ``tau_j + eta * gap`` as well.
    A slack of ``1e-12 (1 + spread)`` absorbs rounding.
    """
    taus = np.asarray(taus, dtype=float)
    lams = np.asarray(lams, dtype=float)
    if len(lams) != len(taus) - 1:
        raise ValueError("need len(lams) == len(taus) - 1")
    if len(lams) == 0:
        return True
    slack = 1e-12 * (1.0 + abs(taus[-1] - taus[0]))
    gap = taus[1:] - taus[:-1]
    lo = taus[:-1] + (eta * gap if two_sided else 0.0)
    hi = taus[1:] - eta * gap
    return bool(np.all(lams >= lo - slack) and np.all(lams <= hi + slack))


@dataclass(frozen=True)
class CoEstimate:
    """Empirical constant for ``tau_j^2 + tau_k^2 <= M (tau_j - tau_k)^2``.

    ``M`` is ``inf`` when the estimate is unbounded; ``worst_x`` is where the
    supremum (or the failure) occurred. The value certifies the sampled grid
    only.
    """

    M: float
    bounded: bool
    worst_x: float


def _co_ratio(roots, clusters_of, tol):
    best = 0.0
    for j, k in itertools.combinations(range(len(roots)), 2):
        tj, tk = roots[j], roots[k]
        if clusters_of[j] == clusters_of[k] or abs(tj - tk) <= tol:
            if max(tj * tj, tk * tk) > tol * tol:
                return np.inf
            continue
        best = max(best, (tj * tj + tk * tk) / (tj - tk) ** 2)
    return best


def estimate_co_constant(P, xgrid) -> CoEstimate:
    """Supremum over ``xgrid`` and root pairs of ``(tau_j^2 + tau_k^2)/(tau_j - tau_k)^2``.

    Pairs inside a multiplicity cluster are skipped when the multiple root
    sits at 0 and make the estimate unbounded otherwise; a running supremum
    above ``1e8`` is also reported as unbounded.
    """
    xgrid = np.atleast_1d(np.asarray(xgrid, dtype=float))
    if xgrid.size == 0:
        raise ValueError("empty grid")
    M, worst = 0.0, float(xgrid[0])
    for x in xgrid:
        p = roots_at(P, x) if isinstance(P, HPoly) else P(x)
        val = _co_ratio(p.roots, p.cluster_of(), p.tol_cluster)
        if val > M:
            M, worst = val, float(x)
        if M > UNBOUNDED_THRESHOLD:
            return CoEstimate(M=np.inf, bounded=False, worst_x=float(x))
    return CoEstimate(M=float(M), bounded=True, worst_x=worst)


def derived_co_constant(M: float, eta: float) -> float:
    """Constant inherited by an interlaced polynomial: ``4 M / eta^2 + 2``."""
    if M < 0 or not 0 < eta <= 1:
        raise ValueError("need M >= 0 and 0 < eta <= 1")
    return 4.0 * M / eta ** 2 + 2.0
