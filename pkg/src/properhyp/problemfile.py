"""Problem files (TOML or JSON) and their validation.

Layout::

    m = 2
    a = ["0", "-1"]                 # a_1 .. a_m, formulas in x
    r = [["0"], ["0", "0"]]         # r[d][k], formulas in t, x (optional)
    f = "0"                         # forcing (optional)
    phi = ["exp(-x^2)", "0"]        # data for d_t^j u (optional)

    [cone]
    x0 = 0.0
    rho0 = 1.0
    T = 0.5
    domain = [-0.5, 0.5]            # optional: data vanish outside

    [grid]
    dx = 0.01
    cfl = 0.5                       # optional dt = ... overrides

    [check]
    n_x = 41
    n_t = 3
    n_random = 1000
    exact = false

    [sweep]
    epsilons = [0.1, 0.05]

A derived-operator file also carries ``corrections``, one formula per
``d``; they are informational and do not enter ``solve``.
"""

from __future__ import annotations

import json
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Tuple

from .coeff_expr import Expr, ExprSyntaxError, parse_expr
from .solver import Grid, Problem

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

__all__ = ["ProblemFileError", "Settings", "load_problem", "parse_problem", "problem_to_dict"]

_SECTIONS = {
    "cone": {"x0", "rho0", "T", "domain"},
    "grid": {"dx", "cfl", "dt"},
    "check": {"n_x", "n_t", "n_random", "exact"},
    "sweep": {"epsilons"},
}
_TOP = {"m", "a", "r", "f", "phi", "corrections"} | set(_SECTIONS)


class ProblemFileError(ValueError):
    """Malformed or inconsistent problem file."""


@dataclass
class Settings:
    grid: Grid
    n_x: int = 41
    n_t: int = 3
    n_random: int = 1000
    exact: bool = False
    epsilons: List[float] = field(default_factory=list)
    corrections: Tuple[Expr, ...] = ()


def _formula(value, where: str) -> Expr:
    if isinstance(value, bool):
        raise ProblemFileError(f"{where}: expected a formula, got {value!r}")
    if isinstance(value, (int, float)):
        value = repr(float(value))
    if not isinstance(value, str):
        raise ProblemFileError(f"{where}: expected a formula string, got {type(value).__name__}")
    try:
        return parse_expr(value)
    except ExprSyntaxError as exc:
        raise ProblemFileError(f"{where}: {exc} (offset {exc.offset})") from exc


def _number(sec, key, default, kind=float, positive=False):
    v = sec.get(key, default)
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ProblemFileError(f"{key}: expected a number, got {v!r}")
    if kind is int and v != int(v):
        raise ProblemFileError(f"{key}: expected an integer, got {v!r}")
    v = kind(v)
    if positive and not v > 0:
        raise ProblemFileError(f"{key}: must be positive")
    return v


def parse_problem(doc: dict) -> Tuple[Problem, Settings]:
    """Validate a decoded document and build the problem and run settings."""
    if not isinstance(doc, dict):
        raise ProblemFileError("top level must be a table/object")
    unknown = set(doc) - _TOP
    if unknown:
        raise ProblemFileError(f"unknown keys: {sorted(unknown)}")
    for name, keys in _SECTIONS.items():
        sec = doc.get(name, {})
        if not isinstance(sec, dict):
            raise ProblemFileError(f"[{name}] must be a table")
        bad = set(sec) - keys
        if bad:
            raise ProblemFileError(f"unknown keys in [{name}]: {sorted(bad)}")

    m = doc.get("m")
    if isinstance(m, bool) or not isinstance(m, int) or m < 1:
        raise ProblemFileError("m must be a positive integer")

    def formula_list(key, n, default="0"):
        vals = doc.get(key, [default] * n)
        if not isinstance(vals, list) or len(vals) != n:
            raise ProblemFileError(f"{key}: expected a list of {n} formulas")
        return tuple(_formula(v, f"{key}[{i}]") for i, v in enumerate(vals))

    a = formula_list("a", m)
    if "a" not in doc:
        raise ProblemFileError("a: missing principal coefficients")
    phi = formula_list("phi", m)
    rows = doc.get("r", [["0"] * (d + 1) for d in range(m)])
    if not isinstance(rows, list) or len(rows) != m:
        raise ProblemFileError(f"r: expected {m} rows")
    r = []
    for d, row in enumerate(rows):
        if not isinstance(row, list) or len(row) != d + 1:
            raise ProblemFileError(f"r[{d}]: expected {d + 1} formulas")
        r.append(tuple(_formula(v, f"r[{d}][{k}]") for k, v in enumerate(row)))
    f = _formula(doc.get("f", "0"), "f")
    corrections = formula_list("corrections", m) if "corrections" in doc else ()

    cone = doc.get("cone", {})
    x0 = _number(cone, "x0", 0.0)
    rho0 = _number(cone, "rho0", 1.0, positive=True)
    T = _number(cone, "T", 1.0, positive=True)
    domain = cone.get("domain")
    if domain is not None:
        if not isinstance(domain, list) or len(domain) != 2:
            raise ProblemFileError("cone.domain: expected [lo, hi]")
        domain = (_number({"lo": domain[0]}, "lo", 0), _number({"hi": domain[1]}, "hi", 0))

    g = doc.get("grid", {})
    dt = g.get("dt")
    grid = Grid(
        dx=_number(g, "dx", 0.01, positive=True),
        cfl=_number(g, "cfl", 0.5),
        dt=None if dt is None else _number(g, "dt", 0.0, positive=True),
    )
    chk = doc.get("check", {})
    exact = chk.get("exact", False)
    if not isinstance(exact, bool):
        raise ProblemFileError("check.exact: expected true/false")
    eps = doc.get("sweep", {}).get("epsilons", [])
    if not isinstance(eps, list):
        raise ProblemFileError("sweep.epsilons: expected a list")
    eps = [_number({"eps": e}, "eps", 0.0, positive=True) for e in eps]
    settings = Settings(
        grid=grid,
        n_x=_number(chk, "n_x", 41, int, positive=True),
        n_t=_number(chk, "n_t", 3, int, positive=True),
        n_random=_number(chk, "n_random", 1000, int, positive=True),
        exact=exact,
        epsilons=eps,
        corrections=corrections,
    )
    try:
        problem = Problem(m=m, a=a, r=tuple(r), f=f, phi=phi, x0=x0, rho0=rho0, T=T, domain=domain)
    except ValueError as exc:
        raise ProblemFileError(str(exc)) from exc
    return problem, settings


def load_problem(path) -> Tuple[Problem, Settings]:
    """Read a ``.json`` or TOML file (any other suffix is read as TOML)."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ProblemFileError(f"cannot read {path}: {exc.strerror}") from exc
    try:
        doc = json.loads(text) if path.suffix.lower() == ".json" else tomllib.loads(text)
    except (json.JSONDecodeError, tomllib.TOMLDecodeError) as exc:
        raise ProblemFileError(f"{path}: {exc}") from exc
    return parse_problem(doc)


def problem_to_dict(problem: Problem, settings: Settings = None, corrections=()) -> dict:
    """Inverse of :func:`parse_problem` (formulas as strings)."""
    doc = {
        "m": problem.m,
        "a": [str(e) for e in problem.a],
        "r": [[str(e) for e in row] for row in problem.r],
        "f": str(problem.f),
        "phi": [str(e) for e in problem.phi],
        "cone": {"x0": problem.x0, "rho0": problem.rho0, "T": problem.T},
    }
    if problem.domain is not None:
        doc["cone"]["domain"] = list(problem.domain)
    if corrections:
        doc["corrections"] = [str(e) for e in corrections]
    if settings is not None:
        g = {"dx": settings.grid.dx, "cfl": settings.grid.cfl}
        if settings.grid.dt is not None:
            g["dt"] = settings.grid.dt
        doc["grid"] = g
        doc["check"] = {"n_x": settings.n_x, "n_t": settings.n_t, "n_random": settings.n_random, "exact": settings.exact}
        if settings.epsilons:
            doc["sweep"] = {"epsilons": list(settings.epsilons)}
    return doc
