"""Symbolic reference for the scalar operator, built on sympy."""

import sympy as sp

t, x = sp.symbols("t x")
_NS = {"t": t, "x": x, "sin": sp.sin, "cos": sp.cos, "exp": sp.exp, "tanh": sp.tanh}


def to_sympy(e):
    return sp.sympify(str(e).replace("^", "**"), locals=_NS, rational=True)


def apply_operator(problem, u):
    """``P(x; d_t, d_x) u - sum_d R_d(t, x; d_t, d_x) u`` for a sympy ``u``."""
    m = problem.m
    out = sp.diff(u, t, m)
    for k, a in enumerate(problem.a, start=1):
        out += to_sympy(a) * sp.diff(u, t, m - k, x, k)
    for d, row in enumerate(problem.r):
        for k, r in enumerate(row):
            out -= to_sympy(r) * sp.diff(u, t, d - k, x, k)
    return out


def random_poly_text(rng, deg, with_t=True):
    """Integer-coefficient polynomial in ``t, x`` (``x`` only if not ``with_t``)."""
    terms = []
    for i in range(deg + 1 if with_t else 1):
        for j in range(deg + 1 - i):
            c = int(rng.integers(-3, 4))
            if c:
                terms.append(f"{c}*t^{i}*x^{j}" if with_t else f"{c}*x^{j}")
    return " + ".join(terms) if terms else "0"


def random_operator_case(rng, case):
    """A random operator (``m`` in 2..3) and a polynomial test function."""
    from properhyp.solver import Problem

    m = int(rng.integers(2, 4))
    a = [random_poly_text(rng, 2, with_t=False) for _ in range(m)]
    if case % 5 == 0:
        a[-1] = "-(1+sin(x)^2)"
    r = [[random_poly_text(rng, 2) for _ in range(d + 1)] for d in range(m)]
    problem = Problem(m=m, a=a, r=r, f="x*t+cos(x)")
    u = sum(int(rng.integers(-3, 4)) * t**i * x**j for i in range(5) for j in range(5 - i))
    return problem, u


def derived_identity_residual(problem, derived, u):
    """``L1(u_x) - d_x(L u) - sum_d c_d d_t^d u``, simplified; zero when the identity holds."""
    lhs = apply_operator(derived.problem, sp.diff(u, x))
    rhs = sp.diff(apply_operator(problem, u), x) + sum(
        to_sympy(c) * sp.diff(u, t, d) for d, c in enumerate(derived.corrections)
    )
    return sp.expand(lhs - rhs)
