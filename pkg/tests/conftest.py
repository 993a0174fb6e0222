import numpy as np
import pytest
from hypothesis import settings
from hypothesis import strategies as st

from properhyp.coeff_expr import Binary, Const, Pow, Unary, Var
from properhyp.hyperpoly import poly_from_roots

# reproducible runs: same examples every time
settings.register_profile("repro", derandomize=True, deadline=None)
settings.load_profile("repro")

FUNCS = ("sin", "cos", "exp", "tanh")


def _leaf():
    return st.one_of(
        st.builds(Var, st.sampled_from(["t", "x"])),
        st.builds(Const, st.floats(-3, 3, allow_nan=False).map(lambda v: round(v, 3))),
    )


def _extend(children):
    return st.one_of(
        st.builds(Unary, st.sampled_from(("neg",) + FUNCS), children),
        st.builds(Binary, st.sampled_from("+-*"), children, children),
        st.builds(Pow, children, st.integers(0, 3)),
    )


# no division: keeps random trees free of poles
exprs = st.recursive(_leaf(), _extend, max_leaves=8)


def separated_roots(m_min=2, m_max=6, min_gap=0.05):
    """Sorted roots with consecutive gaps of at least ``min_gap``."""
    return st.integers(m_min, m_max).flatmap(
        lambda m: st.tuples(
            st.floats(-5, 0),
            st.lists(st.floats(min_gap, 3.0), min_size=m - 1, max_size=m - 1),
        )
    ).map(lambda s: s[0] + np.concatenate(([0.0], np.cumsum(s[1]))))


def root_sensitivity(r):
    """First-order bound on root movement from rounding the coefficients."""
    r = np.asarray(r, dtype=float)
    c = poly_from_roots(r)
    dc = np.polyder(c)
    m = len(r)
    powers = np.abs(r)[:, None] ** np.arange(m, -1, -1)[None, :]
    with np.errstate(divide="ignore"):
        return float(np.max(2.2e-16 * (powers @ np.abs(c)) / np.abs(np.polyval(dc, r))))


def conditioned_roots(m_min=2, m_max=6, limit=1e-10):
    return separated_roots(m_min, m_max, 1e-2).filter(lambda r: root_sensitivity(r) <= limit)


def clustered_roots(m_max=6):
    """Exact multiple roots; clusters at least 0.5 apart."""
    return st.lists(st.integers(1, 3), min_size=1, max_size=3).flatmap(
        lambda mult: st.tuples(
            st.just(mult),
            st.floats(-4, 0),
            st.lists(st.floats(0.5, 2.5), min_size=len(mult) - 1, max_size=len(mult) - 1),
        )
    ).map(
        lambda s: np.repeat(s[1] + np.concatenate(([0.0], np.cumsum(s[2]))), s[0])
    ).filter(lambda r: 2 <= len(r) <= m_max)


def random_roots(rng, m, lo=-5.0, hi=5.0, double_prob=0.0):
    r = rng.uniform(lo, hi, m)
    if double_prob and m >= 2 and rng.random() < double_prob:
        r[1] = r[0]
    return np.sort(r)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


__all__ = ["exprs", "separated_roots", "conditioned_roots", "clustered_roots", "root_sensitivity", "random_roots", "poly_from_roots"]


# acceptance results, printed once at the end of the run
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[key])
