"""Sampled checks of the three structural hypotheses on a problem.

* hyperbolicity: real roots of the principal symbol at every sampled x;
* root separation: ``tau_j^2 + tau_k^2 <= M (tau_j - tau_k)^2``;
* proper lower order terms: each ``R_d`` decomposes with bounded
  coefficients w.r.t. ``P^(d+1)``.

All verdicts hold on the sampled grid only.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import List, Optional

import numpy as np

from .decomposition import ProperCheck, check_proper
from .hyperpoly import NotHyperbolic, estimate_co_constant, roots_at
from .solver import Problem, check_l1_hypotheses, tx_grid

__all__ = ["HypothesisReport", "check_hypotheses"]


def _proper_dict(d: int, c: ProperCheck) -> dict:
    return {
        "d": d,
        "C0": c.C0,
        "pass": c.ok,
        "worst_point": list(c.worst_point),
        "fail_point": None if c.fail_point is None else list(c.fail_point),
        "reason": c.reason,
    }


@dataclass
class HypothesisReport:
    hyperbolic: bool
    hyperbolic_fail_x: Optional[float]
    M: float
    co_bounded: bool
    co_worst_x: float
    proper: List[dict] = field(default_factory=list)
    l1: List[dict] = field(default_factory=list)

    @property
    def base_passed(self) -> bool:
        """Hyperbolicity, root separation and proper lower order terms."""
        return self.hyperbolic and self.co_bounded and all(p["pass"] for p in self.proper)

    @property
    def l1_passed(self) -> bool:
        return all(p["pass"] for p in self.l1)

    @property
    def passed(self) -> bool:
        return self.base_passed and self.l1_passed

    def to_dict(self) -> dict:
        out = asdict(self)
        out.update(pass_base=self.base_passed, pass_l1=self.l1_passed)
        out["pass"] = self.passed
        return out


def check_hypotheses(problem: Problem, n_x: int = 41, n_t: int = 3, with_l1: bool = True) -> HypothesisReport:
    P = problem.principal
    xs = np.linspace(*problem.base, n_x)
    for x in xs:
        try:
            roots_at(P, x)
        except NotHyperbolic:
            return HypothesisReport(False, float(x), float("inf"), False, float(x))
    co = estimate_co_constant(P, xs)
    grid = tx_grid(problem, n_x, n_t)
    proper = [_proper_dict(d, check_proper(problem.r[d], P, d, grid)) for d in range(problem.m)]
    l1 = []
    if with_l1:
        l1 = [_proper_dict(d, c) for d, c in enumerate(check_l1_hypotheses(problem, grid))]
    return HypothesisReport(
        hyperbolic=True,
        hyperbolic_fail_x=None,
        M=co.M,
        co_bounded=co.bounded,
        co_worst_x=co.worst_x,
        proper=proper,
        l1=l1,
    )
