"""
Decision layer: Preference-at-Risk, its preference-robust variant over the
MLE optimal set, and the scenario-LP maximizing expected utility over
portfolios.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np
import scipy.optimize as sopt

from .core import Lottery, PiecewiseUtility, expected_utility
from .mle import MleSolution, MleStatus, OptimalSetBand, optimal_set_band
from .simulate import gumbel_quantile

LP_TOL = 1e-9


def par(u: PiecewiseUtility, x_dist: Lottery, delta: float,
        sigma: float) -> float:
    """Preference-at-Risk: the largest threshold the noisy utility
    E[u(X)] + eps exceeds with probability 1 - delta; closed form
    E[u(X)] + F_eps^{-1}(delta)."""
    return expected_utility(u, x_dist) + gumbel_quantile(delta, sigma)


FamilyDescriptor = Union[MleSolution, PiecewiseUtility,
                         Sequence[PiecewiseUtility]]


def prar(family: FamilyDescriptor, x_dist: Lottery, delta: float,
         sigma: float) -> float:
    """Worst-case PaR over a utility ambiguity set.

    Supported families: the MLE optimal set (pass the MleSolution; the
    pointwise lower envelope u_hat attains the infimum, so this equals
    par(u_hat, .)), a single utility, or a finite collection of utilities.
    """
    if isinstance(family, MleSolution):
        band = optimal_set_band(family)
        return par(band.lower, x_dist, delta, sigma)
    if isinstance(family, PiecewiseUtility):
        return par(family, x_dist, delta, sigma)
    if isinstance(family, Sequence) and family and \
            all(isinstance(u, PiecewiseUtility) for u in family):
        return min(par(u, x_dist, delta, sigma) for u in family)
    raise ValueError("unsupported ambiguity-set descriptor")


@dataclass(frozen=True)
class PortfolioProblem:
    """Scenario-based portfolio choice: wealth h(x, xi) = x . (1 + xi),
    budget W0 split over cash (asset 0, zero return) and S risky assets with
    per-asset caps c_s * W0."""

    scenarios: np.ndarray        # T x (S+1), column 0 all zeros (risk-free)
    budget: float
    caps: np.ndarray             # length S, in [0, 1]
    utility: PiecewiseUtility

    def __post_init__(self):
        sc = np.atleast_2d(np.asarray(self.scenarios, dtype=np.float64))
        caps = np.asarray(self.caps, dtype=np.float64)
        if sc.shape[1] != caps.size + 1:
            raise ValueError("scenarios must have S+1 columns (cash first)")
        if np.any(sc[:, 0] != 0.0):
            raise ValueError("cash column must have zero return")
        if self.budget <= 0:
            raise ValueError("budget must be > 0")
        if np.any(caps < 0) or np.any(caps > 1):
            raise ValueError("caps must lie in [0, 1]")
        beta = self.utility.beta
        if np.any(np.diff(beta) > 1e-9):
            raise ValueError("utility must be concave for the min-of-lines LP")
        object.__setattr__(self, "scenarios", sc)
        object.__setattr__(self, "caps", caps)
        self._validate_wealth_range(sc)

    def _validate_wealth_range(self, sc: np.ndarray) -> None:
        # extreme wealth over the feasible box-simplex, per scenario: greedily
        # allocate the budget to the best/worst returns subject to caps
        b_bar = self.utility.grid.b_bar
        w0 = self.budget
        caps_amt = np.concatenate(([w0], self.caps * w0))
        for t in range(sc.shape[0]):
            gross = 1.0 + sc[t]
            for order, bound in ((np.argsort(-gross), "max"),
                                 (np.argsort(gross), "min")):
                left = w0
                wealth = 0.0
                for idx in order:
                    amt = min(left, caps_amt[idx])
                    wealth += amt * gross[idx]
                    left -= amt
                    if left <= 0:
                        break
                if left > 1e-9:
                    raise ValueError("caps cannot absorb the budget")
                if wealth < -1e-9 or wealth > b_bar + 1e-9:
                    raise ValueError(
                        f"scenario {t}: feasible wealth {wealth:.6g} leaves "
                        f"[0, {b_bar}]")

    @property
    def s(self) -> int:
        return int(self.caps.size)

    @property
    def t(self) -> int:
        return int(self.scenarios.shape[0])


def saa_objective(problem: PortfolioProblem, x: np.ndarray) -> float:
    """(1/T) sum_t u(x . (1 + xi_t))."""
    wealth = (1.0 + problem.scenarios) @ np.asarray(x, dtype=np.float64)
    from .core import eval_utility
    return float(np.mean(eval_utility(problem.utility, wealth)))


def optimize_portfolio(problem: PortfolioProblem
                       ) -> tuple[np.ndarray, float]:
    """LP over (x, zeta): maximize (1/T) sum zeta_t with zeta_t below every
    line beta_j (h_t - y_j) + alpha_j of the concave piecewise-linear utility.
    """
    u = problem.utility
    alpha, beta, y = u.alpha, u.beta, u.grid.points
    t, s = problem.t, problem.s
    n_seg = beta.size
    gross = 1.0 + problem.scenarios            # T x (S+1)
    n_var = (s + 1) + t                        # x then zeta
    # zeta_t - beta_j * h_t <= alpha_j - beta_j * y_j
    a_ub = np.zeros((t * n_seg, n_var))
    b_ub = np.zeros(t * n_seg)
    for j in range(n_seg):
        rows = slice(j * t, (j + 1) * t)
        a_ub[rows, :s + 1] = -beta[j] * gross
        a_ub[rows, s + 1:] = np.eye(t)
        b_ub[rows] = alpha[j] - beta[j] * y[j]
    a_eq = np.zeros((1, n_var))
    a_eq[0, :s + 1] = 1.0
    b_eq = [problem.budget]
    bounds = [(0.0, problem.budget)]
    bounds += [(0.0, float(c) * problem.budget) for c in problem.caps]
    bounds += [(None, None)] * t
    c = np.zeros(n_var)
    c[s + 1:] = -1.0 / t
    res = sopt.linprog(c, A_ub=a_ub, b_ub=b_ub, A_eq=a_eq, b_eq=b_eq,
                       bounds=bounds, method="highs")
    if res.status != 0:
        raise RuntimeError(f"portfolio LP failed: {res.message}")
    x_star = res.x[:s + 1]
    objective = -float(res.fun)
    direct = saa_objective(problem, x_star)
    if abs(objective - direct) > 1e-6:
        raise RuntimeError("LP objective disagrees with direct evaluation: "
                           f"{objective} vs {direct}")
    return x_star, objective


@dataclass(frozen=True)
class EquivalenceReport:
    """EU-max, PaR-max and PRaR-max share optimal solutions; the objectives
    differ by the constant Gumbel quantile."""

    x_star: np.ndarray
    eu_value: float
    par_value: float
    prar_value: float
    offset: float

    @property
    def consistent(self) -> bool:
        return (abs(self.par_value - self.eu_value - self.offset) <= 1e-9
                and abs(self.prar_value - self.par_value) <= 1e-9)


def equivalence_check(problem: PortfolioProblem, delta: float,
                      sigma: float) -> EquivalenceReport:
    x_star, eu = optimize_portfolio(problem)
    offset = gumbel_quantile(delta, sigma)
    return EquivalenceReport(x_star=x_star, eu_value=eu,
                             par_value=eu + offset, prar_value=eu + offset,
                             offset=offset)


def load_scenarios(path: str) -> np.ndarray:
    """CSV with header asset_0,...,asset_S; one row of decimal return rates
    per scenario (asset_0 is cash and must be 0)."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        expected = [f"asset_{i}" for i in range(len(header))]
        if header != expected:
            raise ValueError(f"header must be {','.join(expected)}")
        rows = [[float(v) for v in row] for row in reader if row]
    if not rows:
        raise ValueError("no scenarios in file")
    return np.asarray(rows, dtype=np.float64)
