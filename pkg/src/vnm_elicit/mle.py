"""
The elicitation engine: constrained maximum likelihood for the adjusted
piecewise-linear utility and error scale from pairwise choices.

In adjusted variables theta = u/sigma (values at the breakpoints, theta_1 = 0,
theta_N = gamma = 1/sigma) the log-likelihood is concave:

    l(theta) = -sum_k log(1 + exp(r_k . theta)),  r_k = -Z_k p^k,

maximized over gamma in [0, c_bar] and the slope constraints selected by the
StructureLevel (monotone, concave, first slope <= L * gamma).  gamma* = 0
means no admissible utility rationalizes the aggregate choices; gamma* = c_bar
means a utility separates the data and the scale bound is active.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence

import numpy as np
import scipy.optimize as sopt
from scipy.special import expit

from .bounds import InfoMatrix, info_matrix_from_rows
from .core import (BreakpointGrid, ComparisonRecord, Lottery, PiecewiseUtility,
                   StructureKind, StructureLevel, mass_diff)

GAMMA_ZERO_REL_TOL = 1e-6   # gamma* below this fraction of c_bar => not rationalizable
CLEANUP_TOL = 1e-6          # max slope-constraint violation accepted as solver noise


class MleStatus(Enum):
    UNIQUE = "Unique"
    NON_UNIQUE_RANK_DEFICIENT = "NonUniqueRankDeficient"
    NOT_RATIONALIZABLE = "NotRationalizable"
    SEPARATION_AT_BOUND = "SeparationAtBound"


class MleSolverError(RuntimeError):
    """Raised when the optimizer fails to reach an acceptable solution."""

    def __init__(self, message, solver_status=None):
        super().__init__(message)
        self.solver_status = solver_status


def softplus(x: np.ndarray) -> np.ndarray:
    return np.logaddexp(0.0, x)


def log_likelihood(theta: np.ndarray, rows: np.ndarray) -> float:
    """-sum_k log(1 + exp(r_k . theta)) with overflow-safe softplus."""
    rows = np.atleast_2d(np.asarray(rows, dtype=np.float64))
    if rows.size == 0:
        return 0.0
    theta = np.asarray(theta, dtype=np.float64)
    if rows.shape[1] != theta.size:
        raise ValueError("row length does not match theta")
    return float(-np.sum(softplus(rows @ theta)))


def log_likelihood_gradient(theta: np.ndarray, rows: np.ndarray) -> np.ndarray:
    """Analytic gradient -sum_k sigmoid(r_k . theta) r_k (component 1 included
    for completeness even though theta_1 stays fixed at 0)."""
    theta = np.asarray(theta, dtype=np.float64)
    rows = np.atleast_2d(np.asarray(rows, dtype=np.float64))
    if rows.size == 0:
        return np.zeros_like(theta)
    return -(expit(rows @ theta) @ rows)


@dataclass(frozen=True)
class MleProblem:
    """Grid, signed rows r_k = -Z_k p^k (full length N), and structure."""

    grid: BreakpointGrid
    rows: np.ndarray
    structure: StructureLevel
    gtol: float = 1e-10
    xtol: float = 1e-12
    max_iter: int = 3000

    def __post_init__(self):
        rows = np.atleast_2d(np.asarray(self.rows, dtype=np.float64))
        if rows.shape[0] < 1:
            raise ValueError("need at least one comparison")
        if rows.shape[1] != self.grid.n:
            raise ValueError("row length must equal grid size")
        if np.max(np.abs(rows.sum(axis=1))) > 1e-9:
            raise ValueError("each row must sum to 0")
        object.__setattr__(self, "rows", rows)

    @property
    def k(self) -> int:
        return self.rows.shape[0]


def make_problem(dataset: Sequence[ComparisonRecord], grid: BreakpointGrid,
                 structure: StructureLevel, **kw) -> MleProblem:
    rows = np.array([-rec.z * mass_diff(rec.w, rec.y, grid).p
                     for rec in dataset])
    return MleProblem(grid=grid, rows=rows, structure=structure, **kw)


@dataclass(frozen=True)
class MleSolution:
    gamma_star: float
    alpha_bar: np.ndarray            # adjusted values at breakpoints, theta-hat
    utility: Optional[PiecewiseUtility]
    sigma_hat: float                 # 1/gamma*, +inf when NotRationalizable
    loglik: float
    status: MleStatus
    info: InfoMatrix
    gamma_zero_tol: float
    max_cleanup_shift: float = 0.0
    solver: str = "smooth"

    @property
    def theta_hat(self) -> np.ndarray:
        return self.alpha_bar

    def to_json(self) -> dict:
        return {
            "gamma_star": self.gamma_star,
            "alpha_bar": self.alpha_bar.tolist(),
            "sigma_hat": None if math.isinf(self.sigma_hat) else self.sigma_hat,
            "loglik": self.loglik,
            "status": self.status.value,
            "utility": None if self.utility is None else self.utility.to_json(),
            "sigma_d_rank": self.info.rank,
            "sigma_d_eigenvalues": self.info.eigenvalues.tolist(),
            "lambda_min": self.info.lambda_min,
            "gamma_zero_tol": self.gamma_zero_tol,
        }


def _slope_matrix(grid: BreakpointGrid) -> np.ndarray:
    """B with beta = B x for x = alpha_{2:N} (alpha_1 = 0 implicit)."""
    n = grid.n
    gaps = np.diff(grid.points)
    b = np.zeros((n - 1, n - 1))
    for j in range(n - 1):
        b[j, j] = 1.0 / gaps[j]
        if j >= 1:
            b[j, j - 1] = -1.0 / gaps[j]
    return b


def _constraints(problem: MleProblem, fixed_gamma: Optional[float]):
    """Linear inequalities A x <= rhs and variable bounds for the reduced
    variables x = alpha_bar_{2:N}; gamma = x[-1]."""
    n = problem.grid.n
    m = n - 1
    s = problem.structure
    b = _slope_matrix(problem.grid)
    a_rows = []
    rhs = []
    if s.concave:
        a_rows.append(b[1:] - b[:-1])       # beta_{j+1} - beta_j <= 0
        rhs += [0.0] * (b.shape[0] - 1)
    if s.monotone:
        if s.concave:
            a_rows.append(-b[-1:])          # -beta_{N-1} <= 0 (rest by concavity)
            rhs += [0.0]
        else:
            a_rows.append(-b)               # all slopes >= 0
            rhs += [0.0] * b.shape[0]
    if s.lipschitz:
        row = b[0].copy()                   # beta_1 - L * gamma <= 0
        if fixed_gamma is None:
            row[m - 1] -= s.L
            a_rows.append(row[None, :])
            rhs += [0.0]
        else:
            a_rows.append(row[None, :])     # beta_1 <= L * fixed_gamma
            rhs += [s.L * fixed_gamma]
    a = np.vstack(a_rows) if a_rows else np.zeros((0, m))
    rhs = np.asarray(rhs)
    lb = np.full(m, -np.inf)
    ub = np.full(m, np.inf)
    if s.monotone:
        lb[:] = 0.0
        ub[:] = s.c_bar
    g = fixed_gamma
    lb[m - 1] = 0.0 if g is None else g
    ub[m - 1] = s.c_bar if g is None else g
    return a, rhs, lb, ub


def _polish(problem: MleProblem, fixed_gamma, x0: np.ndarray) -> np.ndarray:
    """Active-set (SLSQP) refinement from x0; returns the better of the two
    points, clipped to the variable bounds and checked for feasibility."""
    r = problem.rows[:, 1:]
    a, rhs, lb, ub = _constraints(problem, fixed_gamma)

    def fun(x):
        return float(np.sum(softplus(r @ x)))

    def jac(x):
        return expit(r @ x) @ r

    x0 = np.clip(np.asarray(x0, dtype=np.float64), lb, ub)
    slsqp_cons = []
    if a.shape[0]:
        slsqp_cons.append({"type": "ineq", "fun": lambda x: rhs - a @ x,
                           "jac": lambda x: -a})
    res = sopt.minimize(fun, x0, jac=jac, method="SLSQP",
                        bounds=list(zip(lb, ub)), constraints=slsqp_cons,
                        options={"ftol": 1e-14, "maxiter": 500})
    x = res.x if res.fun <= fun(x0) + 1e-12 else x0
    x = np.clip(x, lb, ub)
    if fixed_gamma is None and fun(np.zeros_like(x)) <= fun(x):
        # the all-zero point (gamma = 0) is always feasible when gamma is
        # free; prefer it when the solver stalls short of that boundary
        x = np.zeros_like(x)
    if a.shape[0]:
        viol = float(max(0.0, np.max(a @ x - rhs)))
        if viol > CLEANUP_TOL * max(1.0, float(x[-1])):
            raise MleSolverError(f"constraint violation {viol:g} after solve")
    return x


def _solve_smooth(problem: MleProblem, fixed_gamma, warm_start):
    """Trust-region solve of the concave program in reduced variables."""
    n = problem.grid.n
    m = n - 1
    r = problem.rows[:, 1:]  # reduced rows
    a, rhs, lb, ub = _constraints(problem, fixed_gamma)

    def fun(x):
        return float(np.sum(softplus(r @ x)))

    def jac(x):
        return expit(r @ x) @ r

    def hess(x):
        z = expit(r @ x)
        w = z * (1.0 - z)
        return (r * w[:, None]).T @ r

    if warm_start is not None:
        x0 = np.clip(np.asarray(warm_start, dtype=np.float64), lb, ub)
    else:
        g0 = fixed_gamma if fixed_gamma is not None \
            else min(problem.structure.c_bar, 1.0)
        # linear utility: feasible for every structure level
        x0 = np.clip(g0 * problem.grid.points[1:] / problem.grid.b_bar, lb, ub)
    cons = []
    if a.shape[0]:
        cons.append(sopt.LinearConstraint(a, -np.inf, rhs))
    res = sopt.minimize(fun, x0, jac=jac, hess=hess, method="trust-constr",
                        bounds=sopt.Bounds(lb, ub), constraints=cons,
                        options={"gtol": problem.gtol, "xtol": problem.xtol,
                                 "barrier_tol": 1e-10,
                                 "maxiter": problem.max_iter})
    if not res.success and res.status not in (1, 2):  # 1/2 = tolerance reached
        raise MleSolverError(f"trust-constr failed: {res.message}",
                             solver_status=res.status)
    # active-set polish: the interior-point stage stalls ~1e-5 short of the
    # optimum when gamma* sits on the boundary
    return _polish(problem, fixed_gamma, res.x)


def _solve_conic(problem: MleProblem, fixed_gamma, warm_start):
    """Exponential-cone solve of the same program via cvxpy.

    Parametrized by the per-gap increments d_j = beta_j * gap_j (so the value
    vector is their cumulative sum); this keeps the constraint matrix well
    scaled, which the interior-point solver needs on large grids.
    """
    import cvxpy as cp

    n = problem.grid.n
    m = n - 1
    s = problem.structure
    gaps = np.diff(problem.grid.points)
    r = problem.rows[:, 1:]
    d = cp.Variable(m)
    rc = r @ np.tril(np.ones((m, m)))  # rows against cumulative increments
    g = cp.sum(d)
    cons = []
    if fixed_gamma is None:
        cons += [g >= 0, g <= s.c_bar]
    else:
        cons += [g == fixed_gamma]
    if s.monotone:
        cons.append(d >= 0)
    if s.concave:
        cons.append(d[1:] / gaps[1:] <= d[:-1] / gaps[:-1])
    if s.lipschitz:
        cons.append(d[0] / gaps[0] <= s.L * g)
    objective = cp.Minimize(cp.sum(cp.logistic(rc @ d)))
    prob = cp.Problem(objective, cons)
    exact = True
    try:
        prob.solve(solver=cp.CLARABEL, tol_gap_abs=1e-11, tol_gap_rel=1e-11,
                   tol_feas=1e-11)
    except cp.error.SolverError:
        exact = False
        try:
            prob.solve(solver=cp.CLARABEL)  # default tolerances
        except cp.error.SolverError:
            prob.solve(solver=cp.SCS, eps=1e-7)
    if prob.status not in ("optimal", "optimal_inaccurate"):
        raise MleSolverError(f"conic solver status {prob.status}",
                             solver_status=prob.status)
    x_val = np.cumsum(np.asarray(d.value, dtype=np.float64))
    if exact and prob.status == "optimal":
        return x_val
    # a fallback or "optimal_inaccurate" exit can carry enough residual to
    # distort the slope cleanup; refine with a short active-set pass
    return _polish(problem, fixed_gamma, x_val)


def _cleanup(problem: MleProblem, x: np.ndarray,
             fixed_gamma: Optional[float]) -> tuple[np.ndarray, float]:
    """Clip slope-constraint noise and pin the endpoints exactly."""
    s = problem.structure
    gaps = np.diff(problem.grid.points)
    gamma = float(x[-1])
    if fixed_gamma is not None:
        gamma = fixed_gamma
    gamma = min(max(gamma, 0.0), s.c_bar)
    alpha = np.concatenate(([0.0], x))
    beta = np.diff(alpha) / gaps
    if s.lipschitz:
        beta[0] = min(beta[0], s.L * gamma)
    if s.concave:
        beta = np.minimum.accumulate(beta)
    if s.monotone:
        beta = np.maximum(beta, 0.0)
    cleaned = np.concatenate(([0.0], np.cumsum(beta * gaps)))
    if cleaned[-1] > 0 and gamma > 0:
        cleaned *= gamma / cleaned[-1]
    cleaned[-1] = gamma
    shift = float(np.max(np.abs(cleaned - alpha)))
    return cleaned, shift


def solve_mle(problem: MleProblem, engine: str = "smooth",
              fixed_gamma: Optional[float] = None,
              warm_start: Optional[np.ndarray] = None) -> MleSolution:
    """Solve the constrained MLE and recover (u_hat, sigma_hat).

    engine "smooth" uses a trust-region method on the concave program;
    "conic" uses an exponential-cone interior-point solve.  `fixed_gamma`
    pins gamma = 1/sigma (benchmark mode for experiments).
    """
    if engine == "smooth":
        x = _solve_smooth(problem, fixed_gamma, warm_start)
    elif engine == "conic":
        x = _solve_conic(problem, fixed_gamma, warm_start)
    else:
        raise ValueError(f"unknown engine {engine!r}")

    s = problem.structure
    info = info_matrix_from_rows(problem.rows[:, 1:])
    tol_g = GAMMA_ZERO_REL_TOL * s.c_bar
    shift = 0.0
    raw = np.concatenate(([0.0], x))
    if s.monotone:  # slope cleanup only meaningful with structure
        alpha_bar, shift = _cleanup(problem, x, fixed_gamma)
    else:
        alpha_bar = raw.copy()
        alpha_bar[-1] = fixed_gamma if fixed_gamma is not None \
            else min(max(alpha_bar[-1], 0.0), s.c_bar)
    gamma = float(alpha_bar[-1])
    loglik = log_likelihood(alpha_bar, problem.rows)
    if fixed_gamma is None and -problem.k * math.log(2.0) >= loglik:
        # the all-zero point (gamma = 0) is always feasible when gamma is
        # free; solvers can stall just short of that boundary
        alpha_bar = np.zeros_like(alpha_bar)
        gamma = 0.0
        loglik = -problem.k * math.log(2.0)
    # the raw point can sit slightly outside the feasible set with a spuriously
    # better objective; only a gross drop signals a failed solve (the
    # tolerance scales with K because the objective is a sum over comparisons)
    drop = log_likelihood(raw, problem.rows) - loglik
    if drop > max(1e-4, 1e-6 * problem.k):
        raise MleSolverError(
            f"post-solve cleanup changed the objective by {drop:g}")

    if fixed_gamma is None and gamma <= tol_g:
        status = MleStatus.NOT_RATIONALIZABLE
        utility = None
        sigma_hat = math.inf
    else:
        sigma_hat = 1.0 / gamma
        alpha_hat = alpha_bar / gamma
        alpha_hat[0] = 0.0
        alpha_hat[-1] = 1.0
        beta_hat = np.diff(alpha_hat) / np.diff(problem.grid.points)
        utility = PiecewiseUtility(
            problem.grid, alpha_hat, beta_hat, normalized=True,
            structure=s if s.monotone else None)
        if fixed_gamma is None and gamma >= s.c_bar - tol_g:
            status = MleStatus.SEPARATION_AT_BOUND
        elif info.rank == problem.grid.n - 1:
            status = MleStatus.UNIQUE
        else:
            status = MleStatus.NON_UNIQUE_RANK_DEFICIENT

    return MleSolution(gamma_star=gamma, alpha_bar=alpha_bar, utility=utility,
                       sigma_hat=sigma_hat, loglik=loglik, status=status,
                       info=info, gamma_zero_tol=tol_g,
                       max_cleanup_shift=shift, solver=engine)


class Rationalizability(Enum):
    GAMMA_ZERO = "GammaZero"
    GAMMA_POSITIVE = "GammaPositive"


@dataclass(frozen=True)
class RationalizabilityResult:
    verdict: Rationalizability
    lp_optimum: Optional[float]      # None when decided by the p_bar <= 0 shortcut
    certificate: Optional[np.ndarray]  # maximizing normalized alpha (full length)


def check_rationalizability(dataset: Sequence[ComparisonRecord],
                            grid: BreakpointGrid,
                            structure: StructureLevel
                            ) -> RationalizabilityResult:
    """gamma* = 0 iff max over normalized admissible alpha of p_bar . alpha <= 0,
    where p_bar = sum_k Z_k p^k.

    Decided by the componentwise shortcut p_bar <= 0 when it applies, else by
    a small LP over the normalized polytope (alpha_1 = 0, alpha_N = 1, slope
    constraints of the StructureLevel with L in place of L*gamma).
    """
    p_bar = np.zeros(grid.n)
    for rec in dataset:
        p_bar += rec.z * mass_diff(rec.w, rec.y, grid).p
    if np.all(p_bar <= 1e-12):
        return RationalizabilityResult(Rationalizability.GAMMA_ZERO, None, None)

    m = grid.n - 1
    s = structure
    b = _slope_matrix(grid)
    a_rows = []
    if s.concave:
        a_rows.append(b[1:] - b[:-1])
    if s.monotone:
        a_rows.append(-b[-1:] if s.concave else -b)
    if s.lipschitz:
        a_rows.append(b[0][None, :])
    a_ub = np.vstack(a_rows) if a_rows else np.zeros((0, m))
    b_ub = np.zeros(a_ub.shape[0])
    if s.lipschitz:
        b_ub[-1] = s.L
    bounds = [(0.0, 1.0) if s.monotone else (None, None)] * (m - 1) + [(1.0, 1.0)]
    res = sopt.linprog(-p_bar[1:], A_ub=a_ub if a_ub.shape[0] else None,
                       b_ub=b_ub if a_ub.shape[0] else None, bounds=bounds,
                       method="highs")
    if res.status == 3:  # unbounded => optimum +inf > 0
        return RationalizabilityResult(Rationalizability.GAMMA_POSITIVE,
                                       math.inf, None)
    if res.status != 0:
        raise MleSolverError(f"rationalizability LP failed: {res.message}",
                             solver_status=res.status)
    optimum = -float(res.fun)
    certificate = np.concatenate(([0.0], res.x))
    verdict = (Rationalizability.GAMMA_ZERO if optimum <= 1e-9
               else Rationalizability.GAMMA_POSITIVE)
    return RationalizabilityResult(verdict, optimum, certificate)


@dataclass(frozen=True)
class OptimalSetBand:
    """Pointwise envelope of the MLE optimal set: every optimal utility agrees
    with u_hat at the breakpoints; between them it lies in [lower, upper]."""

    lower: PiecewiseUtility

    def upper(self, y) -> np.ndarray:
        u = self.lower
        grid = u.grid.points
        alpha = u.alpha
        beta = u.beta
        s = u.structure
        arr = np.atleast_1d(np.asarray(y, dtype=np.float64))
        if np.any(arr < 0) or np.any(arr > u.grid.b_bar):
            raise ValueError("point outside [0, b_bar]")
        j = np.clip(np.searchsorted(grid, arr, side="right") - 1, 0,
                    grid.size - 2)
        t = arr - grid[j]
        r = grid[j + 1] - arr
        # 1e300 stands in for an unbounded first-segment slope (no Lipschitz cap)
        lip = s.L if (s is not None and s.lipschitz) else 1e300
        left_slope = np.where(j >= 1, beta[np.maximum(j - 1, 0)], lip)
        right_slope = np.where(j <= grid.size - 3,
                               beta[np.minimum(j + 1, beta.size - 1)], 0.0)
        left_cap = alpha[j] + left_slope * t
        right_cap = alpha[j + 1] - right_slope * r
        out = np.minimum(left_cap, right_cap)
        return float(out[0]) if np.isscalar(y) else out


def optimal_set_band(solution: MleSolution) -> OptimalSetBand:
    """Envelope of the optimal set; requires a unique solve with a concave
    structure (the pointwise-minimum property relies on concavity)."""
    if solution.status is not MleStatus.UNIQUE:
        raise ValueError("optimal set band requires a Unique solution")
    u = solution.utility
    if u.structure is None or not u.structure.concave:
        raise ValueError("optimal set band requires a concave structure level")
    return OptimalSetBand(lower=u)
