"""
Empirical information matrix, finite-sample error bounds for the adjusted
utility estimate, and exact error metrics against a known truth.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence

import numpy as np

from .core import (BreakpointGrid, ComparisonRecord, MassDiffVector,
                   PiecewiseUtility, mass_diff)


class Regime(Enum):
    FULL_RANK = "FullRank"
    RANK_DEFICIENT = "RankDeficient"


@dataclass(frozen=True)
class InfoMatrix:
    """Sigma_D = (1/K) P^T P over reduced mass-diff rows (first coord dropped)."""

    sigma_d: np.ndarray
    k: int
    rank: int
    eigenvalues: np.ndarray  # ascending

    @property
    def lambda_min(self) -> float:
        return float(self.eigenvalues[0])

    @property
    def full_rank(self) -> bool:
        return self.rank == self.sigma_d.shape[0]


def reduced_rows(dataset: Sequence[ComparisonRecord],
                 grid: BreakpointGrid) -> np.ndarray:
    """K x (N-1) matrix P of reduced mass-diff vectors p^k_{2:N}."""
    return np.array([mass_diff(r.w, r.y, grid).reduced for r in dataset])


def info_matrix_from_rows(p: np.ndarray) -> InfoMatrix:
    k = p.shape[0]
    if k < 1:
        raise ValueError("dataset must be non-empty")
    sigma_d = (p.T @ p) / k
    sigma_d = 0.5 * (sigma_d + sigma_d.T)
    svals = np.linalg.svd(p, compute_uv=False)
    cutoff = max(k, p.shape[1]) * np.finfo(np.float64).eps * (svals[0] if svals.size else 0.0)
    rank = int(np.sum(svals > cutoff))
    eig = np.sort(np.linalg.eigvalsh(sigma_d))
    return InfoMatrix(sigma_d=sigma_d, k=k, rank=rank, eigenvalues=eig)


def info_matrix(dataset: Sequence[ComparisonRecord],
                grid: BreakpointGrid) -> InfoMatrix:
    return info_matrix_from_rows(reduced_rows(dataset, grid))


@dataclass(frozen=True)
class BoundReport:
    delta: float
    lam: float
    log_omega: float
    weighted_norm_bound: float
    l2_bound: float
    linf_bound: float
    kolmogorov_bound: float
    regime: Regime
    vacuous: bool  # l2 bound exceeds 1 (uninformative at this c_bar/K)

    def to_json(self) -> dict:
        return {"delta": self.delta, "lambda": self.lam,
                "log_omega": self.log_omega,
                "weighted_norm_bound": self.weighted_norm_bound,
                "l2_bound": self.l2_bound, "linf_bound": self.linf_bound,
                "kolmogorov_bound": self.kolmogorov_bound,
                "regime": self.regime.value, "vacuous": self.vacuous}


def log_omega(c_bar: float) -> float:
    """log of the curvature constant omega = 1 / (2 + 2 exp(2 c_bar)).

    Computed in log-space: with c_bar = 100 omega is ~exp(-200).
    """
    # log(2 + 2 e^{2c}) = log 2 + log(1 + e^{2c}) = log 2 + logaddexp(0, 2c)
    return -(math.log(2.0) + float(np.logaddexp(0.0, 2.0 * c_bar)))


def default_lambda(info: InfoMatrix) -> float:
    """Ridge default: 0 when Sigma_D is full rank, else 1/K."""
    return 0.0 if info.full_rank else 1.0 / info.k


def theoretical_bounds(info: InfoMatrix, n: int, k: int, delta: float,
                       lam: float, c_bar: float, L: float,
                       mesh: float) -> BoundReport:
    """High-probability bounds on the adjusted-utility estimation error.

    weighted-norm bound:
      B = sqrt(A / (omega^2 K)) + sqrt(A / (omega^2 K) + lam (c_bar sqrt(N-1))^2)
      with A = R_D + 2 sqrt(-R_D ln delta) - 2 ln delta;
    l2 = linf = B / sqrt(lambda_min(Sigma_D + lam I));
    kolmogorov = L c_bar mesh + l2.
    """
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie in (0, 1)")
    if lam < 0:
        raise ValueError("lambda must be >= 0")
    if lam == 0.0 and not info.full_rank:
        raise ValueError("lambda = 0 requires a full-rank information matrix")
    r_d = info.rank
    log_w = log_omega(c_bar)
    a = r_d + 2.0 * math.sqrt(-r_d * math.log(delta)) - 2.0 * math.log(delta)
    # sqrt(A / (omega^2 K)) = exp(0.5 log(A/K) - log omega); may overflow to inf
    log_first_sq = math.log(a / k) - 2.0 * log_w
    first = math.exp(0.5 * log_first_sq) if log_first_sq < 1400.0 else math.inf
    ridge_term = lam * (c_bar ** 2) * (n - 1)
    if math.isinf(first):
        weighted = math.inf
    else:
        weighted = first + math.sqrt(first * first + ridge_term)
    lam_min_reg = float(np.min(info.eigenvalues + lam))
    l2 = weighted / math.sqrt(lam_min_reg) if weighted < math.inf else math.inf
    kolmo = L * c_bar * mesh + l2
    return BoundReport(
        delta=delta, lam=lam, log_omega=log_w,
        weighted_norm_bound=weighted, l2_bound=l2, linf_bound=l2,
        kolmogorov_bound=kolmo,
        regime=Regime.FULL_RANK if info.full_rank else Regime.RANK_DEFICIENT,
        vacuous=not l2 <= 1.0)


def empirical_errors(theta_hat: np.ndarray,
                     theta_star: np.ndarray) -> tuple[float, float]:
    """(l2, linf) norms of theta_hat - theta_star (adjusted vectors u/sigma)."""
    a = np.asarray(theta_hat, dtype=np.float64)
    b = np.asarray(theta_star, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError("vector length mismatch")
    d = a - b
    return float(np.linalg.norm(d)), float(np.max(np.abs(d))) if d.size else 0.0


def kolmogorov_distance(u1: PiecewiseUtility, u2: PiecewiseUtility) -> float:
    """sup_y |u1(y) - u2(y)|; attained at a breakpoint of either utility."""
    if u1.grid.b_bar != u2.grid.b_bar:
        raise ValueError("utilities must share the domain [0, b_bar]")
    pts = np.union1d(u1.grid.points, u2.grid.points)
    from .core import eval_utility
    return float(np.max(np.abs(eval_utility(u1, pts) - eval_utility(u2, pts))))
