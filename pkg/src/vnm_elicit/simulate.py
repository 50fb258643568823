"""
Synthetic decision-maker: Gumbel response errors, logit choice probabilities,
and random pairwise-comparison datasets over a payoff grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .core import (BreakpointGrid, ComparisonRecord, Lottery, PiecewiseUtility,
                   pla_project)

PAPER_B_BAR = 100000.0
PAPER_QUANTUM = 100.0


def gumbel_cdf(x: float, sigma: float) -> float:
    """Gumbel(0, sigma) CDF: exp(-exp(-x/sigma))."""
    if sigma <= 0:
        raise ValueError("sigma must be > 0")
    return float(np.exp(-np.exp(-np.asarray(x, dtype=np.float64) / sigma)))


def gumbel_quantile(delta: float, sigma: float) -> float:
    """Inverse Gumbel CDF: -sigma * ln(-ln(delta))."""
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie in (0, 1)")
    if sigma <= 0:
        raise ValueError("sigma must be > 0")
    return -sigma * math.log(-math.log(delta))


def sample_gumbel(sigma: float, rng: np.random.Generator,
                  size=None) -> Union[float, np.ndarray]:
    """Gumbel(0, sigma) via inversion of a uniform draw (reproducible)."""
    if sigma <= 0:
        raise ValueError("sigma must be > 0")
    u = rng.uniform(size=size)
    return -sigma * np.log(-np.log(u))


UtilityLike = Union[PiecewiseUtility, Callable[[float], float]]


def _expected_utility(u: UtilityLike, x: Lottery) -> float:
    if isinstance(u, PiecewiseUtility):
        from .core import expected_utility
        return expected_utility(u, x)
    return float(sum(p * u(v) for v, p in zip(x.payoffs, x.probs)))


def choice_probability(u: UtilityLike, w: Lottery, y: Lottery,
                       sigma: float) -> float:
    """P(choose w over y) = 1 / (1 + exp(-(E[u(w)] - E[u(y)]) / sigma))."""
    if sigma <= 0:
        raise ValueError("sigma must be > 0")
    gap = (_expected_utility(u, w) - _expected_utility(u, y)) / sigma
    # expit, overflow-safe
    if gap >= 0:
        return float(1.0 / (1.0 + math.exp(-gap)))
    e = math.exp(gap)
    return float(e / (1.0 + e))


@dataclass(frozen=True)
class SimulatedDM:
    """A decision-maker with known utility and Gumbel(0, sigma_star) errors."""

    true_utility: UtilityLike
    sigma_star: float

    def __post_init__(self):
        if self.sigma_star <= 0:
            raise ValueError("sigma_star must be > 0")


def sample_choice(dm: SimulatedDM, w: Lottery, y: Lottery,
                  rng: np.random.Generator) -> int:
    """+1 iff E[u*(w)] + eps1 >= E[u*(y)] + eps2 (ties, measure zero, to +1)."""
    eps = sample_gumbel(dm.sigma_star, rng, size=2)
    uw = _expected_utility(dm.true_utility, w) + float(eps[0])
    uy = _expected_utility(dm.true_utility, y) + float(eps[1])
    return +1 if uw >= uy else -1


def true_utility_paper(y) -> Union[float, np.ndarray]:
    """Normalized concave exponential utility on [0, 100000]:
    (1 - exp(-6e-5 * y)) / (1 - exp(-6))."""
    arr = np.asarray(y, dtype=np.float64)
    if np.any(arr < 0) or np.any(arr > PAPER_B_BAR):
        raise ValueError("payoff outside [0, 100000]")
    out = (1.0 - np.exp(-6e-5 * arr)) / (1.0 - math.exp(-6.0))
    return float(out) if arr.ndim == 0 else out


def paper_grid(n: int, rng: np.random.Generator,
               b_bar: float = PAPER_B_BAR,
               quantum: float = PAPER_QUANTUM) -> BreakpointGrid:
    """Grid with endpoints {0, b_bar} plus n-2 distinct interior points drawn
    uniformly from the multiples of `quantum`."""
    if n < 2:
        raise ValueError("grid needs n >= 2")
    n_slots = int(b_bar / quantum) - 1
    if n - 2 > n_slots:
        raise ValueError("not enough interior quantum multiples")
    interior = rng.choice(n_slots, size=n - 2, replace=False) + 1
    points = [0.0, float(b_bar)] + [float(i * quantum) for i in interior]
    return BreakpointGrid(points, b_bar)


def random_lottery(grid: BreakpointGrid, rng: np.random.Generator,
                   max_support: int = 3,
                   allowed_indices: Optional[np.ndarray] = None) -> Lottery:
    """Lottery naming <= max_support grid points, each with an independent
    probability that is a multiple of 5%; the leftover mass falls on the
    payoff 0 ("otherwise $0").  Probabilities are rescaled when the named
    masses would exceed 1."""
    pool = np.arange(grid.n) if allowed_indices is None \
        else np.asarray(allowed_indices)
    size = int(rng.integers(1, min(max_support, pool.size) + 1))
    idx = rng.choice(pool, size=size, replace=False)
    probs = rng.integers(1, 20, size=size) * 0.05
    total = probs.sum()
    if total > 1.0:
        probs = probs / total
        total = 1.0
    outcomes = list(zip(grid.points[idx].tolist(), probs.tolist()))
    leftover = 1.0 - float(total)
    if leftover > 0.0:
        outcomes.append((0.0, leftover))
    return Lottery(outcomes)


def random_query(grid: BreakpointGrid, rng: np.random.Generator,
                 max_support: int = 3,
                 allowed_indices: Optional[np.ndarray] = None
                 ) -> tuple[Lottery, Lottery]:
    w = random_lottery(grid, rng, max_support, allowed_indices)
    y = random_lottery(grid, rng, max_support, allowed_indices)
    return w, y


def generate_dataset(dm: SimulatedDM, grid_spec, K: int,
                     rng: np.random.Generator,
                     allowed_indices: Optional[np.ndarray] = None
                     ) -> list[ComparisonRecord]:
    """K records with random <=3-point lotteries on the grid and choices
    sampled from the DM.

    `grid_spec` is a BreakpointGrid or an (n_points, b_bar) tuple in which
    case the grid's interior points are drawn from `rng` first.  Records are
    drawn sequentially from `rng`, so growing K with the same seed extends
    the dataset append-only (without replacement of earlier queries).
    """
    if K <= 0:
        raise ValueError("K must be >= 1")
    if isinstance(grid_spec, BreakpointGrid):
        grid = grid_spec
    else:
        n, b_bar = grid_spec
        grid = paper_grid(int(n), rng, float(b_bar))
    records = []
    for _ in range(K):
        w, y = random_query(grid, rng, allowed_indices=allowed_indices)
        records.append(ComparisonRecord(w, y, sample_choice(dm, w, y, rng)))
    return records


def paper_dm(sigma_star: float = 10.0) -> SimulatedDM:
    return SimulatedDM(true_utility_paper, sigma_star)
