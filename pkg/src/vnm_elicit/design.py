"""
Query generation: random lotteries, rank-guaranteed designs, and the
multi-round orthogonal questionnaire that grows the breakpoint grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .core import BreakpointGrid, Lottery, MassDiffVector, mass_diff
from .simulate import random_query

DEFAULT_SCALE = 0.5  # mass-diff amplitude of designed queries
ORTHOGONALITY_TOL = 1e-10


def random_queries(grid: BreakpointGrid, count: int,
                   rng: np.random.Generator,
                   allowed_indices: Optional[np.ndarray] = None
                   ) -> list[tuple[Lottery, Lottery]]:
    """Random pairs of lotteries, each on <= 3 grid points."""
    return [random_query(grid, rng, allowed_indices=allowed_indices)
            for _ in range(count)]


def direction_to_query(direction: np.ndarray, grid: BreakpointGrid,
                       scale: float = DEFAULT_SCALE
                       ) -> tuple[Lottery, Lottery]:
    """Two lotteries whose reduced mass-diff vector is a positive multiple of
    `direction` (a vector over grid points y_2..y_N).

    The positive part becomes W's mass, the negative part Y's, both scaled so
    each side carries at most `scale` total mass, with the remainder on y_1=0.
    """
    q = np.asarray(direction, dtype=np.float64)
    if q.size != grid.n - 1:
        raise ValueError("direction must have length N-1")
    if not np.any(q != 0.0):
        raise ValueError("direction must be nonzero")
    if not 0.0 < scale <= 1.0:
        raise ValueError("scale must lie in (0, 1]")
    q_pos = np.maximum(q, 0.0)
    q_neg = np.maximum(-q, 0.0)
    denom = max(float(q_pos.sum()), float(q_neg.sum()), 1.0)
    w_mass = scale * q_pos / denom
    y_mass = scale * q_neg / denom
    pts = grid.points[1:]
    w = [(float(pts[j]), float(w_mass[j])) for j in np.flatnonzero(w_mass)]
    y = [(float(pts[j]), float(y_mass[j])) for j in np.flatnonzero(y_mass)]
    w.append((0.0, 1.0 - sum(p for _, p in w)))
    y.append((0.0, 1.0 - sum(p for _, p in y)))
    return Lottery(w), Lottery(y)


def full_rank_design(grid: BreakpointGrid, K: int, rng: np.random.Generator,
                     full_rank_by: Optional[int] = None
                     ) -> list[tuple[Lottery, Lottery]]:
    """K random queries, with rank-increasing queries injected whenever the
    remaining budget would otherwise be too small to reach rank(Sigma_D)=N-1.

    `full_rank_by` forces full rank already after that many queries (so every
    prefix of at least that length has a full-rank information matrix).
    """
    m = grid.n - 1
    if K < m:
        raise ValueError(f"K={K} < N-1={m}: full rank is impossible")
    budget = min(full_rank_by or K, K)
    if budget < m:
        raise ValueError("full_rank_by smaller than N-1")
    queries: list[tuple[Lottery, Lottery]] = []
    basis = np.zeros((0, m))  # orthonormal row-space basis
    for i in range(K):
        deficit = m - basis.shape[0]
        remaining = budget - i
        if deficit > 0 and deficit >= remaining:
            # must add a new direction: reject candidates that do not increase
            # rank, falling back to the least-covered basis direction
            w = y = None
            for _ in range(50):
                cand = random_query(grid, rng)
                row = mass_diff(cand[0], cand[1], grid).reduced
                resid = row - basis.T @ (basis @ row)
                if np.linalg.norm(resid) > 1e-6:
                    w, y = cand
                    break
            if w is None:
                resids = np.eye(m) - basis.T @ basis
                j = int(np.argmax(np.linalg.norm(resids, axis=1)))
                e = np.zeros(m)
                e[j] = 1.0
                w, y = direction_to_query(e, grid)
        else:
            w, y = random_query(grid, rng)
        queries.append((w, y))
        row = mass_diff(w, y, grid).reduced
        resid = row - basis.T @ (basis @ row)
        nr = np.linalg.norm(resid)
        if nr > 1e-9 * max(1.0, np.linalg.norm(row)) and basis.shape[0] < m:
            basis = np.vstack([basis, resid / nr])
    return queries


@dataclass
class DesignState:
    """Mutable state of the multi-round questionnaire (one writer at a time)."""

    grid: BreakpointGrid
    round_index: int = 0
    queries: list[tuple[Lottery, Lottery]] = field(default_factory=list)
    quantum: float = 1.0
    scale: float = DEFAULT_SCALE

    @property
    def n_r(self) -> int:
        return self.grid.n

    @property
    def k_total(self) -> int:
        return len(self.queries)


class DesignComplete(Exception):
    """Raised when the widest gap falls below the payoff quantum."""


def multi_round_step(state: DesignState
                     ) -> tuple[list[tuple[Lottery, Lottery]], float]:
    """One questionnaire round: N_r - 1 queries along the standard basis
    directions of the current reduced space (mutually orthogonal), plus one
    exploration query at the midpoint of the widest gap, which becomes a new
    breakpoint.  Returns (queries, new_breakpoint).
    """
    grid = state.grid
    m = grid.n - 1
    queries = []
    for j in range(m):
        e = np.zeros(m)
        e[j] = 1.0
        queries.append(direction_to_query(e, grid, state.scale))

    gaps = np.diff(grid.points)
    j_wide = int(np.argmax(gaps))
    lo, hi = grid.points[j_wide], grid.points[j_wide + 1]
    mid = round((lo + hi) / 2.0 / state.quantum) * state.quantum
    if not lo < mid < hi:
        raise DesignComplete("widest gap is below the payoff quantum")
    # exploration: the new sure payoff vs an even gamble over the gap endpoints
    w = Lottery.dirac(mid)
    y = Lottery([(float(lo), 0.5), (float(hi), 0.5)])
    queries.append((w, y))

    state.queries.extend(queries)
    state.grid = BreakpointGrid(np.append(grid.points, mid), grid.b_bar)
    state.round_index += 1
    return queries, float(mid)


def rank_on_grid(state: DesignState, sub_grid: BreakpointGrid) -> int:
    """rank(Sigma_D) restricted to the coordinates of `sub_grid`'s points
    (a subset of the current grid), over all queries issued so far."""
    if not state.queries:
        return 0
    rows = np.array([mass_diff(w, y, state.grid).reduced
                     for w, y in state.queries])
    cols = [state.grid.index_of(p) - 1 for p in sub_grid.points[1:]]
    return int(np.linalg.matrix_rank(rows[:, cols], tol=1e-9))
