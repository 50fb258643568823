"""
Domain types shared by all modules: lotteries, comparison records, breakpoint
grids, piecewise-linear utilities, and the probability-mass difference algebra.

All types are immutable after construction and safe to share between threads.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Iterable, Optional, Sequence, Union

import numpy as np

PROB_TOL = 1e-12
DEFAULT_QUANTUM = 1.0


def _frozen_array(values, dtype=np.float64) -> np.ndarray:
    arr = np.ascontiguousarray(values, dtype=dtype)
    arr.setflags(write=False)
    return arr


class StructureKind(Enum):
    """How much structural preference information the estimator may assume."""

    FULL = "full"           # monotone + concave + L-Lipschitz
    NO_LIPSCHITZ = "nolip"  # monotone + concave
    MONOTONE_ONLY = "mono"  # monotone
    NONE = "none"           # endpoint normalization only


@dataclass(frozen=True)
class StructureLevel:
    kind: StructureKind = StructureKind.FULL
    L: float = 10.0
    c_bar: float = 100.0

    def __post_init__(self):
        if self.L <= 0:
            raise ValueError("Lipschitz modulus L must be > 0")
        if self.c_bar <= 0:
            raise ValueError("c_bar must be > 0")

    @property
    def monotone(self) -> bool:
        return self.kind in (StructureKind.FULL, StructureKind.NO_LIPSCHITZ,
                             StructureKind.MONOTONE_ONLY)

    @property
    def concave(self) -> bool:
        return self.kind in (StructureKind.FULL, StructureKind.NO_LIPSCHITZ)

    @property
    def lipschitz(self) -> bool:
        return self.kind is StructureKind.FULL


@dataclass(frozen=True)
class Lottery:
    """Finitely supported probability distribution over monetary payoffs.

    Outcomes are canonicalized on construction: payoffs sorted ascending,
    exact-duplicate payoffs merged, probabilities renormalized when the sum
    deviates from 1 by at most PROB_TOL (rejected beyond that).
    """

    payoffs: np.ndarray
    probs: np.ndarray

    def __init__(self, outcomes: Iterable[tuple[float, float]]):
        pairs = [(float(v), float(p)) for v, p in outcomes]
        if not pairs:
            raise ValueError("lottery needs at least one outcome")
        merged: dict[float, float] = {}
        for v, p in pairs:
            merged[v] = merged.get(v, 0.0) + p
        payoffs = np.array(sorted(merged), dtype=np.float64)
        probs = np.array([merged[v] for v in payoffs], dtype=np.float64)
        if np.any(probs < -PROB_TOL) or np.any(probs > 1 + PROB_TOL):
            raise ValueError("probabilities must lie in [0, 1]")
        total = probs.sum()
        if abs(total - 1.0) > PROB_TOL:
            raise ValueError(f"probabilities sum to {total!r}, not 1")
        probs = np.clip(probs / total, 0.0, 1.0)
        object.__setattr__(self, "payoffs", _frozen_array(payoffs))
        object.__setattr__(self, "probs", _frozen_array(probs))

    @staticmethod
    def dirac(payoff: float) -> "Lottery":
        return Lottery([(payoff, 1.0)])

    @property
    def outcomes(self) -> list[tuple[float, float]]:
        return list(zip(self.payoffs.tolist(), self.probs.tolist()))

    def to_json(self) -> dict:
        return {"outcomes": [{"payoff": v, "prob": p} for v, p in self.outcomes]}

    @staticmethod
    def from_json(obj: dict) -> "Lottery":
        return Lottery([(o["payoff"], o["prob"]) for o in obj["outcomes"]])

    def __eq__(self, other) -> bool:
        return (isinstance(other, Lottery)
                and np.array_equal(self.payoffs, other.payoffs)
                and np.array_equal(self.probs, other.probs))

    def __hash__(self):
        return hash((self.payoffs.tobytes(), self.probs.tobytes()))


@dataclass(frozen=True)
class ComparisonRecord:
    """A query pair (w, y) plus the observed binary choice z.

    z = +1 means w was chosen, z = -1 means y was chosen.
    """

    w: Lottery
    y: Lottery
    z: int

    def __post_init__(self):
        if self.z not in (+1, -1):
            raise ValueError("z must be +1 or -1")

    def to_json(self) -> dict:
        return {"w": self.w.to_json(), "y": self.y.to_json(), "z": self.z}

    @staticmethod
    def from_json(obj: dict) -> "ComparisonRecord":
        return ComparisonRecord(Lottery.from_json(obj["w"]),
                                Lottery.from_json(obj["y"]), int(obj["z"]))


def save_dataset(records: Sequence[ComparisonRecord], path: str) -> None:
    with open(path, "w") as fh:
        json.dump([r.to_json() for r in records], fh, indent=1)


def load_dataset(path: str) -> list[ComparisonRecord]:
    with open(path) as fh:
        return [ComparisonRecord.from_json(o) for o in json.load(fh)]


@dataclass(frozen=True)
class BreakpointGrid:
    """Sorted breakpoints y_1 < ... < y_N with y_1 = 0 and y_N = b_bar."""

    points: np.ndarray
    b_bar: float

    def __init__(self, points: Iterable[float], b_bar: float):
        pts = np.asarray(sorted(set(float(p) for p in points)), dtype=np.float64)
        if pts.size < 2:
            raise ValueError("grid needs at least 2 points")
        if pts[0] != 0.0:
            raise ValueError("first grid point must be 0")
        if pts[-1] != float(b_bar):
            raise ValueError("last grid point must equal b_bar")
        object.__setattr__(self, "points", _frozen_array(pts))
        object.__setattr__(self, "b_bar", float(b_bar))

    @property
    def n(self) -> int:
        return int(self.points.size)

    @property
    def mesh(self) -> float:
        """Largest adjacent gap mu_N."""
        return float(np.max(np.diff(self.points)))

    def index_of(self, payoff: float) -> int:
        i = int(np.searchsorted(self.points, payoff))
        for j in (i - 1, i, i + 1):
            if 0 <= j < self.points.size and np.isclose(
                    self.points[j], payoff, rtol=0.0, atol=1e-9):
                return j
        raise ValueError(f"payoff {payoff} is not a grid point")


def build_grid(dataset: Sequence[ComparisonRecord], b_bar: float,
               quantum: Optional[float] = DEFAULT_QUANTUM) -> BreakpointGrid:
    """Union of all payoff supports with {0, b_bar} adjoined.

    Payoffs are rounded to `quantum` before deduplication (pass None for
    exact comparison).
    """
    points = {0.0, float(b_bar)}
    for rec in dataset:
        for lot in (rec.w, rec.y):
            for v in lot.payoffs:
                if v < -PROB_TOL or v > b_bar + PROB_TOL:
                    raise ValueError(f"payoff {v} outside [0, {b_bar}]")
                points.add(float(v) if quantum is None
                           else round(v / quantum) * quantum)
    return BreakpointGrid(points, b_bar)


@dataclass(frozen=True)
class MassDiffVector:
    """p_j = P[W = y_j] - P[Y = y_j] over the grid points."""

    p: np.ndarray

    def __post_init__(self):
        p = _frozen_array(self.p)
        if abs(float(p.sum())) > 1e-9:
            raise ValueError("mass differences must sum to 0")
        if np.any(np.abs(p) > 1 + PROB_TOL):
            raise ValueError("entries must lie in [-1, 1]")
        object.__setattr__(self, "p", p)

    @property
    def reduced(self) -> np.ndarray:
        """Last N-1 entries (the first coordinate is dropped since u(0)=0)."""
        return self.p[1:]


def mass_diff(w: Lottery, y: Lottery, grid: BreakpointGrid) -> MassDiffVector:
    p = np.zeros(grid.n)
    for v, q in zip(w.payoffs, w.probs):
        p[grid.index_of(v)] += q
    for v, q in zip(y.payoffs, y.probs):
        p[grid.index_of(v)] -= q
    return MassDiffVector(p)


@dataclass(frozen=True)
class PiecewiseUtility:
    """Piecewise-linear utility through (y_j, alpha_j) with segment slopes beta.

    alpha and beta are stored redundantly and checked for consistency, since
    both appear independently downstream (portfolio LP cuts use both).
    `normalized` distinguishes a normalized utility (alpha_N = 1) from the
    adjusted one u/sigma whose right endpoint is 1/sigma.
    """

    grid: BreakpointGrid
    alpha: np.ndarray
    beta: np.ndarray
    normalized: bool = True
    structure: Optional[StructureLevel] = None

    def __post_init__(self):
        alpha = _frozen_array(self.alpha)
        beta = _frozen_array(self.beta)
        n = self.grid.n
        if alpha.size != n or beta.size != n - 1:
            raise ValueError("alpha/beta length mismatch with grid")
        gaps = np.diff(self.grid.points)
        implied = np.diff(alpha) / gaps
        if not np.allclose(beta, implied, rtol=1e-8, atol=1e-8):
            raise ValueError("beta inconsistent with alpha differences")
        if abs(float(alpha[0])) > 1e-9:
            raise ValueError("alpha_1 must be 0")
        if self.normalized and abs(float(alpha[-1]) - 1.0) > 1e-9:
            raise ValueError("normalized utility requires alpha_N = 1")
        s = self.structure
        if s is not None:
            if s.monotone and np.any(beta < -1e-9):
                raise ValueError("slopes violate monotonicity")
            if s.concave and np.any(np.diff(beta) > 1e-9):
                raise ValueError("slopes violate concavity")
            if s.lipschitz and beta.size and float(beta[0]) > s.L + 1e-9:
                raise ValueError("first slope violates the Lipschitz bound")
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "beta", beta)

    def __call__(self, y) -> Union[float, np.ndarray]:
        return eval_utility(self, y)

    def scaled(self, factor: float, normalized: bool = False) -> "PiecewiseUtility":
        return PiecewiseUtility(self.grid, self.alpha * factor,
                                self.beta * factor, normalized=normalized,
                                structure=self.structure)

    def to_json(self) -> dict:
        return {"grid": self.grid.points.tolist(), "b_bar": self.grid.b_bar,
                "alpha": self.alpha.tolist(), "beta": self.beta.tolist(),
                "normalized": self.normalized}

    @staticmethod
    def from_json(obj: dict) -> "PiecewiseUtility":
        grid = BreakpointGrid(obj["grid"], obj["b_bar"])
        return PiecewiseUtility(grid, np.asarray(obj["alpha"]),
                                np.asarray(obj["beta"]),
                                normalized=obj.get("normalized", True))


def eval_utility(u: PiecewiseUtility, y) -> Union[float, np.ndarray]:
    arr = np.asarray(y, dtype=np.float64)
    if np.any(arr < -PROB_TOL) or np.any(arr > u.grid.b_bar + PROB_TOL):
        raise ValueError(f"payoff outside [0, {u.grid.b_bar}]")
    out = np.interp(arr, u.grid.points, u.alpha)
    return float(out) if np.isscalar(y) or arr.ndim == 0 else out


def expected_utility(u: PiecewiseUtility, x: Lottery) -> float:
    return float(np.dot(x.probs, eval_utility(u, x.payoffs)))


def pla_project(values, grid: BreakpointGrid,
                structure: Optional[StructureLevel] = None) -> PiecewiseUtility:
    """Piecewise-linear interpolant through the given grid values.

    Coincides with the inputs at every grid point; requires the values to be
    monotone non-decreasing in grid order.
    """
    alpha = np.asarray(values, dtype=np.float64)
    if alpha.size != grid.n:
        raise ValueError("value count must match grid size")
    if np.any(np.diff(alpha) < -1e-12):
        raise ValueError("values must be monotone non-decreasing")
    if abs(float(alpha[0])) > 1e-9:
        raise ValueError("utility value at 0 must be 0")
    alpha = alpha.copy()
    alpha[0] = 0.0
    beta = np.diff(alpha) / np.diff(grid.points)
    normalized = bool(abs(float(alpha[-1]) - 1.0) <= 1e-12)
    return PiecewiseUtility(grid, alpha, beta, normalized=normalized,
                            structure=structure)
