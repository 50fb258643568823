"""
Experiment harness: error-vs-queries sweeps for a simulated decision-maker.

Three experiments:
  - SigmaVariable: jointly estimated sigma vs. sigma fixed to 1 or 100;
  - StructureLevels: the four structural-information levels;
  - RankEffect: full-rank vs. rank-deficient query designs (N=200).
Each (seed, K) cell grows its dataset append-only and records the l2/linf
errors of the adjusted vector u/sigma against the simulated truth.
"""

from __future__ import annotations

import csv
import io
import math
import os
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence

import numpy as np
from joblib import Parallel, delayed

from .bounds import empirical_errors, info_matrix_from_rows
from .core import (BreakpointGrid, ComparisonRecord, StructureKind,
                   StructureLevel)
from .design import full_rank_design
from .mle import MleProblem, MleSolverError, make_problem, solve_mle
from .simulate import (generate_dataset, paper_dm, paper_grid, sample_choice,
                       true_utility_paper)


class ExperimentId(Enum):
    SIGMA_VARIABLE = "fig2"
    STRUCTURE_LEVELS = "fig3"
    RANK_EFFECT = "table2"


K_SCHEDULES = {
    ExperimentId.SIGMA_VARIABLE:
        (50, 100, 200, 400, 600, 800, 1000, 2000, 3000, 4000, 5000),
    ExperimentId.STRUCTURE_LEVELS:
        (400, 500, 600, 700, 800, 900, 1000, 2000, 3000, 4000, 5000),
    ExperimentId.RANK_EFFECT:
        (50, 100, 150, 200, 250, 300, 400, 500, 600, 700, 800, 900, 1000),
}

CSV_COLUMNS = ["experiment", "arm", "K", "seed", "l2", "linf", "gamma",
               "status", "rank", "lambda_min_gram", "lambda_min_sigma_d"]


@dataclass(frozen=True)
class ExperimentSpec:
    experiment: ExperimentId
    n: int = 0                      # 0 => experiment default (50 or 200)
    k_schedule: tuple[int, ...] = ()
    seeds: tuple[int, ...] = tuple(range(30))
    L: float = 10.0
    c_bar: float = 100.0
    b_bar: float = 100000.0
    sigma_star: float = 10.0

    def resolved_n(self) -> int:
        if self.n:
            return self.n
        return 200 if self.experiment is ExperimentId.RANK_EFFECT else 50

    def resolved_schedule(self) -> tuple[int, ...]:
        return self.k_schedule or K_SCHEDULES[self.experiment]


def _solve_cell(grid, rows_full, structure, fixed_gamma, warm):
    problem = MleProblem(grid=grid, rows=rows_full, structure=structure)
    # the conic engine is much faster on the large-N cells; rescue the rare
    # instance it cannot solve accurately with the trust-region engine
    try:
        return solve_mle(problem, engine="conic", fixed_gamma=fixed_gamma,
                         warm_start=warm)
    except MleSolverError:
        return solve_mle(problem, engine="smooth", fixed_gamma=fixed_gamma,
                         warm_start=warm)


def _record(spec, arm, k, seed, sol, theta_star, gram_lmin, sigma_lmin):
    l2, linf = empirical_errors(sol.alpha_bar, theta_star)
    return {"experiment": spec.experiment.value, "arm": arm, "K": k,
            "seed": seed, "l2": l2, "linf": linf, "gamma": sol.gamma_star,
            "status": sol.status.value, "rank": sol.info.rank,
            "lambda_min_gram": gram_lmin, "lambda_min_sigma_d": sigma_lmin}


def _rows_and_arms(spec: ExperimentSpec, seed: int):
    """(grid, theta_star, {arm: (signed rows, structure, fixed_gamma)})."""
    rng = np.random.default_rng(seed)
    n = spec.resolved_n()
    k_max = max(spec.resolved_schedule())
    dm = paper_dm(spec.sigma_star)
    grid = paper_grid(n, rng, spec.b_bar)
    theta_star = np.asarray(true_utility_paper(grid.points)) / spec.sigma_star

    def signed_rows(dataset):
        from .core import mass_diff
        return np.array([-rec.z * mass_diff(rec.w, rec.y, grid).p
                         for rec in dataset])

    full = StructureLevel(StructureKind.FULL, spec.L, spec.c_bar)
    exp = spec.experiment
    if exp is ExperimentId.SIGMA_VARIABLE:
        rows = signed_rows(generate_dataset(dm, grid, k_max, rng))
        arms = {"optimized": (rows, full, None),
                "fixed_sigma_1": (rows, full, 1.0),
                "fixed_sigma_100": (rows, full, 0.01)}
    elif exp is ExperimentId.STRUCTURE_LEVELS:
        rows = signed_rows(generate_dataset(dm, grid, k_max, rng))
        arms = {kind.value: (rows,
                             StructureLevel(kind, spec.L, spec.c_bar), None)
                for kind in StructureKind}
    else:  # RANK_EFFECT
        # full-rank arm: rank(Sigma_D) = N-1 already at K = N.  rank-deficient
        # arm: queries confined to a handful of small-stakes payoffs, a
        # realistic failure mode that leaves almost every coordinate -- and in
        # particular the overall scale -- unidentified, so the fitted
        # utilities drift far from the truth no matter how many comparisons
        # are collected
        queries = full_rank_design(grid, k_max, rng, full_rank_by=n)
        designed = [ComparisonRecord(w, y, sample_choice(dm, w, y, rng))
                    for w, y in queries]
        restricted = generate_dataset(
            dm, grid, k_max, rng, allowed_indices=np.arange(1, 5))
        arms = {"full_rank": (signed_rows(designed), full, None),
                "rank_deficient": (signed_rows(restricted), full, None)}
    return grid, theta_star, arms


def _run_seed(spec: ExperimentSpec, seed: int) -> list[dict]:
    grid, theta_star, arms = _rows_and_arms(spec, seed)
    out = []
    for arm, (rows, structure, fixed_gamma) in arms.items():
        warm = None
        for k in spec.resolved_schedule():
            rows_k = rows[:k]
            info = info_matrix_from_rows(rows_k[:, 1:])
            gram_lmin = info.lambda_min * k
            try:
                sol = _solve_cell(grid, rows_k, structure, fixed_gamma, warm)
            except MleSolverError as err:
                out.append({"experiment": spec.experiment.value, "arm": arm,
                            "K": k, "seed": seed, "l2": math.nan,
                            "linf": math.nan, "gamma": math.nan,
                            "status": f"SolverError:{err}", "rank": info.rank,
                            "lambda_min_gram": gram_lmin,
                            "lambda_min_sigma_d": info.lambda_min})
                continue
            warm = sol.alpha_bar[1:]
            out.append(_record(spec, arm, k, seed, sol, theta_star,
                               gram_lmin, info.lambda_min))
    return out


def run_experiment(spec: ExperimentSpec, n_jobs: int = -1) -> list[dict]:
    """All (arm, K, seed) cells of the experiment, seeds in parallel."""
    chunks = Parallel(n_jobs=n_jobs)(
        delayed(_run_seed)(spec, seed) for seed in spec.seeds)
    rows = [row for chunk in chunks for row in chunk]
    rows.sort(key=lambda r: (r["arm"], r["K"], r["seed"]))
    return rows


def summarize(rows: Sequence[dict]) -> dict[tuple[str, int], dict]:
    """Seed-averaged l2/linf/lambda_min per (arm, K); NaN cells are excluded
    from means and counted."""
    groups: dict[tuple[str, int], list[dict]] = {}
    for r in rows:
        groups.setdefault((r["arm"], r["K"]), []).append(r)
    out = {}
    for key, cells in groups.items():
        ok = [c for c in cells if not math.isnan(c["l2"])]
        out[key] = {
            "mean_l2": float(np.mean([c["l2"] for c in ok])) if ok else math.nan,
            "mean_linf": float(np.mean([c["linf"] for c in ok])) if ok else math.nan,
            "mean_lambda_min_gram": float(np.mean(
                [c["lambda_min_gram"] for c in cells])),
            "mean_lambda_min_sigma_d": float(np.mean(
                [c["lambda_min_sigma_d"] for c in cells])),
            "n_ok": len(ok), "n_failed": len(cells) - len(ok),
        }
    return out


def rows_to_csv(rows: Sequence[dict]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for r in rows:
        writer.writerow({k: (repr(v) if isinstance(v, float) else v)
                         for k, v in r.items()})
    return buf.getvalue()


def write_csv(rows: Sequence[dict], path: str) -> None:
    with open(path, "w") as fh:
        fh.write(rows_to_csv(rows))


def plot_experiment(rows: Sequence[dict], out_path: str) -> None:
    """Seed-averaged error curves vs. K, one line per arm, log-log."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    summary = summarize(rows)
    arms = sorted({arm for arm, _ in summary})
    fig, axes = plt.subplots(1, 2, figsize=(11, 4.5))
    for metric, ax in zip(("mean_l2", "mean_linf"), axes):
        for arm in arms:
            ks = sorted(k for a, k in summary if a == arm)
            ax.plot(ks, [summary[(arm, k)][metric] for k in ks],
                    marker="o", label=arm)
        ax.set_xscale("log")
        ax.set_yscale("log")
        ax.set_xlabel("queries K")
        ax.set_ylabel(metric.replace("mean_", "") + " error")
        ax.legend()
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)
