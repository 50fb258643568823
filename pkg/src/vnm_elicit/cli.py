"""Command-line interface: simulate, elicit, bounds, design, portfolio,
bench, and serve."""

from __future__ import annotations

import json
import math
import os

import click
import numpy as np

from . import bench as bench_mod
from .bounds import (default_lambda, empirical_errors, info_matrix,
                     kolmogorov_distance, theoretical_bounds)
from .core import (BreakpointGrid, ComparisonRecord, Lottery, PiecewiseUtility,
                   StructureKind, StructureLevel, build_grid, load_dataset,
                   save_dataset)
from .decide import (PortfolioProblem, equivalence_check, load_scenarios,
                     optimize_portfolio)
from .design import DesignState, full_rank_design, multi_round_step
from .mle import make_problem, solve_mle
from .simulate import (generate_dataset, paper_dm, paper_grid, random_query,
                       true_utility_paper)

STRUCTURE_CHOICES = [k.value for k in StructureKind]


@click.group()
def main():
    """Utility elicitation from pairwise lottery choices."""


@main.command()
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--k", "--K", "k", type=int, required=True, help="query count")
@click.option("--n", "--N", "n", type=int, default=50, show_default=True,
              help="breakpoint count")
@click.option("--sigma-star", type=float, default=10.0, show_default=True)
@click.option("--bbar", type=float, default=100000.0, show_default=True)
@click.option("--out", type=click.Path(), required=True)
def simulate(seed, k, n, sigma_star, bbar, out):
    """Generate a synthetic pairwise-comparison dataset."""
    rng = np.random.default_rng(seed)
    dm = paper_dm(sigma_star)
    records = generate_dataset(dm, (n, bbar), k, rng)
    save_dataset(records, out)
    click.echo(f"wrote {len(records)} records to {out}")


@main.command()
@click.option("--data", type=click.Path(exists=True), required=True)
@click.option("--structure", type=click.Choice(STRUCTURE_CHOICES),
              default="full", show_default=True)
@click.option("--l", "--L", "lipschitz", type=float, default=10.0,
              show_default=True)
@click.option("--cbar", type=float, default=100.0, show_default=True)
@click.option("--bbar", type=float, default=100000.0, show_default=True)
@click.option("--engine", type=click.Choice(["smooth", "conic"]),
              default="smooth", show_default=True)
@click.option("--out", type=click.Path(), required=True)
def elicit(data, structure, lipschitz, cbar, bbar, engine, out):
    """Solve the constrained MLE on a dataset."""
    records = load_dataset(data)
    grid = build_grid(records, bbar)
    level = StructureLevel(StructureKind(structure), lipschitz, cbar)
    solution = solve_mle(make_problem(records, grid, level), engine=engine)
    payload = solution.to_json()
    payload.update({"grid": grid.points.tolist(), "b_bar": bbar,
                    "k": len(records), "n": grid.n, "mesh": grid.mesh,
                    "L": lipschitz, "c_bar": cbar, "structure": structure})
    with open(out, "w") as fh:
        json.dump(payload, fh, indent=1)
    click.echo(f"status={solution.status.value} gamma={solution.gamma_star:.6g} "
               f"loglik={solution.loglik:.6f}")


@main.command(name="bounds")
@click.option("--solution", "solution_path", type=click.Path(exists=True),
              required=True)
@click.option("--truth", type=click.Path(exists=True), default=None,
              help="JSON {utility, sigma_star} for empirical errors")
@click.option("--delta", type=float, default=0.05, show_default=True)
@click.option("--lambda", "lam", default="auto", show_default=True,
              help="ridge parameter, or 'auto' (0 if full rank else 1/K)")
@click.option("--out", type=click.Path(), default=None)
def bounds_cmd(solution_path, truth, delta, lam, out):
    """Evaluate finite-sample error bounds for a solved instance."""
    with open(solution_path) as fh:
        sol = json.load(fh)
    eig = np.asarray(sol["sigma_d_eigenvalues"])
    from .bounds import InfoMatrix
    info = InfoMatrix(sigma_d=np.diag(eig), k=sol["k"],
                      rank=sol["sigma_d_rank"], eigenvalues=np.sort(eig))
    lam_val = default_lambda(info) if lam == "auto" else float(lam)
    report = theoretical_bounds(info, sol["n"], sol["k"], delta, lam_val,
                                sol["c_bar"], sol["L"], sol["mesh"])
    payload = report.to_json()
    if truth is not None:
        with open(truth) as fh:
            t = json.load(fh)
        u_star = PiecewiseUtility.from_json(t["utility"])
        sigma_star = float(t["sigma_star"])
        grid = BreakpointGrid(sol["grid"], sol["b_bar"])
        theta_star = np.interp(grid.points, u_star.grid.points,
                               u_star.alpha) / sigma_star
        l2, linf = empirical_errors(np.asarray(sol["alpha_bar"]), theta_star)
        payload["empirical_l2"] = l2
        payload["empirical_linf"] = linf
        if sol.get("utility") is not None and sol.get("sigma_hat"):
            u_hat = PiecewiseUtility.from_json(sol["utility"])
            payload["kolmogorov_adjusted"] = kolmogorov_distance(
                u_hat.scaled(1.0 / sol["sigma_hat"]),
                u_star.scaled(1.0 / sigma_star))
    text = json.dumps(payload, indent=1)
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    click.echo(text)


@main.command()
@click.option("--mode", type=click.Choice(["random", "fullrank", "multiround"]),
              required=True)
@click.option("--n", "--N", "n", type=int, default=50, show_default=True)
@click.option("--k", "--K", "k", type=int, default=100, show_default=True)
@click.option("--rounds", type=int, default=5, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--bbar", type=float, default=100000.0, show_default=True)
@click.option("--out", type=click.Path(), required=True)
def design(mode, n, k, rounds, seed, bbar, out):
    """Generate queries (no choices)."""
    rng = np.random.default_rng(seed)
    if mode == "multiround":
        grid = BreakpointGrid([0.0, bbar], bbar)
        state = DesignState(grid=grid)
        queries = []
        for _ in range(rounds):
            batch, new_point = multi_round_step(state)
            queries += [{"round": state.round_index, "w": w.to_json(),
                         "y": y.to_json()} for w, y in batch]
        payload = {"mode": mode, "queries": queries,
                   "grid": state.grid.points.tolist()}
    else:
        grid = paper_grid(n, rng, bbar)
        pairs = (full_rank_design(grid, k, rng) if mode == "fullrank"
                 else [random_query(grid, rng) for _ in range(k)])
        payload = {"mode": mode, "queries": [
            {"w": w.to_json(), "y": y.to_json()} for w, y in pairs],
            "grid": grid.points.tolist()}
    with open(out, "w") as fh:
        json.dump(payload, fh, indent=1)
    click.echo(f"wrote {len(payload['queries'])} queries to {out}")


@main.command()
@click.option("--solution", "solution_path", type=click.Path(exists=True),
              required=True)
@click.option("--scenarios", type=click.Path(exists=True), required=True)
@click.option("--budget", type=float, required=True)
@click.option("--caps", type=str, required=True,
              help="comma-separated per-asset caps in [0,1]")
@click.option("--delta", type=float, default=0.05, show_default=True)
@click.option("--out", type=click.Path(), default=None)
def portfolio(solution_path, scenarios, budget, caps, delta, out):
    """Maximize expected elicited utility over scenario returns."""
    with open(solution_path) as fh:
        sol = json.load(fh)
    if sol.get("utility") is None:
        raise click.ClickException("solution carries no utility "
                                   f"(status {sol.get('status')})")
    utility = PiecewiseUtility.from_json(sol["utility"])
    problem = PortfolioProblem(
        scenarios=load_scenarios(scenarios), budget=budget,
        caps=np.asarray([float(c) for c in caps.split(",")]),
        utility=utility)
    report = equivalence_check(problem, delta, sol["sigma_hat"])
    payload = {"allocation": report.x_star.tolist(),
               "eu_value": report.eu_value, "par_value": report.par_value,
               "prar_value": report.prar_value, "offset": report.offset,
               "equivalence_holds": report.consistent}
    text = json.dumps(payload, indent=1)
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    click.echo(text)


@main.command(name="bench")
@click.option("--experiment", type=click.Choice(["fig2", "fig3", "table2"]),
              required=True)
@click.option("--seeds", type=int, default=30, show_default=True)
@click.option("--n", "n", type=int, default=0,
              help="breakpoint count override (0 = experiment default)")
@click.option("--k-schedule", default="", help="comma-separated K override")
@click.option("--n-jobs", type=int, default=-1, show_default=True)
@click.option("--plot/--no-plot", default=True, show_default=True)
@click.option("--out", type=click.Path(), required=True, help="output directory")
def bench_cmd(experiment, seeds, n, k_schedule, n_jobs, plot, out):
    """Run an error-vs-queries experiment; writes CSV (and a PNG plot)."""
    schedule = tuple(int(v) for v in k_schedule.split(",")) if k_schedule else ()
    spec = bench_mod.ExperimentSpec(
        experiment=bench_mod.ExperimentId(experiment),
        n=n, k_schedule=schedule, seeds=tuple(range(seeds)))
    rows = bench_mod.run_experiment(spec, n_jobs=n_jobs)
    os.makedirs(out, exist_ok=True)
    csv_path = os.path.join(out, f"{experiment}.csv")
    bench_mod.write_csv(rows, csv_path)
    summary = bench_mod.summarize(rows)
    for (arm, k) in sorted(summary):
        s = summary[(arm, k)]
        click.echo(f"{arm:18s} K={k:5d} mean_l2={s['mean_l2']:.4f} "
                   f"mean_linf={s['mean_linf']:.4f} "
                   f"lambda_min={s['mean_lambda_min_gram']:.4g}")
    if plot:
        bench_mod.plot_experiment(rows, os.path.join(out, f"{experiment}.png"))
    click.echo(f"wrote {csv_path}")


@main.command()
@click.option("--data-dir", type=click.Path(), default="./sessions",
              show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
def serve(data_dir, host, port):
    """Run the elicitation HTTP service."""
    import uvicorn

    from .service import create_app
    uvicorn.run(create_app(data_dir), host=host, port=port)


if __name__ == "__main__":
    main()
