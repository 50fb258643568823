import math

import numpy as np
import pytest

from vnm_elicit.core import (BreakpointGrid, Lottery, PiecewiseUtility,
                             StructureKind, StructureLevel, expected_utility,
                             pla_project)
from vnm_elicit.decide import (EquivalenceReport, PortfolioProblem,
                               equivalence_check, load_scenarios,
                               optimize_portfolio, par, prar, saa_objective)
from vnm_elicit.mle import MleStatus, make_problem, solve_mle
from vnm_elicit.simulate import (SimulatedDM, generate_dataset, gumbel_quantile,
                                 paper_grid, sample_gumbel, true_utility_paper)


def _linear_utility(b_bar=1000.0):
    g = BreakpointGrid([0.0, b_bar], b_bar)
    return pla_project([0.0, 1.0], g)


def _kinked_utility():
    g = BreakpointGrid([0.0, 400.0, 1000.0], 1000.0)
    return pla_project([0.0, 0.8, 1.0], g)


def test_par_closed_form():
    u = _linear_utility()
    x = Lottery([(0.0, 0.5), (1000.0, 0.5)])
    sigma, delta = 2.0, 0.05
    expected = 0.5 - 2.0 * math.log(-math.log(0.05))
    assert par(u, x, delta, sigma) == pytest.approx(expected)
    # at delta = 1/e the offset vanishes
    assert par(u, x, math.exp(-1.0), sigma) == pytest.approx(0.5)


def test_par_is_a_delta_quantile():
    # P(E[u(X)] + eps >= PaR) = 1 - delta for Gumbel eps
    rng = np.random.default_rng(23)
    u = _kinked_utility()
    x = Lottery([(400.0, 0.7), (1000.0, 0.3)])
    sigma, delta = 1.5, 0.2
    threshold = par(u, x, delta, sigma)
    eu = expected_utility(u, x)
    draws = eu + sample_gumbel(sigma, rng, size=200000)
    freq = np.mean(draws >= threshold)
    assert freq == pytest.approx(1.0 - delta, abs=0.005)


def test_par_affine_in_mixtures():
    u = _kinked_utility()
    a = Lottery.dirac(400.0)
    b = Lottery([(0.0, 0.5), (1000.0, 0.5)])
    lam = 0.3
    mix = Lottery([(v, lam * p) for v, p in a.outcomes]
                  + [(v, (1 - lam) * p) for v, p in b.outcomes])
    pa, pb = par(u, a, 0.1, 2.0), par(u, b, 0.1, 2.0)
    assert par(u, mix, 0.1, 2.0) == pytest.approx(lam * pa + (1 - lam) * pb)


def test_prar_finite_family_is_min_of_pars():
    u1 = _linear_utility(1000.0)
    u2 = _kinked_utility()
    x = Lottery.dirac(400.0)
    p1, p2 = par(u1, x, 0.1, 1.0), par(u2, x, 0.1, 1.0)
    assert prar([u1, u2], x, 0.1, 1.0) == pytest.approx(min(p1, p2))
    assert prar(u2, x, 0.1, 1.0) == pytest.approx(p2)


def test_prar_over_mle_optimal_set_equals_par_at_estimate():
    rng = np.random.default_rng(12)
    grid = paper_grid(8, rng)
    dm = SimulatedDM(true_utility_paper, 1.0)
    recs = generate_dataset(dm, grid, 400, rng)
    sol = solve_mle(make_problem(
        recs, grid, StructureLevel(StructureKind.FULL)))
    assert sol.status is MleStatus.UNIQUE
    x = Lottery([(0.0, 0.5), (grid.b_bar, 0.5)])
    assert prar(sol, x, 0.05, sol.sigma_hat) == pytest.approx(
        par(sol.utility, x, 0.05, sol.sigma_hat))


def test_prar_rejects_unknown_family():
    with pytest.raises(ValueError):
        prar("not a family", Lottery.dirac(0.0), 0.1, 1.0)


def test_portfolio_problem_validation():
    u = _linear_utility(1000.0)
    good = np.array([[0.0, 0.1], [0.0, -0.1]])
    PortfolioProblem(scenarios=good, budget=100.0,
                     caps=np.array([1.0]), utility=u)
    with pytest.raises(ValueError):   # cash column must be zero
        PortfolioProblem(scenarios=np.array([[0.01, 0.1]]), budget=100.0,
                         caps=np.array([1.0]), utility=u)
    with pytest.raises(ValueError):   # cap out of range
        PortfolioProblem(scenarios=good, budget=100.0,
                         caps=np.array([1.5]), utility=u)
    with pytest.raises(ValueError):   # column count mismatch
        PortfolioProblem(scenarios=good, budget=100.0,
                         caps=np.array([0.5, 0.5]), utility=u)
    with pytest.raises(ValueError):   # budget must be positive
        PortfolioProblem(scenarios=good, budget=0.0,
                         caps=np.array([1.0]), utility=u)
    g = BreakpointGrid([0.0, 500.0, 1000.0], 1000.0)
    convex = PiecewiseUtility(g, np.array([0.0, 0.2, 1.0]),
                              np.array([0.0004, 0.0016]))
    with pytest.raises(ValueError):   # convex utility breaks the LP cuts
        PortfolioProblem(scenarios=good, budget=100.0,
                         caps=np.array([1.0]), utility=convex)
    with pytest.raises(ValueError):   # wealth can exceed the utility domain
        PortfolioProblem(scenarios=np.array([[0.0, 20.0]]), budget=100.0,
                         caps=np.array([1.0]), utility=u)


def test_saa_objective_oracle():
    u = _kinked_utility()
    problem = PortfolioProblem(
        scenarios=np.array([[0.0, 0.5], [0.0, -0.5]]), budget=200.0,
        caps=np.array([1.0]), utility=u)
    x = np.array([100.0, 100.0])   # wealth 250 or 150
    expected = 0.5 * (u(250.0) + u(150.0))
    assert saa_objective(problem, x) == pytest.approx(expected)


def test_optimize_portfolio_linear_utility_picks_best_mean_return():
    u = _linear_utility(2000.0)
    # asset 1 mean +10%, asset 2 mean +2%: caps bind at 50% each
    scenarios = np.array([[0.0, 0.2, 0.02],
                          [0.0, 0.0, 0.02]])
    problem = PortfolioProblem(scenarios=scenarios, budget=1000.0,
                               caps=np.array([0.5, 0.5]), utility=u)
    x_star, obj = optimize_portfolio(problem)
    assert np.allclose(x_star, [0.0, 500.0, 500.0], atol=1e-6)
    assert obj == pytest.approx(saa_objective(problem, x_star), abs=1e-9)


def test_optimize_portfolio_concavity_induces_hedging():
    # strictly concave utility, one risky asset symmetric around 0 mean with
    # a small positive tilt: full investment is no longer optimal
    g = BreakpointGrid(np.linspace(0.0, 2000.0, 21), 2000.0)
    vals = np.sqrt(np.linspace(0.0, 1.0, 21))
    u = pla_project(vals, g)
    scenarios = np.array([[0.0, 0.9], [0.0, -0.85]])
    problem = PortfolioProblem(scenarios=scenarios, budget=1000.0,
                               caps=np.array([1.0]), utility=u)
    x_star, obj = optimize_portfolio(problem)
    full = saa_objective(problem, np.array([0.0, 1000.0]))
    none = saa_objective(problem, np.array([1000.0, 0.0]))
    assert obj >= max(full, none) - 1e-9
    # verify optimality against a fine grid of single-asset splits
    best_grid = max(saa_objective(problem, np.array([1000.0 - a, a]))
                    for a in np.linspace(0.0, 1000.0, 2001))
    assert obj >= best_grid - 1e-7


def test_equivalence_check_offsets_match():
    u = _kinked_utility()
    problem = PortfolioProblem(
        scenarios=np.array([[0.0, 0.5], [0.0, -0.5]]), budget=500.0,
        caps=np.array([1.0]), utility=u)
    rep = equivalence_check(problem, delta=0.05, sigma=2.0)
    assert rep.consistent
    assert rep.offset == pytest.approx(gumbel_quantile(0.05, 2.0))
    assert rep.par_value == pytest.approx(rep.eu_value + rep.offset)
    assert rep.prar_value == pytest.approx(rep.par_value)


def test_load_scenarios(tmp_path):
    path = tmp_path / "returns.csv"
    path.write_text("asset_0,asset_1,asset_2\n0,0.1,-0.05\n0,-0.2,0.3\n")
    sc = load_scenarios(path)
    assert sc.shape == (2, 3)
    assert sc[1, 2] == pytest.approx(0.3)
    bad = tmp_path / "bad.csv"
    bad.write_text("cash,stock\n0,0.1\n")
    with pytest.raises(ValueError):
        load_scenarios(bad)
    empty = tmp_path / "empty.csv"
    empty.write_text("asset_0,asset_1\n")
    with pytest.raises(ValueError):
        load_scenarios(empty)
