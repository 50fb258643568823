"""Non-parametric VNM utility elicitation from pairwise lottery choices."""

from .core import (BreakpointGrid, ComparisonRecord, Lottery, MassDiffVector,
                   PiecewiseUtility, StructureKind, StructureLevel, build_grid,
                   eval_utility, expected_utility, mass_diff, pla_project)
from .mle import (MleProblem, MleSolution, MleStatus, check_rationalizability,
                  log_likelihood, log_likelihood_gradient, make_problem,
                  optimal_set_band, solve_mle)
from .simulate import (SimulatedDM, choice_probability, generate_dataset,
                       gumbel_cdf, gumbel_quantile, sample_choice,
                       true_utility_paper)

__version__ = "0.1.0"
