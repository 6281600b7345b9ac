"""Bayesian optimization with tree-ensemble kernel Gaussian processes.

The acquisition is maximized globally over the partition induced by a
gradient-boosted tree ensemble, subject to known polynomial input
constraints.
"""
from .space import (CATEGORICAL, CONTINUOUS, INTEGER, Box, ConstraintSet, Dataset, Feature,
                    FeatureSpace, PolyConstraint, StructuralError, eval_constraint, interval_eval,
                    sample_uniform, validate_point)
from .gbdt import GbdtConfig, Tree, TreeEnsemble, assign_leaf, leaf_box, predict, split_index, train
from .tkgp import (GpPosterior, KernelBounds, KernelParams, build_posterior, fit_hyperparams,
                   kernel, log_marginal_likelihood, mean_var, ucb)
from .acq import AcquisitionProblem, Cell, encode, evaluate_cell, make_cell, with_agreement_cap
from .solver import BnbNode, BoxSolution, SolveOptions, bound, enumerate_exact, solve
from .propose import ProjectionFailed, Proposal, midpoint, project
from .bench import BenchmarkProblem, get, relative_model_error, uncertainty_sweep
from .runner import (History, RunConfig, aggregate, feas_random_step, initialize, penalty,
                     rnd_acquisition, run_bo)

__version__ = "0.1.0"
