"""Replicator dynamics of group qualification rates under threshold classifiers."""

__version__ = "0.1.0"

from .analysis import (
    EquilibriumReport,
    classify_stability,
    equilibrium_report,
    find_equilibrium_thresholds,
    fitness_gap,
    gap_slope,
    jacobian_eigen,
    phi_star,
)
from .classifier import ClassifierPayoffs, acceptance_rate, confusion, solve_threshold, utility
from .config import RunConfig, load_config, parse_config
from .dist import FeaturePair, GaussianPair, make_pair
from .dynamics import AgentSuccess, CostDistribution, DynamicsModel, fitness, replicator_step
from .errors import ConfigError, FairdynError, NumericError
from .harness import compare, detect_convergence, run_trajectory, sweep_grid
from .interventions import InterventionSpec, policy
from .scenario import Scenario, step, transition
from .state import from_coords, group_profile, mean_qualification, to_coords

__all__ = [name for name in dir() if not name.startswith("_")]
