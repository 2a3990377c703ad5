"""Potential-game model of UAV channel, power and altitude selection with
log-linear learning (PBLLA and SPBLLA), a brute-force oracle, and metrics."""

__version__ = "0.1.0"

from .game import (ChannelState, ConfigError, GameConfig, PlacementError, Strategy,
                   StrategyProfile, check_profile, global_utility, init_deployment,
                   neighbor_set, potential, utilities, utility, validate_config)
from .learning import (ALGORITHMS, DeltaBound, LearnerParams, ParameterBoundError, RunRecord,
                       TauSchedule, altering_probability, boltzmann_keep_probability,
                       delta_bound, pblla_step, run_learning, spblla_step)
from .metrics import (average_snr, convergence_iteration, coverage_proportion,
                      fluctuation_stats, shannon_capacity, tail_mean)
from .config import ExperimentSpec, SpecParseError, dump_spec, load_spec

__all__ = [
    "ALGORITHMS", "ChannelState", "ConfigError", "DeltaBound", "ExperimentSpec", "GameConfig",
    "LearnerParams", "ParameterBoundError", "PlacementError", "RunRecord", "SpecParseError",
    "Strategy", "StrategyProfile", "TauSchedule", "altering_probability", "average_snr",
    "boltzmann_keep_probability", "check_profile", "convergence_iteration",
    "coverage_proportion", "delta_bound", "dump_spec", "fluctuation_stats", "global_utility",
    "init_deployment", "load_spec", "neighbor_set", "pblla_step", "potential", "run_learning",
    "shannon_capacity", "spblla_step", "tail_mean", "utilities", "utility", "validate_config",
]
