from ._core import (
    ConfigError,
    DomainError,
    IoError,
    NumericError,
    __version__,
    aggregate_directory,
    g_optimal_design,
    matern_correlation,
    median_of_means,
    moment_objective,
    noise_moment,
    phase_budget,
    run_experiment,
    run_medpe,
    run_truncated_ucb,
    theory_exponents,
    truncated_mean,
)
