"""Batch-service priority queue toolkit for confirmation latency.

Analytic solver for the stationary batch queue with an accessible
batch, per-class means via the work-conserving decomposition, a
bit-reproducible discrete-event simulator with compiled and
pure-python kernels, a minimum-of-uniforms race model for the service
law, and chain-data CSV statistics. The CLI entry point is
blockqueue.cli:main.
"""

from .analysis import (
    AnalyticSolution,
    QueueConfig,
    StabilityReport,
    find_unit_disk_roots,
    mean_confirmation_time,
    pgf_evaluate,
    solve,
    solve_alpha,
    stability_check,
)
from .des import (
    SimConfig,
    SimEstimate,
    VerificationReport,
    available_kernels,
    estimate,
    run_replication,
    verify_against_analysis,
)
from .errors import (
    BlockqueueError,
    InstabilityError,
    NumericalError,
    PrecisionError,
    SimulationError,
)
from .mining import (
    MiningRaceConfig,
    exact_cdf,
    exact_cdf_distance,
    exact_cdf_sup_distance,
    exponential_approx_distance,
    simulate_race,
)
from .priority import (
    WORK_CONSERVING_LABEL,
    PriorityTraffic,
    class_confirmation_times,
    split_by_ratio,
    two_class_times,
)
from .service import ExponentialFit, ServiceDistribution, fit_exponential

__version__ = "0.1.0"

__all__ = [
    "AnalyticSolution",
    "BlockqueueError",
    "ExponentialFit",
    "InstabilityError",
    "MiningRaceConfig",
    "NumericalError",
    "PrecisionError",
    "PriorityTraffic",
    "QueueConfig",
    "ServiceDistribution",
    "SimConfig",
    "SimEstimate",
    "SimulationError",
    "StabilityReport",
    "VerificationReport",
    "WORK_CONSERVING_LABEL",
    "available_kernels",
    "class_confirmation_times",
    "estimate",
    "exact_cdf",
    "exact_cdf_distance",
    "exact_cdf_sup_distance",
    "exponential_approx_distance",
    "find_unit_disk_roots",
    "fit_exponential",
    "mean_confirmation_time",
    "pgf_evaluate",
    "run_replication",
    "simulate_race",
    "solve",
    "solve_alpha",
    "split_by_ratio",
    "stability_check",
    "two_class_times",
    "verify_against_analysis",
]
