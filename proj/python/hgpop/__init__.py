"""Population size estimation from under-sampled count data."""

from ._core import (
    DomainError,
    Model,
    NumericalError,
    PreconditionError,
    UndefinedMetricError,
    UnsupportedError,
    ValidationError,
    adjusted_rand_index,
    emit_figure_data,
    fit_single,
    hypergeom_log_pmf,
    hypergeom_nll,
    hypergeom_nll_grad,
    kmeans,
    mae,
    mpe,
    nll_landscape,
    run_experiment,
    simulate,
    threshold_estimates,
    train,
    violation_penalty,
)

__version__ = "0.1.0"
