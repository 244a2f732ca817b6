"""Stochastic transition rates: a latent random walk observed through binomial counts."""

from ._core import (
    AgeFamily,
    BackwardSampler,
    BasisSet,
    Cell,
    CellKind,
    CellPanel,
    DurationFamily,
    EMConfig,
    Error,
    NumericalError,
    ParseError,
    UsageError,
    ValidationError,
    LatentParams,
    __version__,
    em_fit,
    exact_loglik,
    filter_panel,
    forecast_rates,
    generate,
    load_panel,
    smooth_stats,
    two_step_fit,
)

__all__ = [
    "AgeFamily",
    "BackwardSampler",
    "BasisSet",
    "Cell",
    "CellKind",
    "CellPanel",
    "DurationFamily",
    "EMConfig",
    "Error",
    "NumericalError",
    "ParseError",
    "UsageError",
    "ValidationError",
    "LatentParams",
    "__version__",
    "em_fit",
    "exact_loglik",
    "filter_panel",
    "forecast_rates",
    "generate",
    "load_panel",
    "smooth_stats",
    "two_step_fit",
]
