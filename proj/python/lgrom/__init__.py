"""Local-global reduced models for PDE-constrained optimal control."""

from _lgrom import (
    Pipeline,
    fine_grid,
    kl_expand,
    run_experiment,
    sample_parameters,
)

__all__ = [
    "Pipeline",
    "fine_grid",
    "kl_expand",
    "run_experiment",
    "sample_parameters",
]
