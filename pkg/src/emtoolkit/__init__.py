"""Numerical toolkit for retarded fields, non-radiating sources and cavity spectra."""

__version__ = "0.1.0"

from .core import (ConfigError, ConvergenceError, CoverageError, DomainError, PhysicalConstants,
                   PreconditionError, ScalarField, ShapeError, SpacetimeGrid, ToolkitError,
                   VectorField3, load_field, natural_units, save_field, si_units)

__all__ = [
    "ConfigError", "ConvergenceError", "CoverageError", "DomainError", "PhysicalConstants",
    "PreconditionError", "ScalarField", "ShapeError", "SpacetimeGrid", "ToolkitError",
    "VectorField3", "load_field", "natural_units", "save_field", "si_units", "__version__",
]
