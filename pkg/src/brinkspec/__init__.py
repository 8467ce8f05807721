"""Numerical toolkit for radial Schrodinger operators at the zero-energy threshold."""

__version__ = "0.1.0"

from .errors import BracketError, ConvergenceError, DomainError, ParamError, ShapeError, UnsupportedError  # noqa: E402
