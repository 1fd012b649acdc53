"""Exact linear convergence rate of distributed ADMM for consensus problems."""

from ._core import *  # noqa: F401,F403
from ._core import Error, NumericalError, ValidationError  # noqa: F401

__version__ = "0.1.0"
