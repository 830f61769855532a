"""Explicit solutions of the three-marginal transport problem with cost xyz."""

from .constants import ModelConstants, default_constants, solve_constants

__all__ = ["ModelConstants", "default_constants", "solve_constants"]
__version__ = "0.1.0"
