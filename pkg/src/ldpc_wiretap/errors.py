"""Exception types shared across the package."""

from __future__ import annotations


class TriesExhausted(RuntimeError):
    """Rejection sampling hit its try cap without an accepted graph."""

    def __init__(self, tries: int, min_girth: int, n: int):
        super().__init__(
            f"no graph with girth >= {min_girth} at n={n} after {tries} tries"
        )
        self.tries = tries
        self.min_girth = min_girth
        self.n = n


class BudgetExceeded(RuntimeError):
    """An enumeration or exact computation ran past its configured budget."""


class NoSolution(ValueError):
    """A GF(2) linear system is inconsistent."""


class TooLarge(ValueError):
    """A brute-force oracle was asked to enumerate too many states."""


class InsufficientData(ValueError):
    """Too few nonzero observations for a stable fit."""


class ConfigError(ValueError):
    """Malformed experiment configuration."""
