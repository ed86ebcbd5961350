# -*- coding: utf-8 -*-
"""
Exception hierarchy.

Domain functions raise these; the harness catches ParamCsiError per sweep point
and turns it into a diagnostic row instead of aborting the whole sweep.
"""

from __future__ import annotations

from typing import Sequence, Tuple


class ParamCsiError(Exception):
    """Base class for every error raised by this package."""


class GenerationError(ParamCsiError):
    """A random profile could not be drawn within max_redraws attempts."""


class DelayDomainError(ParamCsiError, ValueError):
    """A delay lies outside the range a steering vector is defined on."""


class SingularSystemError(ParamCsiError):
    """The LS design matrix is too ill-conditioned to solve."""

    def __init__(self, condition: float, cap: float):
        super().__init__(f"Gram condition number {condition:.3g} exceeds cap {cap:.3g}")
        self.condition = condition
        self.cap = cap


class NumericError(ParamCsiError):
    """An eigensolver or factorization failed."""


class ConfigError(ParamCsiError, ValueError):
    """Malformed configuration; `keys` names every offending key."""

    def __init__(self, keys: Sequence[str], detail: str = ""):
        self.keys: Tuple[str, ...] = tuple(keys)
        msg = "invalid config keys: " + ", ".join(self.keys)
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)
