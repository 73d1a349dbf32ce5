"""Exception hierarchy shared across the package.

Each error class carries the process exit status the CLI maps it to, so
library code can raise precise conditions without importing the CLI.
"""

from __future__ import annotations


class KhinlabError(Exception):
    """Base class for all package errors."""

    exit_status = 1


class ViolationError(KhinlabError):
    """A verified inequality failed; details carry the offending instance."""

    exit_status = 1


class ConfigError(KhinlabError):
    """Invalid or contradictory configuration input."""

    exit_status = 2


class PrecisionError(KhinlabError):
    """Requested computation cannot be certified at the stored precision."""

    exit_status = 3


class BudgetError(KhinlabError):
    """Work estimate exceeds the configured resource budget."""

    exit_status = 4
