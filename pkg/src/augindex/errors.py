"""Error types shared by all modules.

Every error carries a short machine-readable ``code`` used by the CLI error block.
"""
from __future__ import annotations


class AugIndexError(Exception):
    code = "error"

    def __init__(self, message: str, **details):
        super().__init__(message)
        self.details = details


class InvalidParameter(AugIndexError, ValueError):
    code = "invalid-parameter"


class InvalidInput(AugIndexError, ValueError):
    code = "invalid-input"


class DepthLimitError(AugIndexError):
    code = "depth-limit"


class UndecidedPairs(AugIndexError):
    """Raised when a graph construction meets pairs the predicates cannot decide."""

    code = "undecided-pairs"

    def __init__(self, message: str, pairs):
        super().__init__(message, pairs=pairs)
        self.pairs = pairs


class NotPCF(AugIndexError):
    code = "not-pcf-witness"


class ExpansivenessViolation(AugIndexError):
    code = "expansiveness-violation"

    def __init__(self, message: str, pair):
        super().__init__(message, pair=pair)
        self.pair = pair


class SingularSystem(AugIndexError):
    code = "singular-system"

    def __init__(self, message: str, components):
        super().__init__(message, components=components)
        self.components = components


class BudgetExceeded(AugIndexError):
    code = "budget-exceeded"
