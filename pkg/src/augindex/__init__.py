"""Augmented index graphs of self-similar sets: construction, hyperbolicity checks,
boundary metrics and effective resistance."""
from __future__ import annotations

__version__ = "0.1.0"
