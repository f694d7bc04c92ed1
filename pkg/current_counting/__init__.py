"""
Current Counting - full counting statistics of currents in Markov jump processes.

This package computes the distribution P(Q_t = Q) of a counted current in a
finite continuous-time Markov chain from the spectral curve det(lambda - M(g)),
with brute-force oracles for cross-checking.
"""

__version__ = "1.0.0"

from .core.engine import CountingAnalyzer
from .core.config import Settings, SettingsManager
from .core.model import MarkovCountingModel
from .core.exceptions import AssumptionError, CountingError, ModelError

__all__ = [
    "CountingAnalyzer",
    "Settings",
    "SettingsManager",
    "MarkovCountingModel",
    "AssumptionError",
    "CountingError",
    "ModelError",
]
