"""
Probability method implementations.
"""

from .general import GeneralContourMethod
from .oracle import GillespieMethod, OracleInversionMethod
from .reversible import ReversibleCutMethod

__all__ = [
    'GeneralContourMethod',
    'GillespieMethod',
    'OracleInversionMethod',
    'ReversibleCutMethod',
]
