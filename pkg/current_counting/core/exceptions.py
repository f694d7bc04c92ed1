"""
Custom exceptions for the current counting framework.
"""

from typing import Any, Dict, Optional


class CountingError(Exception):
    """Base exception for all current counting errors."""
    pass


class ModelError(CountingError):
    """Raised when a model description is malformed."""

    def __init__(self, message: str, location: Optional[str] = None):
        self.location = location
        if location:
            message = f"{message} (at {location})"
        super().__init__(message)


class ConfigurationError(CountingError):
    """Raised when configuration is invalid or missing."""
    pass


class AssumptionError(CountingError):
    """Raised when a model violates one of the genericity assumptions A0-A5."""

    def __init__(self, message: str, assumption: str, details: Optional[Dict[str, Any]] = None):
        self.assumption = assumption
        self.details = details or {}
        super().__init__(f"({assumption}) {message}")


class ErgodicityError(AssumptionError):
    """Raised when the stationary state is not unique."""

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message, "irreducibility", details)


class DegenerateModelError(AssumptionError):
    """Raised when a denominator of a closed formula vanishes."""

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message, "degenerate", details)


class StructuralError(CountingError):
    """Raised when the rank-one structure of M(g) is not reproduced numerically."""
    pass


class SheetConventionError(CountingError):
    """Raised when no cut layout satisfying the sheet convention was found."""

    def __init__(self, message: str, diagnostics: Optional[Dict[str, Any]] = None):
        self.diagnostics = diagnostics or {}
        super().__init__(message)


class PathError(CountingError):
    """Raised when an integration path cannot avoid the singular points."""
    pass


class ContourError(CountingError):
    """Raised when no closed contour separates the cuts from g^{-1}(inf)."""

    def __init__(self, message: str, geometry: Optional[Dict[str, Any]] = None):
        self.geometry = geometry or {}
        super().__init__(message)


class QuadratureError(CountingError):
    """Raised when a quadrature rule does not converge."""

    def __init__(self, message: str, diagnostics: Optional[Dict[str, Any]] = None):
        self.diagnostics = diagnostics or {}
        super().__init__(message)


class IllConditionedError(CountingError):
    """Raised when the period system for the c constants is ill-conditioned."""

    def __init__(self, message: str, period_matrix: Any = None):
        self.period_matrix = period_matrix
        super().__init__(message)


class BasePointError(CountingError):
    """Raised when the general reconstruction has no usable base point."""
    pass


class MethodNotFoundError(CountingError):
    """Raised when a requested probability method is not available."""
    pass
