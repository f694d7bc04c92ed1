"""
Quadrature rules.

Tanh-sinh nodes are returned together with their exact distances to both
endpoints, so integrands with inverse square root endpoint singularities can
be evaluated without forming ``a + tau*(b - a)`` next to a branch point.
"""

import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import Any, Callable, Optional, Sequence, Tuple

import numpy as np
from numpy.typing import NDArray
from scipy.special import roots_legendre

logger = logging.getLogger(__name__)

EndpointIntegrand = Callable[[NDArray[np.float64], NDArray[np.float64]], NDArray]


@dataclass(frozen=True)
class QuadratureResult:
    value: Any
    error: float
    nodes: int
    converged: bool


def tanh_sinh_nodes(
    level: int, t_max: float = 4.0
) -> Tuple[NDArray[np.float64], NDArray[np.float64], NDArray[np.float64]]:
    """Tanh-sinh rule on [0, 1] with step 2**-level.

    Returns (distance to 0, distance to 1, weights).
    """
    h = 2.0 ** (-level)
    n = int(np.ceil(t_max / h))
    t = h * np.arange(-n, n + 1)
    u = 0.5 * np.pi * np.sinh(t)
    left = 1.0 / (1.0 + np.exp(-2.0 * u))
    right = 1.0 / (1.0 + np.exp(2.0 * u))
    weights = h * 0.5 * np.pi * np.cosh(t) / (2.0 * np.cosh(u) ** 2)
    return left, right, weights


def tanh_sinh(
    integrand: EndpointIntegrand,
    tol: float = 1e-10,
    t_max: float = 4.0,
    max_nodes: int = 2 ** 15,
    scale: float = 1.0,
) -> QuadratureResult:
    """Integrate over [0, 1], halving the step until two levels agree.

    `integrand(left, right)` receives the distances of each node to both
    endpoints and returns values of shape (nodes,) or (nodes, k); the result
    is multiplied by `scale` (the interval length).
    """
    previous: Optional[NDArray] = None
    level = 1
    error = float('inf')
    while True:
        left, right, weights = tanh_sinh_nodes(level, t_max)
        values = np.asarray(integrand(left, right))
        if not np.all(np.isfinite(values)):
            raise FloatingPointError("non-finite integrand value at a tanh-sinh node")
        current = np.tensordot(weights, values, axes=(0, 0)) * scale
        if previous is not None:
            error = float(np.max(np.abs(current - previous)))
            if error <= tol * max(1.0, float(np.max(np.abs(current)))):
                return QuadratureResult(current, error, left.size, True)
        if 2 * left.size > max_nodes:
            logger.debug(f"tanh-sinh stopped at {left.size} nodes, last change {error:.3e}")
            return QuadratureResult(current, error, left.size, False)
        previous = current
        level += 1


@lru_cache(maxsize=16)
def gauss_legendre(order: int) -> Tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Gauss-Legendre nodes and weights mapped to [0, 1]."""
    x, w = roots_legendre(order)
    return 0.5 * (x + 1.0), 0.5 * w


def _segment_distance(a: complex, b: complex, points: NDArray[np.complex128]) -> float:
    if points.size == 0:
        return float('inf')
    d = b - a
    if d == 0:
        return float(np.abs(points - a).min())
    tau = np.clip(((points - a) * np.conj(d)).real / abs(d) ** 2, 0.0, 1.0)
    return float(np.abs(points - (a + tau * d)).min())


def adaptive_gauss(
    integrand: Callable[[NDArray[np.complex128]], NDArray],
    a: complex,
    b: complex,
    singularities: Sequence[complex] = (),
    order: int = 20,
    max_depth: int = 40,
) -> Any:
    """Gauss-Legendre on a straight segment, bisected until every piece is
    shorter than half its distance to the nearest singularity.

    The integrand may return shape (nodes,) or (nodes, k).
    """
    nodes, weights = gauss_legendre(order)
    sing = np.asarray(singularities, dtype=complex)
    total: Any = 0.0 + 0.0j
    stack = [(complex(a), complex(b), 0)]
    while stack:
        lo, hi, depth = stack.pop()
        length = abs(hi - lo)
        if length > 0.5 * _segment_distance(lo, hi, sing) and depth < max_depth:
            mid = 0.5 * (lo + hi)
            stack.append((mid, hi, depth + 1))
            stack.append((lo, mid, depth + 1))
            continue
        lam = lo + nodes * (hi - lo)
        values = np.asarray(integrand(lam), dtype=complex)
        total = total + np.tensordot(weights, values, axes=(0, 0)) * (hi - lo)
    return total


def periodic_antiderivative(values: NDArray) -> Tuple[NDArray[np.complex128], complex]:
    """Antiderivative from 0 of a 2*pi-periodic function sampled at 2*pi*j/N.

    Returns the antiderivative at the sample points and the integral over one
    period; the linear part (mean * theta) is kept so that non-zero periods
    are reproduced exactly.
    """
    f = np.asarray(values, dtype=complex)
    n = f.size
    coeffs = np.fft.fft(f) / n
    k = np.fft.fftfreq(n, d=1.0 / n)
    theta = 2.0 * np.pi * np.arange(n) / n
    integrated = np.zeros(n, dtype=complex)
    nonzero = k != 0
    # Nyquist mode of an even-length grid is ambiguous; drop it
    if n % 2 == 0:
        nonzero &= np.abs(k) != n // 2
    integrated[nonzero] = coeffs[nonzero] / (1j * k[nonzero])
    periodic = np.fft.ifft(integrated) * n
    anti = coeffs[0] * theta + periodic - periodic[0]
    return anti, complex(2.0 * np.pi * coeffs[0])
