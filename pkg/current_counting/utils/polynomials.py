"""
Dense polynomial helpers.

Polynomials are numpy arrays of coefficients in ascending order, handled with
`numpy.polynomial.polynomial`.
"""

from typing import Sequence

import numpy as np
from numpy.polynomial import polynomial as P
from numpy.typing import ArrayLike, NDArray


def berkowitz(matrix: ArrayLike) -> NDArray[np.complex128]:
    """Characteristic polynomial det(lambda I - A), ascending coefficients.

    Samuelson-Berkowitz recurrence: only sums and products of entries, so
    near-singular matrices lose no accuracy to pivot divisions.
    """
    a = np.asarray(matrix, dtype=complex)
    n = a.shape[0]
    if a.shape != (n, n):
        raise ValueError("matrix must be square")

    # descending coefficients of the trailing 1x1 block
    poly = np.array([1.0, -a[n - 1, n - 1]], dtype=complex)
    for i in range(n - 2, -1, -1):
        row = a[i, i + 1:]
        col = a[i + 1:, i]
        sub = a[i + 1:, i + 1:]
        m = n - 1 - i

        toeplitz_col = np.empty(m + 2, dtype=complex)
        toeplitz_col[0] = 1.0
        toeplitz_col[1] = -a[i, i]
        vec = col
        for k in range(2, m + 2):
            toeplitz_col[k] = -(row @ vec)
            vec = sub @ vec

        toeplitz = np.zeros((m + 2, m + 1), dtype=complex)
        for c in range(m + 1):
            toeplitz[c:, c] = toeplitz_col[:m + 2 - c]
        poly = toeplitz @ poly

    return poly[::-1].copy()


def trim_small(coefs: ArrayLike, rel_tol: float, scale: float) -> NDArray[np.float64]:
    """Zero out coefficients below rel_tol*scale and drop trailing zeros.

    The zero polynomial is returned as ``[0.0]``.
    """
    c = np.array(coefs, dtype=float)
    c[np.abs(c) <= rel_tol * scale] = 0.0
    nonzero = np.flatnonzero(c)
    if nonzero.size == 0:
        return np.zeros(1)
    return c[:nonzero[-1] + 1]


def degree(coefs: ArrayLike) -> int:
    """Degree of a trimmed polynomial; -1 for the zero polynomial."""
    c = np.asarray(coefs)
    nonzero = np.flatnonzero(c)
    return int(nonzero[-1]) if nonzero.size else -1


def evaluate(coefs: ArrayLike, x: ArrayLike) -> NDArray:
    return P.polyval(np.asarray(x), np.asarray(coefs))


def derivative(coefs: ArrayLike, order: int = 1) -> NDArray:
    c = np.asarray(coefs)
    if c.size <= order:
        return np.zeros(1, dtype=c.dtype)
    return P.polyder(c, order)


def polish_roots(coefs: ArrayLike, roots: ArrayLike, steps: int = 2) -> NDArray[np.complex128]:
    """Newton steps on every root estimate; steps that would increase |p| are skipped."""
    c = np.asarray(coefs, dtype=complex)
    dc = P.polyder(c)
    z = np.array(roots, dtype=complex)
    for _ in range(steps):
        value = P.polyval(z, c)
        slope = P.polyval(z, dc)
        safe = np.abs(slope) > 0
        candidate = z.copy()
        candidate[safe] = z[safe] - value[safe] / slope[safe]
        better = np.abs(P.polyval(candidate, c)) <= np.abs(value)
        z = np.where(better, candidate, z)
    return z


def find_roots(coefs: ArrayLike, polish_steps: int = 2) -> NDArray[np.complex128]:
    """All roots from companion-matrix eigenvalues, then Newton polishing."""
    c = np.asarray(coefs)
    if degree(c) < 1:
        return np.zeros(0, dtype=complex)
    seeds = P.polyroots(c[:degree(c) + 1])
    return polish_roots(c, seeds, polish_steps)


def sort_points(points: ArrayLike) -> NDArray[np.complex128]:
    """Deterministic (Re, Im) ordering."""
    z = np.asarray(points, dtype=complex)
    order = np.lexsort((z.imag, z.real))
    return z[order]


def snap_real(points: ArrayLike, tol: float) -> NDArray[np.complex128]:
    """Set imaginary parts below tol*max(1,|z|) to exactly zero."""
    z = np.array(points, dtype=complex)
    small = np.abs(z.imag) <= tol * np.maximum(1.0, np.abs(z))
    z[small] = z[small].real
    return z


def min_pairwise_gap(points: Sequence[complex]) -> float:
    z = np.asarray(points, dtype=complex)
    if z.size < 2:
        return float('inf')
    diff = np.abs(z[:, None] - z[None, :])
    diff[np.diag_indices(z.size)] = np.inf
    return float(diff.min())


def series_mul(a: NDArray, b: NDArray, order: int) -> NDArray:
    """Product of two truncated power series (ascending, length order+1)."""
    return np.convolve(a, b)[:order + 1]


def series_polyval(coefs: ArrayLike, series: NDArray, order: int) -> NDArray:
    """Substitute a truncated power series into a polynomial (Horner)."""
    c = np.asarray(coefs, dtype=float)
    out = np.zeros(order + 1)
    for coef in c[::-1]:
        out = series_mul(out, series, order)
        out[0] += coef
    return out


# Exact double roots split by O(sqrt(eps)) under companion-matrix root finding
# and Newton polishing, so gaps below this relative floor count as clustered.
CLUSTER_FLOOR = 1e-5


def is_clustered(gap: float, tol: float, scale: float) -> bool:
    return gap <= max(tol, CLUSTER_FLOOR) * scale
