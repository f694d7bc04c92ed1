"""
Characteristic polynomial of the deformed generator.

det(lambda I - M(g)) = P0(lambda) + g P+(lambda) + P-(lambda) / g, because g
only enters the first row and the first column of M(g) and both
contributions are rank one.
"""

import logging
from dataclasses import dataclass
from typing import Dict, List

import numpy as np
from numpy.polynomial import polynomial as P
from numpy.typing import ArrayLike, NDArray

from ..core.exceptions import StructuralError
from ..core.model import MarkovCountingModel, deformed_generator
from ..utils.polynomials import berkowitz, degree, derivative, evaluate, trim_small

logger = logging.getLogger(__name__)

_SAMPLE_G = (1.0, 2.0, 0.5)
_CHECK_G = 3.0


@dataclass(frozen=True)
class PolyTriple:
    """P0, P+ and P- in ascending coefficient order."""
    p0: NDArray[np.float64]
    pplus: NDArray[np.float64]
    pminus: NDArray[np.float64]
    omega: int

    @property
    def m_plus(self) -> int:
        return self.omega - degree(self.pplus)

    @property
    def m_minus(self) -> int:
        return self.omega - degree(self.pminus)

    @property
    def c_plus(self) -> float:
        """Leading coefficient of -P+."""
        return float(-self.pplus[degree(self.pplus)])

    @property
    def c_minus(self) -> float:
        """Leading coefficient of -P-."""
        return float(-self.pminus[degree(self.pminus)])

    @property
    def scale(self) -> float:
        return float(max(np.abs(self.p0).max(), np.abs(self.pplus).max(), np.abs(self.pminus).max()))

    def at(self, lam: ArrayLike, order: int = 0):
        """(P0, P+, P-) or their derivatives of the given order at lam."""
        return (
            evaluate(derivative(self.p0, order), lam),
            evaluate(derivative(self.pplus, order), lam),
            evaluate(derivative(self.pminus, order), lam),
        )

    def curve(self, lam: ArrayLike, g: ArrayLike) -> NDArray:
        """Spectral curve polynomial P0 + g P+ + P-/g."""
        p0, pp, pm = self.at(lam)
        g = np.asarray(g)
        return p0 + g * pp + pm / g

    def swapped(self) -> 'PolyTriple':
        return PolyTriple(self.p0, self.pminus, self.pplus, self.omega)

    def to_dict(self) -> Dict[str, List[float]]:
        return {
            'p0': self.p0.tolist(),
            'pplus': self.pplus.tolist(),
            'pminus': self.pminus.tolist(),
            'm_plus': self.m_plus,
            'm_minus': self.m_minus,
        }


@dataclass(frozen=True)
class DiscriminantPoly:
    delta: NDArray[np.float64]

    def __call__(self, lam: ArrayLike) -> NDArray:
        return evaluate(self.delta, lam)

    @property
    def degree(self) -> int:
        return degree(self.delta)


def char_poly_at(model: MarkovCountingModel, g: complex) -> NDArray[np.complex128]:
    """Monic det(lambda I - M(g)), ascending coefficients."""
    return berkowitz(deformed_generator(model, g).entries)


def extract_triple(model: MarkovCountingModel, rel_tol: float = 1e-11) -> PolyTriple:
    """Split det(lambda I - M(g)) into P0 + g P+ + P-/g from three sample values of g."""
    samples = np.array([char_poly_at(model, g) for g in _SAMPLE_G])
    system = np.array([[1.0, g, 1.0 / g] for g in _SAMPLE_G])
    c0, cplus, cminus = np.linalg.solve(system, samples)

    imag = max(np.abs(c0.imag).max(), np.abs(cplus.imag).max(), np.abs(cminus.imag).max())
    scale = float(max(np.abs(c0).max(), np.abs(cplus).max(), np.abs(cminus).max(), 1.0))
    if imag > 1e-12 * scale:
        logger.warning(f"Imaginary residue {imag:.3e} in real characteristic coefficients")

    check = char_poly_at(model, _CHECK_G)
    rebuilt = c0 + _CHECK_G * cplus + cminus / _CHECK_G
    residual = float(np.abs(check - rebuilt).max()) / float(np.abs(check).max())
    if residual > 1e-10:
        raise StructuralError(
            f"characteristic polynomial does not split as P0 + g P+ + P-/g (residual {residual:.3e})"
        )

    p0 = c0.real.copy()
    p0[model.omega] = 1.0
    pplus = trim_small(cplus.real, rel_tol, scale)
    pminus = trim_small(cminus.real, rel_tol, scale)

    triple = PolyTriple(p0, pplus, pminus, model.omega)
    if degree(pplus) < 0 or degree(pminus) < 0:
        logger.warning("P+ or P- vanishes identically; the spectral curve is degenerate")
    elif min(triple.m_plus, triple.m_minus) < 2:
        logger.warning(f"m+ = {triple.m_plus}, m- = {triple.m_minus}: expected both >= 2")
    return triple


def discriminant(triple: PolyTriple) -> DiscriminantPoly:
    """Delta = P0^2 - 4 P+ P-."""
    delta = P.polysub(P.polymul(triple.p0, triple.p0), 4.0 * P.polymul(triple.pplus, triple.pminus))
    delta = np.asarray(delta, dtype=float)[:2 * triple.omega + 1]
    return DiscriminantPoly(delta)


def expected_degrees(model: MarkovCountingModel) -> Dict[str, int]:
    """Degrees of P+- for generic dense rates.

    P+ has degree Omega-3 when S_out is contained in S_in and Omega-2
    otherwise; symmetrically for P-.
    """
    s_in, s_out = set(model.s_in), set(model.s_out)
    return {
        'pplus': model.omega - 3 if s_out <= s_in else model.omega - 2,
        'pminus': model.omega - 3 if s_in <= s_out else model.omega - 2,
    }
