"""
Stationary large deviations of the counted current.

lambda_st(nu) is the eigenvalue of M(e^nu) with the largest real part; its
derivatives at nu = 0 are the scaled cumulants. They are obtained here by
exact implicit differentiation of P0(lambda) + e^nu P+(lambda) + e^-nu P-(lambda) = 0.
"""

import logging
from dataclasses import dataclass, field
from math import factorial
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from numpy.typing import NDArray
from scipy import linalg

from ..core.exceptions import AssumptionError, DegenerateModelError
from ..core.model import MarkovCountingModel, deformed_generator, modified_generator
from ..utils.polynomials import berkowitz, evaluate, find_roots, series_polyval
from .charpoly import DiscriminantPoly, PolyTriple

logger = logging.getLogger(__name__)


def lambda_st(model: MarkovCountingModel, nu: float) -> float:
    """Perron eigenvalue of M(e^nu)."""
    if nu == 0:
        return 0.0
    eigenvalues = linalg.eigvals(deformed_generator(model, np.exp(nu)).entries)
    return float(eigenvalues[np.argmax(eigenvalues.real)].real)


def _f_lambda(triple: PolyTriple) -> float:
    d0, dp, dm = triple.at(0.0, order=1)
    return float(d0 + dp + dm)


def stationary_derivatives(triple: PolyTriple, order: int = 4) -> NDArray[np.float64]:
    """lambda_st^(n)(0) for n = 0..order."""
    f_lam = _f_lambda(triple)
    if abs(f_lam) <= 1e-14 * triple.scale:
        raise DegenerateModelError("P0'(0) + P+'(0) + P-'(0) vanishes")

    factorials = np.array([factorial(k) for k in range(order + 1)], dtype=float)
    exp_plus = 1.0 / factorials
    exp_minus = exp_plus * (-1.0) ** np.arange(order + 1)
    series = np.zeros(order + 1)
    for k in range(1, order + 1):
        residual = (series_polyval(triple.p0, series, order)
                    + np.convolve(exp_plus, series_polyval(triple.pplus, series, order))[:order + 1]
                    + np.convolve(exp_minus, series_polyval(triple.pminus, series, order))[:order + 1])
        series[k] = -residual[k] / f_lam
    return series * factorials


def mean_and_diffusion(triple: PolyTriple) -> Tuple[float, float]:
    """(J, D) from the closed forms in P0, P+ and P- at lambda = 0."""
    f_lam = _f_lambda(triple)
    if abs(f_lam) <= 1e-14 * triple.scale:
        raise DegenerateModelError("P0'(0) + P+'(0) + P-'(0) vanishes")
    p0, pp, pm = (float(v) for v in triple.at(0.0))
    _, dp, dm = (float(v) for v in triple.at(0.0, order=1))
    d2 = sum(float(v) for v in triple.at(0.0, order=2))
    j = (pm - pp) / f_lam
    d = (p0 + 2.0 * j * (dm - dp) - j * j * d2) / f_lam
    return j, d


def largest_real_root(delta: DiscriminantPoly, tol: float = 1e-10) -> float:
    roots = find_roots(delta.delta)
    scale = max(1.0, float(np.abs(roots).max()))
    real = roots[np.abs(roots.imag) <= tol * scale].real
    if real.size == 0:
        raise DegenerateModelError("discriminant has no real root")
    return float(real.max())


def nu_star(triple: PolyTriple, delta: DiscriminantPoly) -> float:
    """Centre of the Gallavotti-Cohen symmetry lambda_st(nu) = lambda_st(2 nu_* - nu)."""
    lam_min = largest_real_root(delta)
    _, pp, pm = (float(v) for v in triple.at(lam_min))
    ratio = pm / pp
    if abs(ratio - 1.0) <= 1e-12:
        return 0.0
    return 0.5 * float(np.log(ratio))


def kemeny_modified(model: MarkovCountingModel, tol: float = 1e-10) -> float:
    """Kemeny constant -sum 1/lambda over the nonzero spectrum of M_x."""
    coefs = berkowitz(modified_generator(model).entries).real
    scale = max(1.0, float(np.abs(coefs).max()))
    if abs(coefs[1]) <= tol * scale:
        raise DegenerateModelError(
            "M_x has a repeated zero eigenvalue; Kemeny constant only defined as a limit",
            {'charpoly': coefs.tolist()},
        )
    kemeny = float(coefs[2] / coefs[1])
    if kemeny <= 0:
        logger.warning(f"Non-positive Kemeny constant {kemeny:.6g}")
    return kemeny


def late_time_variance(
    model: MarkovCountingModel, t: float, triple: PolyTriple, reversible: bool
) -> float:
    """Late-time second moment of Q_t from a stationary start (reversible counting only)."""
    if not reversible:
        raise AssumptionError("late-time variance formula requires a counting-reversible model", 'reversibility')
    return late_time_constant(model, triple) + mean_and_diffusion(triple)[1] * t


def late_time_constant(model: MarkovCountingModel, triple: PolyTriple) -> float:
    """mu_2: constant term of <Q_t^2> at late times."""
    _, d = mean_and_diffusion(triple)
    derivs = stationary_derivatives(triple, 4)
    _, pp, _ = triple.at(0.0)
    _, dp, _ = triple.at(0.0, order=1)
    return float(d * kemeny_modified(model) + derivs[4] / (6.0 * d) - 1.0 / 6.0 - d * dp / pp)


@dataclass
class CumulantReport:
    J: float
    D: float
    nu_star: float
    kemeny_modified: Optional[float]
    derivatives: List[float]
    lambda_st_samples: List[Tuple[float, float]] = field(default_factory=list)
    mu_2: Optional[float] = None
    notes: List[str] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'J': self.J,
            'D': self.D,
            'nu_star': self.nu_star,
            'kemeny_modified': self.kemeny_modified,
            'lambda_st_derivatives': self.derivatives,
            'lambda_st_samples': [list(s) for s in self.lambda_st_samples],
            'mu_2': self.mu_2,
            'notes': self.notes,
        }


def cumulant_report(
    model: MarkovCountingModel,
    triple: PolyTriple,
    delta: DiscriminantPoly,
    reversible: bool,
    nu_grid: Sequence[float] = tuple(np.linspace(-2.0, 2.0, 9)),
) -> CumulantReport:
    j, d = mean_and_diffusion(triple)
    derivs = stationary_derivatives(triple, 4)
    notes: List[str] = []
    if d <= 0:
        notes.append(f"non-positive diffusion {d:.6g}")
        logger.warning(notes[-1])

    kemeny: Optional[float]
    try:
        kemeny = kemeny_modified(model)
    except DegenerateModelError as e:
        kemeny = None
        notes.append(str(e))

    mu_2 = None
    if reversible and kemeny is not None and d > 0:
        mu_2 = late_time_constant(model, triple)

    samples = [(float(nu), lambda_st(model, float(nu))) for nu in nu_grid]
    return CumulantReport(j, d, nu_star(triple, delta), kemeny, derivs[1:].tolist(), samples, mu_2, notes)


def polynomial_residual(triple: PolyTriple, lam: float, nu: float) -> float:
    """|P0 + e^nu P+ + e^-nu P-| at (lam, nu), relative to the term sizes."""
    p0, pp, pm = (float(evaluate(c, lam)) for c in (triple.p0, triple.pplus, triple.pminus))
    terms = (p0, np.exp(nu) * pp, np.exp(-nu) * pm)
    return abs(sum(terms)) / max(abs(x) for x in terms)
