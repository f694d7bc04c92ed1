"""
Reversible counting: P(Q_t = Q) as a sum of real integrals over the cuts.

With P+ = P- the branch points are real, 0 is the largest one, and the
probability reduces to integrals over the intervals [lambda_{2l-1}, lambda_{2l}]
of an inverse square root singular integrand. The singular factors are
evaluated from exact endpoint distances supplied by the tanh-sinh rule.
"""

import logging
from dataclasses import dataclass
from typing import Dict, List, Tuple

import numpy as np
from numpy.typing import ArrayLike, NDArray

from ..core.engine import BaseMethod
from ..core.exceptions import AssumptionError, DegenerateModelError, QuadratureError
from ..core.model import MarkovCountingModel, modified_generator, stationary_state
from ..core.results import CurrentDistribution, MethodTag
from ..spectral.charpoly import PolyTriple
from ..spectral.curve import SpectralCurve
from ..spectral.surface import SurfacePoint
from ..utils.polynomials import berkowitz, evaluate
from ..utils.quadrature import tanh_sinh

logger = logging.getLogger(__name__)

PERTURBATION = 1e-6


@dataclass(frozen=True)
class ModifiedSpectrum:
    """det(lambda I - M_x) = lambda q(lambda) and prod of the nonzero eigenvalues."""
    q: NDArray[np.float64]
    product: float


def modified_spectrum(model: MarkovCountingModel, tol: float = 1e-10) -> ModifiedSpectrum:
    coefs = berkowitz(modified_generator(model).entries).real
    scale = max(1.0, float(np.abs(coefs).max()))
    if abs(coefs[0]) > tol * scale:
        logger.warning(f"M_x characteristic polynomial has constant term {coefs[0]:.3e}")
    q = coefs[1:]
    if abs(q[0]) <= tol * scale:
        raise DegenerateModelError("zero eigenvalue of M_x is degenerate", {'charpoly': coefs.tolist()})
    omega = coefs.size - 1
    return ModifiedSpectrum(q, float((-1) ** (omega - 1) * q[0]))


def split_branch_points(triple: PolyTriple, lambdas: NDArray[np.float64]) -> NDArray[np.bool_]:
    """True where lambda_i is a root of P0 - 2P+ (an eigenvalue of M(-1))."""
    p0, pp, _ = triple.at(lambdas)
    minus = np.abs(p0 - 2.0 * pp) < np.abs(p0 + 2.0 * pp)
    if minus.sum() != triple.omega:
        raise DegenerateModelError(
            f"{int(minus.sum())} branch points assigned to M(-1), expected {triple.omega}",
            {'lambdas': lambdas.tolist()},
        )
    return minus


def mst_reversible_values(curve: SpectralCurve, lam: ArrayLike, y: ArrayLike) -> NDArray[np.complex128]:
    """M_st at the surface points [lam, y], vectorized over lam."""
    triple = curve.triple
    lam = np.asarray(lam, dtype=complex)
    spectrum = modified_spectrum(curve.model)
    lambdas = curve.branch.lambdas.real
    minus = split_branch_points(triple, lambdas)
    # (1-g)/(1+g) = y / (P0 - 2P+), with P0 - 2P+ factored over its roots
    ratio = np.asarray(y, dtype=complex) / np.prod(lam[..., None] - lambdas[minus], axis=-1)
    _, pp, _ = triple.at(lam)
    _, pp0, _ = triple.at(0.0)
    det_part = evaluate(spectrum.q, lam) / (lam * spectrum.product)
    return ratio * (pp0 / pp) * (-1) ** triple.omega * det_part


def mst_reversible(curve: SpectralCurve, point: SurfacePoint) -> complex:
    """M_st = ((1-g)/(1+g)) (P+(0)/P+(lambda)) (-1)^Omega det(lambda - M_x)/(lambda^2 prod lambda_*)."""
    if complex(point.lam) == 0:
        raise ValueError("M_st has a pole at lambda = 0")
    return complex(mst_reversible_values(curve, complex(point.lam), curve.y(point)))


def _cut_integrand(
    curve: SpectralCurve,
    ell: int,
    spectrum: ModifiedSpectrum,
    minus: NDArray[np.bool_],
    t: float,
    q_values: NDArray[np.int64],
):
    """Integrand of cut ell (1-based) as a function of the endpoint distances."""
    triple = curve.triple
    lambdas = curve.branch.lambdas.real
    a, b = lambdas[2 * ell - 2], lambdas[2 * ell - 1]
    length = b - a
    below = np.arange(lambdas.size) < 2 * ell - 1
    _, pp0, _ = (float(v) for v in triple.at(0.0))
    qs = q_values.astype(float)

    def integrand(left: NDArray[np.float64], right: NDArray[np.float64]) -> NDArray[np.float64]:
        dl = left * length
        dr = right * length
        lam = np.where(left <= right, a + dl, b - dr)
        # |lambda - lambda_j| from the nearer endpoint
        dist = np.empty((lam.size, lambdas.size))
        dist[:, below] = dl[:, None] + (a - lambdas[below])[None, :]
        dist[:, ~below] = dr[:, None] + (lambdas[~below] - b)[None, :]
        roots = np.sqrt(dist)

        # s_l / (P0 - 2P+): each root of P0 - 2P+ turns sqrt(d) into +-1/sqrt(d)
        sign = np.where(minus & ~below, -1.0, 1.0)
        factors = np.where(minus, sign / roots, roots)
        s_over_r = np.prod(factors, axis=1)
        s_l = np.prod(roots, axis=1)

        p0, pp, _ = triple.at(lam)
        det_part = evaluate(spectrum.q, lam) / (lam * spectrum.product)
        weight = (-1) ** ell / np.pi * s_over_r * (pp0 / pp) * np.exp(t * lam) * det_part

        kernel = 2.0 * pp / (1j * s_l - p0)
        phase = np.angle(kernel)
        return weight[:, None] * np.cos(phase[:, None] * qs[None, :])

    return integrand, length


def probability_reversible(
    curve: SpectralCurve,
    t: float,
    q_values: ArrayLike,
    tol: float = 1e-10,
    t_max: float = 4.0,
    max_nodes: int = 2 ** 15,
) -> CurrentDistribution:
    """Sum over the Omega cuts of double-exponential quadratures."""
    if t < 0:
        raise ValueError(f"time must be non-negative, got {t}")
    if not curve.reversible:
        raise AssumptionError("cut-integral formula requires a counting-reversible model", 'reversibility')
    qs = np.asarray(q_values, dtype=np.int64)
    lambdas = curve.branch.lambdas
    if not curve.branch.is_real or lambdas[-1] != 0:
        raise AssumptionError("reversible branch points must be real with 0 the largest", 'A2',
                              {'lambdas': [[z.real, z.imag] for z in lambdas]})

    spectrum = modified_spectrum(curve.model)
    minus = split_branch_points(curve.triple, lambdas.real)
    total = np.zeros(qs.size)
    error = 0.0
    diagnostics: List[Dict[str, float]] = []
    for ell in range(1, curve.omega + 1):
        integrand, length = _cut_integrand(curve, ell, spectrum, minus, t, qs)
        result = tanh_sinh(integrand, tol, t_max, max_nodes, scale=length)
        diagnostics.append({'cut': ell, 'error': result.error, 'nodes': result.nodes})
        if not result.converged:
            raise QuadratureError(f"cut {ell} integral did not converge", {'cuts': diagnostics})
        total += np.real(result.value)
        error += result.error

    return CurrentDistribution(t, qs, total, MethodTag.REVERSIBLE, max(error, tol),
                               diagnostics={'cuts': diagnostics})


def perturbed_model(model: MarkovCountingModel, eps: float) -> MarkovCountingModel:
    """Rates w + eps * P_st(k) on every pair: detailed balance and P_st are preserved."""
    probs = stationary_state(model).probs
    w = model.rate_matrix + eps * np.repeat(probs[:, None], model.omega, axis=1)
    np.fill_diagonal(w, 0.0)
    return MarkovCountingModel(
        omega=model.omega,
        rates=tuple(tuple(float(x) for x in row) for row in w),
        s_in=model.s_in,
        s_out=model.s_out,
    )


class ReversibleCutMethod(BaseMethod):
    """Real cut integrals for counting-reversible models."""

    tag = MethodTag.REVERSIBLE

    def can_handle(self, curve: SpectralCurve) -> bool:
        return curve.reversible

    def compute(self, curve: SpectralCurve, t: float, q_values: np.ndarray) -> CurrentDistribution:
        quad = self.settings.quadrature
        tol = self.settings.tolerances.quad
        if t == 0:
            return CurrentDistribution.point_mass(t, q_values, self.tag)
        try:
            return probability_reversible(curve, t, q_values, tol, quad.tanh_sinh_tmax, quad.max_nodes)
        except DegenerateModelError as e:
            self.logger.warning(f"{e}; extrapolating from perturbed rates")
        return self._extrapolated(curve, t, q_values)

    def _extrapolated(self, curve: SpectralCurve, t: float, q_values: np.ndarray) -> CurrentDistribution:
        quad = self.settings.quadrature
        tol = self.settings.tolerances.quad
        values: List[Tuple[NDArray, float]] = []
        for eps in (PERTURBATION, PERTURBATION / 2):
            shifted = SpectralCurve(perturbed_model(curve.model, eps), self.settings)
            result = probability_reversible(shifted, t, q_values, tol, quad.tanh_sinh_tmax, quad.max_nodes)
            values.append((result.probabilities, result.err_estimate))
        (coarse, err_coarse), (fine, err_fine) = values
        richardson = 2.0 * fine - coarse
        error = float(np.abs(fine - coarse).max()) + err_fine + err_coarse
        return CurrentDistribution(t, np.asarray(q_values, dtype=np.int64), richardson, self.tag, error,
                                   diagnostics={'degenerate_extrapolation': True, 'eps': PERTURBATION})
