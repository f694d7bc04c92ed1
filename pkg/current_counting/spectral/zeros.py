"""
Non-trivial zeroes of the eigenstate overlap N_st.

Each nonzero eigenvalue of the modified generator M_x gives a zero of N for
any initial condition; each nonzero eigenvalue of the modified reverse
generator gives a zero of N_st for the stationary start. The g coordinate
of the zero is read off the eigenvector.
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy import linalg

from ..core.model import (
    MarkovCountingModel,
    deformed_generator,
    modified_generator,
    reverse_model,
    stationary_state,
)
from .charpoly import PolyTriple
from .surface import CutLayout, ExceptionalPoints

logger = logging.getLogger(__name__)

SOURCE_FORWARD = 'M_x'
SOURCE_REVERSE = 'M_x^R'


@dataclass(frozen=True)
class ZeroEntry:
    lambda_star: complex
    g_star: complex
    sheet: int
    source: str
    psi: NDArray[np.complex128]
    sigma_overlap: float
    sheet_mismatch: float
    flags: Tuple[str, ...] = ()
    notes: Tuple[str, ...] = ()

    def to_dict(self) -> Dict[str, Any]:
        return {
            'lambda_star': [self.lambda_star.real, self.lambda_star.imag],
            'g_star': [self.g_star.real, self.g_star.imag],
            'sheet': self.sheet,
            'source': self.source,
            'flags': list(self.flags),
            'notes': list(self.notes),
        }


@dataclass(frozen=True)
class ZeroSet:
    entries: Tuple[ZeroEntry, ...] = field(default_factory=tuple)

    def for_source(self, source: str) -> List[ZeroEntry]:
        return [e for e in self.entries if e.source == source]

    @property
    def flagged(self) -> List[ZeroEntry]:
        """Entries violating A4; notes alone do not block."""
        return [e for e in self.entries if e.flags]

    @property
    def usable(self) -> int:
        return len(self.entries) - len(self.flagged)

    def flag_reasons(self) -> List[str]:
        return sorted({flag for e in self.flagged for flag in e.flags})

    def is_complete(self, omega: int) -> bool:
        return len(self.entries) == 2 * omega - 2 and not self.flagged

    def to_dict(self) -> List[Dict[str, Any]]:
        return [e.to_dict() for e in self.entries]


def _normalized(vector: NDArray[np.complex128]) -> NDArray[np.complex128]:
    return vector / vector[np.argmax(np.abs(vector))]


def _zeroes_from(
    model: MarkovCountingModel, source: str, tol: float
) -> List[Tuple[complex, complex, NDArray[np.complex128], List[str]]]:
    """(lambda_*, g value of the formula, psi, flags) for each nonzero eigenvalue of M_x."""
    m_x = modified_generator(model).entries
    eigenvalues, vectors = linalg.eig(m_x)
    scale = max(1.0, model.max_rate)
    w = model.rate_matrix
    found = []
    for k in np.argsort(np.abs(eigenvalues))[1:]:
        lam = complex(eigenvalues[k])
        psi = _normalized(vectors[:, k])
        flags: List[str] = []
        if abs(lam) <= tol * scale:
            flags.append('zero eigenvalue of M_x repeated')
        numerator = complex(np.sum(w[0, model.in_index] * psi[model.in_index]))
        if abs(psi[0]) <= tol:
            flags.append('A4: <1|psi> vanishes, g infinite')
            value = complex(np.inf)
        else:
            value = numerator / (model.w_out * psi[0])
        found.append((lam, value, psi, flags))
    if source == SOURCE_REVERSE:
        found = [(lam, 1.0 / v if v != 0 else complex(np.inf), psi, flags) for lam, v, psi, flags in found]
    return found


def nontrivial_zeroes(
    model: MarkovCountingModel,
    triple: PolyTriple,
    layout: CutLayout,
    exceptional: Optional[ExceptionalPoints] = None,
    tol: float = 1e-9,
) -> ZeroSet:
    """Locate the 2g non-trivial zeroes and assign their sheets."""
    entries: List[ZeroEntry] = []
    sources = ((SOURCE_FORWARD, model), (SOURCE_REVERSE, reverse_model(model)))
    for source, chain in sources:
        for lam, g_star, psi, flags in _zeroes_from(chain, source, tol):
            sheet, mismatch = 1, 0.0
            notes: List[str] = []
            if np.isfinite(g_star) and g_star != 0:
                if abs(g_star - 1.0) <= 1e-6:
                    flags.append('A4: g_* = 1')
                _, pp, pm = (complex(v) for v in triple.at(lam))
                y_target = g_star * pp - pm / g_star
                sheet, mismatch = layout.sheet_of(lam, y_target)
                if mismatch > 1e-8:
                    logger.warning(f"Sheet of zero at lambda={lam:.6g} ambiguous (mismatch {mismatch:.2e})")
                if exceptional is not None and exceptional.count:
                    d = np.abs(exceptional.lambdas - lam) + np.abs(exceptional.gs - g_star)
                    if d.min() <= 1e-6 * max(1.0, abs(lam)):
                        notes.append('at exceptional point')
            elif g_star == 0:
                flags.append('A4: g_* = 0')
            sigma = float(abs(psi.sum())) if source == SOURCE_FORWARD else float('nan')
            entries.append(ZeroEntry(
                lam, complex(g_star), sheet, source, psi, sigma, mismatch, tuple(flags), tuple(notes)
            ))

    entries.sort(key=lambda e: (e.source, e.lambda_star.real, e.lambda_star.imag))
    zero_set = ZeroSet(tuple(entries))
    if zero_set.flagged:
        logger.warning(f"{len(zero_set.flagged)} non-trivial zeroes flagged: {zero_set.flag_reasons()}")
    noted = [e for e in entries if e.notes]
    if noted:
        logger.info(f"{len(noted)} non-trivial zeroes sit on exceptional points")
    return zero_set


def overlap_values(
    model: MarkovCountingModel, g: complex, init: Optional[ArrayLike] = None
) -> Tuple[NDArray[np.complex128], NDArray[np.complex128]]:
    """Eigenvalues of M(g) and N = <Sigma|psi><psi~|P0>/<psi~|psi> for each eigenstate."""
    probs = stationary_state(model).probs if init is None else np.asarray(init, dtype=float)
    eigenvalues, left, right = linalg.eig(deformed_generator(model, g).entries, left=True, right=True)
    values = np.empty(eigenvalues.size, dtype=complex)
    for k in range(eigenvalues.size):
        psi = right[:, k]
        psi_left = left[:, k].conj()
        values[k] = psi.sum() * (psi_left @ probs) / (psi_left @ psi)
    return eigenvalues, values


def overlap_at(
    model: MarkovCountingModel, lam: complex, g: complex, init: Optional[ArrayLike] = None
) -> Tuple[complex, float]:
    """N at the eigenvalue of M(g) nearest lam, with the gap to the next eigenvalue."""
    eigenvalues, values = overlap_values(model, g, init)
    distance = np.abs(eigenvalues - lam)
    order = np.argsort(distance)
    gap = float(distance[order[1]]) if eigenvalues.size > 1 else float('inf')
    return complex(values[order[0]]), gap


def adjugate(matrix: ArrayLike) -> NDArray[np.complex128]:
    """adj(A) from the SVD, well defined when A is singular or defective."""
    a = np.asarray(matrix, dtype=complex)
    u, s, vh = linalg.svd(a)
    n = s.size
    cofactors = np.array([np.prod(np.delete(s, i)) for i in range(n)])
    phase = linalg.det(u) * linalg.det(vh)
    return phase * (vh.conj().T * cofactors) @ u.conj().T


def stationary_numerator(model: MarkovCountingModel, lam: complex, g: complex) -> Tuple[complex, float]:
    """<Sigma|adj(lam - M(g))|P_st> and the spectral norm of the adjugate."""
    probs = stationary_state(model).probs
    adj = adjugate(lam * np.eye(model.omega) - deformed_generator(model, g).entries)
    norm = float(linalg.norm(adj, 2))
    return complex(np.sum(adj @ probs)), norm


def zero_residual(model: MarkovCountingModel, entry: ZeroEntry) -> float:
    """|<Sigma|adj(lambda_* - M(g_*))|P_st>| relative to ||adj|| ||Sigma|| ||P_st||.

    The adjugate stays rank one at a defective M(g_*), where the eigenvector
    overlap is 0/0.
    """
    if not np.isfinite(entry.g_star) or entry.g_star == 0:
        return float('inf')
    eigenvalues = linalg.eigvals(deformed_generator(model, entry.g_star).entries)
    distance = np.sort(np.abs(eigenvalues - entry.lambda_star))
    if eigenvalues.size > 1 and distance[1] <= 1e-8 * max(1.0, abs(entry.lambda_star)):
        logger.warning(f"M(g_*) has a repeated eigenvalue near {entry.lambda_star:.6g}: exceptional point")
    value, norm = stationary_numerator(model, entry.lambda_star, entry.g_star)
    if norm == 0.0:
        return float('inf')
    scale = norm * np.sqrt(model.omega) * float(linalg.norm(stationary_state(model).probs))
    return float(abs(value) / scale)
