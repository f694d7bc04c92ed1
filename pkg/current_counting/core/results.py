"""
Result records: current distributions, c constants and analysis reports.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
import pandas as pd
from numpy.typing import ArrayLike, NDArray
from scipy.special import erfc

logger = logging.getLogger(__name__)

WINDOW_SIGMAS = 8.0
# lattice tails at short times are heavier than the Gaussian estimate
TAIL_FLOOR = 1e-5


class MethodTag(str, Enum):
    REVERSIBLE = 'reversible_cut_integral'
    GENERAL = 'general_contour'
    ORACLE = 'oracle_inversion'
    GILLESPIE = 'gillespie'


def default_q_range(j: float, d: float, t: float) -> Tuple[int, int]:
    """J t -+ 8 sqrt(D t), widened to contain 0."""
    center = j * t
    width = WINDOW_SIGMAS * np.sqrt(max(d, 0.0) * t)
    q_min = int(np.floor(min(center - width, 0.0)))
    q_max = int(np.ceil(max(center + width, 0.0)))
    return q_min, q_max


@dataclass
class CurrentDistribution:
    """P(Q_t = Q) on a contiguous range of Q."""
    t: float
    q_values: NDArray[np.int64]
    probabilities: NDArray[np.float64]
    method: MethodTag
    err_estimate: float
    ci_low: Optional[NDArray[np.float64]] = None
    ci_high: Optional[NDArray[np.float64]] = None
    diagnostics: Dict[str, Any] = field(default_factory=dict)

    @property
    def entries(self) -> Dict[int, float]:
        return {int(q): float(p) for q, p in zip(self.q_values, self.probabilities)}

    def probability(self, q: int) -> float:
        return self.entries.get(int(q), 0.0)

    def total(self) -> float:
        return float(self.probabilities.sum())

    def mean(self) -> float:
        return float(np.dot(self.q_values, self.probabilities))

    def second_moment(self) -> float:
        return float(np.dot(self.q_values.astype(float) ** 2, self.probabilities))

    def variance(self) -> float:
        return self.second_moment() - self.mean() ** 2

    def max_abs_diff(self, other: 'CurrentDistribution') -> float:
        qs = sorted(set(self.entries) | set(other.entries))
        return max((abs(self.probability(q) - other.probability(q)) for q in qs), default=0.0)

    def invariant_violations(
        self, reversible: bool = False, current: Optional[float] = None, diffusion: Optional[float] = None
    ) -> List[str]:
        """Bounds every result must satisfy.

        Given J and D, a Q range reaching J t -+ 8 sqrt(D t) must also hold all
        but the tail mass.
        """
        problems = []
        tol = max(self.err_estimate, 1e-12)
        total = self.total()
        if total > 1.0 + tol:
            problems.append(f"total probability {total:.12g} exceeds 1 + err")
        tail = self.tail_bound(current, diffusion)
        if tail is not None and total < 1.0 - tol - tail:
            problems.append(f"total probability {total:.12g} below 1 - err - tail ({tail:.1e}): mass lost")
        if self.probabilities.min(initial=0.0) < -tol:
            problems.append(f"negative probability {self.probabilities.min():.3e}")
        if reversible:
            entries = self.entries
            worst = max((abs(p - entries[-q]) for q, p in entries.items() if -q in entries), default=0.0)
            if worst > 2 * tol:
                problems.append(f"P(Q) != P(-Q) by {worst:.3e}")
        return problems

    def tail_bound(self, current: Optional[float], diffusion: Optional[float]) -> Optional[float]:
        """Mass allowed outside the Q range, None unless it covers the default window."""
        if current is None or diffusion is None or not self.q_values.size or self.t <= 0:
            return None
        sigma = np.sqrt(max(diffusion, 0.0) * self.t)
        if sigma == 0.0:
            return None
        center = current * self.t
        reach = min(center - self.q_values.min(), self.q_values.max() - center) / sigma
        if reach < WINDOW_SIGMAS:
            return None
        return max(float(erfc(reach / np.sqrt(2.0))), TAIL_FLOOR)

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame({'Q': self.q_values.astype(int), 'probability': self.probabilities})
        if self.ci_low is not None and self.ci_high is not None:
            frame['ci_low'] = self.ci_low
            frame['ci_high'] = self.ci_high
        return frame

    def to_dict(self) -> Dict[str, Any]:
        return {
            't': self.t,
            'method': self.method.value,
            'err_estimate': self.err_estimate,
            'q_min': int(self.q_values.min()) if self.q_values.size else None,
            'q_max': int(self.q_values.max()) if self.q_values.size else None,
            'total': self.total(),
            'mean': self.mean(),
            'diagnostics': self.diagnostics,
        }

    @classmethod
    def point_mass(cls, t: float, q_values: ArrayLike, method: MethodTag) -> 'CurrentDistribution':
        qs = np.asarray(q_values, dtype=np.int64)
        return cls(t, qs, (qs == 0).astype(float), method, 0.0)


@dataclass
class CConstants:
    """Constants c_1..c_g of the general differential and the checks on them."""
    c: NDArray[np.complex128]
    residual_im_periods: float
    realness_defect: float
    condition_number: float
    c1_residual: float
    sign_conjecture: Optional[bool]
    periods: NDArray[np.complex128] = field(default_factory=lambda: np.zeros(0, dtype=complex))
    winding: List[int] = field(default_factory=list)

    def polynomial(self, lam: ArrayLike) -> NDArray:
        """sum_l c_l lambda^(l-1)."""
        return np.polynomial.polynomial.polyval(np.asarray(lam, dtype=complex), self.c)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'c': [float(v.real) for v in self.c],
            'realness_defect': self.realness_defect,
            'residual_im_periods': self.residual_im_periods,
            'condition_number': self.condition_number,
            'c1_residual': self.c1_residual,
            'sign_conjecture': self.sign_conjecture,
            'periods': [[p.real, p.imag] for p in self.periods],
            'winding': self.winding,
        }


@dataclass
class AnalysisReport:
    """Everything `ccount analyze` writes; self-contained given the model echo."""
    model: Dict[str, Any]
    checks: List[Dict[str, Any]]
    reversibility: Dict[str, bool]
    triple: Optional[Dict[str, Any]] = None
    expected_degrees: Optional[Dict[str, int]] = None
    branch_points: Optional[Dict[str, Any]] = None
    cut_layout: Optional[Dict[str, Any]] = None
    special_points: Optional[Dict[str, Any]] = None
    exceptional_points: Optional[Dict[str, Any]] = None
    cumulants: Optional[Dict[str, Any]] = None
    zeros: Optional[List[Dict[str, Any]]] = None
    c_constants: Optional[Dict[str, Any]] = None
    errors: List[str] = field(default_factory=list)
    versions: Dict[str, str] = field(default_factory=dict)
    tolerances: Dict[str, Any] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c['passed'] for c in self.checks) and not self.errors

    def to_dict(self) -> Dict[str, Any]:
        return {
            'model': self.model,
            'checks': self.checks,
            'reversibility': self.reversibility,
            'triple': self.triple,
            'expected_degrees': self.expected_degrees,
            'genus': self.branch_points['genus'] if self.branch_points else None,
            'branch_points': self.branch_points,
            'cut_layout': self.cut_layout,
            'special_points': self.special_points,
            'exceptional_points': self.exceptional_points,
            'cumulants': self.cumulants,
            'zeros': self.zeros,
            'c_constants': self.c_constants,
            'errors': self.errors,
            'versions': self.versions,
            'tolerances': self.tolerances,
        }
