"""
Main current counting framework.

This module provides the probability method registry and the orchestrator
that ties model validation, the spectral curve and the probability methods
together.

Features:
- Extensible method registry with automatic dispatch
- Lazily built spectral data shared by all methods of one model
- Analysis reports with assumption checks and soft-check notes
- Cross-method comparison against the brute-force oracles
"""

import logging
import time
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from importlib.metadata import PackageNotFoundError, version
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Type, Union

import numpy as np

from .config import Settings, SettingsManager
from .exceptions import AssumptionError, CountingError, MethodNotFoundError
from .model import MarkovCountingModel, validate
from .results import AnalysisReport, CurrentDistribution, default_q_range
from ..spectral.charpoly import expected_degrees
from ..spectral.curve import SpectralCurve
from ..utils.logger import setup_logging

AUTO_ORDER = ('reversible', 'general')


class BaseMethod(ABC):
    """
    Abstract base class for all probability methods.

    All methods must inherit from this class and implement
    the can_handle() and compute() methods.
    """

    def __init__(self, settings: Optional[Settings] = None, **options: Any):
        self.settings = settings or Settings()
        self.options = options
        self.logger = logging.getLogger(self.__class__.__name__)

    @abstractmethod
    def can_handle(self, curve: SpectralCurve) -> bool:
        """Check if this method applies to the model behind `curve`."""

    @abstractmethod
    def compute(self, curve: SpectralCurve, t: float, q_values: np.ndarray) -> CurrentDistribution:
        """Return P(Q_t = Q) for the given Q values."""

    def validate_result(self, result: CurrentDistribution, curve: SpectralCurve) -> bool:
        problems = result.invariant_violations(curve.reversible, curve.current, curve.diffusion)
        for problem in problems:
            self.logger.warning(f"{result.method.value}: {problem}")
        return not problems


class MethodRegistry:
    """Registry for managing available probability methods."""

    def __init__(self) -> None:
        self._methods: Dict[str, Type[BaseMethod]] = {}
        self.logger = logging.getLogger(self.__class__.__name__)

    def register(self, name: str, method_class: Type[BaseMethod]) -> None:
        if not issubclass(method_class, BaseMethod):
            raise ValueError(f"Method class must inherit from BaseMethod: {method_class}")
        self._methods[name] = method_class
        self.logger.debug(f"Registered method: {name}")

    def get_method(self, name: str) -> Type[BaseMethod]:
        if name not in self._methods:
            raise MethodNotFoundError(f"Method not found: {name}")
        return self._methods[name]

    def get_available_methods(self) -> List[str]:
        return list(self._methods.keys())

    def find_compatible_method(
        self, curve: SpectralCurve, settings: Settings, order: Sequence[str] = AUTO_ORDER
    ) -> Optional[str]:
        for name in order:
            if name in self._methods and self._methods[name](settings).can_handle(curve):
                return name
        return None


@dataclass
class Comparison:
    t: float
    distributions: Dict[str, CurrentDistribution]
    runtimes: Dict[str, float]
    differences: Dict[Tuple[str, str], float] = field(default_factory=dict)

    @property
    def max_difference(self) -> float:
        return max(self.differences.values(), default=0.0)

    def to_dict(self) -> Dict[str, Any]:
        return {
            't': self.t,
            'runtimes': self.runtimes,
            'differences': [
                {'pair': list(pair), 'max_abs_diff': diff} for pair, diff in self.differences.items()
            ],
            'max_difference': self.max_difference,
        }


def _package_versions() -> Dict[str, str]:
    versions = {}
    for name in ('current-counting', 'numpy', 'scipy', 'pandas', 'pydantic', 'shapely'):
        try:
            versions[name] = version(name)
        except PackageNotFoundError:
            versions[name] = 'unknown'
    return versions


class CountingAnalyzer:
    """
    Main current counting orchestrator.

    Builds the spectral data of a model, reports on it and computes the
    distribution of the counted current with the registered methods.

    Args:
        config_path: Path to a JSON or YAML settings file (optional)
        settings: Pre-built Settings instance (optional)
    """

    def __init__(self, config_path: Optional[Union[str, Path]] = None, settings: Optional[Settings] = None):
        self.config = SettingsManager(config_path)
        if settings is not None:
            self.config.settings = settings

        setup_logging(self.config.logging_config)
        self.logger = logging.getLogger(self.__class__.__name__)

        self.registry = MethodRegistry()
        self._register_default_methods()
        self._curves: Dict[int, SpectralCurve] = {}

        self.logger.info("CountingAnalyzer initialized")

    @property
    def settings(self) -> Settings:
        return self.config.settings

    def _register_default_methods(self) -> None:
        from ..methods.general import GeneralContourMethod
        from ..methods.oracle import GillespieMethod, OracleInversionMethod
        from ..methods.reversible import ReversibleCutMethod

        self.registry.register('reversible', ReversibleCutMethod)
        self.registry.register('general', GeneralContourMethod)
        self.registry.register('oracle', OracleInversionMethod)
        self.registry.register('gillespie', GillespieMethod)

    def register_method(self, name: str, method_class: Type[BaseMethod]) -> None:
        """Register a custom method."""
        self.registry.register(name, method_class)

    def curve(self, model: MarkovCountingModel) -> SpectralCurve:
        key = hash(model)
        if key not in self._curves:
            self._curves[key] = SpectralCurve(model, self.settings)
        return self._curves[key]

    def analyze(self, model: MarkovCountingModel, solve_constants: bool = True) -> AnalysisReport:
        """Full pipeline through the zero locator (and the c constants when non-reversible).

        Assumption failures are recorded in the report rather than raised.
        """
        tol = self.settings.tolerances
        checks = validate(model, tol.assume, tol.root)
        report = AnalysisReport(
            model=model.to_dict(),
            checks=checks.to_dict(),
            reversibility={},
            versions=_package_versions(),
            tolerances=self.settings.model_dump(include={'tolerances', 'quadrature', 'contour'}),
        )
        if not checks.passed and {'A0', 'irreducibility'} & set(checks.failures):
            report.errors.append(f"assumption checks failed: {checks.failures}")
            return report

        curve = self.curve(model)
        try:
            report.reversibility = curve.reversibility._asdict()
            report.triple = curve.triple.to_dict()
            report.expected_degrees = expected_degrees(model)
            report.branch_points = curve.branch.to_dict()
            report.cut_layout = curve.layout.to_dict()
            report.special_points = curve.special.to_dict()
            report.exceptional_points = curve.exceptional.to_dict()
            report.cumulants = curve.cumulants.to_dict()
            report.zeros = curve.zeros.to_dict()
            if solve_constants and not curve.reversible and not curve.special.o_ambiguous:
                from ..methods.general import solve_c_constants
                report.c_constants = solve_c_constants(curve).to_dict()
        except AssumptionError as e:
            self.logger.error(f"Analysis stopped: {e}")
            report.errors.append(str(e))
        except CountingError as e:
            self.logger.error(f"Analysis failed: {e}")
            report.errors.append(str(e))
        return report

    def q_values(self, curve: SpectralCurve, t: float, q_range: Optional[Tuple[int, int]] = None) -> np.ndarray:
        q_min, q_max = q_range if q_range is not None else default_q_range(curve.current, curve.diffusion, t)
        if q_min > q_max:
            raise ValueError(f"empty Q range [{q_min}, {q_max}]")
        return np.arange(q_min, q_max + 1, dtype=np.int64)

    def distribution(
        self,
        model: MarkovCountingModel,
        t: float,
        q_range: Optional[Tuple[int, int]] = None,
        method: str = 'auto',
        **options: Any,
    ) -> CurrentDistribution:
        """P(Q_t = Q) with stationary initial condition."""
        if t < 0:
            raise ValueError(f"time must be non-negative, got {t}")
        curve = self.curve(model)
        if method == 'auto':
            name = self.registry.find_compatible_method(curve, self.settings)
            if name is None:
                raise MethodNotFoundError("no registered method handles this model")
        else:
            name = method
        method_class = self.registry.get_method(name)
        instance = method_class(self.settings, **options)
        qs = self.q_values(curve, t, q_range)

        self.logger.info(f"Computing P(Q_t) at t={t} on [{qs[0]}, {qs[-1]}] with {name}")
        result = instance.compute(curve, t, qs)
        instance.validate_result(result, curve)
        return result

    def compare(
        self,
        model: MarkovCountingModel,
        t: float,
        q_range: Optional[Tuple[int, int]] = None,
        methods: Sequence[str] = ('auto', 'oracle'),
        **options: Any,
    ) -> Comparison:
        """Run several methods on the same Q range and tabulate pairwise differences."""
        curve = self.curve(model)
        qs = self.q_values(curve, t, q_range)
        distributions: Dict[str, CurrentDistribution] = {}
        runtimes: Dict[str, float] = {}
        for name in methods:
            start = time.perf_counter()
            result = self.distribution(model, t, (int(qs[0]), int(qs[-1])), name, **options)
            label = result.method.value
            distributions[label] = result
            runtimes[label] = time.perf_counter() - start

        comparison = Comparison(t, distributions, runtimes)
        labels = list(distributions)
        for i, first in enumerate(labels):
            for second in labels[i + 1:]:
                comparison.differences[(first, second)] = distributions[first].max_abs_diff(distributions[second])
        return comparison

    def get_method_status(self) -> Dict[str, Any]:
        return {
            'available_methods': self.registry.get_available_methods(),
            'auto_order': list(AUTO_ORDER),
            'config_loaded': self.config.config_path is not None,
        }
