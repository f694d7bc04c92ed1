"""
Lazily computed spectral data of one counting model.
"""

import logging
from functools import cached_property
from typing import Optional

from ..core.config import Settings
from ..core.model import (
    MarkovCountingModel,
    Reversibility,
    StationaryVector,
    classify_reversibility,
    stationary_state,
)
from .charpoly import DiscriminantPoly, PolyTriple, discriminant, extract_triple
from .cumulants import CumulantReport, cumulant_report, mean_and_diffusion
from .surface import (
    BranchPointSet,
    CutLayout,
    ExceptionalPoints,
    SpecialPoints,
    SurfacePoint,
    branch_points,
    exceptional_points,
    g_at,
    pair_cuts,
    special_points,
)
from .zeros import ZeroSet, nontrivial_zeroes


class SpectralCurve:
    """Triple, surface, special points, zeroes and cumulants of a model.

    Every attribute is computed on first access and cached; the bundle is
    never mutated afterwards.
    """

    def __init__(self, model: MarkovCountingModel, settings: Optional[Settings] = None):
        self.model = model
        self.settings = settings or Settings()
        self.logger = logging.getLogger(self.__class__.__name__)

    @property
    def omega(self) -> int:
        return self.model.omega

    @cached_property
    def stationary(self) -> StationaryVector:
        return stationary_state(self.model)

    @cached_property
    def reversibility(self) -> Reversibility:
        return classify_reversibility(self.model, self.settings.tolerances.detailed_balance)

    @property
    def reversible(self) -> bool:
        return self.reversibility.counting_reversible

    @cached_property
    def triple(self) -> PolyTriple:
        return extract_triple(self.model, self.settings.tolerances.coefficient_trim)

    @cached_property
    def delta(self) -> DiscriminantPoly:
        return discriminant(self.triple)

    @cached_property
    def branch(self) -> BranchPointSet:
        return branch_points(self.delta, self.settings.tolerances.root)

    @cached_property
    def layout(self) -> CutLayout:
        contour = self.settings.contour
        layout = pair_cuts(self.branch, self.triple, contour.repair_attempts, contour.max_pairings)
        self.logger.debug(f"Cut layout: {layout.pairs}")
        return layout

    @cached_property
    def special(self) -> SpecialPoints:
        return special_points(self.triple, self.layout, self.reversible, self.settings.tolerances.root)

    @cached_property
    def exceptional(self) -> ExceptionalPoints:
        return exceptional_points(self.triple, self.settings.tolerances.root)

    @cached_property
    def zeros(self) -> ZeroSet:
        return nontrivial_zeroes(self.model, self.triple, self.layout, self.exceptional,
                                 self.settings.tolerances.assume)

    @cached_property
    def cumulants(self) -> CumulantReport:
        return cumulant_report(self.model, self.triple, self.delta, self.reversible)

    @cached_property
    def current(self) -> float:
        return mean_and_diffusion(self.triple)[0]

    @cached_property
    def diffusion(self) -> float:
        return mean_and_diffusion(self.triple)[1]

    def g(self, point: SurfacePoint) -> complex:
        return g_at(point, self.triple, self.layout)

    def y(self, point: SurfacePoint) -> complex:
        return self.layout.y(point)
