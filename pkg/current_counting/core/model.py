"""
Markov chains with counted transitions and their derived generators.

Rates follow the column convention: ``rates[k-1][j-1]`` is the rate w_{k<-j}
of the jump j -> k, so that the generator satisfies ``M[k, j] = w_{k<-j}``
off the diagonal and ``M[j, j] = -sum_k w_{k<-j}``. States are numbered from
1 in the public API; state 1 is the state whose transitions are counted.
The counting process Q_t jumps by +1 on 1 -> k with k in ``s_out`` and by -1
on j -> 1 with j in ``s_in``.
"""

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, NamedTuple, Optional, Tuple, Union

import numpy as np
from numpy.typing import NDArray
from pydantic import BaseModel, ConfigDict, ValidationError, field_validator, model_validator
from scipy import linalg
from scipy.sparse.csgraph import connected_components

from .exceptions import ErgodicityError, ModelError

logger = logging.getLogger(__name__)


class MarkovCountingModel(BaseModel):
    """Transition rates plus the counted transition sets."""
    model_config = ConfigDict(frozen=True)

    omega: int
    rates: Tuple[Tuple[float, ...], ...]
    s_in: Tuple[int, ...]
    s_out: Tuple[int, ...]

    @field_validator('s_in', 's_out', mode='before')
    @classmethod
    def _sorted_unique(cls, v: Any) -> Tuple[int, ...]:
        return tuple(sorted({int(x) for x in v}))

    @model_validator(mode='after')
    def _check_structure(self) -> 'MarkovCountingModel':
        n = self.omega
        if n < 3:
            raise ValueError(f"omega: at least 3 states required, got {n}")
        if len(self.rates) != n or any(len(row) != n for row in self.rates):
            raise ValueError(f"rates: expected a {n}x{n} array")
        for k, row in enumerate(self.rates):
            for j, value in enumerate(row):
                if k == j:
                    continue
                if not np.isfinite(value):
                    raise ValueError(f"rates[{k}][{j}]: non-finite rate {value}")
                if value < 0:
                    raise ValueError(f"rates[{k}][{j}]: negative rate w[{k + 1}<-{j + 1}] = {value}")
        allowed = set(range(2, n + 1))
        for name in ('s_in', 's_out'):
            states = set(getattr(self, name))
            if not states:
                raise ValueError(f"{name}: must not be empty")
            bad = sorted(states - allowed)
            if bad:
                raise ValueError(f"{name}: state indices {bad} outside 2..{n}")
            if states == allowed:
                raise ValueError(f"{name}: must be a proper subset of 2..{n}")
        return self

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'MarkovCountingModel':
        """Build a model from the JSON schema, mapping validation errors to ModelError."""
        try:
            return cls(**data)
        except ValidationError as e:
            first = e.errors()[0]
            location = '.'.join(str(part) for part in first.get('loc', ()))
            message = str(first.get('msg', e)).removeprefix('Value error, ')
            if not location and ':' in message:
                location, message = (part.strip() for part in message.split(':', 1))
            raise ModelError(message, location or None) from e
        except TypeError as e:
            raise ModelError(f"Malformed model description: {e}") from e

    @classmethod
    def from_json(cls, path: Union[str, Path]) -> 'MarkovCountingModel':
        path = Path(path)
        try:
            with open(path, 'r', encoding='utf-8') as f:
                data = json.load(f)
        except json.JSONDecodeError as e:
            raise ModelError(f"Invalid JSON: {e.msg}", f"{path}:{e.lineno}:{e.colno}") from e
        except OSError as e:
            raise ModelError(f"Cannot read model file: {e}", str(path)) from e
        if not isinstance(data, dict):
            raise ModelError("Model file must contain a JSON object", str(path))
        return cls.from_dict(data)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'omega': self.omega,
            'rates': [list(row) for row in self.rates],
            's_in': list(self.s_in),
            's_out': list(self.s_out),
        }

    @property
    def rate_matrix(self) -> NDArray[np.float64]:
        """Off-diagonal rates w[k, j] = w_{k<-j}; zero diagonal."""
        w = np.array(self.rates, dtype=float)
        np.fill_diagonal(w, 0.0)
        return w

    @property
    def in_index(self) -> NDArray[np.int64]:
        return np.array(self.s_in, dtype=int) - 1

    @property
    def out_index(self) -> NDArray[np.int64]:
        return np.array(self.s_out, dtype=int) - 1

    @property
    def max_rate(self) -> float:
        return float(self.rate_matrix.max())

    @property
    def w_out(self) -> float:
        """Total rate of the counted jumps leaving state 1."""
        return float(self.rate_matrix[self.out_index, 0].sum())

    def scaled(self, factor: float) -> 'MarkovCountingModel':
        """Same chain with every rate multiplied by `factor`."""
        return MarkovCountingModel(
            omega=self.omega,
            rates=tuple(tuple(factor * x for x in row) for row in self.rates),
            s_in=self.s_in,
            s_out=self.s_out,
        )


@dataclass(frozen=True)
class GeneratorMatrix:
    """A (possibly deformed) generator together with the deformation it was built at."""
    entries: NDArray[np.complex128]
    deformation: complex = 1.0

    def column_sums(self) -> NDArray[np.complex128]:
        return self.entries.sum(axis=0)

    def is_markov(self, tol: float = 1e-12) -> bool:
        m = self.entries
        scale = max(1.0, float(np.abs(m).max()))
        off = m - np.diag(np.diag(m))
        return bool(np.abs(self.column_sums()).max() <= tol * scale
                    and np.all(off.real >= -tol * scale)
                    and np.abs(off.imag).max() <= tol * scale)


@dataclass(frozen=True)
class StationaryVector:
    probs: NDArray[np.float64]

    @property
    def diagonal(self) -> NDArray[np.float64]:
        return np.diag(self.probs)


class Reversibility(NamedTuple):
    chain_reversible: bool
    counting_reversible: bool


@dataclass(frozen=True)
class AssumptionCheck:
    name: str
    passed: bool
    detail: str = ""


@dataclass(frozen=True)
class ValidationReport:
    checks: Tuple[AssumptionCheck, ...] = field(default_factory=tuple)

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    @property
    def failures(self) -> List[str]:
        return [check.name for check in self.checks if not check.passed]

    def to_dict(self) -> List[Dict[str, Any]]:
        return [{'name': c.name, 'passed': c.passed, 'detail': c.detail} for c in self.checks]


def _generator_entries(w: NDArray[np.float64]) -> NDArray[np.float64]:
    m = w.copy()
    np.fill_diagonal(m, -w.sum(axis=0))
    return m


def generator(model: MarkovCountingModel) -> GeneratorMatrix:
    return GeneratorMatrix(_generator_entries(model.rate_matrix).astype(complex), 1.0)


def deformed_generator(model: MarkovCountingModel, g: complex) -> GeneratorMatrix:
    """M(g): counted jumps 1 -> S_out weighted by g, S_in -> 1 by 1/g."""
    if g == 0:
        raise ValueError("deformation g must be nonzero")
    m = _generator_entries(model.rate_matrix).astype(complex)
    m[model.out_index, 0] *= g
    m[0, model.in_index] /= g
    return GeneratorMatrix(m, complex(g))


def is_irreducible(model: MarkovCountingModel) -> bool:
    n_components, _ = connected_components(model.rate_matrix > 0, directed=True, connection='strong')
    return n_components == 1


def stationary_state(model: MarkovCountingModel, tol: float = 1e-10) -> StationaryVector:
    """Stationary vector from an LU solve with the normalization row."""
    m = _generator_entries(model.rate_matrix)
    norm = float(np.abs(m).max())
    singular_values = linalg.svdvals(m)
    null_dim = int(np.sum(singular_values <= tol * norm * model.omega))
    if null_dim > 1 or not is_irreducible(model):
        raise ErgodicityError(
            "stationary state is not unique",
            {'null_space_dimension': null_dim, 'singular_values': singular_values.tolist()},
        )

    a = m.copy()
    a[-1, :] = 1.0
    rhs = np.zeros(model.omega)
    rhs[-1] = 1.0
    probs = linalg.lu_solve(linalg.lu_factor(a), rhs)
    probs = probs / probs.sum()

    residual = float(np.abs(m @ probs).max())
    if residual > 1e-12 * max(1.0, norm):
        logger.warning(f"Stationary residual {residual:.3e} above 1e-12*|M|")
    if np.any(probs <= 0):
        raise ErgodicityError("stationary state has non-positive entries", {'probs': probs.tolist()})
    return StationaryVector(probs)


def reverse_model(model: MarkovCountingModel) -> MarkovCountingModel:
    """Time-reversed chain w^R_{k<-j} = w_{j<-k} P_st(k)/P_st(j).

    The counted sets are exchanged, so that the deformed generator of the
    result at 1/g equals D_st M(g)^T D_st^{-1} (the reverse counting
    generator M^R(g)).
    """
    probs = stationary_state(model).probs
    w = model.rate_matrix
    w_rev = w.T * probs[:, None] / probs[None, :]
    np.fill_diagonal(w_rev, 0.0)
    return MarkovCountingModel(
        omega=model.omega,
        rates=tuple(tuple(float(x) for x in row) for row in w_rev),
        s_in=model.s_out,
        s_out=model.s_in,
    )


def reverse_deformed_generator(model: MarkovCountingModel, g: complex) -> GeneratorMatrix:
    """M^R(g) = D_st M(g)^T D_st^{-1}."""
    probs = stationary_state(model).probs
    m = deformed_generator(model, g).entries
    return GeneratorMatrix(probs[:, None] * m.T / probs[None, :], complex(g))


def classify_reversibility(model: MarkovCountingModel, tol: float = 1e-10) -> Reversibility:
    probs = stationary_state(model).probs
    flux = model.rate_matrix * probs[None, :]
    scale = np.maximum(flux, flux.T)
    mismatch = np.abs(flux - flux.T)
    chain = bool(np.all(mismatch <= tol * scale))
    return Reversibility(chain, chain and model.s_in == model.s_out)


def rank_one_vectors(
    model: MarkovCountingModel, g: complex
) -> Tuple[NDArray[np.complex128], NDArray[np.complex128], float]:
    """U(g), V(g) and w_out such that M(g) = M_x - w_out U(g) V(g)^T."""
    w = model.rate_matrix
    w_out = model.w_out
    u = np.zeros(model.omega, dtype=complex)
    v = np.zeros(model.omega, dtype=complex)
    u[0] = 1.0 / g
    u[model.out_index] -= w[model.out_index, 0] / w_out
    v[0] = g
    v[model.in_index] -= w[0, model.in_index] / w_out
    return u, v, w_out


def modified_generator(model: MarkovCountingModel) -> GeneratorMatrix:
    """M_x = M + w_out U(1) V(1)^T, the chain without the counted jumps out of and into 1."""
    u, v, w_out = rank_one_vectors(model, 1.0)
    m = generator(model).entries + w_out * np.outer(u, v)
    return GeneratorMatrix(m, 1.0)


def modified_reverse_generator(model: MarkovCountingModel) -> GeneratorMatrix:
    """M_x^R = M^R + w_in^R U^R(1) V^R(1)^T."""
    return modified_generator(reverse_model(model))


def rank_one_identity_check(model: MarkovCountingModel, g: complex, reverse: bool = False) -> float:
    """Max entrywise deviation from M(g) = M_x - w_out U(g) V(g)^T."""
    if g == 0:
        raise ValueError("deformation g must be nonzero")
    if reverse:
        rev = reverse_model(model)
        u, v, w_scale = rank_one_vectors(rev, 1.0 / g)
        rebuilt = modified_generator(rev).entries - w_scale * np.outer(u, v)
        target = reverse_deformed_generator(model, g).entries
    else:
        u, v, w_scale = rank_one_vectors(model, g)
        rebuilt = modified_generator(model).entries - w_scale * np.outer(u, v)
        target = deformed_generator(model, g).entries
    return float(np.abs(target - rebuilt).max())


def validate(model: MarkovCountingModel, tol_assume: float = 1e-9, tol_root: float = 1e-9) -> ValidationReport:
    """Numerical checks of A0 (counted rates present), irreducibility, A1 and A2."""
    from ..spectral.charpoly import discriminant, extract_triple
    from ..utils.polynomials import find_roots, is_clustered, min_pairwise_gap

    w = model.rate_matrix
    checks: List[AssumptionCheck] = []

    missing = [f"w[{k}<-1]" for k in model.s_out if w[k - 1, 0] <= 0]
    missing += [f"w[1<-{j}]" for j in model.s_in if w[0, j - 1] <= 0]
    checks.append(AssumptionCheck('A0', not missing, ', '.join(missing) or 'counted rates present'))

    irreducible = is_irreducible(model)
    checks.append(AssumptionCheck('irreducibility', irreducible,
                                  'single communicating class' if irreducible else 'rate graph reducible'))

    eigenvalues = linalg.eigvals(_generator_entries(w))
    gap = min_pairwise_gap(eigenvalues)
    scale = max(1.0, model.max_rate)
    a1_ok = not is_clustered(gap, tol_assume, scale)
    checks.append(AssumptionCheck('A1', a1_ok, f"min eigenvalue gap {gap:.3e}"))

    triple = extract_triple(model)
    roots = find_roots(discriminant(triple).delta)
    root_gap = min_pairwise_gap(roots)
    root_scale = max(1.0, float(np.abs(roots).max()))
    a2_ok = not is_clustered(root_gap, tol_root, root_scale)
    checks.append(AssumptionCheck('A2', a2_ok, f"min branch point gap {root_gap:.3e}"))

    report = ValidationReport(tuple(checks))
    if not report.passed:
        logger.warning(f"Model fails assumption checks: {report.failures}")
    return report
