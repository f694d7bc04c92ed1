"""
Brute-force references for P(Q_t = Q).

- generating_function: <Sigma| exp(t M(g)) |P0> by scaling and squaring
- distribution_inversion: Fourier inversion of the generating function on
  the circle |g| = r
- gillespie_sample: exact stochastic simulation of the counted chain
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Any, Dict, List, Optional

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy import linalg, stats

from ..core.config import OracleConfig
from ..core.engine import BaseMethod
from ..core.model import MarkovCountingModel, deformed_generator, stationary_state
from ..core.results import CurrentDistribution, MethodTag
from ..spectral.curve import SpectralCurve

logger = logging.getLogger(__name__)

TAIL_ADVISORY = 1e-8
CONFIDENCE = 0.99


def generating_function(
    model: MarkovCountingModel, g: complex, t: float, init: Optional[ArrayLike] = None
) -> complex:
    """E[g^Q_t] for the initial distribution `init` (stationary by default)."""
    if t < 0:
        raise ValueError(f"time must be non-negative, got {t}")
    probs = stationary_state(model).probs if init is None else np.asarray(init, dtype=float)
    if t == 0:
        return complex(probs.sum())
    propagator = linalg.expm(t * deformed_generator(model, g).entries)
    return complex(np.sum(propagator @ probs))


def _node_count(config: OracleConfig, width: int) -> int:
    n = config.n_theta
    while n < 2 * width:
        n *= 2
    return n


def distribution_inversion(
    model: MarkovCountingModel,
    t: float,
    q_values: ArrayLike,
    config: Optional[OracleConfig] = None,
    init: Optional[ArrayLike] = None,
) -> CurrentDistribution:
    """P(Q) = (1/n) sum_k r^-Q e^(-i Q theta_k) F(r e^(i theta_k))."""
    if t < 0:
        raise ValueError(f"time must be non-negative, got {t}")
    config = config or OracleConfig()
    qs = np.asarray(q_values, dtype=np.int64)
    if t == 0:
        return CurrentDistribution.point_mass(t, qs, MethodTag.ORACLE)

    n = _node_count(config, int(qs.max() - qs.min()) + 1)
    if n != config.n_theta:
        logger.info(f"Q range needs {n} Fourier nodes (configured {config.n_theta})")
    theta = 2.0 * np.pi * np.arange(n) / n
    nodes = config.radius * np.exp(1j * theta)
    values = np.array([generating_function(model, g, t, init) for g in nodes])
    coeffs = np.fft.fft(values) / n
    result = coeffs[np.mod(qs, n)] * config.radius ** (-qs.astype(float))

    imaginary = float(np.abs(result.imag).max())
    probabilities = result.real
    tail = 1.0 - float(probabilities.sum())
    if abs(tail) > TAIL_ADVISORY:
        logger.warning(f"mass {tail:.3e} outside Q in [{qs.min()}, {qs.max()}]; widen the range")
    return CurrentDistribution(
        t, qs, probabilities, MethodTag.ORACLE, max(imaginary, 1e-12),
        diagnostics={'n_theta': n, 'radius': config.radius, 'tail_mass': tail, 'imaginary_residual': imaginary},
    )


def _chunk_counts(
    model: MarkovCountingModel, t: float, n: int, seed: np.random.SeedSequence
) -> NDArray[np.int64]:
    """Q_t for `n` trajectories started from the stationary state."""
    rng = np.random.Generator(np.random.Philox(seed))
    w = model.rate_matrix
    exit_rates = w.sum(axis=0)
    cumulative = np.cumsum(w, axis=0).T
    increments = np.zeros_like(w, dtype=np.int64)
    increments[model.out_index, 0] = 1
    increments[0, model.in_index] = -1

    state = rng.choice(model.omega, size=n, p=stationary_state(model).probs)
    clock = np.zeros(n)
    counts = np.zeros(n, dtype=np.int64)
    active = np.arange(n)
    while active.size:
        current = state[active]
        clock[active] += rng.exponential(1.0, active.size) / exit_rates[current]
        alive = clock[active] <= t
        active, current = active[alive], current[alive]
        if not active.size:
            break
        u = rng.random(active.size) * cumulative[current, -1]
        following = np.argmax(u[:, None] < cumulative[current], axis=1)
        counts[active] += increments[following, current]
        state[active] = following
    return counts


def gillespie_sample(
    model: MarkovCountingModel,
    t: float,
    q_values: Optional[ArrayLike] = None,
    config: Optional[OracleConfig] = None,
    threads: int = 1,
) -> CurrentDistribution:
    """Empirical distribution of Q_t with per-Q Wilson confidence intervals.

    Trajectories are simulated in chunks, each on its own Philox stream
    spawned from the root seed, so the result does not depend on `threads`.
    """
    if t < 0:
        raise ValueError(f"time must be non-negative, got {t}")
    config = config or OracleConfig()
    total = config.n_samples
    sizes = [min(config.chunk_size, total - start) for start in range(0, total, config.chunk_size)]
    seeds = np.random.SeedSequence(config.seed).spawn(len(sizes))

    if t == 0:
        samples = np.zeros(total, dtype=np.int64)
    else:
        with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
            chunks = list(pool.map(lambda args: _chunk_counts(model, t, *args), zip(sizes, seeds)))
        samples = np.concatenate(chunks)

    if q_values is None:
        qs = np.arange(samples.min(), samples.max() + 1, dtype=np.int64)
    else:
        qs = np.asarray(q_values, dtype=np.int64)
    hits = np.array([int(np.count_nonzero(samples == q)) for q in qs])
    intervals = [stats.binomtest(int(k), total).proportion_ci(CONFIDENCE, method='wilson') for k in hits]
    low = np.array([ci.low for ci in intervals])
    high = np.array([ci.high for ci in intervals])

    mean = float(samples.mean())
    stderr = float(samples.std(ddof=1) / np.sqrt(total)) if total > 1 else float('inf')
    diagnostics: Dict[str, Any] = {
        'n_samples': total,
        'seed': config.seed,
        'chunks': len(sizes),
        'sample_mean': mean,
        'sample_stderr': stderr,
        'outside_range': int(total - hits.sum()),
    }
    return CurrentDistribution(t, qs, hits / total, MethodTag.GILLESPIE, float(np.max(high - low, initial=0.0)),
                               low, high, diagnostics)


class OracleInversionMethod(BaseMethod):
    """Fourier inversion of the matrix-exponential generating function."""

    tag = MethodTag.ORACLE

    def can_handle(self, curve: SpectralCurve) -> bool:
        return True

    def compute(self, curve: SpectralCurve, t: float, q_values: np.ndarray) -> CurrentDistribution:
        return distribution_inversion(curve.model, t, q_values, self._config())

    def _config(self) -> OracleConfig:
        overrides = {k: v for k, v in self.options.items() if k in OracleConfig.model_fields}
        return self.settings.oracle.model_copy(update=overrides) if overrides else self.settings.oracle


class GillespieMethod(OracleInversionMethod):
    """Monte Carlo estimate with confidence intervals.

    Options:
        n_samples: number of trajectories
        seed: root seed
    """

    tag = MethodTag.GILLESPIE

    def compute(self, curve: SpectralCurve, t: float, q_values: np.ndarray) -> CurrentDistribution:
        config = self._config()
        self.logger.info(f"Sampling {config.n_samples} trajectories with seed {config.seed}")
        return gillespie_sample(curve.model, t, q_values, config, self.settings.threads)

    def validate_result(self, result: CurrentDistribution, curve: SpectralCurve) -> bool:
        # sampling noise is not an invariant violation
        return True


def compare_with_samples(reference: CurrentDistribution, sampled: CurrentDistribution) -> float:
    """Fraction of Q bins where the reference lies inside the sampled confidence interval."""
    if sampled.ci_low is None or sampled.ci_high is None:
        raise ValueError("sampled distribution carries no confidence intervals")
    inside: List[bool] = []
    for q, low, high in zip(sampled.q_values, sampled.ci_low, sampled.ci_high):
        inside.append(bool(low - 1e-12 <= reference.probability(int(q)) <= high + 1e-12))
    return float(np.mean(inside)) if inside else 1.0
