"""
Built-in example models and the closed forms known for them.

- three_state(p, q): reversible 3-state chain, current between states 1 and 2
- zero_current_chain(): reversible chain with balanced counted fluxes, J = 0
- random_walk(omega, q): periodic 1d walk with one biased bond
- random_model / random_reversible_model: generic test chains
"""

import logging
from typing import Iterable, List, Optional, Tuple

import numpy as np
from numpy.polynomial import polynomial as P
from numpy.typing import ArrayLike, NDArray
from scipy.special import comb

from .core.model import MarkovCountingModel

logger = logging.getLogger(__name__)

EXAMPLES = ('three-state', 'random-walk')
SECTOR_TOL = 1e-12


def _rates(w: NDArray[np.float64]) -> Tuple[Tuple[float, ...], ...]:
    return tuple(tuple(float(x) for x in row) for row in w)


def three_state(p: float, q: float) -> MarkovCountingModel:
    """w_{2<-1} = w_{1<-2} = 1, w_{1<-3} = w_{2<-3} = p, w_{3<-1} = w_{3<-2} = q."""
    if p <= 0 or q <= 0:
        raise ValueError(f"p and q must be positive, got p={p}, q={q}")
    w = np.array([
        [0.0, 1.0, p],
        [1.0, 0.0, p],
        [q, q, 0.0],
    ])
    if three_state_sector(p, q) is None:
        logger.warning(f"p={p}, q={q} lies on a sector boundary: branch points coincide")
    return MarkovCountingModel(omega=3, rates=_rates(w), s_in=(2,), s_out=(2,))


def three_state_sector(p: float, q: float) -> Optional[str]:
    """Sector I-IV of the (p, q) plane, None on the boundaries p = 1 and q = 2p/(p+1)."""
    if p <= 0 or q <= 0:
        return None
    line = 2.0 * p / (p + 1.0)
    if abs(p - 1.0) <= SECTOR_TOL or abs(q - line) <= SECTOR_TOL * max(1.0, line):
        return None
    below = q < line
    if p < 1.0:
        return 'I' if below else 'III'
    return 'II' if below else 'IV'


def three_state_branch_points(p: float, q: float) -> List[float]:
    """Branch points in increasing order, from the sector table."""
    sector = three_state_sector(p, q)
    if sector is None:
        raise ValueError(f"p={p}, q={q} is on a sector boundary")
    b = 2.0 + 2.0 * p + q
    root = np.sqrt(b * b - 16.0 * p)
    lam_plus, lam_minus = (-b + root) / 2.0, (-b - root) / 2.0
    first, second = (-2.0 - q, -2.0 * p - q) if sector in ('I', 'III') else (-2.0 * p - q, -2.0 - q)
    tail = (lam_plus, -q) if sector in ('I', 'II') else (-q, lam_plus)
    return [lam_minus, first, second, tail[0], tail[1], 0.0]


def zero_current_chain() -> MarkovCountingModel:
    """Reversible 3-state chain counting 1 -> 2 up and 3 -> 1 down.

    The stationary state is (1, 2, 1)/4 and the two counted fluxes balance,
    so J = 0 although the counted sets differ. P0 = l^3 + 11.5 l^2 + 38 l + 20,
    P+ = -2(l + 5), P- = -2(2 l + 5); lambda = 0 is a branch point.
    """
    w = np.array([
        [0.0, 1.0, 2.0],
        [2.0, 0.0, 3.0],
        [2.0, 1.5, 0.0],
    ])
    return MarkovCountingModel(omega=3, rates=_rates(w), s_in=(3,), s_out=(2,))


def random_walk(omega: int, q: float) -> MarkovCountingModel:
    """Ring of `omega` states with w_{2<-1} = 1+q, w_{1<-2} = 1-q and all other rates 1."""
    if omega < 3:
        raise ValueError(f"omega must be at least 3, got {omega}")
    if not -1.0 < q < 1.0:
        raise ValueError(f"q must lie in (-1, 1), got {q}")
    w = np.zeros((omega, omega))
    for j in range(omega):
        k = (j + 1) % omega
        w[k, j] = 1.0
        w[j, k] = 1.0
    w[1, 0] = 1.0 + q
    w[0, 1] = 1.0 - q
    return MarkovCountingModel(omega=omega, rates=_rates(w), s_in=(2,), s_out=(2,))


def random_walk_p0(omega: int) -> NDArray[np.float64]:
    """P0 of the biased ring, ((sqrt(l) + sqrt(4+l))/2)^(2 omega) + ((sqrt(l) - sqrt(4+l))/2)^(2 omega)."""
    total = np.zeros(omega + 1)
    for m in range(omega + 1):
        term = comb(2 * omega, 2 * m, exact=True) * P.polymul(P.polypow([0.0, 1.0], m),
                                                              P.polypow([4.0, 1.0], omega - m))
        total[:term.size] += term
    return 2.0 * total / 4.0 ** omega


def random_walk_mst(omega: int, q: float, lam: ArrayLike, y: ArrayLike) -> NDArray[np.complex128]:
    """Closed form of M_st at the surface points [lam, y] of the biased ring."""
    lam = np.asarray(lam, dtype=complex)
    y = np.asarray(y, dtype=complex)
    p0 = random_walk_p0(omega)
    value = P.polyval(lam, p0)
    slope = P.polyval(lam, P.polyder(p0))
    rest = 2.0 - value
    d_ratio = (-slope * lam - rest) / lam ** 2
    d_square = -2.0 * rest * slope
    return q / omega ** 2 * (1.0 + 2.0 * q / y) * d_ratio - d_square / (2.0 * omega ** 2 * lam * y)


def random_walk_lambda_pm(omega: int, q: float) -> Tuple[float, float]:
    plus = 4.0 * q * q / ((omega + q * (omega + 1)) * (omega + q * (omega - 1)))
    minus = 4.0 * q * q / ((omega - q * (omega + 1)) * (omega - q * (omega - 1)))
    return plus, minus


def random_walk_c_polynomial(omega: int, q: float) -> NDArray[np.float64]:
    """Coefficients c_1..c_(omega-1) of sum_l c_l lambda^(l-1) for the biased ring."""
    if q == 0:
        return np.zeros(omega - 1)
    p0 = random_walk_p0(omega)
    dp0 = P.polyder(p0)
    total = np.zeros(omega)
    for root, factor, sign in zip(random_walk_lambda_pm(omega, q), (1.0 + 1.0 / q, 1.0 - 1.0 / q), (1.0, -1.0)):
        numerator = P.polysub(p0, [P.polyval(root, p0)])
        numerator = P.polyadd(numerator, factor * root * P.polysub(dp0, [P.polyval(root, dp0)]))
        quotient, _ = P.polydiv(numerator, [-root, 1.0])
        total[:quotient.size] += sign * quotient / 4.0
    return total[:omega - 1]


def random_model(
    omega: int,
    rng: np.random.Generator,
    s_in: Iterable[int] = (2,),
    s_out: Iterable[int] = (2,),
    low: float = 0.2,
    high: float = 2.0,
) -> MarkovCountingModel:
    """Complete graph with independent uniform rates."""
    w = rng.uniform(low, high, size=(omega, omega))
    np.fill_diagonal(w, 0.0)
    return MarkovCountingModel(omega=omega, rates=_rates(w), s_in=tuple(s_in), s_out=tuple(s_out))


def random_reversible_model(
    omega: int,
    rng: np.random.Generator,
    counted: Iterable[int] = (2,),
    low: float = 0.2,
    high: float = 2.0,
) -> MarkovCountingModel:
    """w_{k<-j} = pi_k s_kj with s symmetric: detailed balance with respect to pi."""
    pi = rng.uniform(low, high, size=omega)
    s = rng.uniform(low, high, size=(omega, omega))
    s = 0.5 * (s + s.T)
    w = pi[:, None] * s
    np.fill_diagonal(w, 0.0)
    states = tuple(counted)
    return MarkovCountingModel(omega=omega, rates=_rates(w), s_in=states, s_out=states)


def example(name: str, **params: float) -> MarkovCountingModel:
    """Model by its example name, as used by `ccount examples`."""
    if name == 'three-state':
        return three_state(params.get('p', 0.5), params.get('q', 0.25))
    if name == 'random-walk':
        return random_walk(int(params.get('omega', 4)), params.get('q', 0.3))
    raise ValueError(f"unknown example '{name}', expected one of {EXAMPLES}")
