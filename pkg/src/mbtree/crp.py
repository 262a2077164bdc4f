"""Chinese restaurant processes, stick breaking and stable laws."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .laws import DecrementMatrix
from .streams import RngStream


def _check_crp(alpha: float, theta: float) -> None:
    if alpha < 0:
        m = -theta / alpha
        if abs(m - round(m)) > 1e-12 or m < 1:
            raise ValueError("for alpha < 0, theta must be -m*alpha with m a positive integer")
    elif not (alpha <= 1 and theta > -alpha):
        raise ValueError(f"need 0 <= alpha <= 1 and theta > -alpha, got ({alpha}, {theta})")


@dataclass(frozen=True)
class CrpState:
    alpha: float
    theta: float
    sizes: tuple = (1,)

    def __post_init__(self):
        _check_crp(self.alpha, self.theta)
        if any(s < 1 for s in self.sizes):
            raise ValueError("table sizes must be positive")

    @property
    def n(self) -> int:
        return sum(self.sizes)

    def seat_weights(self) -> list:
        """Weights of the occupied tables in order, then of a new table."""
        return [s - self.alpha for s in self.sizes] + [self.theta + len(self.sizes) * self.alpha]


def crp_step(s: CrpState, rng: RngStream) -> CrpState:
    j = rng.choice(s.seat_weights())
    sizes = list(s.sizes)
    if j == len(sizes):
        sizes.append(1)
    else:
        sizes[j] += 1
    return CrpState(s.alpha, s.theta, tuple(sizes))


@dataclass(frozen=True)
class OrderedCrpState:
    """Table sizes listed left to right."""

    alpha: float
    theta: float
    sizes: tuple = (1,)

    def __post_init__(self):
        if not (0 < self.alpha < 1 and self.theta >= 0):
            raise ValueError(f"ordered CRP needs 0 < alpha < 1 and theta >= 0, got ({self.alpha}, {self.theta})")

    @property
    def n(self) -> int:
        return sum(self.sizes)


def ordered_crp_step(s: OrderedCrpState, rng: RngStream) -> OrderedCrpState:
    """Seat one customer; a new table goes to the far right with weight theta
    or into one of the k slots (left end, then the k-1 gaps) with weight
    alpha each."""
    k = len(s.sizes)
    j = rng.choice([x - s.alpha for x in s.sizes] + [s.theta + k * s.alpha])
    sizes = list(s.sizes)
    if j < k:
        sizes[j] += 1
        return OrderedCrpState(s.alpha, s.theta, tuple(sizes))
    slot = rng.choice([s.alpha] * k + [s.theta])
    sizes.insert(slot, 1)
    return OrderedCrpState(s.alpha, s.theta, tuple(sizes))


def regenerative_composition(dec: DecrementMatrix, n: int, rng: RngStream) -> tuple:
    parts = []
    while n > 0:
        m = rng.choice([float(x) for x in dec.row(n)]) + 1
        parts.append(m)
        n -= m
    return tuple(parts)


def gem_sticks(alpha: float, theta: float, k: int, rng: RngStream) -> np.ndarray:
    """First k GEM(alpha, theta) frequencies: W_i ~ beta(1-alpha, theta+i*alpha),
    P_i = W_i prod_{j<i} (1-W_j)."""
    if not (0 <= alpha < 1 and all(theta + i * alpha > 0 for i in range(1, k + 1))):
        raise ValueError("need 0 <= alpha < 1 and theta + i*alpha > 0")
    g = rng.generator
    w = np.array([g.beta(1 - alpha, theta + i * alpha) for i in range(1, k + 1)])
    rest = np.concatenate(([1.0], np.cumprod(1 - w)[:-1]))
    return w * rest


# ---------------------------------------------------------------------------
# stable and Mittag-Leffler laws


def _check_index(index: float) -> None:
    if not 0 < index < 1:
        raise ValueError(f"stable index must lie in (0,1), got {index}")


def stable_samples(index: float, size: int, generator: np.random.Generator) -> np.ndarray:
    """One-sided stable variables with E exp(-l S) = exp(-l**index), by
    Kanter's representation S = (A(U)/E)^((1-a)/a) with
    A(u) = (sin(a pi u)/sin(pi u))^(1/(1-a)) sin((1-a) pi u)/sin(a pi u)."""
    _check_index(index)
    a = index
    u = generator.random(size)
    u = np.where(u == 0.0, np.nextafter(0.0, 1.0), u)
    e = generator.standard_exponential(size)
    pu = np.pi * u
    big_a = (np.sin(a * pu) / np.sin(pu)) ** (1 / (1 - a)) * np.sin((1 - a) * pu) / np.sin(a * pu)
    return (big_a / e) ** ((1 - a) / a)


def stable_sample(index: float, rng: RngStream) -> float:
    return float(stable_samples(index, 1, rng.generator)[0])


def mittag_leffler_samples(index: float, size: int, generator: np.random.Generator) -> np.ndarray:
    return stable_samples(index, size, generator) ** (-index)


def mittag_leffler_sample(index: float, rng: RngStream) -> float:
    return float(mittag_leffler_samples(index, 1, rng.generator)[0])


def mittag_leffler_moment(index: float, p: float) -> float:
    _check_index(index)
    if p <= -1:
        raise ValueError("Mittag-Leffler moments need p > -1")
    return math.exp(math.lgamma(p + 1) - math.lgamma(p * index + 1))


def crp_limit_moment(alpha: float, theta: float, p: float) -> float:
    """E[S^p] for S = lim K_n / n^alpha in the (alpha, theta) restaurant.

    S has density Gamma(theta+1)/Gamma(theta/alpha+1) s^(theta/alpha) g(s)
    with g the Mittag-Leffler density, so the moment identity
    int s^q g(s) ds = Gamma(q+1)/Gamma(q alpha+1) gives
    E[S^p] = Gamma(theta+1) Gamma(theta/alpha+p+1)
             / (Gamma(theta/alpha+1) Gamma(theta+p alpha+1)).
    In particular E[S] = Gamma(theta+1) / (alpha Gamma(theta+alpha)),
    which is sqrt(pi) at alpha = theta = 1/2."""
    _check_index(alpha)
    r = theta / alpha
    return math.exp(
        math.lgamma(theta + 1) + math.lgamma(r + p + 1) - math.lgamma(r + 1) - math.lgamma(theta + p * alpha + 1)
    )


def crp_mean_tables(alpha: float, theta: float, n: int) -> float:
    """Exact E[K_n] = (theta/alpha) [(theta+alpha)_n / (theta)_n - 1] for theta > 0."""
    if theta <= 0:
        raise ValueError("closed form needs theta > 0")
    log_ratio = (
        math.lgamma(theta + alpha + n) - math.lgamma(theta + alpha) - math.lgamma(theta + n) + math.lgamma(theta)
    )
    return theta / alpha * (math.exp(log_ratio) - 1)


def simulate_table_counts(alpha: float, theta: float, n: int, replicates: int, generator: np.random.Generator) -> np.ndarray:
    """K_n for independent restaurants, all advanced together.  Only the
    count matters for K_n: customer m+1 opens a table with probability
    (theta + K alpha)/(m + theta)."""
    _check_crp(alpha, theta)
    k = np.ones(replicates)
    for m in range(1, n):
        u = generator.random(replicates)
        k += u * (m + theta) < theta + k * alpha
    return k.astype(np.int64)
