"""Scalars, gamma-type products, densities and goodness-of-fit helpers.

Every kernel in the package is written against plain arithmetic operators so
that it runs unchanged over :class:`fractions.Fraction` (exact mode) or
``float`` (IEEE double).  The mode of a computation is decided by the type of
its parameters: rationals in, rationals out.
"""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterator, Sequence, Union

import numpy as np

Scalar = Union[Fraction, float]

# products longer than this are accumulated in log space in float mode
LOG_SPACE_THRESHOLD = 50


def to_scalar(value) -> Scalar:
    """Parse ``value`` into an exact rational or a float.

    Strings of the form ``"p/q"`` and integers give a :class:`Fraction`;
    decimal strings and floats give a ``float``.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("boolean is not a scalar")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        return value
    if isinstance(value, str):
        text = value.strip()
        if "/" in text:
            num, den = text.split("/", 1)
            return Fraction(int(num), int(den))
        if text.lstrip("+-").isdigit():
            return Fraction(int(text))
        return float(text)
    raise TypeError(f"cannot interpret {value!r} as a scalar")


def is_exact(*values) -> bool:
    return all(isinstance(v, (Fraction, int)) and not isinstance(v, bool) for v in values)


def unify(*values) -> tuple:
    """Coerce values to a common field: all Fractions if every value is
    rational, otherwise all floats."""
    if is_exact(*values):
        return tuple(Fraction(v) for v in values)
    return tuple(float(v) for v in values)


def format_scalar(x: Scalar) -> str:
    if isinstance(x, Fraction):
        return f"{x.numerator}/{x.denominator}"
    return repr(float(x))


def rising_product(x: Scalar, n: int) -> Scalar:
    """Return ``prod_{j=1}^{n-1} (j - x)``, i.e. Gamma(n-x)/Gamma(1-x).

    Exact for rational ``x``.  In float mode long products are accumulated
    as a signed sum of logarithms.
    """
    if n < 1:
        raise ValueError("rising_product needs n >= 1")
    if isinstance(x, (Fraction, int)) and not isinstance(x, bool):
        x = Fraction(x)
        out = Fraction(1)
        for j in range(1, n):
            out *= j - x
        return out
    x = float(x)
    if n - 1 <= LOG_SPACE_THRESHOLD:
        out = 1.0
        for j in range(1, n):
            out *= j - x
        return out
    sign = 1.0
    total = 0.0
    for j in range(1, n):
        f = j - x
        if f == 0.0:
            return 0.0
        if f < 0:
            sign = -sign
        total += math.log(abs(f))
    return sign * math.exp(total)


def log_rising_product(x: float, n: int) -> tuple[float, float]:
    """Sign and log-modulus of ``rising_product(x, n)`` in float arithmetic.
    The log-modulus is ``-inf`` when a factor vanishes."""
    sign = 1.0
    total = 0.0
    x = float(x)
    for j in range(1, n):
        f = j - x
        if f == 0.0:
            return 0.0, -math.inf
        if f < 0:
            sign = -sign
        total += math.log(abs(f))
    return sign, total


def log_gamma(x: float) -> float:
    if x <= 0:
        raise ValueError(f"log_gamma needs a positive argument, got {x}")
    return math.lgamma(x)


def log_beta(a: float, b: float) -> float:
    return log_gamma(a) + log_gamma(b) - log_gamma(a + b)


def beta_fn(a: float, b: float) -> float:
    return math.exp(log_beta(float(a), float(b)))


@dataclass(frozen=True)
class BetaParams:
    a: float
    b: float

    def __post_init__(self):
        if not self.a > 0:
            raise ValueError(f"beta parameter a must be > 0, got {self.a}")
        if not self.b >= 0:
            raise ValueError(f"beta parameter b must be >= 0, got {self.b}")

    @property
    def degenerate(self) -> bool:
        """b = 0 encodes the point mass at 1."""
        return self.b == 0

    def mean(self) -> float:
        return float(self.a) / float(self.a + self.b)

    def cdf(self, x):
        from scipy.special import betainc

        if self.degenerate:
            return np.where(np.asarray(x) >= 1.0, 1.0, 0.0)
        return betainc(float(self.a), float(self.b), np.clip(x, 0.0, 1.0))


@dataclass(frozen=True)
class DirichletParams:
    weights: tuple

    def __post_init__(self):
        object.__setattr__(self, "weights", tuple(self.weights))
        if len(self.weights) < 1:
            raise ValueError("Dirichlet needs at least one weight")
        if any(not w > 0 for w in self.weights):
            raise ValueError(f"Dirichlet weights must be > 0, got {self.weights}")

    def marginal(self, i: int) -> BetaParams:
        total = sum(float(w) for w in self.weights)
        a = float(self.weights[i])
        return BetaParams(a, total - a)


def beta_pdf(p: BetaParams, x: float) -> float:
    if p.degenerate:
        raise ValueError("beta(a, 0) is a point mass at 1 and has no density")
    if not 0.0 < x < 1.0:
        raise ValueError(f"beta density is evaluated on (0, 1), got {x}")
    a, b = float(p.a), float(p.b)
    return math.exp((a - 1) * math.log(x) + (b - 1) * math.log1p(-x) - log_beta(a, b))


def dirichlet_pdf(p: DirichletParams, x: Sequence[float]) -> float:
    """Density of the first m-1 coordinates; ``x`` may be given with m-1 or m
    entries (the last one is then checked to close the simplex)."""
    w = [float(v) for v in p.weights]
    m = len(w)
    x = [float(v) for v in x]
    if len(x) == m:
        if abs(sum(x) - 1.0) > 1e-12:
            raise ValueError("point is not on the simplex")
        x = x[:-1]
    if len(x) != m - 1:
        raise ValueError(f"expected {m - 1} free coordinates, got {len(x)}")
    last = 1.0 - sum(x)
    pts = x + [last]
    if any(not 0.0 < v < 1.0 for v in pts):
        raise ValueError("point is outside the open simplex")
    log_norm = sum(math.lgamma(a) for a in w) - math.lgamma(sum(w))
    return math.exp(sum((a - 1) * math.log(v) for a, v in zip(w, pts)) - log_norm)


# ---------------------------------------------------------------------------
# Kolmogorov-Smirnov


def kolmogorov_sf(lam: float, tol: float = 1e-12) -> float:
    """Survival function of the asymptotic Kolmogorov distribution."""
    if lam <= 0:
        return 1.0
    if lam < 1.0:
        # theta-function form converges fast for small lam
        total = 0.0
        j = 1
        while True:
            term = math.exp(-((2 * j - 1) ** 2) * math.pi ** 2 / (8 * lam * lam))
            total += term
            if term < tol:
                break
            j += 1
        return min(1.0, max(0.0, 1.0 - math.sqrt(2 * math.pi) / lam * total))
    total = 0.0
    j = 1
    while True:
        term = math.exp(-2 * j * j * lam * lam)
        total += term if j % 2 else -term
        if term < tol:
            break
        j += 1
    return min(1.0, max(0.0, 2.0 * total))


def ks_test(sample: Sequence[float], cdf: Callable) -> tuple[float, float]:
    """One-sample KS statistic sup|F_m - F| and its asymptotic p-value."""
    xs = np.sort(np.asarray(sample, dtype=float))
    m = len(xs)
    if m == 0:
        raise ValueError("ks_test needs a non-empty sample")
    f = np.asarray([cdf(v) for v in xs] if not _vectorised(cdf) else cdf(xs), dtype=float)
    i = np.arange(1, m + 1)
    d_plus = np.max(i / m - f)
    d_minus = np.max(f - (i - 1) / m)
    stat = float(max(d_plus, d_minus))
    return stat, kolmogorov_sf(math.sqrt(m) * stat)


def _vectorised(cdf) -> bool:
    try:
        out = cdf(np.array([0.25, 0.5]))
        return np.shape(out) == (2,)
    except Exception:
        return False


def ks_2samp(a: Sequence[float], b: Sequence[float]) -> tuple[float, float]:
    """Two-sample KS statistic and asymptotic p-value."""
    a = np.sort(np.asarray(a, dtype=float))
    b = np.sort(np.asarray(b, dtype=float))
    if len(a) == 0 or len(b) == 0:
        raise ValueError("ks_2samp needs non-empty samples")
    grid = np.concatenate([a, b])
    fa = np.searchsorted(a, grid, side="right") / len(a)
    fb = np.searchsorted(b, grid, side="right") / len(b)
    stat = float(np.max(np.abs(fa - fb)))
    en = math.sqrt(len(a) * len(b) / (len(a) + len(b)))
    return stat, kolmogorov_sf(en * stat)


# ---------------------------------------------------------------------------
# partitions and compositions


def integer_partitions(n: int, min_parts: int = 1) -> Iterator[tuple]:
    """Integer partitions of ``n`` as decreasing tuples (largest first order
    of generation), keeping those with at least ``min_parts`` parts."""

    def gen(remaining, largest):
        if remaining == 0:
            yield ()
            return
        for first in range(min(remaining, largest), 0, -1):
            for rest in gen(remaining - first, first):
                yield (first,) + rest

    for part in gen(n, n):
        if len(part) >= min_parts:
            yield part


def compositions(n: int) -> Iterator[tuple]:
    if n == 0:
        yield ()
        return
    for first in range(1, n + 1):
        for rest in compositions(n - first):
            yield (first,) + rest


def multiplicity_factor(parts: Sequence[int]) -> int:
    """prod_r m_r! where m_r counts the parts equal to r."""
    out = 1
    for count in Counter(parts).values():
        out *= math.factorial(count)
    return out


def multinomial(parts: Sequence[int]) -> int:
    out = math.factorial(sum(parts))
    for p in parts:
        out //= math.factorial(p)
    return out


def set_partition_count(parts: Sequence[int]) -> int:
    """Number of set partitions of [n] whose block sizes are ``parts``."""
    return multinomial(parts) // multiplicity_factor(parts)
