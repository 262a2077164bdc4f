"""Exact probability kernels for partitions, splits and compositions.

Kernels accept rational (``Fraction``) or float parameters.  Rational inputs
give exact rational outputs; float inputs are evaluated in log space where
products get long.
"""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Optional, Sequence

from .numerics import (
    Scalar,
    integer_partitions,
    is_exact,
    log_rising_product,
    multiplicity_factor,
    rising_product,
    set_partition_count,
    to_scalar,
    unify,
)


def _parts(parts: Sequence[int], min_parts: int = 1) -> tuple:
    parts = tuple(int(x) for x in parts)
    if len(parts) < min_parts or any(x < 1 for x in parts):
        raise ValueError(f"invalid partition {parts}")
    return tuple(sorted(parts, reverse=True))


def _linear_product(a: Scalar, b: Scalar, lo: int, hi: int) -> Scalar:
    """prod_{j=lo}^{hi} (j*a + b); empty products are 1."""
    out = Fraction(1) if is_exact(a, b) else 1.0
    for j in range(lo, hi + 1):
        out *= j * a + b
    return out


def _log_linear_product(a: float, b: float, lo: int, hi: int) -> tuple[float, float]:
    sign, total = 1.0, 0.0
    for j in range(lo, hi + 1):
        f = j * a + b
        if f == 0:
            return 0.0, -math.inf
        if f < 0:
            sign = -sign
        total += math.log(abs(f))
    return sign, total


def _log_binom(n: int, m: int) -> float:
    return math.lgamma(n + 1) - math.lgamma(m + 1) - math.lgamma(n - m + 1)


# ---------------------------------------------------------------------------
# exchangeable partition probability functions


def eppf_pd(alpha, theta, parts: Sequence[int]) -> Scalar:
    """Two-parameter Ewens-Pitman EPPF of one set partition with block sizes
    ``parts``."""
    alpha, theta = unify(to_scalar(alpha), to_scalar(theta))
    parts = _parts(parts)
    if alpha < 0:
        m = -theta / alpha
        if m != int(m) or m < 1:
            raise ValueError("for alpha < 0, theta must be -m*alpha with m a positive integer")
    elif not (alpha <= 1 and theta > -alpha):
        raise ValueError(f"need 0 <= alpha <= 1 and theta > -alpha, got ({alpha}, {theta})")
    n, k = sum(parts), len(parts)
    if is_exact(alpha, theta):
        out = _linear_product(alpha, theta, 1, k - 1) / _linear_product(Fraction(1), theta, 1, n - 1)
        for x in parts:
            out *= rising_product(alpha, x)
        return out
    sign, num = _log_linear_product(alpha, theta, 1, k - 1)
    _, den = _log_linear_product(1.0, theta, 1, n - 1)
    total = num - den
    for x in parts:
        s, lg = log_rising_product(alpha, x)
        sign *= s
        total += lg
    return 0.0 if sign == 0 else sign * math.exp(total)


def pdstar_weight(alpha, gamma, k: int) -> Scalar:
    """a_k for theta = -alpha - gamma, i.e. prod_{j=1}^{k-2} (j*alpha - gamma).

    This polynomial form agrees with the gamma-ratio definition and takes
    the continuity values a_2 = 1 and a_k = 0 (k >= 3) at gamma = alpha."""
    alpha, gamma = unify(alpha, gamma)
    return _linear_product(alpha, -gamma, 1, k - 2)


def _check_pdstar(alpha, gamma):
    alpha, gamma = unify(to_scalar(alpha), to_scalar(gamma))
    if not (0 <= gamma <= alpha < 1):
        raise ValueError(f"need 0 <= gamma <= alpha < 1, got ({alpha}, {gamma})")
    return alpha, gamma


class NormConstants:
    """Memoised normalisers Z_n of the PD* EPPF with theta = -alpha-gamma.

    Z_n = sum_k a_k B_{n,k}(w_1, w_2, ...) with w_j = Gamma_alpha(j), where the
    partial Bell polynomials come from the recurrence
    B_{n,k} = sum_i C(n-1, i-1) w_i B_{n-i,k-1}.
    """

    def __init__(self, alpha, gamma):
        self.alpha, self.gamma = _check_pdstar(alpha, gamma)
        self.exact = is_exact(self.alpha, self.gamma)
        one = Fraction(1) if self.exact else 1.0
        self._zero = 0 * one
        self._bell = [[one]]  # _bell[n][k]
        self._w = [None]
        self._a = [one, one, one]

    def _extend(self, n: int) -> None:
        zero = self._zero
        while len(self._bell) <= n:
            m = len(self._bell)
            self._w.append(rising_product(self.alpha, m))
            row = [zero] * (m + 1)
            for k in range(1, m + 1):
                acc = zero
                for i in range(1, m - k + 2):
                    prev = self._bell[m - i]
                    if k - 1 < len(prev) and prev[k - 1]:
                        acc += math.comb(m - 1, i - 1) * self._w[i] * prev[k - 1]
                row[k] = acc
            self._bell.append(row)
        while len(self._a) <= n:
            k = len(self._a)
            self._a.append(self._a[-1] * ((k - 2) * self.alpha - self.gamma))

    def a(self, k: int) -> Scalar:
        self._extend(k)
        return self._a[k]

    def z(self, n: int) -> Scalar:
        if n < 2:
            raise ValueError("Z_n is defined for n >= 2")
        self._extend(n)
        return sum((self._a[k] * self._bell[n][k] for k in range(2, n + 1)), self._zero)

    def z_tilde(self, n: int) -> float:
        """Normaliser for the integral representation, via
        Z~_n = Z_n alpha Gamma(1-gamma/alpha) / Gamma(n-alpha-gamma)."""
        a, g = float(self.alpha), float(self.gamma)
        if g >= a:
            raise ValueError("Z~_n needs gamma < alpha")
        return math.exp(
            math.log(float(self.z(n))) + math.log(a) + math.lgamma(1 - g / a) - math.lgamma(n - a - g)
        )

    def z_tilde_direct(self, n: int) -> float:
        """Z~_n = int (1 - sum_i s_i^n) PD*(ds) evaluated through the size-biased
        first-part intensity C x^{-alpha} (1-x)^{-1-gamma}:
        the integral reduces to C sum_{j=0}^{n-2} B(j+1-alpha, 1-gamma)."""
        a, g = float(self.alpha), float(self.gamma)
        if g >= a:
            raise ValueError("Z~_n needs gamma < alpha")
        log_c = math.log(a) + math.lgamma(1 - g / a) - math.lgamma(1 - a) - math.lgamma(1 - g)
        total = sum(
            math.exp(math.lgamma(j + 1 - a) + math.lgamma(1 - g) - math.lgamma(j + 2 - a - g))
            for j in range(n - 1)
        )
        return math.exp(log_c) * total


@lru_cache(maxsize=64)
def norm_constants(alpha, gamma) -> NormConstants:
    return NormConstants(alpha, gamma)


def norm_const(alpha, gamma, n: int) -> Scalar:
    alpha, gamma = _check_pdstar(alpha, gamma)
    return norm_constants(alpha, gamma).z(n)


def eppf_pdstar(alpha, gamma, parts: Sequence[int]) -> Scalar:
    """PD* EPPF with theta = -alpha-gamma; needs at least two blocks."""
    alpha, gamma = _check_pdstar(alpha, gamma)
    parts = _parts(parts, 2)
    nc = norm_constants(alpha, gamma)
    out = nc.a(len(parts)) / nc.z(sum(parts))
    for x in parts:
        out *= rising_product(alpha, x)
    return out


def split_from_eppf(value: Scalar, parts: Sequence[int]) -> Scalar:
    """Probability of the block-size multiset from the EPPF of one set
    partition with those sizes."""
    return value * set_partition_count(parts)


def eppf_from_split(value: Scalar, parts: Sequence[int]) -> Scalar:
    count = set_partition_count(parts)
    if isinstance(value, Fraction):
        return value / count
    return value / count


# ---------------------------------------------------------------------------
# first-split laws


def _pair_term(parts: Sequence[int]) -> int:
    """sum_{i != j} n_i n_j."""
    n = sum(parts)
    return n * n - sum(x * x for x in parts)


def split_prob_seq(alpha, gamma, parts: Sequence[int]) -> Scalar:
    """Law of the first split of the alpha-gamma tree on n leaves.

    Equal to [Z_n Gamma(1-alpha)/Gamma(n-alpha)] (gamma + (1-alpha-gamma)
    sum_{i!=j} n_i n_j / (n(n-1))) times the PD* split probability; Z_n
    cancels, leaving a_k prod Gamma_alpha(n_j) / Gamma_alpha(n) times the
    number of set partitions with these block sizes."""
    alpha, gamma = unify(to_scalar(alpha), to_scalar(gamma))
    parts = _parts(parts, 2)
    if alpha == 1:
        return split_prob_alpha1(gamma, parts)
    alpha, gamma = _check_pdstar(alpha, gamma)
    n, k = sum(parts), len(parts)
    if is_exact(alpha, gamma):
        bracket = gamma + (1 - alpha - gamma) * Fraction(_pair_term(parts), n * (n - 1))
        out = bracket * set_partition_count(parts) * pdstar_weight(alpha, gamma, k)
        for x in parts:
            out *= rising_product(alpha, x)
        return out / rising_product(alpha, n)
    bracket = gamma + (1 - alpha - gamma) * _pair_term(parts) / (n * (n - 1))
    sign, log_a = _log_linear_product(alpha, -gamma, 1, k - 2)
    if sign == 0 or bracket == 0:
        return 0.0
    total = log_a + math.log(bracket)
    total += math.lgamma(n + 1) - sum(math.lgamma(x + 1) for x in parts)
    total -= math.log(multiplicity_factor(parts))
    for x in parts:
        total += log_rising_product(alpha, x)[1]
    total -= log_rising_product(alpha, n)[1]
    return sign * math.exp(total)


def eppf_seq(alpha, gamma, parts: Sequence[int]) -> Scalar:
    parts = _parts(parts, 2)
    return eppf_from_split(split_prob_seq(alpha, gamma, parts), parts)


def split_prob_alpha1(gamma, parts: Sequence[int]) -> Scalar:
    """First-split law in the alpha = 1 regime: one big block plus
    singletons, or all singletons."""
    gamma = to_scalar(gamma)
    if not 0 < gamma < 1:
        raise ValueError(f"alpha = 1 kernel needs 0 < gamma < 1, got {gamma}")
    parts = _parts(parts, 2)
    n, k = sum(parts), len(parts)
    if k == n:
        return rising_product(gamma, n - 1) / math.factorial(n - 2)
    if parts[1] != 1:
        return 0 * gamma
    return gamma * rising_product(gamma, k - 1) / math.factorial(k - 1)


@dataclass
class SplitDistribution:
    n: int
    entries: dict = field(default_factory=dict)

    @property
    def total(self) -> Scalar:
        return sum(self.entries.values())

    def __getitem__(self, parts) -> Scalar:
        return self.entries.get(_parts(parts), 0)


def split_distribution(alpha, gamma, n: int, kernel: Optional[Callable] = None) -> SplitDistribution:
    if n < 2:
        raise ValueError("split distributions need n >= 2")
    if kernel is None:
        def kernel(parts):
            return split_prob_seq(alpha, gamma, parts)
    return SplitDistribution(n, {p: kernel(p) for p in integer_partitions(n, 2)})


# ---------------------------------------------------------------------------
# ordered CRP decrements and beta splitting


def decrement(alpha, theta, n: int, m: int) -> Scalar:
    """Decrement matrix of the ordered (alpha, theta) Chinese restaurant:
    C(n,m) ((n-m)alpha + m theta)/n Gamma_alpha(m) / prod_{j=n-m}^{n-1} (j+theta).
    """
    alpha, theta = unify(to_scalar(alpha), to_scalar(theta))
    if not (0 < alpha < 1 and theta >= 0):
        raise ValueError(f"need 0 < alpha < 1 and theta >= 0, got ({alpha}, {theta})")
    if not 1 <= m <= n:
        raise ValueError(f"need 1 <= m <= n, got m={m}, n={n}")
    exact = is_exact(alpha, theta)
    if m == n:
        # ((n-m)alpha + m theta)/n = theta cancels the j = 0 factor of the denominator
        if exact:
            return rising_product(alpha, n) / _linear_product(Fraction(1), theta, 1, n - 1)
        return math.exp(log_rising_product(alpha, n)[1] - _log_linear_product(1.0, theta, 1, n - 1)[1])
    if exact:
        num = math.comb(n, m) * ((n - m) * alpha + m * theta) / n * rising_product(alpha, m)
        return num / _linear_product(Fraction(1), theta, n - m, n - 1)
    total = _log_binom(n, m) + math.log(((n - m) * alpha + m * theta) / n)
    total += log_rising_product(alpha, m)[1]
    total -= _log_linear_product(1.0, theta, n - m, n - 1)[1]
    return math.exp(total)


class DecrementMatrix:
    def __init__(self, alpha, theta):
        self.alpha, self.theta = unify(to_scalar(alpha), to_scalar(theta))
        decrement(self.alpha, self.theta, 1, 1)

    def __call__(self, n: int, m: int) -> Scalar:
        return decrement(self.alpha, self.theta, n, m)

    def row(self, n: int) -> list:
        return [self(n, m) for m in range(1, n + 1)]

    def composition_prob(self, parts: Sequence[int]) -> Scalar:
        """Probability of a composition under the regenerative law."""
        remaining = sum(parts)
        out = Fraction(1) if is_exact(self.alpha, self.theta) else 1.0
        for x in parts:
            out *= self(remaining, x)
            remaining -= x
        return out


def aldous_split(beta, n: int, m: int) -> Scalar:
    """Beta-splitting law of the unordered split {n-m, m}, 1 <= m <= n/2.

    Unnormalised weights C(n,m) Gamma_{-1-beta}(m) Gamma_{-1-beta}(n-m) are
    summed over both orders; beta = -2 puts all mass on m = 1."""
    beta = to_scalar(beta)
    if beta < -2:
        raise ValueError(f"beta-splitting needs beta >= -2, got {beta}")
    if n < 2 or not 1 <= m <= n // 2:
        raise ValueError(f"need n >= 2 and 1 <= m <= n/2, got n={n}, m={m}")
    if beta == -2:
        # every weight vanishes here; the limit beta -> -2 is a point mass
        return Fraction(int(m == 1)) if isinstance(beta, Fraction) else float(m == 1)
    x = -1 - beta

    def weight(i):
        w = math.comb(n, i) * rising_product(x, i) * rising_product(x, n - i)
        return w if 2 * i == n else 2 * w

    total = sum(weight(i) for i in range(1, n // 2 + 1))
    return weight(m) / total


# ---------------------------------------------------------------------------
# consistency checks


def default_eppf(alpha, gamma) -> Callable:
    alpha, gamma = unify(to_scalar(alpha), to_scalar(gamma))
    if alpha == 1:
        def p(parts):
            parts = _parts(parts, 2)
            return eppf_from_split(split_prob_alpha1(gamma, parts), parts)
        return p

    def p(parts):
        return eppf_seq(alpha, gamma, parts)

    return p


def sampling_consistency_residuals(eppf: Callable, n: int) -> dict:
    """For each partition of n-1 with at least two blocks, the difference

        (1 - p(n-1, 1)) p(parts) - [sum_i p(.., n_i + 1, ..) + p(parts, 1)]

    which vanishes for a sampling-consistent family of EPPFs."""
    if n < 3:
        raise ValueError("sampling consistency needs n >= 3")
    stay = 1 - eppf((n - 1, 1))
    out = {}
    for parts in integer_partitions(n - 1, 2):
        rhs = eppf(parts + (1,))
        for i in range(len(parts)):
            bumped = list(parts)
            bumped[i] += 1
            rhs += eppf(tuple(bumped))
        out[parts] = stay * eppf(parts) - rhs
    return out


def check_sampling_consistency(alpha, gamma, n: int, eppf: Optional[Callable] = None) -> Scalar:
    """Largest absolute residual of the sampling-consistency identity over
    partitions of n-1 (exactly 0 in rational mode for the alpha-gamma rule)."""
    if eppf is None:
        eppf = default_eppf(alpha, gamma)
    return max(abs(r) for r in sampling_consistency_residuals(eppf, n).values())


def _code_children(code: str) -> list:
    if code == "o":
        return []
    inner = code[1:-1]
    out, depth, start = [], 0, 0
    for i, ch in enumerate(inner):
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        if depth == 0:
            out.append(inner[start : i + 1])
            start = i + 1
    return out


def shape_probability(kernel: Callable, code: str) -> Scalar:
    """Probability of an unlabelled shape under the Markov branching law
    with first-split kernel ``kernel(parts)``."""
    kids = _code_children(code)
    if not kids:
        return 1
    sizes = [c.count("o") for c in kids]
    out = kernel(tuple(sorted(sizes, reverse=True)))
    # blocks of equal size are exchangeable: count distinct shape assignments
    for size, count in Counter(sizes).items():
        shapes = Counter(c for c in kids if c.count("o") == size)
        ways = math.factorial(count)
        for r in shapes.values():
            ways //= math.factorial(r)
        out *= ways
    for c in kids:
        out *= shape_probability(kernel, c)
    return out


STRONG_PAIR = ("((oo)o)", "((oo)oo)")


def check_strong_consistency_pair(alpha, gamma) -> tuple:
    """Joint probabilities of the 3-leaf binary shape and the 4-leaf shape
    (cherry + two leaves at the top): once for (T_{4,-1}, T_4) with a
    uniform leaf deleted, once for (T_3, T_4) along the growth process."""
    from .growth import ModelParams, step_options
    from .trees import canonical_code, remove_leaf, shape_from_code

    alpha, gamma = unify(to_scalar(alpha), to_scalar(gamma))
    params = ModelParams(alpha, gamma)
    t3, t4 = STRONG_PAIR

    def kernel(parts):
        return split_prob_seq(alpha, gamma, parts)

    rep4 = shape_from_code(t4)
    delete = Fraction(sum(1 for i in range(1, 5) if canonical_code(remove_leaf(rep4, i)) == t3), 4)
    grow = sum(
        (w for w, s in step_options(shape_from_code(t3), params) if canonical_code(s) == t4),
        0 * alpha,
    )
    if not is_exact(alpha, gamma):
        delete = float(delete)
    lhs = shape_probability(kernel, t4) * delete
    rhs = shape_probability(kernel, t3) * grow
    return lhs, rhs
