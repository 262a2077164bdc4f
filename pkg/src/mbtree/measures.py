"""Densities of the dislocation measures and related Levy measures.

Size-biased points ``x`` are arrays whose last axis holds ``x_1..x_k``;
all evaluators broadcast over leading axes.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import integrate, special

from .laws import _parts
from .numerics import rising_product


def _as_points(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        x = x[None]
    return x


def _check_points(x: np.ndarray) -> None:
    if np.any(x <= 0) or np.any(x >= 1) or np.any(x.sum(axis=-1) >= 1):
        raise ValueError("size-biased points need coordinates in (0,1) with sum < 1")


def gem_star_log_const(alpha: float, theta: float, k: int) -> float:
    """log of alpha Gamma(2+theta/alpha) / (Gamma(1-alpha) Gamma(theta+alpha+1)
    prod_{j=2}^k B(1-alpha, theta+j alpha))."""
    out = math.log(alpha) + math.lgamma(2 + theta / alpha) - math.lgamma(1 - alpha) - math.lgamma(theta + alpha + 1)
    for j in range(2, k + 1):
        out -= special.betaln(1 - alpha, theta + j * alpha)
    return out


def gem_star_density(alpha: float, theta: float, x) -> np.ndarray:
    """Joint density of the first k size-biased parts under GEM*(alpha, theta)."""
    if not (0 < alpha < 1 and theta > -2 * alpha):
        raise ValueError(f"need 0 < alpha < 1 and theta > -2 alpha, got ({alpha}, {theta})")
    x = _as_points(x)
    _check_points(x)
    k = x.shape[-1]
    partial = 1 - np.cumsum(x, axis=-1)
    log_d = (
        gem_star_log_const(alpha, theta, k)
        + (theta + k * alpha) * np.log(partial[..., -1])
        - alpha * np.log(x).sum(axis=-1)
        - np.log(partial).sum(axis=-1)
    )
    return np.exp(log_d)


def nu_sb_bracket(alpha: float, gamma: float, x) -> np.ndarray:
    """gamma + (1-alpha-gamma) (1 - sum x^2 - (1-alpha)/(1+(k-1)alpha-gamma) (1-sum x)^2)."""
    x = _as_points(x)
    k = x.shape[-1]
    rest = 1 - x.sum(axis=-1)
    inner = 1 - (x * x).sum(axis=-1) - (1 - alpha) / (1 + (k - 1) * alpha - gamma) * rest**2
    return gamma + (1 - alpha - gamma) * inner


def first_marginal_bracket(alpha: float, gamma: float, x) -> np.ndarray:
    """The k = 1 bracket written as gamma + (1-alpha-gamma)(2x(1-x) +
    (alpha-gamma)/(1-gamma) (1-x)^2)."""
    x = np.asarray(x, dtype=float)
    return gamma + (1 - alpha - gamma) * (2 * x * (1 - x) + (alpha - gamma) / (1 - gamma) * (1 - x) ** 2)


def _check_nu(alpha: float, gamma: float) -> None:
    if gamma == alpha:
        raise ValueError("gamma = alpha gives a binary measure; use binary_density")
    if not (0 < alpha < 1 and 0 <= gamma < alpha):
        raise ValueError(f"need 0 < alpha < 1 and 0 <= gamma < alpha, got ({alpha}, {gamma})")


def nu_sb_density(alpha: float, gamma: float, x) -> np.ndarray:
    """First-k marginal density of the size-biased alpha-gamma dislocation measure."""
    _check_nu(alpha, gamma)
    return nu_sb_bracket(alpha, gamma, x) * gem_star_density(alpha, -alpha - gamma, x)


def binary_density(alpha: float, gamma: float, x) -> np.ndarray:
    """Ranked density of the larger fragment when gamma = alpha:
    (gamma + (1-alpha-gamma) 2x(1-x)) x^(-alpha-1) (1-x)^(-alpha-1) on (1/2, 1)."""
    if gamma != alpha:
        raise ValueError("binary_density needs gamma = alpha")
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0.5) or np.any(x >= 1):
        raise ValueError("binary_density is defined on (1/2, 1)")
    return (gamma + (1 - alpha - gamma) * 2 * x * (1 - x)) * (x * (1 - x)) ** (-alpha - 1)


@dataclass(frozen=True)
class Atom:
    location: float
    mass: float


ALPHA1_ATOMS = (Atom(0.0, 1.0),)


def alpha1_density(gamma: float, s1) -> np.ndarray:
    """Continuous part gamma (1-s1)^(-1-gamma) of the alpha = 1 dislocation
    measure in its first coordinate; the measure also has the atoms in
    ``ALPHA1_ATOMS``."""
    if not 0 < gamma < 1:
        raise ValueError(f"need 0 < gamma < 1, got {gamma}")
    s1 = np.asarray(s1, dtype=float)
    if np.any(s1 < 0) or np.any(s1 >= 1):
        raise ValueError("s1 must lie in [0, 1)")
    return gamma * (1 - s1) ** (-1 - gamma)


def levy_density(alpha: float, gamma: float, x) -> np.ndarray:
    """Levy density of the tagged-fragment subordinator -log|block|."""
    _check_nu(alpha, gamma)
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise ValueError("Levy density is defined for x > 0")
    u = np.exp(-x)
    v = -np.expm1(-x)
    c = math.exp(math.log(alpha) + math.lgamma(1 - gamma / alpha) - math.lgamma(1 - alpha) - math.lgamma(1 - gamma))
    return c * v ** (-1 - gamma) * u ** (1 - alpha) * first_marginal_bracket(alpha, gamma, u)


def levy_tail(alpha: float, gamma: float, x: float) -> float:
    """Lambda([x, inf)) = int_0^{e^-x} g(u) du with g the first size-biased
    marginal.  Near u = 0 the substitution s = u^(1-alpha) removes the
    u^-alpha singularity; near u = 1 the integral runs in log(1-u)."""
    _check_nu(alpha, gamma)
    top = math.exp(-x)
    mid = min(top, 0.5)
    power = 1 / (1 - alpha)

    def near_zero(s):
        return float(nu_sb_density(alpha, gamma, [s**power])) * power * s ** (alpha * power) if s > 0 else 0.0

    def near_one(t):
        v = math.exp(t)
        return v * float(nu_sb_density(alpha, gamma, [1 - v]))

    value, _ = integrate.quad(near_zero, 0.0, mid ** (1 - alpha), epsabs=0, epsrel=1e-12, limit=200)
    if top > mid:
        tail, _ = integrate.quad(near_one, math.log(-math.expm1(-x)), math.log(1 - mid), epsabs=0, epsrel=1e-12, limit=200)
        value += tail
    return value


def tail_exponent(alpha: float, gamma: float, lo: float = 1e-6, hi: float = 1e-3, points: int = 25) -> float:
    """Least-squares slope of -log Lambda([x, inf)) against log x."""
    xs = np.geomspace(lo, hi, points)
    ys = np.array([levy_tail(alpha, gamma, x) for x in xs])
    slope = np.polyfit(np.log(xs), np.log(ys), 1)[0]
    return -slope


# ---------------------------------------------------------------------------
# EPPF reconstruction from the size-biased measure


def stick_to_points(w: np.ndarray) -> np.ndarray:
    """x_i = w_i prod_{j<i} (1 - w_j) along the last axis."""
    rest = np.cumprod(1 - w, axis=-1)
    shifted = np.concatenate([np.ones(w.shape[:-1] + (1,)), rest[..., :-1]], axis=-1)
    return w * shifted


def size_biased_integral(alpha: float, gamma: float, parts: Sequence[int], order: int = 40) -> float:
    """int prod x_i^(n_i-1) prod_{j<k} (1 - x_1 - ... - x_j) nu_k^sb(dx),
    by tensor Gauss-Jacobi quadrature in stick-breaking coordinates.

    In coordinate w_i the integrand behaves like w_i^(n_i-1-alpha) at 0 and
    (1-w_i)^(theta+i alpha-1+n_{i+1}+...+n_k) at 1 with theta = -alpha-gamma;
    those factors are absorbed in the Jacobi weights."""
    _check_nu(alpha, gamma)
    parts = tuple(int(p) for p in parts)
    k = len(parts)
    theta = -alpha - gamma
    nodes, weights, lo_exp, hi_exp = [], [], [], []
    for i, ni in enumerate(parts, start=1):
        p = ni - 1 - alpha
        q = theta + i * alpha - 1 + sum(parts[i:])
        with np.errstate(invalid="ignore"):  # scipy divides 0/0 in a discarded branch when p + q = -1
            t, wt = special.roots_jacobi(order, q, p)
        nodes.append((1 + t) / 2)
        weights.append(wt / 2 ** (p + q + 1))
        lo_exp.append(p)
        hi_exp.append(q)
    grids = np.meshgrid(*nodes, indexing="ij")
    w = np.stack(grids, axis=-1)
    x = stick_to_points(w)
    partial = 1 - np.cumsum(x, axis=-1)
    integrand = np.prod(x ** (np.array(parts) - 1), axis=-1)
    integrand = integrand * np.prod(partial[..., : k - 1], axis=-1)
    integrand = integrand * nu_sb_density(alpha, gamma, x)
    jac = np.prod(np.concatenate([np.ones(w.shape[:-1] + (1,)), np.cumprod(1 - w, axis=-1)[..., :-1]], axis=-1), axis=-1)
    integrand = integrand * jac
    weight_fn = np.prod(w ** np.array(lo_exp) * (1 - w) ** np.array(hi_exp), axis=-1)
    smooth = integrand / weight_fn
    tensor = weights[0]
    for wt in weights[1:]:
        tensor = np.multiply.outer(tensor, wt)
    return float(np.sum(tensor * smooth))


def size_biased_normaliser(alpha: float, gamma: float, n: int) -> float:
    """Y_n = n(n-1) Gamma_alpha(n) alpha Gamma(1-gamma/alpha) / Gamma(n+2-alpha-gamma):
    the sum of size_biased_integral over all set partitions of [n] with at
    least two blocks."""
    _check_nu(alpha, gamma)
    return math.exp(
        math.log(n * (n - 1))
        + math.log(float(rising_product(float(alpha), n)))
        + math.log(alpha)
        + math.lgamma(1 - gamma / alpha)
        - math.lgamma(n + 2 - alpha - gamma)
    )


def reconstructed_eppf(alpha: float, gamma: float, parts: Sequence[int], order: int = 40) -> float:
    parts = _parts(parts, 2)
    return size_biased_integral(alpha, gamma, parts, order) / size_biased_normaliser(alpha, gamma, sum(parts))


def f_identity_sides(alpha: float, gamma: float, x: Sequence[float]) -> tuple:
    """Both sides of
    int_0^{1-sum x} y (1-sum x) gem*_{k+1}(x, y) dy
        = (1-alpha)/(1+(k-1)alpha-gamma) (1-sum x)^2 gem*_k(x)
    with theta = -alpha-gamma.  This is the identity that produces the
    (1-sum x)^2 term of the size-biased bracket."""
    theta = -alpha - gamma
    x = list(map(float, x))
    k = len(x)
    rest = 1 - sum(x)

    def f(y):
        return y * rest * float(gem_star_density(alpha, theta, x + [y]))

    lhs, _ = integrate.quad(f, 0, rest, epsabs=0, epsrel=1e-10, limit=200)
    rhs = (1 - alpha) / (1 + (k - 1) * alpha - gamma) * rest**2 * float(gem_star_density(alpha, theta, x))
    return lhs, rhs
