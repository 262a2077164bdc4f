"""The twelve acceptance criteria, each at its stated scale and tolerance.

Every test records one PASS/FAIL line; the lines are repeated in the
terminal summary under "acceptance criteria".
"""
import math
import time
from fractions import Fraction

import numpy as np
import pytest

from mbtree.crp import crp_limit_moment, mittag_leffler_moment
from mbtree.growth import ModelParams
from mbtree.laws import (
    DecrementMatrix,
    check_sampling_consistency,
    check_strong_consistency_pair,
    eppf_seq,
    split_prob_seq,
)
from mbtree.limits import McConfig, mc_suite
from mbtree.measures import (
    first_marginal_bracket,
    levy_density,
    nu_sb_bracket,
    nu_sb_density,
    reconstructed_eppf,
    tail_exponent,
)
from mbtree.numerics import integer_partitions
from mbtree.oracle import exact_coloured_law, exact_law, law_difference, strong_consistency_residual, verify_spinal

from conftest import GRID

F = Fraction


def test_criterion_01_exact_n3_law(record):
    a, g = F(1, 2), F(1, 4)
    start = time.perf_counter()
    law = exact_law(ModelParams(a, g), 3)
    elapsed = time.perf_counter() - start
    below = law.probs["((1,2),3);"]
    cherry13 = law.probs["((1,3),2);"]
    ok = below == g / (2 - a) and cherry13 == (1 - a) / (2 - a) and elapsed < 1
    record(1, ok, f"P(cherry 12)={below}, P(cherry 13)={cherry13}, {elapsed:.3f}s")
    assert below == F(1, 6)
    assert cherry13 == F(1, 3)
    assert elapsed < 1


def test_criterion_02_oracle_matches_split_formula(record):
    start = time.perf_counter()
    bad = []
    for a, g in GRID:
        p = ModelParams(a, g)
        for n in range(2, 7):
            marginal = exact_law(p, n).first_split_marginal()
            for parts in integer_partitions(n, min_parts=2):
                if marginal.get(parts, 0) != split_prob_seq(a, g, parts):
                    bad.append((a, g, parts))
    elapsed = time.perf_counter() - start
    ok = not bad and elapsed < 60
    record(2, ok, f"{len(bad)} mismatches, {elapsed:.1f}s")
    assert not bad
    assert elapsed < 60


def test_criterion_03_sampling_consistency(record):
    start = time.perf_counter()
    worst = max(check_sampling_consistency(a, g, n) for a, g in GRID for n in range(3, 9))
    alpha1 = max(check_sampling_consistency(F(1), F(1, 3), n) for n in range(3, 9))
    elapsed = time.perf_counter() - start
    ok = worst == 0 and alpha1 == 0 and elapsed < 60
    record(3, ok, f"grid residual {worst}, alpha=1 residual {alpha1}, {elapsed:.1f}s")
    assert worst == 0
    assert alpha1 == 0
    assert elapsed < 60


def test_criterion_04_strong_consistency_dichotomy(record):
    a, g = F(1, 2), F(1, 4)
    lhs, rhs = check_strong_consistency_pair(a, g)
    lhs_closed = (a - g) * (5 - 5 * a + g) / (2 * (2 - a) * (3 - a))
    rhs_closed = (a - g) * (2 - 2 * a + g) / ((2 - a) * (3 - a))
    glhs, grhs = check_strong_consistency_pair(F(3, 5), F(2, 5))
    holds = strong_consistency_residual(ModelParams(F(3, 5), F(2, 5)), 4)
    fails = strong_consistency_residual(ModelParams(a, g), 4)
    ok = lhs == lhs_closed and rhs == rhs_closed and lhs != rhs and glhs == grhs and holds == 0 and fails > 0
    record(4, ok, f"(1/2,1/4): {lhs} vs {rhs}; (3/5,2/5): {glhs} = {grhs}; joint residuals {holds}, {fails}")
    assert (lhs, rhs) == (lhs_closed, rhs_closed)
    assert lhs != rhs
    assert glhs == grhs
    assert holds == 0
    assert fails > 0


def test_criterion_05_crush_equivalence(record):
    start = time.perf_counter()
    diffs = [
        law_difference(exact_coloured_law(F(1, 2), F(1, 2), n), exact_law(ModelParams(F(1, 2), F(1, 4)), n))
        for n in range(1, 6)
    ]
    elapsed = time.perf_counter() - start
    ok = all(d == 0 for d in diffs) and elapsed < 120
    record(5, ok, f"max difference {max(diffs)}, {elapsed:.2f}s")
    assert all(d == 0 for d in diffs)
    assert elapsed < 120


def test_criterion_06_spinal_decomposition(record):
    worst = F(0)
    for a, g in GRID:
        p = ModelParams(a, g)
        for n in range(2, 6):
            worst = max(worst, verify_spinal(exact_law(p, n)).max)
    ok = worst == 0
    record(6, ok, f"max residual {worst}")
    assert worst == 0


def test_criterion_07_decrement_row_sums(record):
    exact_bad = []
    float_err = 0.0
    for a, th in [(F(1, 2), F(1, 2)), (F(3, 10), F(7, 10)), (F(9, 10), F(1, 10))]:
        dec = DecrementMatrix(a, th)
        exact_bad += [n for n in range(1, 31) if sum(dec.row(n)) != 1]
        fdec = DecrementMatrix(float(a), float(th))
        for n in range(1, 201):
            float_err = max(float_err, abs(math.fsum(fdec.row(n)) - 1))
    ok = not exact_bad and float_err < 1e-10
    record(7, ok, f"exact failures {exact_bad}, float max |sum-1| = {float_err:.2e}")
    assert not exact_bad
    assert float_err < 1e-10


@pytest.mark.slow
def test_criterion_08_crp_scaling(record):
    start = time.perf_counter()
    report = mc_suite(McConfig("crp", alpha=0.5, theta=0.5, n=10_000, replicates=2000, seed=3))
    elapsed = time.perf_counter() - start
    stats = report["statistics"]
    mean = stats["K_n/n^alpha mean"]
    # second route to E[S]: tilted Mittag-Leffler moments
    target = mittag_leffler_moment(0.5, 2.0) / mittag_leffler_moment(0.5, 1.0)
    ok = report["pass"] and math.isclose(mean["target"], target, rel_tol=1e-12) and elapsed < 300
    detail = ", ".join(f"{k}: {v['estimate']:.4f} vs {v['target']:.4f} (SE {v['stderr']:.4f})" for k, v in stats.items())
    record(8, ok, f"{detail}; {elapsed:.0f}s")
    assert math.isclose(crp_limit_moment(0.5, 0.5, 1), math.sqrt(math.pi), rel_tol=1e-12)
    assert math.isclose(mean["target"], target, rel_tol=1e-12)
    assert report["pass"], stats
    assert elapsed < 300


@pytest.mark.slow
def test_criterion_09_reduced_tree_limits(record):
    start = time.perf_counter()
    cfg = McConfig("reduced", alpha=0.7, gamma=0.3, k=2, n=10_000, replicates=1000, seed=2024, shape="(oo)")
    report = mc_suite(cfg)
    elapsed = time.perf_counter() - start
    stats = report["statistics"]
    parts = []
    for key, s in stats.items():
        if s["p_value"] is not None:
            parts.append(f"{key} p={s['p_value']:.3f}")
        else:
            parts.append(f"{key} {s['estimate']:.3f} vs {s['target']:.3f}")
    ok = report["pass"] and elapsed < 900
    record(9, ok, "; ".join(parts) + f"; {elapsed:.0f}s")
    assert {"W/n KS", "D_2[1] KS", "D_2[2] KS", "D_2[3] KS"} <= set(stats)
    assert report["pass"], stats
    assert elapsed < 900


@pytest.mark.slow
def test_criterion_10_spine_frequencies(record):
    cfg = McConfig("spine", alpha=0.6, gamma=0.2, gamma_alt=0.5, n=10_000, replicates=1000, seed=7)
    report = mc_suite(cfg)
    stats = report["statistics"]
    ks = stats["P_1 KS"]
    two = next(v for k, v in stats.items() if k.startswith("P_1 two-sample"))
    ok = ks["pass"] and two["pass"]
    record(10, ok, f"P_1 KS p={ks['p_value']:.3f}, two-sample p={two['p_value']:.3f}")
    assert ks["p_value"] > 1e-3
    assert two["p_value"] > 1e-3


def test_criterion_11_density_identities(record):
    xs = np.geomspace(1e-3, 30, 100)
    identity_err = 0.0
    exponents = {}
    for a, g in [(0.7, 0.3), (0.5, 0.2)]:
        lam = levy_density(a, g, xs)
        u = np.exp(-xs)
        other = np.array([u_i * float(nu_sb_density(a, g, [u_i])) for u_i in u])
        identity_err = max(identity_err, float(np.max(np.abs(lam - other))))
        exponents[(a, g)] = tail_exponent(a, g)
    grid = np.linspace(0.0, 1.0, 1001)[1:-1]
    bracket_err = max(
        float(np.max(np.abs(nu_sb_bracket(a, g, grid[:, None]) - first_marginal_bracket(a, g, grid))))
        for a, g in [(0.7, 0.3), (0.5, 0.2), (0.9, 0.05), (0.6, 0.0)]
    )
    tail_ok = all(abs(e - g) < 0.02 for (a, g), e in exponents.items())
    ok = identity_err < 1e-10 and tail_ok and bracket_err < 1e-12
    exps = ", ".join(f"gamma={g}: {e:.4f}" for (a, g), e in exponents.items())
    record(11, ok, f"identity {identity_err:.1e}, tail exponents {exps}, bracket {bracket_err:.1e}")
    assert identity_err < 1e-10
    assert tail_ok, exponents
    assert bracket_err < 1e-12


def test_criterion_12_eppf_reconstruction(record):
    a, g = 0.5, 0.2
    worst = 0.0
    for parts in integer_partitions(4, min_parts=2):
        exact = float(eppf_seq(a, g, parts))
        worst = max(worst, abs(reconstructed_eppf(a, g, parts) / exact - 1))
    ok = worst < 0.01
    record(12, ok, f"max relative error {worst:.2e}")
    assert worst < 0.01
