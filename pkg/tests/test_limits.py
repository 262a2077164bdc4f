import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mbtree.crp import mittag_leffler_moment
from mbtree.growth import ModelParams, TreeGrower
from mbtree.limits import (
    McConfig,
    analyse_tree,
    grow_conditioned,
    limit_laws,
    mc_suite,
    parse_shape,
    report_json,
    spine_frequencies,
    track_reduced,
    urn_stabilisation,
)
from mbtree.oracle import exact_law
from mbtree.streams import RngStream
from mbtree.trees import parse, reduced_subtree


def test_analyse_examples():
    s = analyse_tree(parse("((1,2),(3,4));"), 2)
    assert (s.shape, s.w_nk, s.black, s.skeletal_bushes, s.ell) == ("(oo)", 2, 0, 1, 1)
    assert sorted(s.edge_lengths) == [1, 1, 2] and s.branch_degrees == (3,)
    t = parse("(((1,5),2,6),(3,4));")
    s = analyse_tree(t, 2)
    assert (s.w_nk, s.black, s.skeletal_bushes, s.skeleton_length) == (3, 1, 2, 5)
    assert sorted(s.edge_lengths) == [1, 2, 2] and s.branch_degrees == (4,)
    s = analyse_tree(t, 3)
    assert (s.shape, s.w_nk, s.black, s.ell, s.skeleton_length) == ("((oo)o)", 2, 1, 2, 7)
    assert sorted(s.branch_degrees) == [3, 4]


@settings(max_examples=60, deadline=None)
@given(
    st.sampled_from([(0.5, 0.25), (0.7, 0.3), (0.6, 0.6), (0.4, 0.1)]),
    st.integers(3, 80),
    st.integers(1, 5),
    st.integers(0, 2**32),
)
def test_analyse_invariants(params, n, k, seed):
    k = min(k, n - 1)
    t = TreeGrower(ModelParams(*params), RngStream(seed)).grow_to(n)
    s = analyse_tree(t, k)
    assert s.w_nk + s.black + k == n
    assert s.w_nk <= n - k
    assert sum(s.edge_lengths) == s.skeleton_length == s.skeletal_bushes + k + s.ell
    assert len(s.branch_degrees) == s.ell
    assert all(d >= 3 for d in s.branch_degrees)
    assert s.shape == reduced_subtree(t, k).shape
    if params[0] == params[1]:
        # binary trees: every leaf off the skeleton is white
        assert s.black == 0 and s.w_nk == n - k


def test_track_reduced_domain():
    with pytest.raises(ValueError):
        track_reduced(ModelParams(0.5, 0.0), 2, 10, RngStream(0))
    with pytest.raises(ValueError):
        track_reduced(ModelParams(0.5, 0.2), 1, 10, RngStream(0))
    with pytest.raises(ValueError):
        track_reduced(ModelParams(0.5, 0.2), 10, 10, RngStream(0))


def test_grow_conditioned_shape():
    rng = RngStream(3)
    for _ in range(20):
        t = grow_conditioned(ModelParams(0.5, 0.25), 3, 12, rng, "(ooo)")
        assert t.n == 12 and reduced_subtree(t, 3).shape == "(ooo)"


def test_spine_frequencies():
    assert spine_frequencies(parse("(1,2);")).tolist() == [1.0]
    assert spine_frequencies(parse("((1,2),3);")).tolist() == [0.5, 0.5]
    # ordered by smallest label: 2, then (3,4), then 5 and 6
    assert spine_frequencies(parse("(((1,5),2,6),(3,4));")).tolist() == [0.2, 0.4, 0.2, 0.2]
    with pytest.raises(ValueError):
        spine_frequencies(parse("(1);"))


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 60), st.integers(0, 2**32))
def test_spine_frequencies_sum(n, seed):
    t = TreeGrower(ModelParams(0.5, 0.3), RngStream(seed)).grow_to(n)
    f = spine_frequencies(t)
    assert np.all(f > 0) and math.isclose(f.sum(), 1.0)


def test_limit_laws_cherry():
    a, g = 0.6, 0.25
    laws = limit_laws(ModelParams(a, g), "(oo)")
    assert (laws.k, laws.ell) == (2, 1)
    assert (laws.wk.a, laws.wk.b) == pytest.approx((2 - 2 * a + g, a - g))
    assert laws.dk.weights == pytest.approx(((1 - a) / g, (1 - a) / g, 1.0))
    r = laws.w / g
    for p in (1, 2):
        assert laws.lk_moment(p) == pytest.approx(
            mittag_leffler_moment(g, r + p) / mittag_leffler_moment(g, r), rel=1e-12
        )
    assert laws.ck.dirichlet is not None


def test_limit_laws_binary_is_degenerate():
    laws = limit_laws(ModelParams(0.5, 0.5), "((oo)o)")
    assert laws.wbar == 0 and laws.wk.degenerate and laws.ck.degenerate
    with pytest.raises(ValueError):
        limit_laws(ModelParams(0.5, 0.0), "(oo)")


def test_weight_split_over_shapes():
    """w and wbar are the skeleton-edge and branch-point parts of the total
    growth weight k - alpha of the k-leaf shape."""
    a, g = Fraction(3, 5), Fraction(1, 5)
    shapes = set()
    for n in range(2, 7):
        shapes |= set(exact_law(ModelParams(a, g), n).shapes())
    for code in shapes:
        t = parse_shape(code)
        laws = limit_laws(ModelParams(a, g), code)
        branch = [v for v in t.preorder() if v != 0 and not t.label[v]]
        edge_part = t.n * (1 - a) + len(branch) * g
        point_part = sum((len(t.children[v]) - 1) * a - g for v in branch)
        assert laws.w == pytest.approx(float(edge_part))
        assert laws.wbar == pytest.approx(float(point_part))
        assert laws.w + laws.wbar == pytest.approx(float(t.n - a))


def test_config_validation():
    bad = [
        McConfig("nope", 0.5, 0.2),
        McConfig("crp", 1.0),
        McConfig("crp", 0.5, theta=-0.6),
        McConfig("reduced", 0.5, 0.6),
        McConfig("reduced", 0.5, 0.0),
        McConfig("reduced", 0.5, 0.2, k=5, n=5),
        McConfig("spine", 0.5, 0.2, replicates=0),
        McConfig("spine", 0.5, 0.2, seed=-1),
    ]
    for cfg in bad:
        with pytest.raises(ValueError):
            mc_suite(cfg)


def test_report_is_reproducible():
    cfg = dict(suite="reduced", alpha=0.6, gamma=0.3, k=2, n=200, replicates=40, seed=11)
    first = report_json(mc_suite(McConfig(**cfg)))
    assert first == report_json(mc_suite(McConfig(**cfg)))
    assert first == report_json(mc_suite(McConfig(**cfg, threads=2)))
    assert first != report_json(mc_suite(McConfig(**{**cfg, "seed": 12})))


def test_small_crp_suite():
    report = mc_suite(McConfig("crp", 0.5, theta=0.5, n=2000, replicates=2000, seed=1, ml_samples=50_000))
    assert set(report["statistics"]) == {
        "K_n/n^alpha mean",
        "Mittag-Leffler moment p=1",
        "Mittag-Leffler moment p=2",
    }
    assert report["pass"], report


def test_small_reduced_suite():
    """Only the urn statistic is held to its limit at this size: edge lengths
    are of order n^gamma, so their proportions still sit on a coarse
    lattice.  The full set is checked at n = 10^4 in the acceptance suite."""
    report = mc_suite(McConfig("reduced", 0.7, 0.3, k=2, n=2000, replicates=400, seed=5, shape="(oo)"))
    stats = report["statistics"]
    assert set(stats) == {
        "W/n KS",
        "D_2[1] KS",
        "D_2[2] KS",
        "D_2[3] KS",
        "L/W^gamma moment p=1",
        "L/W^gamma moment p=2",
        "corr(W/n, L/W^gamma)",
    }
    assert stats["W/n KS"]["pass"], stats["W/n KS"]
    assert all(0 <= s["p_value"] <= 1 for name, s in stats.items() if "KS" in name)
    assert report["pass"] == all(s["pass"] for s in stats.values())


def test_small_degree_suite():
    report = mc_suite(McConfig("degree", 0.7, 0.2, k=2, n=2000, replicates=400, seed=6, shape="(oo)"))
    assert report["pass"], report


def test_binary_reduced_suite():
    # gamma = alpha: no black leaves, W/n -> 1
    report = mc_suite(McConfig("reduced", 0.5, 0.5, k=2, n=300, replicates=50, seed=9))
    stats = report["statistics"]
    assert stats["W/n"] == {"estimate": 298 / 300, "stderr": 0.0, "target": 298 / 300, "p_value": None, "pass": True}
    assert not any(name.startswith("corr") for name in stats)


def test_small_spine_suite():
    report = mc_suite(McConfig("spine", 0.5, 0.25, n=500, replicates=300, seed=8, gamma_alt=0.4))
    assert len(report["statistics"]) == 3
    assert report["pass"], report


def test_urn_stabilises():
    p = ModelParams(0.6, 0.3)
    early = [urn_stabilisation(p, 2, 16, 128, RngStream(s)) for s in range(30)]
    late = [urn_stabilisation(p, 2, 1024, 8192, RngStream(s)) for s in range(30)]
    assert all(x >= 0 for x in early + late)
    assert np.mean(late) < np.mean(early) / 2
    assert urn_stabilisation(p, 2, 64, 100, RngStream(0)) == 0.0
