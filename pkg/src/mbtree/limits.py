"""Monte-Carlo checks of the large-n behaviour of grown trees.

Statistics of a tree grown to ``n`` leaves are read off the skeleton spanned
by the root and leaves ``1..k``.  Leaves hanging off the skeleton at its
degree-2 vertices (inside reduced edges) are *white*; leaves hanging at the
branch points of the reduced tree are *black*.
"""
from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from .crp import crp_limit_moment, mittag_leffler_moment, simulate_table_counts
from .growth import ModelParams, TreeGrower
from .numerics import BetaParams, DirichletParams, ks_2samp, ks_test
from .streams import derive_generator, derive_stream
from .trees import ROOT, LabelledTree, canonical_code, reduced_subtree, skeleton_marks, spine


@dataclass(frozen=True)
class ReducedTreeStats:
    n: int
    k: int
    shape: str
    ell: int
    w_nk: int
    black: int
    skeletal_bushes: int
    skeleton_length: int
    edge_lengths: tuple
    branch_degrees: tuple
    spine_bush_ratios: tuple = field(default=(), repr=False)


def analyse_tree(t: LabelledTree, k: int, with_spine: bool = False) -> ReducedTreeStats:
    red = reduced_subtree(t, k)
    mark = skeleton_marks(t, k)
    counts = t.leaf_counts()
    low = t.min_labels()
    white = black = bushes = 0
    degrees = []
    stack = [t.top]
    while stack:
        v = stack.pop()
        if t.label[v]:
            continue
        skel = [c for c in t.children[v] if mark[c]]
        off = sum(counts[c] for c in t.children[v] if not mark[c])
        if len(skel) >= 2:
            black += off
            degrees.append(len(t.children[v]) + 1)
        else:
            white += off
            bushes += 1
        stack.extend(sorted(skel, key=low.__getitem__, reverse=True))
    ell = red.inner_edges
    length = red.total_length
    if length != bushes + k + ell:
        raise AssertionError("skeleton length bookkeeping failed")
    return ReducedTreeStats(
        n=t.n,
        k=k,
        shape=red.shape,
        ell=ell,
        w_nk=white,
        black=black,
        skeletal_bushes=bushes,
        skeleton_length=length,
        edge_lengths=red.edge_lengths,
        branch_degrees=tuple(degrees),
        spine_bush_ratios=tuple(spine_frequencies(t)) if with_spine else (),
    )


def grow_conditioned(p: ModelParams, k: int, n: int, rng, shape: Optional[str] = None) -> LabelledTree:
    """Grow to n leaves; if ``shape`` is given, regrow the first k leaves
    until the k-leaf tree has that shape."""
    while True:
        grower = TreeGrower(p, rng)
        t = grower.grow_to(k)
        if shape is None or canonical_code(t) == shape:
            return grower.grow_to(n)


def track_reduced(p: ModelParams, k: int, n: int, rng, shape: Optional[str] = None) -> ReducedTreeStats:
    if not (0 < p.alpha < 1 and 0 < p.gamma <= p.alpha):
        raise ValueError("reduced-tree limits need 0 < alpha < 1 and 0 < gamma <= alpha")
    if not 2 <= k < n:
        raise ValueError(f"need 2 <= k < n, got k={k}, n={n}")
    return analyse_tree(grow_conditioned(p, k, n, rng, shape), k)


def spine_frequencies(t: LabelledTree) -> np.ndarray:
    """Leaf counts of the subtrees hanging off the path from the root to
    leaf 1, in order of appearance (smallest label), divided by n - 1."""
    if t.n < 2:
        raise ValueError("spine frequencies need n >= 2")
    counts = t.leaf_counts()
    low = t.min_labels()
    on_path = set(spine(t))
    on_path.add(t.leaf_node[1])
    subs = [c for v in spine(t) for c in t.children[v] if c not in on_path]
    subs.sort(key=low.__getitem__)
    return np.array([counts[c] for c in subs], dtype=float) / (t.n - 1)


# ---------------------------------------------------------------------------
# limit laws


@dataclass(frozen=True)
class DegreeLimit:
    """Limit of the branch-point degrees over n^alpha: Wbar^alpha M D'."""

    wbar: float
    alpha: float
    dirichlet: Optional[DirichletParams]
    degenerate: bool

    def m_moment(self, p: float) -> float:
        if self.wbar <= -self.alpha:
            raise ValueError("degenerate degree limit")
        return crp_limit_moment(self.alpha, self.wbar, p)


@dataclass(frozen=True)
class LimitLaws:
    k: int
    ell: int
    w: float
    wbar: float
    gamma: float
    wk: BetaParams
    dk: DirichletParams
    ck: DegreeLimit

    def lk_moment(self, p: float) -> float:
        """E[L_k^p] for the length limit with density
        Gamma(1+w)/Gamma(1+w/gamma) s^(w/gamma) g_gamma(s); by the
        Mittag-Leffler moment identity this is
        Gamma(1+w) Gamma(1+w/gamma+p) / (Gamma(1+w/gamma) Gamma(1+w+p gamma))."""
        return crp_limit_moment(self.gamma, self.w, p)


def _shape_stats(shape) -> tuple:
    """(k, children counts of branch points in preorder)."""
    if isinstance(shape, str):
        t = parse_shape(shape)
    elif hasattr(shape, "tree"):
        t = shape.tree
    else:
        t = shape
    kids = [len(t.children[v]) for v in t.preorder() if v != ROOT and not t.label[v]]
    return t.n, kids


def parse_shape(code: str) -> LabelledTree:
    from .trees import shape_from_code

    return shape_from_code(code)


def limit_laws(p: ModelParams, shape) -> LimitLaws:
    a, g = float(p.alpha), float(p.gamma)
    if g <= 0:
        raise ValueError("limit laws need gamma > 0")
    k, kids = _shape_stats(shape)
    ell = len(kids)
    w = k * (1 - a) + ell * g
    wbar = (k - 1) * a - ell * g
    weights = [c - 1 - g / a for c in kids]
    degenerate = any(x <= 0 for x in weights)
    return LimitLaws(
        k=k,
        ell=ell,
        w=w,
        wbar=wbar,
        gamma=g,
        wk=BetaParams(w, max(wbar, 0.0)),
        dk=DirichletParams(tuple([(1 - a) / g] * k + [1.0] * ell)),
        ck=DegreeLimit(wbar, a, None if degenerate else DirichletParams(tuple(weights)), degenerate),
    )


# ---------------------------------------------------------------------------
# suites


@dataclass
class McConfig:
    suite: str
    alpha: float
    gamma: float = 0.0
    theta: float = 0.0
    k: int = 2
    n: int = 10_000
    replicates: int = 1000
    seed: int = 0
    p_threshold: float = 1e-3
    se_multiplier: float = 3.0
    threads: int = 1
    shape: Optional[str] = None
    gamma_alt: Optional[float] = None
    ml_samples: int = 100_000

    def validate(self) -> None:
        if self.suite not in SUITES:
            raise ValueError(f"unknown suite {self.suite!r}; choose from {sorted(SUITES)}")
        if self.replicates < 1:
            raise ValueError("replicates must be at least 1")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if self.suite == "crp":
            if not (0 < self.alpha < 1 and self.theta > -self.alpha):
                raise ValueError("crp suite needs 0 < alpha < 1 and theta > -alpha")
        else:
            ModelParams(self.alpha, self.gamma)
            if not (0 < self.alpha < 1 and 0 < self.gamma <= self.alpha):
                raise ValueError("tree suites need 0 < gamma <= alpha < 1")
        if self.suite in ("reduced", "degree") and not 2 <= self.k < self.n:
            raise ValueError("need 2 <= k < n")
        if self.n < 2:
            raise ValueError("n must be at least 2")


def _moment_stat(values: np.ndarray, target: float, mult: float) -> dict:
    m = len(values)
    est = math.fsum(values) / m
    sd = math.sqrt(math.fsum((values - est) ** 2) / (m - 1)) if m > 1 else float("nan")
    se = sd / math.sqrt(m)
    return {
        "estimate": est,
        "stderr": se,
        "target": target,
        "p_value": None,
        "pass": bool(abs(est - target) <= mult * se),
    }


def _ks_stat(values, cdf, threshold: float) -> dict:
    d, pv = ks_test(np.sort(np.asarray(values)), cdf)
    return {"estimate": d, "stderr": None, "target": None, "p_value": pv, "pass": bool(pv > threshold)}


def _reduced_worker(args) -> list:
    cfg, indices, gamma = args
    p = ModelParams(cfg["alpha"], gamma)
    out = []
    for i in indices:
        rng = derive_stream(cfg["seed"], i)
        s = track_reduced(p, cfg["k"], cfg["n"], rng, cfg.get("shape"))
        out.append(s)
    return out


def _spine_worker(args) -> list:
    cfg, indices, gamma = args
    p = ModelParams(cfg["alpha"], gamma)
    out = []
    for i in indices:
        rng = derive_stream(cfg["seed"], i)
        t = TreeGrower(p, rng).grow_to(cfg["n"])
        f = spine_frequencies(t)
        out.append(float(f[0]))
    return out


def _run_replicates(worker, cfg: McConfig, gamma: float, offset: int = 0) -> list:
    indices = list(range(offset, offset + cfg.replicates))
    payload = asdict(cfg)
    if cfg.threads <= 1:
        return worker((payload, indices, gamma))
    chunks = [indices[i :: cfg.threads] for i in range(cfg.threads)]
    with ProcessPoolExecutor(max_workers=cfg.threads) as pool:
        parts = list(pool.map(worker, [(payload, c, gamma) for c in chunks]))
    by_index = {}
    for c, res in zip(chunks, parts):
        by_index.update(zip(c, res))
    return [by_index[i] for i in indices]


def _suite_crp(cfg: McConfig) -> dict:
    g = derive_generator(cfg.seed, 0)
    k = simulate_table_counts(cfg.alpha, cfg.theta, cfg.n, cfg.replicates, g)
    scaled = k / cfg.n**cfg.alpha
    stats = {
        "K_n/n^alpha mean": _moment_stat(scaled, crp_limit_moment(cfg.alpha, cfg.theta, 1), cfg.se_multiplier),
    }
    ml = derive_generator(cfg.seed, 1)
    from .crp import mittag_leffler_samples

    sample = mittag_leffler_samples(cfg.alpha, cfg.ml_samples, ml)
    for p in (1, 2):
        stats[f"Mittag-Leffler moment p={p}"] = _moment_stat(
            sample**p, mittag_leffler_moment(cfg.alpha, p), cfg.se_multiplier
        )
    return stats


def _suite_reduced(cfg: McConfig) -> dict:
    p = ModelParams(cfg.alpha, cfg.gamma)
    results = _run_replicates(_reduced_worker, cfg, cfg.gamma)
    shape = cfg.shape or results[0].shape
    results = [r for r in results if r.shape == shape]
    laws = limit_laws(p, shape)
    n = cfg.n
    w = np.array([r.w_nk for r in results], dtype=float)
    stats = {}
    if laws.wk.degenerate:
        # binary case: every leaf off the skeleton is white, W = n - k exactly
        stats["W/n"] = _moment_stat(w / n, (n - cfg.k) / n, cfg.se_multiplier)
    else:
        stats["W/n KS"] = _ks_stat(w / n, laws.wk.cdf, cfg.p_threshold)
    lengths = np.array([r.edge_lengths for r in results], dtype=float)
    props = lengths / lengths.sum(axis=1, keepdims=True)
    for i in range(props.shape[1]):
        stats[f"D_{cfg.k}[{i + 1}] KS"] = _ks_stat(props[:, i], laws.dk.marginal(i).cdf, cfg.p_threshold)
    # W = 0 has probability of order n^-w; the ratio is undefined there
    seen = w > 0
    ratio = np.array([r.skeleton_length for r in results], dtype=float)[seen] / w[seen] ** cfg.gamma
    for q in (1, 2):
        stats[f"L/W^gamma moment p={q}"] = _moment_stat(ratio**q, laws.lk_moment(q), cfg.se_multiplier)
    if len(ratio) > 3 and not laws.wk.degenerate:
        r = float(np.corrcoef(w[seen] / n, ratio)[0, 1])
        se = 1 / math.sqrt(len(ratio) - 3)
        z = math.atanh(max(min(r, 0.999999), -0.999999))
        stats["corr(W/n, L/W^gamma)"] = {
            "estimate": r,
            "stderr": se,
            "target": 0.0,
            "p_value": None,
            "pass": bool(abs(z) <= cfg.se_multiplier * se),
        }
    return stats


def _suite_degree(cfg: McConfig) -> dict:
    p = ModelParams(cfg.alpha, cfg.gamma)
    results = _run_replicates(_reduced_worker, cfg, cfg.gamma)
    shape = cfg.shape or results[0].shape
    results = [r for r in results if r.shape == shape]
    laws = limit_laws(p, shape)
    # subtrees added at the branch points of T_k: these seat like an
    # (alpha, wbar) restaurant whose customers are the black leaves
    base = sum(c + 1 for c in _shape_stats(shape)[1])
    ctot = np.array([sum(r.branch_degrees) - base for r in results], dtype=float)
    black = np.array([r.black for r in results], dtype=float)
    # no black leaf at all has probability of order n^-wbar
    seen = black > 0
    ratio = ctot[seen] / black[seen] ** cfg.alpha
    return {
        f"C_tot/Wbar^alpha moment p={q}": _moment_stat(ratio**q, laws.ck.m_moment(q), cfg.se_multiplier)
        for q in (1, 2)
    }


def _suite_spine(cfg: McConfig) -> dict:
    first = np.array(_run_replicates(_spine_worker, cfg, cfg.gamma))
    target = BetaParams(1 - cfg.alpha, 1.0)
    stats = {"P_1 KS": _ks_stat(first, target.cdf, cfg.p_threshold)}
    stats["P_1 mean"] = _moment_stat(first, target.mean(), cfg.se_multiplier)
    if cfg.gamma_alt is not None:
        other = np.array(_run_replicates(_spine_worker, cfg, cfg.gamma_alt, offset=cfg.replicates))
        d, pv = ks_2samp(first, other)
        stats[f"P_1 two-sample KS gamma={cfg.gamma} vs {cfg.gamma_alt}"] = {
            "estimate": d,
            "stderr": None,
            "target": None,
            "p_value": pv,
            "pass": bool(pv > cfg.p_threshold),
        }
    return stats


SUITES = {"crp": _suite_crp, "reduced": _suite_reduced, "degree": _suite_degree, "spine": _suite_spine}


def mc_suite(cfg: McConfig) -> dict:
    cfg.validate()
    stats = SUITES[cfg.suite](cfg)
    config = asdict(cfg)
    config.pop("threads")
    return {
        "config": config,
        "statistics": stats,
        "pass": all(s["pass"] for s in stats.values()),
    }


def report_json(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True)


def urn_stabilisation(p: ModelParams, k: int, n_start: int, n_end: int, rng) -> float:
    """Largest |W_{2m,k}/2m - W_{m,k}/m| over the doubling checkpoints
    m = n_start, 2 n_start, ... with 2m <= n_end, along one trajectory."""
    grower = TreeGrower(p, rng)
    checkpoints = []
    m = n_start
    while m <= n_end:
        checkpoints.append(m)
        m *= 2
    fractions = []
    for m in checkpoints:
        t = grower.grow_to(m)
        fractions.append(analyse_tree(t, k).w_nk / m)
    return max((abs(b - a) for a, b in zip(fractions, fractions[1:])), default=0.0)
