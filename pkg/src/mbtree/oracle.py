"""Exact laws of small trees by exhaustive enumeration of growth histories.

Every labelled tree reachable in ``n - 1`` growth steps is kept with its
exact rational probability.  The verification helpers compare marginals of
these laws with the closed-form kernels in :mod:`mbtree.laws`.
"""
from __future__ import annotations

import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional

from .growth import ColouredTree, ModelParams, colour_step_options, crush, step_options
from .laws import DecrementMatrix, _code_children, eppf_pd
from .numerics import set_partition_count, to_scalar
from .trees import (
    LabelledTree,
    canonical_code,
    first_split,
    remove_leaf,
    serialize,
    spinal_decomposition,
)

DEFAULT_BOUND = 6


@dataclass
class ExactLaw:
    """Law of a random labelled tree on ``n`` leaves: serialization -> probability."""

    n: int
    probs: dict
    trees: dict = field(default_factory=dict, repr=False)
    params: Optional[ModelParams] = None

    def __post_init__(self):
        for key in self.probs:
            if key not in self.trees:
                from .trees import parse

                self.trees[key] = parse(key)

    @property
    def total(self):
        return sum(self.probs.values())

    def items(self):
        for key, p in self.probs.items():
            yield self.trees[key], p

    def shapes(self) -> dict:
        out = defaultdict(Fraction)
        for t, p in self.items():
            out[canonical_code(t)] += p
        return dict(out)

    def first_split_marginal(self) -> dict:
        out = defaultdict(Fraction)
        for t, p in self.items():
            out[first_split(t).sizes] += p
        return dict(out)

    def marginal(self, statistic: Callable) -> dict:
        out = defaultdict(Fraction)
        for t, p in self.items():
            out[statistic(t)] += p
        return dict(out)


def _check_bound(n: int, bound: int) -> None:
    if n < 1:
        raise ValueError("n must be at least 1")
    if n > bound:
        raise ValueError(f"exact enumeration is limited to n <= {bound} (got {n}); raise the bound explicitly")


def exact_law(p: ModelParams, n: int, bound: int = DEFAULT_BOUND) -> ExactLaw:
    if not p.exact:
        raise ValueError("exact laws need rational parameters (use 'p/q' strings or Fractions)")
    _check_bound(n, bound)
    trees = {serialize(LabelledTree.single()): LabelledTree.single()}
    probs = {next(iter(trees)): Fraction(1)}
    for _ in range(n - 1):
        new_probs = defaultdict(Fraction)
        new_trees = {}
        for key, prob in probs.items():
            for w, s in step_options(trees[key], p):
                k = serialize(s)
                new_probs[k] += prob * w
                new_trees.setdefault(k, s)
        probs, trees = dict(new_probs), new_trees
    return ExactLaw(n, probs, trees, p)


def exact_coloured_law(alpha, c, n: int, bound: int = DEFAULT_BOUND) -> ExactLaw:
    """Law of the crushed coloured tree on ``n`` leaves."""
    alpha, c = to_scalar(alpha), to_scalar(c)
    if not isinstance(alpha, Fraction) or not isinstance(c, Fraction):
        raise ValueError("exact laws need rational parameters")
    _check_bound(n, bound)
    if n == 1:
        t = LabelledTree.single()
        return ExactLaw(1, {serialize(t): Fraction(1)}, {serialize(t): t})
    start = ColouredTree.cherry()
    states = {start.key(): (start, Fraction(1))}
    for _ in range(n - 2):
        nxt = {}
        for tc, prob in states.values():
            for w, s in colour_step_options(tc, alpha, c):
                key = s.key()
                if key in nxt:
                    nxt[key] = (nxt[key][0], nxt[key][1] + prob * w)
                else:
                    nxt[key] = (s, prob * w)
        states = nxt
    probs = defaultdict(Fraction)
    trees = {}
    for tc, prob in states.values():
        t = crush(tc)
        key = serialize(t)
        probs[key] += prob
        trees.setdefault(key, t)
    return ExactLaw(n, dict(probs), trees)


def law_difference(a: ExactLaw, b: ExactLaw) -> Fraction:
    keys = set(a.probs) | set(b.probs)
    return max((abs(a.probs.get(k, 0) - b.probs.get(k, 0)) for k in keys), default=Fraction(0))


# ---------------------------------------------------------------------------
# verification


def _shape_laws(p: ModelParams, n: int) -> dict:
    return {m: exact_law(p, m, bound=max(n, DEFAULT_BOUND)).shapes() for m in range(1, n)}


def _ways(codes) -> int:
    """Distinct assignments of a multiset of child shapes to exchangeable
    blocks of equal size."""
    out = 1
    by_size = defaultdict(list)
    for code in codes:
        by_size[code.count("o")].append(code)
    for group in by_size.values():
        out *= math.factorial(len(group))
        for r in Counter(group).values():
            out //= math.factorial(r)
    return out


def verify_markov_branching(law: ExactLaw, sub_laws: Optional[dict] = None) -> Fraction:
    """Max |P(first split, child shapes) - q(first split) prod P(child shape)|,
    with the child laws taken from exact laws at smaller sizes."""
    if law.n < 2:
        return Fraction(0)
    if sub_laws is None:
        if law.params is None:
            raise ValueError("law has no parameters; pass sub_laws")
        sub_laws = _shape_laws(law.params, law.n)
    joint = defaultdict(Fraction)
    for t, p in law.items():
        code = canonical_code(t)
        kids = tuple(sorted(_code_children(code), key=lambda c: (-c.count("o"), c)))
        joint[kids] += p
    split = law.first_split_marginal()
    residual = Fraction(0)
    seen = set()
    for kids, prob in joint.items():
        sizes = tuple(c.count("o") for c in kids)
        expected = split.get(sizes, 0) * _ways(kids)
        for c in kids:
            expected *= sub_laws[c.count("o")].get(c, 0)
        residual = max(residual, abs(prob - expected))
        seen.add(kids)
    # mass the product law puts on child configurations the joint law never produced
    for sizes, q in split.items():
        covered = sum(
            _ways(k) * math.prod(sub_laws[c.count("o")].get(c, 0) for c in k)
            for k in seen
            if tuple(c.count("o") for c in k) == sizes
        )
        residual = max(residual, abs(q - q * covered))
    return residual


def automorphisms(code: str) -> int:
    kids = _code_children(code)
    out = 1
    for c in kids:
        out *= automorphisms(c)
    for r in Counter(kids).values():
        out *= math.factorial(r)
    return out


def verify_exchangeability(law: ExactLaw) -> bool:
    """True iff every labelling of each shape has the same probability."""
    by_shape = defaultdict(list)
    for t, p in law.items():
        if p:
            by_shape[canonical_code(t)].append(p)
    for code, probs in by_shape.items():
        labellings = math.factorial(law.n) // automorphisms(code)
        if len(probs) != labellings or len(set(probs)) != 1:
            return False
    return True


@dataclass(frozen=True)
class SpinalCheck:
    composition: Fraction
    bushes: Fraction
    joint: Fraction

    @property
    def max(self) -> Fraction:
        return max(self.composition, self.bushes, self.joint)


def bush_partition_prob(alpha, gamma, parts) -> Fraction:
    """Law of the subtree sizes inside one bush: the block-size multiset of
    an (alpha, -gamma) Chinese restaurant."""
    if gamma == alpha:
        return Fraction(1 if len(parts) == 1 else 0)
    return eppf_pd(alpha, -gamma, parts) * set_partition_count(parts)


def verify_spinal(law: ExactLaw, sub_laws: Optional[dict] = None) -> SpinalCheck:
    """Compare the law of the spinal decomposition with the regenerative
    composition / bush-partition / independent-subtree product formula."""
    p = law.params
    if p is None:
        raise ValueError("law has no parameters")
    if not 0 < p.gamma and p.alpha < 1:
        raise ValueError("spinal check needs 0 < gamma and alpha < 1")
    if sub_laws is None:
        sub_laws = _shape_laws(p, law.n)
    dec = DecrementMatrix(p.gamma, 1 - p.alpha)
    comp = defaultdict(Fraction)
    bushes = defaultdict(Fraction)
    joint = defaultdict(Fraction)
    for t, prob in law.items():
        sd = spinal_decomposition(t)
        comp[sd.bush_sizes] += prob
        bushes[(sd.bush_sizes, sd.parts)] += prob
        codes = tuple(tuple(sorted(canonical_code(s) for s in bush)) for bush in sd.subtrees)
        joint[(sd.bush_sizes, codes)] += prob

    comp_res = max(abs(v - dec.composition_prob(c)) for c, v in comp.items())
    comp_res = max(comp_res, abs(1 - sum(dec.composition_prob(c) for c in comp)))

    bush_res = Fraction(0)
    for (sizes, parts), v in bushes.items():
        expected = dec.composition_prob(sizes)
        for part in parts:
            expected *= bush_partition_prob(p.alpha, p.gamma, part)
        bush_res = max(bush_res, abs(v - expected))

    joint_res = Fraction(0)
    for (sizes, codes), v in joint.items():
        expected = dec.composition_prob(sizes)
        for bush in codes:
            bush_sizes = tuple(sorted((c.count("o") for c in bush), reverse=True))
            expected *= bush_partition_prob(p.alpha, p.gamma, bush_sizes) * _ways(bush)
            for c in bush:
                expected *= sub_laws[c.count("o")].get(c, 0)
        joint_res = max(joint_res, abs(v - expected))
    return SpinalCheck(comp_res, bush_res, joint_res)


def deletion_shape_law(law: ExactLaw) -> dict:
    """Shape law of the tree after deleting a uniformly chosen leaf."""
    out = defaultdict(Fraction)
    share = Fraction(1, law.n)
    for t, p in law.items():
        for i in range(1, law.n + 1):
            out[canonical_code(remove_leaf(t, i))] += p * share
    return dict(out)


def joint_deletion_law(law: ExactLaw) -> dict:
    """Law of (shape after uniform leaf deletion, shape)."""
    out = defaultdict(Fraction)
    share = Fraction(1, law.n)
    for t, p in law.items():
        code = canonical_code(t)
        for i in range(1, law.n + 1):
            out[(canonical_code(remove_leaf(t, i)), code)] += p * share
    return dict(out)


def joint_growth_law(p: ModelParams, n: int) -> dict:
    """Law of (shape at n-1 leaves, shape at n leaves) along one growth run."""
    prev = exact_law(p, n - 1, bound=max(n, DEFAULT_BOUND))
    out = defaultdict(Fraction)
    for t, prob in prev.items():
        before = canonical_code(t)
        for w, s in step_options(t, p):
            out[(before, canonical_code(s))] += prob * w
    return dict(out)


def strong_consistency_residual(p: ModelParams, n: int) -> Fraction:
    a = joint_deletion_law(exact_law(p, n, bound=max(n, DEFAULT_BOUND)))
    b = joint_growth_law(p, n)
    return max(abs(a.get(k, 0) - b.get(k, 0)) for k in set(a) | set(b))
