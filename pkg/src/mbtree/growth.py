"""Alpha-gamma growth and its coloured binary construction.

At each step every leaf edge has weight ``1-alpha``, every other edge (the
root edge included) has weight ``gamma`` and a branch point with ``c``
children has weight ``(c-1)*alpha - gamma``.  The new leaf is put on the
chosen edge (creating a new binary branch point) or attached to the chosen
branch point.  The weights add up to ``n - alpha``.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Optional

from .numerics import Scalar, is_exact, to_scalar
from .streams import RngStream
from .trees import ROOT, LabelledTree

LEAF_EDGE = "leaf_edge"
INNER_EDGE = "edge"
VERTEX = "vertex"

RED = "red"
BLUE = "blue"


@dataclass(frozen=True)
class ModelParams:
    alpha: Scalar
    gamma: Scalar

    def __post_init__(self):
        a = to_scalar(self.alpha)
        g = to_scalar(self.gamma)
        if is_exact(a) != is_exact(g):
            a, g = float(a), float(g)
        object.__setattr__(self, "alpha", a)
        object.__setattr__(self, "gamma", g)
        if not 0 <= g <= a <= 1:
            raise ValueError(f"need 0 <= gamma <= alpha <= 1, got alpha={a}, gamma={g}")

    @property
    def exact(self) -> bool:
        return is_exact(self.alpha, self.gamma)


@dataclass(frozen=True)
class WeightTable:
    """Weighted insertion sites in a fixed traversal order: leaf edges by
    label, then inner edges and branch points in depth-first preorder."""

    entries: tuple  # (kind, node, weight)

    @property
    def total(self) -> Scalar:
        return sum((w for _, _, w in self.entries), 0 * self.entries[0][2])

    def by_kind(self, kind: str) -> list:
        return [e for e in self.entries if e[0] == kind]


def weights(t: LabelledTree, p: ModelParams) -> WeightTable:
    if t.n < 2:
        raise ValueError("weights are defined for trees with at least 2 leaves")
    one = Fraction(1) if p.exact else 1.0
    entries = [(LEAF_EDGE, t.leaf_node[i], one - p.alpha) for i in range(1, t.n + 1)]
    for v in t.preorder():
        if v == ROOT or t.label[v]:
            continue
        entries.append((INNER_EDGE, v, p.gamma))
        entries.append((VERTEX, v, (len(t.children[v]) - 1) * p.alpha - p.gamma))
    return WeightTable(tuple(entries))


def _apply(t: LabelledTree, kind: str, node: int) -> LabelledTree:
    s = t.copy()
    if kind == VERTEX:
        s.attach_to_vertex(node, t.n + 1)
    else:
        s.insert_on_edge(node, t.n + 1)
    return s


def step_options(t: LabelledTree, p: ModelParams) -> Iterator[tuple]:
    """All (probability, next tree) pairs of one growth step with positive
    probability.  Exact when ``p`` is."""
    if t.n == 1:
        yield (Fraction(1) if p.exact else 1.0), LabelledTree.cherry()
        return
    table = weights(t, p)
    total = table.total
    for kind, node, w in table.entries:
        if w:
            yield w / total, _apply(t, kind, node)


def grow_step(t: LabelledTree, p: ModelParams, rng: RngStream) -> LabelledTree:
    if t.n == 1:
        return LabelledTree.cherry()
    table = weights(t, p)
    kind, node, _ = table.entries[rng.choice([w for _, _, w in table.entries])]
    return _apply(t, kind, node)


class TreeGrower:
    """In-place sampler with O(1) work per leaf.

    A uniform on ``[0, n - alpha)`` first lands on a leaf edge (mass
    ``n(1-alpha)``) or on the pooled branch-point mass ``(n-1)alpha``.  The
    latter is split into ``c-1`` slots of mass ``alpha`` per branch point, and
    a second uniform sends ``gamma`` of the chosen point's mass to the edge
    above it and the rest to the point itself.
    """

    def __init__(self, p: ModelParams, rng: RngStream, start: Optional[LabelledTree] = None):
        self.alpha = float(p.alpha)
        self.gamma = float(p.gamma)
        self.rng = rng
        self.tree = LabelledTree.cherry() if start is None else start.copy()
        self.slots = []
        for v in self.tree.preorder():
            if v != ROOT and not self.tree.label[v]:
                self.slots.extend([v] * (len(self.tree.children[v]) - 1))

    def step(self) -> None:
        t = self.tree
        n = t.n
        a = self.alpha
        x = self.rng.uniform() * (n - a)
        leaf_mass = n * (1.0 - a)
        if x < leaf_mass:
            label = min(int(x / (1.0 - a)) + 1, n)
            b = t.insert_on_edge(t.leaf_node[label], n + 1)
            self.slots.append(b)
            return
        idx = min(int((x - leaf_mass) / a), len(self.slots) - 1)
        v = self.slots[idx]
        mass = (len(t.children[v]) - 1) * a
        if self.rng.uniform() * mass < self.gamma:
            self.slots.append(t.insert_on_edge(v, n + 1))
        else:
            t.attach_to_vertex(v, n + 1)
            self.slots.append(v)

    def grow_to(self, n: int) -> LabelledTree:
        while self.tree.n < n:
            self.step()
        return self.tree


def grow(n: int, p: ModelParams, rng: RngStream) -> LabelledTree:
    if n < 1:
        raise ValueError("n must be at least 1")
    if n == 1:
        return LabelledTree.single()
    return TreeGrower(p, rng).grow_to(n)


# ---------------------------------------------------------------------------
# coloured binary growth


class ColouredTree:
    """Binary tree whose inner edges (including the root edge) carry a colour,
    stored on the node below the edge."""

    __slots__ = ("tree", "colour")

    def __init__(self, tree: LabelledTree, colour: dict):
        self.tree = tree
        self.colour = colour

    @classmethod
    def cherry(cls) -> "ColouredTree":
        t = LabelledTree.cherry()
        return cls(t, {t.top: BLUE})

    def copy(self) -> "ColouredTree":
        return ColouredTree(self.tree.copy(), dict(self.colour))

    def red_edges(self) -> int:
        return sum(1 for c in self.colour.values() if c == RED)

    def key(self) -> tuple:
        from .trees import serialize

        low = self.tree.min_labels()
        count = self.tree.leaf_counts()
        marks = tuple(sorted((low[v], count[v], c) for v, c in self.colour.items()))
        return serialize(self.tree), marks


def _check_c(c) -> Scalar:
    c = to_scalar(c)
    if not 0 <= c <= 1:
        raise ValueError(f"colour probability must lie in [0,1], got {c}")
    return c


def colour_step_options(tc: ColouredTree, alpha, c) -> Iterator[tuple]:
    """(probability, next coloured tree) pairs under Ford weights."""
    alpha = to_scalar(alpha)
    c = _check_c(c)
    t = tc.tree
    exact = is_exact(alpha, c)
    one = Fraction(1) if exact else 1.0
    total = t.n - alpha
    for v in t.preorder():
        if v == ROOT:
            continue
        leaf = bool(t.label[v])
        w = (one - alpha) if leaf else alpha
        if not w:
            continue
        if leaf:
            outcomes = [(one, BLUE, None)]
        elif tc.colour[v] == RED:
            outcomes = [(one, RED, RED)]
        else:
            outcomes = [(c, BLUE, RED), (one - c, BLUE, BLUE)]
        for q, upper, lower in outcomes:
            if not q:
                continue
            s = tc.copy()
            b = s.tree.insert_on_edge(v, t.n + 1)
            s.colour[b] = upper
            if lower is not None:
                s.colour[v] = lower
            yield w / total * q, s


def colour_grow_step(tc: ColouredTree, alpha, c, rng: RngStream) -> ColouredTree:
    options = list(colour_step_options(tc, alpha, c))
    i = rng.choice([float(w) for w, _ in options])
    return options[i][1]


def colour_grow(n: int, alpha, c, rng: RngStream) -> ColouredTree:
    if n < 2:
        raise ValueError("coloured growth starts from the 2-leaf tree")
    alpha = float(to_scalar(alpha))
    c = float(_check_c(c))
    tc = ColouredTree.cherry()
    t = tc.tree
    inner = list(tc.colour)
    while t.n < n:
        m = t.n
        x = rng.uniform() * (m - alpha)
        if x < m * (1 - alpha):
            label = min(int(x / (1 - alpha)) + 1, m)
            b = t.insert_on_edge(t.leaf_node[label], m + 1)
            tc.colour[b] = BLUE
            inner.append(b)
            continue
        v = inner[min(int((x - m * (1 - alpha)) / alpha), len(inner) - 1)]
        b = t.insert_on_edge(v, m + 1)
        inner.append(b)
        if tc.colour[v] == RED:
            tc.colour[b] = RED
        else:
            tc.colour[b] = BLUE
            tc.colour[v] = RED if rng.uniform() < c else BLUE
    return tc


def crush(tc: ColouredTree) -> LabelledTree:
    """Contract every red edge."""
    t = tc.tree
    parent = [-1]
    children = [[]]
    label = [0]
    stack = [(ROOT, 0)]
    while stack:
        host, new = stack.pop()
        pending = list(t.children[host])
        while pending:
            c = pending.pop()
            if tc.colour.get(c) == RED:
                pending.extend(t.children[c])
                continue
            node = len(parent)
            parent.append(new)
            children.append([])
            label.append(t.label[c])
            children[new].append(node)
            stack.append((c, node))
    return LabelledTree(parent, children, label)
