"""Rooted multifurcating trees with labelled leaves.

Trees are stored as parent/children arrays.  Node 0 is the root, which has
exactly one child; every other non-leaf node (a branch point) has at least two
children.  Leaves carry the labels 1..n.  Public operations return new trees;
the ``insert_on_edge``/``attach_to_vertex`` mutators exist for the samplers and
the enumeration code, which manage their own copies.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

ROOT = 0


class ParseError(ValueError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} at position {position}")
        self.position = position


class TreeError(ValueError):
    pass


class LabelledTree:
    __slots__ = ("parent", "children", "label", "leaf_node", "lengths")

    def __init__(self, parent, children, label, lengths=None):
        self.parent = parent
        self.children = children
        self.label = label
        n = sum(1 for x in label if x)
        self.leaf_node = [0] * (n + 1)
        for node, lab in enumerate(label):
            if lab:
                if lab > n or self.leaf_node[lab]:
                    raise TreeError(f"leaf labels must be exactly 1..{n}")
                self.leaf_node[lab] = node
        # node -> length of the edge above it; None means unit lengths
        self.lengths = lengths

    # -- construction -----------------------------------------------------
    @classmethod
    def single(cls) -> "LabelledTree":
        return cls([-1, ROOT], [[1], []], [0, 1])

    @classmethod
    def cherry(cls) -> "LabelledTree":
        return cls([-1, 2, ROOT, 2], [[2], [], [1, 3], []], [0, 1, 0, 2])

    def copy(self) -> "LabelledTree":
        t = LabelledTree.__new__(LabelledTree)
        t.parent = list(self.parent)
        t.children = [list(c) for c in self.children]
        t.label = list(self.label)
        t.leaf_node = list(self.leaf_node)
        t.lengths = None if self.lengths is None else dict(self.lengths)
        return t

    # -- basic queries ----------------------------------------------------
    @property
    def n(self) -> int:
        return len(self.leaf_node) - 1

    @property
    def top(self) -> int:
        return self.children[ROOT][0]

    def is_leaf(self, node: int) -> bool:
        return self.label[node] > 0

    def branch_points(self) -> list:
        """Branch points in depth-first preorder."""
        return [v for v in self.preorder() if v != ROOT and not self.label[v]]

    def edge_length(self, node: int) -> int:
        if self.lengths is None:
            return 1
        return self.lengths.get(node, 1)

    def postorder(self, start: int = ROOT) -> list:
        out = []
        stack = [start]
        while stack:
            v = stack.pop()
            out.append(v)
            stack.extend(self.children[v])
        out.reverse()
        return out

    def min_labels(self) -> list:
        low = [0] * len(self.parent)
        for v in self.postorder():
            if self.label[v]:
                low[v] = self.label[v]
            elif self.children[v]:
                low[v] = min(low[c] for c in self.children[v])
        return low

    def preorder(self, start: int = ROOT, low: Optional[list] = None) -> list:
        """Depth-first preorder, children visited by increasing smallest
        leaf label."""
        if low is None:
            low = self.min_labels()
        out = []
        stack = [start]
        while stack:
            v = stack.pop()
            out.append(v)
            stack.extend(sorted(self.children[v], key=low.__getitem__, reverse=True))
        return out

    def leaf_counts(self) -> list:
        count = [0] * len(self.parent)
        for v in self.postorder():
            if self.label[v]:
                count[v] = 1
            else:
                count[v] = sum(count[c] for c in self.children[v])
        return count

    def leaves_below(self, node: int) -> list:
        return sorted(self.label[v] for v in self.postorder(node) if self.label[v])

    def edge_count(self) -> int:
        return len(self.parent) - 1

    def validate(self) -> None:
        if self.parent[ROOT] != -1 or len(self.children[ROOT]) != 1:
            raise TreeError("root must have exactly one child")
        seen = 0
        for v in self.postorder():
            seen += 1
            for c in self.children[v]:
                if self.parent[c] != v:
                    raise TreeError(f"parent/child mismatch at node {c}")
            if v == ROOT:
                continue
            if self.label[v]:
                if self.children[v]:
                    raise TreeError(f"leaf {self.label[v]} has children")
            elif len(self.children[v]) < 2:
                raise TreeError(f"branch point {v} has fewer than two children")
        if seen != len(self.parent):
            raise TreeError("tree has unreachable nodes")
        if sorted(x for x in self.label if x) != list(range(1, self.n + 1)):
            raise TreeError("leaf labels are not 1..n")

    # -- in-place growth --------------------------------------------------
    def insert_on_edge(self, node: int, label: int) -> int:
        """Subdivide the edge above ``node`` with a new branch point carrying
        a new leaf ``label``.  Returns the new branch point."""
        p = self.parent[node]
        b = len(self.parent)
        leaf = b + 1
        siblings = self.children[p]
        siblings[siblings.index(node)] = b
        self.parent.append(p)
        self.children.append([node, leaf])
        self.label.append(0)
        self.parent[node] = b
        self.parent.append(b)
        self.children.append([])
        self.label.append(label)
        self._register_leaf(label, leaf)
        return b

    def attach_to_vertex(self, node: int, label: int) -> int:
        leaf = len(self.parent)
        self.parent.append(node)
        self.children.append([])
        self.label.append(label)
        self.children[node].append(leaf)
        self._register_leaf(label, leaf)
        return leaf

    def _register_leaf(self, label: int, node: int) -> None:
        if label != len(self.leaf_node):
            raise TreeError(f"new leaf must be labelled {len(self.leaf_node)}")
        self.leaf_node.append(node)

    # -- identity ---------------------------------------------------------
    def __eq__(self, other):
        if not isinstance(other, LabelledTree):
            return NotImplemented
        return serialize(self) == serialize(other)

    def __hash__(self):
        return hash(serialize(self))

    def __repr__(self):
        return f"LabelledTree({serialize(self)!r})"


# ---------------------------------------------------------------------------
# text format


def serialize(t: LabelledTree, lengths: Optional[bool] = None) -> str:
    """Newick-like text: leaves are labels, internal nodes ``(a,b,...)``,
    optional ``:len`` after every edge, terminated by ``;``.  Children are
    written by increasing smallest label, so equal trees serialise equally."""
    if lengths is None:
        lengths = t.lengths is not None
    low = t.min_labels()
    out = []
    stack = [t.top]
    while stack:
        item = stack.pop()
        if isinstance(item, str):
            out.append(item)
            continue
        suffix = f":{t.edge_length(item)}" if lengths else ""
        if t.label[item]:
            out.append(f"{t.label[item]}{suffix}")
            continue
        out.append("(")
        stack.append(")" + suffix)
        kids = sorted(t.children[item], key=low.__getitem__)
        for i, c in enumerate(reversed(kids)):
            stack.append(c)
            if i < len(kids) - 1:
                stack.append(",")
    out.append(";")
    return "".join(out)


def parse(text: str) -> LabelledTree:
    parent = [-1]
    children = [[]]
    label = [0]
    lengths = {}
    stack = [ROOT]
    pos = 0
    size = len(text)
    expect_item = True
    last = None

    def skip(p):
        while p < size and text[p].isspace():
            p += 1
        return p

    while True:
        pos = skip(pos)
        if pos >= size:
            raise ParseError("unexpected end of input", pos)
        ch = text[pos]
        if expect_item:
            if ch == "(":
                v = len(parent)
                parent.append(stack[-1])
                children.append([])
                label.append(0)
                children[stack[-1]].append(v)
                stack.append(v)
                pos += 1
            elif ch.isdigit():
                start = pos
                while pos < size and text[pos].isdigit():
                    pos += 1
                lab = int(text[start:pos])
                if lab < 1:
                    raise ParseError("leaf labels start at 1", start)
                v = len(parent)
                parent.append(stack[-1])
                children.append([])
                label.append(lab)
                children[stack[-1]].append(v)
                last = v
                expect_item = False
            else:
                raise ParseError(f"expected '(' or a leaf label, found {ch!r}", pos)
            continue
        if ch == ":":
            pos = skip(pos + 1)
            start = pos
            while pos < size and text[pos].isdigit():
                pos += 1
            if start == pos:
                raise ParseError("expected an edge length", start)
            value = int(text[start:pos])
            if value < 1:
                raise ParseError("edge lengths must be positive", start)
            lengths[last] = value
        elif ch == ",":
            if len(stack) < 2:
                raise ParseError("',' outside parentheses", pos)
            expect_item = True
            pos += 1
        elif ch == ")":
            if len(stack) < 2:
                raise ParseError("unbalanced ')'", pos)
            v = stack.pop()
            if len(children[v]) < 2:
                raise ParseError("internal node needs at least two children", pos)
            last = v
            pos += 1
        elif ch == ";":
            if len(stack) != 1:
                raise ParseError("unclosed '('", pos)
            if len(children[ROOT]) != 1:
                raise ParseError("expected a single top-level subtree", pos)
            if skip(pos + 1) != size:
                raise ParseError("trailing characters after ';'", pos + 1)
            break
        else:
            raise ParseError(f"unexpected character {ch!r}", pos)
    labs = sorted(x for x in label if x)
    if labs != list(range(1, len(labs) + 1)):
        raise ParseError("leaf labels must be exactly 1..n", 0)
    return LabelledTree(parent, children, label, lengths or None)


# ---------------------------------------------------------------------------
# shapes


def canonical_code(t: LabelledTree, start: Optional[int] = None) -> str:
    """Label-free isomorphism key: a leaf is ``o``; a branch point is ``(``,
    its children's codes in lexicographic order, then ``)``."""
    if start is None:
        start = t.top
    code = {}
    for v in t.postorder(start):
        if t.label[v]:
            code[v] = "o"
        else:
            code[v] = "(" + "".join(sorted(code[c] for c in t.children[v])) + ")"
    return code[start]


def shape_from_code(code: str) -> LabelledTree:
    """A labelled representative of a shape (leaves labelled in reading order)."""
    text = []
    count = 0
    prev = ""
    for ch in code:
        if ch == "o":
            count += 1
            if prev in ("o", ")"):
                text.append(",")
            text.append(str(count))
        elif ch == "(":
            if prev in ("o", ")"):
                text.append(",")
            text.append("(")
        else:
            text.append(")")
        prev = ch
    return parse("".join(text) + ";")


def subtree(t: LabelledTree, node: int) -> LabelledTree:
    """The rooted subtree above ``node`` with leaves relabelled by rank."""
    order = t.postorder(node)
    order.reverse()
    index = {v: i + 1 for i, v in enumerate(order)}
    parent = [-1] + [0] * len(order)
    children = [[1]] + [[] for _ in order]
    label = [0] * (len(order) + 1)
    lengths = {} if t.lengths is not None else None
    for v in order:
        i = index[v]
        if v != node:
            parent[i] = index[t.parent[v]]
        children[i] = [index[c] for c in t.children[v]]
        label[i] = t.label[v]
        if lengths is not None:
            lengths[i] = t.edge_length(v)
    _rank_relabel(label)
    return LabelledTree(parent, children, label, lengths)


def _rank_relabel(label: list) -> None:
    ranks = {old: r + 1 for r, old in enumerate(sorted(x for x in label if x))}
    for i, x in enumerate(label):
        if x:
            label[i] = ranks[x]


@dataclass(frozen=True)
class FirstSplit:
    sizes: tuple
    blocks: tuple
    subtrees: tuple = field(compare=False)


def first_split(t: LabelledTree) -> FirstSplit:
    if t.n < 2:
        raise TreeError("the 1-leaf tree has no first split")
    top = t.top
    low = t.min_labels()
    counts = t.leaf_counts()
    kids = sorted(t.children[top], key=lambda c: (-counts[c], low[c]))
    return FirstSplit(
        sizes=tuple(counts[c] for c in kids),
        blocks=tuple(frozenset(t.leaves_below(c)) for c in kids),
        subtrees=tuple(subtree(t, c) for c in kids),
    )


def remove_leaf(t: LabelledTree, label: int) -> LabelledTree:
    """Delete a leaf, suppress a branch point left with one child, and
    relabel the remaining leaves by rank."""
    if not 1 <= label <= t.n:
        raise TreeError(f"no leaf labelled {label}")
    if t.n < 2:
        raise TreeError("cannot remove the only leaf")
    s = t.copy()
    x = s.leaf_node[label]
    p = s.parent[x]
    s.children[p].remove(x)
    s.parent[x] = -2
    if p != ROOT and len(s.children[p]) == 1:
        (c,) = s.children[p]
        gp = s.parent[p]
        siblings = s.children[gp]
        siblings[siblings.index(p)] = c
        s.parent[c] = gp
        if s.lengths is not None:
            s.lengths[c] = s.edge_length(c) + s.edge_length(p)
        s.parent[p] = -2
        s.children[p] = []
    s.label[x] = 0
    return _compact(s)


def _compact(s: LabelledTree) -> LabelledTree:
    keep = [v for v in range(len(s.parent)) if v == ROOT or s.parent[v] >= 0]
    index = {v: i for i, v in enumerate(keep)}
    parent = [index[s.parent[v]] if v != ROOT else -1 for v in keep]
    children = [[index[c] for c in s.children[v]] for v in keep]
    label = [s.label[v] for v in keep]
    _rank_relabel(label)
    lengths = None
    if s.lengths is not None:
        lengths = {index[v]: s.edge_length(v) for v in keep if v != ROOT}
    return LabelledTree(parent, children, label, lengths)


# ---------------------------------------------------------------------------
# reduced trees and spines


@dataclass(frozen=True)
class ReducedTree:
    """Subtree spanned by the root and leaves 1..k with degree-2 vertices
    suppressed.  ``edge_lengths`` are host path lengths: the k leaf edges
    first, then the remaining edges, each group in depth-first preorder."""

    tree: LabelledTree = field(compare=False)
    shape: str
    edge_lengths: tuple
    k: int

    @property
    def inner_edges(self) -> int:
        return len(self.edge_lengths) - self.k

    @property
    def total_length(self) -> int:
        return sum(self.edge_lengths)


def skeleton_marks(t: LabelledTree, k: int) -> list:
    """Boolean per node: is it on a path from the root to one of leaves 1..k."""
    mark = [False] * len(t.parent)
    mark[ROOT] = True
    for lab in range(1, k + 1):
        v = t.leaf_node[lab]
        while not mark[v]:
            mark[v] = True
            v = t.parent[v]
    return mark


def reduced_subtree(t: LabelledTree, k: int) -> ReducedTree:
    if not 1 <= k <= t.n:
        raise TreeError(f"k must lie in 1..{t.n}, got {k}")
    mark = skeleton_marks(t, k)
    parent = [-1]
    children = [[]]
    label = [0]
    lengths = {}
    stack = [(ROOT, 0)]
    while stack:
        host, red = stack.pop()
        for c in t.children[host]:
            if not mark[c]:
                continue
            length = 1
            v = c
            while not t.label[v]:
                nxt = [w for w in t.children[v] if mark[w]]
                if len(nxt) != 1:
                    break
                v = nxt[0]
                length += 1
            node = len(parent)
            parent.append(red)
            children.append([])
            label.append(t.label[v])
            children[red].append(node)
            lengths[node] = length
            if not t.label[v]:
                stack.append((v, node))
    red_tree = LabelledTree(parent, children, label, lengths)
    leaf_edges = []
    other_edges = []
    for v in red_tree.preorder():
        if v == ROOT:
            continue
        (leaf_edges if label[v] else other_edges).append(lengths[v])
    return ReducedTree(red_tree, canonical_code(red_tree), tuple(leaf_edges + other_edges), k)


def spine(t: LabelledTree, leaf: int = 1) -> list:
    """Branch points on the path from the root to ``leaf``, root side first."""
    path = []
    v = t.parent[t.leaf_node[leaf]]
    while v != ROOT:
        path.append(v)
        v = t.parent[v]
    path.reverse()
    return path


@dataclass(frozen=True)
class SpinalDecomposition:
    """Bushes hanging off the spine from the root to leaf 1, listed from the
    root-side spine vertex towards leaf 1."""

    bush_sizes: tuple
    parts: tuple
    subtrees: tuple = field(compare=False)


def spinal_decomposition(t: LabelledTree) -> SpinalDecomposition:
    if t.n < 2:
        raise TreeError("spinal decomposition needs n >= 2")
    counts = t.leaf_counts()
    low = t.min_labels()
    on_spine = set(spine(t))
    on_spine.add(t.leaf_node[1])
    sizes, parts, subs = [], [], []
    for v in spine(t):
        kids = sorted((c for c in t.children[v] if c not in on_spine), key=lambda c: (-counts[c], low[c]))
        sizes.append(sum(counts[c] for c in kids))
        parts.append(tuple(counts[c] for c in kids))
        subs.append(tuple(subtree(t, c) for c in kids))
    return SpinalDecomposition(tuple(sizes), tuple(parts), tuple(subs))
