"""Real trees carried by rooted plane trees with real edge lengths.

A contour path (non-negative excursion) encodes a rooted plane tree: branch
points are the local minima separating sub-excursions, and the tree metric is

    d(s, t) = f(s) + f(t) - 2 inf f on [s ^ t, s v t].

This module converts both ways, prunes a tree at depth ``h`` below its leaves
(every point must keep a leaf at distance >= h above it), and produces leaf
profiles (leaf heights plus pairwise ancestor heights) that certify two trees
are isometric without solving graph isomorphism.
"""

from __future__ import annotations

import json

import numpy as np

from .paths import DomainError, ExcursionPath

#: below this relative size an edge is contracted away by canonicalization
_ZERO_EDGE_TOL = 1e-12


class TreeNode:
    """Node of a rooted ordered tree.

    ``edge_length`` is the length of the edge to the parent (0 for the
    root).  ``span`` optionally records how the contour path traverses the
    edge above this node: a 4-tuple of breakpoint indices (up_i0, up_i1,
    dn_i0, dn_i1) delimiting the monotone runs that ascend and descend it.
    """

    __slots__ = ("edge_length", "children", "span")

    def __init__(self, edge_length=0.0, children=None, span=None):
        self.edge_length = float(edge_length)
        self.children = children if children is not None else []
        self.span = span

    def is_leaf(self):
        return not self.children


class PlaneTree:
    """Rooted ordered tree with positive real edge lengths."""

    def __init__(self, root=None, canonical=False):
        self.root = root if root is not None else TreeNode(0.0)
        if self.root.edge_length != 0.0:
            raise DomainError("root edge length must be 0")
        if not canonical:
            _canonicalize_tree(self)

    # -- traversals ------------------------------------------------------

    def iter_nodes(self):
        """Depth-first (exploration order) iteration of (node, height)."""
        stack = [(self.root, 0.0)]
        while stack:
            node, height = stack.pop()
            yield node, height
            for child in reversed(node.children):
                stack.append((child, height + child.edge_length))

    def leaves(self):
        """Leaves with their heights, in exploration order."""
        return [(n, y) for n, y in self.iter_nodes() if n.is_leaf()]

    def node_count(self):
        return sum(1 for _ in self.iter_nodes())

    def height(self):
        return max(y for _, y in self.iter_nodes())

    def __repr__(self):
        return "PlaneTree(%d nodes, length %g)" % (
            self.node_count(), total_branch_length(self)
        )


def _canonicalize_tree(tree):
    """Contract near-zero edges and merge pass-through (single child) nodes."""
    scale = 1.0
    heights = [y for _, y in tree.iter_nodes()]
    if heights:
        scale = max(1.0, max(heights))
    tol = _ZERO_EDGE_TOL * scale

    def clean(node):
        # children first (iterative post-order)
        stack = [(node, False)]
        while stack:
            n, done = stack.pop()
            if not done:
                stack.append((n, True))
                for c in n.children:
                    stack.append((c, False))
                continue
            new_children = []
            for c in n.children:
                if c.edge_length <= tol:
                    # zero edge: splice grandchildren in place; a childless
                    # zero stub disappears entirely
                    new_children.extend(c.children)
                else:
                    new_children.append(c)
            n.children = new_children

    clean(tree.root)

    # merge chains a-(x)-b-(y)-c where b is a pass-through interior node
    def merge(node):
        stack = [node]
        while stack:
            n = stack.pop()
            for i, c in enumerate(n.children):
                while len(c.children) == 1:
                    only = c.children[0]
                    only.edge_length += c.edge_length
                    n.children[i] = only
                    c = only
                stack.append(c)

    merge(tree.root)
    for n, _ in tree.iter_nodes():
        if n is not tree.root and n.edge_length <= 0:
            raise DomainError("canonical tree has a non-positive edge")
    return tree


# -- path-level tree semantics --------------------------------------------


def tree_distance(f, s, t):
    """Metric induced by the contour: f(s) + f(t) - 2 min over [s^t, s v t]."""
    lo, hi = (s, t) if s <= t else (t, s)
    m, _ = f.inf_on(lo, hi)
    return float(f.evaluate(s) + f.evaluate(t) - 2.0 * m)


def mrca_height(f, s, t):
    """Height of the deepest common ancestor of the points visited at s, t."""
    lo, hi = (s, t) if s <= t else (t, s)
    m, _ = f.inf_on(lo, hi)
    return float(m)


# -- contour -> tree -------------------------------------------------------


def contour_to_tree(f):
    """Decode a contour path into its plane tree.

    The path is scanned once.  Maximal rising runs open new edges, maximal
    falling runs close them; a valley strictly between two node heights
    splits the open edge with a new branch point.  Flat stretches collapse
    to the point they rest at.  Each created node carries a ``span``: the
    breakpoint index ranges of the monotone runs ascending and descending
    its edge (used to place marks on the tree, see :mod:`skotrim.stochastic`).
    """
    if not isinstance(f, ExcursionPath):
        f = ExcursionPath.from_path(f)
    t, v = f.times, f.values
    n = t.size
    root = TreeNode(0.0)
    if n == 1:
        return PlaneTree(root, canonical=True)

    # spine of open nodes with their heights; spans filled on close
    spine = [(root, 0.0)]
    k = 0
    while k < n - 1:
        if v[k + 1] > v[k]:  # rising run [k, j]
            j = k
            while j + 1 < n and v[j + 1] >= v[j]:
                j += 1
            node = TreeNode(v[j] - spine[-1][1], span=[k, j, -1, -1])
            spine[-1][0].children.append(node)
            spine.append((node, float(v[j])))
            k = j
        elif v[k + 1] < v[k]:  # falling run [k, j] down to a valley
            j = k
            while j + 1 < n and v[j + 1] <= v[j]:
                j += 1
            y = float(v[j])
            while spine[-1][1] > y:
                node, height = spine.pop()
                below = spine[-1][1]
                if below >= y:
                    node.span[2] = k
                    node.span[3] = j
                else:
                    # valley lands inside this edge: insert a branch point
                    branch = TreeNode(y - below, span=list(node.span))
                    node.edge_length = height - y
                    node.span[2] = k
                    node.span[3] = j
                    parent = spine[-1][0]
                    parent.children[-1] = branch
                    branch.children.append(node)
                    spine.append((branch, y))
                    break
            k = j
        else:  # flat run
            k += 1
    return PlaneTree(root, canonical=True)


def tree_to_contour(tree):
    """Unit-speed left-to-right contour of a canonical tree.

    Total duration is twice the total branch length; decoding the result
    with :func:`contour_to_tree` recovers the tree.
    """
    times = [0.0]
    values = [0.0]
    clock = 0.0
    # stack holds (node, height, next-child-index)
    stack = [(tree.root, 0.0, 0)]
    while stack:
        node, height, ci = stack.pop()
        if ci < len(node.children):
            stack.append((node, height, ci + 1))
            child = node.children[ci]
            clock += child.edge_length
            times.append(clock)
            values.append(height + child.edge_length)
            stack.append((child, height + child.edge_length, 0))
        elif stack:
            parent_height = stack[-1][1]
            clock += height - parent_height
            times.append(clock)
            values.append(parent_height)
    return ExcursionPath(times, values)


# -- trimming --------------------------------------------------------------


def subtree_max_heights(tree):
    """Dict node -> greatest leaf height in its subtree (heights from root)."""
    out = {}
    order = list(tree.iter_nodes())
    for node, height in reversed(order):
        if node.is_leaf():
            out[id(node)] = height
        else:
            out[id(node)] = max(out[id(c)] for c in node.children)
    return out


def trim(tree, h):
    """Keep the points having a leaf at distance at least ``h`` above them.

    Edges are cut at fractional points, so new leaves appear exactly at
    height (max leaf height in the subtree) - h.  Returns ``None`` when the
    whole tree is shallower than h (nothing survives); a tree whose height
    is exactly h trims to the bare root.
    """
    if h <= 0:
        raise DomainError("trim requires h > 0")
    maxh = subtree_max_heights(tree)
    top = maxh[id(tree.root)]
    scale = max(1.0, abs(top), h)
    tol = _ZERO_EDGE_TOL * scale
    if top < h - tol:
        return None

    new_root = TreeNode(0.0)
    stack = [(tree.root, 0.0, new_root)]
    while stack:
        node, height, copy = stack.pop()
        for child in node.children:
            child_h = height + child.edge_length
            cut_level = maxh[id(child)] - h
            if cut_level >= child_h - tol:
                twin = TreeNode(child.edge_length)
                copy.children.append(twin)
                stack.append((child, child_h, twin))
            elif cut_level > height + tol:
                copy.children.append(TreeNode(cut_level - height))
            # cut at or below this node's height: nothing survives the edge
    return PlaneTree(new_root)


def total_branch_length(tree):
    """Sum of all edge lengths."""
    return float(sum(n.edge_length for n, _ in tree.iter_nodes()))


# -- leaf profiles ---------------------------------------------------------


class LeafProfile:
    """Leaf heights in exploration order plus pairwise ancestor heights.

    Two finite-leaf rooted real trees are isometric (by a root preserving
    isometry) exactly when their profiles agree, which reduces tree
    comparison to comparing a vector and a matrix.
    """

    def __init__(self, heights, mrca):
        self.heights = np.asarray(heights, dtype=np.float64)
        self.mrca = np.asarray(mrca, dtype=np.float64)
        if self.mrca.shape != (self.heights.size, self.heights.size):
            raise DomainError("mrca matrix shape does not match leaf count")

    def __len__(self):
        return int(self.heights.size)

    def eliminate_degenerate(self, tol=1e-9):
        """Drop candidate leaves lying on another candidate's ancestral line.

        A candidate i is degenerate when mrca(i, j) reaches height(i) for
        some other j, i.e. i is an ancestor of j.  Mutual hits (duplicate
        visits of the same point) keep the earliest candidate.
        """
        n = len(self)
        drop = [False] * n
        for i in range(n):
            for j in range(n):
                if i == j or drop[j]:
                    continue
                if self.mrca[i, j] >= self.heights[i] - tol:
                    anc_of_each_other = self.mrca[j, i] >= self.heights[j] - tol
                    if anc_of_each_other and i < j:
                        continue  # duplicates: keep the earlier one
                    drop[i] = True
                    break
        keep = [i for i in range(n) if not drop[i]]
        return LeafProfile(self.heights[keep], self.mrca[np.ix_(keep, keep)])


def leaf_profile(source, leaf_times=None):
    """Profile of a tree, or of a path observed at given leaf visit times.

    With a :class:`PlaneTree`, leaves are read in exploration order.  With a
    path, ``leaf_times`` are the visit times and the ancestor height of two
    leaves is the path minimum between their visits.
    """
    if isinstance(source, PlaneTree):
        return _profile_of_tree(source)
    if leaf_times is None:
        raise DomainError("leaf_profile on a path needs leaf_times")
    f = source
    times = sorted(float(u) for u in leaf_times)
    heights = [f.evaluate(u) for u in times]
    n = len(times)
    mrca = np.zeros((n, n))
    consec = [f.inf_on(times[i], times[i + 1])[0] for i in range(n - 1)]
    for i in range(n):
        mrca[i, i] = heights[i]
        running = heights[i]
        for j in range(i + 1, n):
            running = min(running, consec[j - 1])
            mrca[i, j] = mrca[j, i] = running
    return LeafProfile(heights, mrca)


def _profile_of_tree(tree):
    heights = []
    consec = []  # ancestor height between consecutive leaves
    # iterative DFS tracking the minimum height popped to between leaves
    pending_min = None
    stack = [(tree.root, 0.0, 0)]
    while stack:
        node, height, ci = stack.pop()
        if node.is_leaf():
            if heights:
                consec.append(pending_min)
            heights.append(height)
            pending_min = height
            continue
        if ci < len(node.children):
            stack.append((node, height, ci + 1))
            child = node.children[ci]
            if ci > 0 and pending_min is not None:
                pending_min = min(pending_min, height)
            stack.append((child, height + child.edge_length, 0))
    n = len(heights)
    mrca = np.zeros((n, n))
    for i in range(n):
        mrca[i, i] = heights[i]
        running = heights[i]
        for j in range(i + 1, n):
            running = min(running, consec[j - 1])
            mrca[i, j] = mrca[j, i] = running
    return LeafProfile(heights, mrca)


def profiles_equal(a, b, tol=1e-9):
    """True when the profiles agree after degenerate-leaf elimination."""
    a = a.eliminate_degenerate(tol)
    b = b.eliminate_degenerate(tol)
    if len(a) != len(b):
        return False
    if np.max(np.abs(a.heights - b.heights), initial=0.0) > tol:
        return False
    if a.mrca.size and np.max(np.abs(a.mrca - b.mrca)) > tol:
        return False
    return True


def trees_isometric(t1, t2, tol=1e-9):
    """Root preserving isometry test via leaf profiles."""
    return profiles_equal(leaf_profile(t1), leaf_profile(t2), tol=tol)


def trees_structurally_equal(t1, t2, tol=1e-9):
    """Same shape and edge lengths (plane structure included)."""
    stack = [(t1.root, t2.root)]
    while stack:
        a, b = stack.pop()
        if len(a.children) != len(b.children):
            return False
        if abs(a.edge_length - b.edge_length) > tol:
            return False
        stack.extend(zip(a.children, b.children))
    return True


# -- JSON interface --------------------------------------------------------


def tree_to_json_obj(tree):
    """Recursive {"edge": length, "children": [...]} object (root edge 0)."""
    memo = {}
    for node, _ in reversed(list(tree.iter_nodes())):
        memo[id(node)] = {
            "edge": float(node.edge_length),
            "children": [memo[id(c)] for c in node.children],
        }
    return memo[id(tree.root)]


def tree_from_json_obj(obj):
    def build(o):
        if not isinstance(o, dict) or "edge" not in o:
            raise DomainError("tree JSON nodes need an 'edge' field")
        edge = float(o["edge"])
        if edge < 0:
            raise DomainError("tree JSON has a negative edge length")
        node = TreeNode(edge)
        for c in o.get("children", []):
            node.children.append(build(c))
        return node

    root = build(obj)
    if root.edge_length != 0.0:
        raise DomainError("root edge length must be 0")
    return PlaneTree(root)


def tree_to_json_file(tree, filename):
    with open(filename, "w", encoding="utf-8") as fh:
        json.dump(tree_to_json_obj(tree), fh)
        fh.write("\n")


def tree_from_json_file(filename):
    with open(filename, "r", encoding="utf-8") as fh:
        return tree_from_json_obj(json.load(fh))
