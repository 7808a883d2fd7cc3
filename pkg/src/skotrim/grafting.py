"""Rebuild a trimmed tree from its boundary-cycle graft data.

The h-cut of a contour path exposes, for each boundary cycle of the
reflection, a branch length X_n and an attachment offset Y_n (distance of
the graft point below the previous leaf).  Growing branches from that data
alone reproduces the pruned tree; :func:`verify_main1` cross-checks the
three independent constructions of it.
"""

from __future__ import annotations

from dataclasses import dataclass

from .paths import DomainError, ExcursionPath
from .reflection import h_cut
from .trees import (
    PlaneTree,
    TreeNode,
    contour_to_tree,
    leaf_profile,
    profiles_equal,
    total_branch_length,
    trim,
)

_TOL = 1e-9


@dataclass(frozen=True)
class GraftSequence:
    """Pairs (X_n, Y_n), n = 1..N, with Y_1 = 0.

    X_n is the length of the n-th grafted branch, Y_n the distance of its
    attachment point below the tip of branch n-1.  Valid sequences keep
    every attachment at non-negative height and on the previous ancestral
    line; zero X_n are allowed as the degenerate boundary case (a branch
    that shrank to a point).
    """

    pairs: tuple

    def __post_init__(self):
        pairs = tuple((float(x), float(y)) for x, y in self.pairs)
        object.__setattr__(self, "pairs", pairs)
        if not pairs:
            return
        if abs(pairs[0][1]) > _TOL:
            raise DomainError("graft 1: Y_1 must be 0, got %r" % (pairs[0][1],))
        height = 0.0
        for n, (x, y) in enumerate(pairs, start=1):
            if x < -_TOL:
                raise DomainError("graft %d: negative branch length %r" % (n, x))
            if y < -_TOL:
                raise DomainError("graft %d: negative offset %r" % (n, y))
            if y > height + _TOL:
                raise DomainError(
                    "graft %d: offset %r reaches below the root (leaf height %r)"
                    % (n, y, height)
                )
            height = height - y + x  # height of the new tip

    def __len__(self):
        return len(self.pairs)


def build_from_grafts(grafts):
    """Grow the tree described by a graft sequence.

    Branch 1 rises from the root.  Branch n is attached on the ancestral
    line of the previous tip, Y_n below it, and placed to the right of the
    existing subtree there; Y_n = 0 continues straight through the tip and
    an attachment strictly inside an edge splits it with a new branch point.
    """
    if not isinstance(grafts, GraftSequence):
        grafts = GraftSequence(tuple(grafts))
    root = TreeNode(0.0)
    if len(grafts) == 0:
        return PlaneTree(root)

    # spine: nodes from the root to the current tip with their heights;
    # the tip-ward child of every spine node is its rightmost child
    spine = [(root, 0.0)]
    tip_height = 0.0
    for n, (x, y) in enumerate(grafts.pairs, start=1):
        attach = 0.0 if n == 1 else max(tip_height - y, 0.0)
        popped = None
        popped_h = 0.0
        while len(spine) > 1 and spine[-1][1] > attach + _TOL:
            popped, popped_h = spine.pop()
        node, height = spine[-1]
        if attach > height + _TOL:
            # strictly inside the edge leading to the last popped node
            mid = TreeNode(attach - height)
            popped.edge_length = popped_h - attach
            mid.children.append(popped)
            node.children[-1] = mid
            spine.append((mid, attach))
            node, height = mid, attach
        branch = TreeNode(max(x, 0.0))
        node.children.append(branch)
        spine.append((branch, height + branch.edge_length))
        tip_height = height + branch.edge_length
    return PlaneTree(root)


def verify_main1(f, h, tol=_TOL):
    """Cross-check the three constructions of the pruned tree.

    A: prune the tree decoded from ``f`` at depth h.
    B: decode the tree of the h-cut of ``f``.
    C: rebuild from the graft data (X_n, Y_n) of the h-cut.

    Returns a report dict.  When the path never rises h above 0 the result
    is the explicit "empty" status rather than a failure.
    """
    if not isinstance(f, ExcursionPath):
        f = ExcursionPath.from_path(f)
    dec = h_cut(f, h)
    trimmed = trim(contour_to_tree(f), h)
    if trimmed is None:
        return {
            "status": "empty",
            "branch_lengths": [0.0, 0.0, 0.0],
            "profiles_equal": True,
            "N": dec.N,
            "X": list(dec.X),
            "Y": list(dec.Y),
        }

    scale = max(1.0, h, float(abs(f.values).max()))
    cut_exc = ExcursionPath.from_path(dec.cut, tol=tol * scale)
    tree_cut = contour_to_tree(cut_exc)
    built = build_from_grafts(GraftSequence(tuple(zip(dec.X, dec.Y))))

    profiles = [leaf_profile(t) for t in (trimmed, tree_cut, built)]
    pair_ok = {
        "trim_vs_cut": profiles_equal(profiles[0], profiles[1], tol=tol * scale),
        "trim_vs_grafts": profiles_equal(profiles[0], profiles[2], tol=tol * scale),
        "cut_vs_grafts": profiles_equal(profiles[1], profiles[2], tol=tol * scale),
    }
    lengths = [total_branch_length(t) for t in (trimmed, tree_cut, built)]
    lengths_ok = max(lengths) - min(lengths) <= tol * scale
    return {
        "status": "ok" if (all(pair_ok.values()) and lengths_ok) else "mismatch",
        "branch_lengths": lengths,
        "profiles_equal": all(pair_ok.values()),
        "pairwise": pair_ok,
        "branch_lengths_agree": lengths_ok,
        "N": dec.N,
        "X": list(dec.X),
        "Y": list(dec.Y),
    }
