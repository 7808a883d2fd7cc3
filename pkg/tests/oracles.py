"""Independent oracles used by the tests.

Everything here re-derives expected values with methods deliberately
different from the production code: a clamped Euler recursion instead of
the segment machine, pairwise-distance pruning instead of the post-order
pass, direct series evaluation for the excursion height law.
"""

import math

import numpy as np

from skotrim import merge_times


def clamp_reflection(f, h, refine=4):
    """Two-sided reflection by the clamped recursion x <- min(h, max(0, x + df)).

    Exact on each monotone linear piece; ``refine`` subdivides segments to
    demonstrate grid-independence.  Returns (grid, lambda values, c0 values,
    ch values) sampled on the refined grid.
    """
    t, v = f.times, f.values
    grid = [t[0]]
    for k in range(t.size - 1):
        sub = np.linspace(t[k], t[k + 1], refine + 1)[1:]
        grid.extend(sub.tolist())
    grid = np.asarray(grid)
    vals = np.interp(grid, t, v)
    x = min(max(vals[0], 0.0), h)
    lam = [x]
    c0 = [0.0]
    ch = [0.0]
    for k in range(1, grid.size):
        dv = vals[k] - vals[k - 1]
        y = x + dv
        up = max(0.0, -y) if y < 0 else 0.0
        dn = max(0.0, y - h) if y > h else 0.0
        x = min(h, max(0.0, y))
        lam.append(x)
        c0.append(c0[-1] + up)
        ch.append(ch[-1] - dn)
    return grid, np.asarray(lam), np.asarray(c0), np.asarray(ch)


def brute_trimmed_length(tree, h, samples_per_edge=256):
    """Pruned branch length by sampling points on edges and testing the
    defining condition directly with pairwise leaf distances."""
    leaves = tree.leaves()
    total = 0.0
    for node, height in tree.iter_nodes():
        if node is tree.root:
            continue
        lo = height - node.edge_length
        # descendants of a point at level y on this edge are the points of
        # the subtree below `node` plus the rest of the edge above y
        best = _subtree_max_height(node, height)
        ys = np.linspace(lo, height, samples_per_edge, endpoint=False)
        keep = (best - ys) >= h
        total += keep.mean() * node.edge_length
    del leaves
    return total


def _subtree_max_height(node, height):
    best = height
    stack = [(node, height)]
    while stack:
        n, y = stack.pop()
        best = max(best, y)
        for c in n.children:
            stack.append((c, y + c.edge_length))
    return best


def feasible_candidates(f, cut, h, rng, count=100):
    """Competitor values g on the merged grid with g(0) = 0, osc(f-g) <= h.

    Mixes three families: f itself, level quantizations of f (staircases
    within h/2 of f), and random perturbations of the cut scaled back into
    feasibility.  Feasibility is re-checked exactly on the grid (both paths
    are piecewise linear on it, so the oscillation is attained there).
    Returns (grid, list of value arrays).
    """
    grid = merge_times(f, cut)
    fv = f.evaluate(grid)
    cv = cut.evaluate(grid)
    out = []

    def try_push(vals):
        vals = np.asarray(vals, dtype=float)
        vals = vals - vals[0]
        d = fv - vals
        if d.max() - d.min() <= h * (1 + 1e-12):
            out.append(vals)
            return True
        return False

    try_push(fv.copy())
    for offset in (0.0, 0.25, 0.5, 0.75):
        try_push(np.round(fv / h - offset) * h)
    while len(out) < count:
        if rng.integers(0, 2) == 0:
            mix = rng.uniform(0, 1)
            try_push(mix * cv + (1 - mix) * fv)
        else:
            bump = rng.normal(0.0, 1.0, grid.size)
            bump[0] = 0.0
            delta = 1.0
            for _ in range(40):
                if try_push(cv + delta * bump):
                    break
                delta *= 0.5
    return grid, out[:count]


def excursion_height_cdf(x, terms=64):
    """P(height <= x) for the normalized (duration-1) excursion maximum."""
    if x <= 0:
        return 0.0
    acc = 0.0
    for k in range(1, terms + 1):
        u = 2.0 * (k * x) ** 2
        acc += (2.0 * u - 1.0) * math.exp(-u)
    return 1.0 - 2.0 * acc
