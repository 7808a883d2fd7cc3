"""Shared random-instance generators for the test suite."""

import numpy as np
import pytest

from skotrim import ExcursionPath, PiecewiseLinearPath, PlaneTree, TreeNode


def random_pl_path(rng, max_segments=12, start_zero=True, allow_negative=True):
    """Random canonical piecewise-linear path with a handful of segments."""
    k = int(rng.integers(1, max_segments + 1))
    dts = rng.uniform(0.1, 1.5, k)
    times = np.concatenate([[0.0], np.cumsum(dts)])
    lo = -3.0 if allow_negative else 0.0
    values = rng.uniform(lo, 3.0, k + 1)
    if start_zero:
        values[0] = 0.0
    return PiecewiseLinearPath(times, values)


def random_lattice_excursion(rng, max_halfsteps=199):
    """Integer-valued walk excursion (uniform bridge rotated at its minimum).

    At most 2*max_halfsteps steps, so at most 2*max_halfsteps+1 breakpoints
    before canonicalization (fewer after: monotone runs merge).
    """
    m = int(rng.integers(1, max_halfsteps + 1))
    steps = np.concatenate([np.ones(m, np.int64), -np.ones(m, np.int64)])
    steps = rng.permutation(steps)
    s = np.concatenate([[0], np.cumsum(steps)])
    k = int(np.argmin(s[:-1]))
    rot = np.concatenate([steps[k:], steps[:k]])
    e = np.concatenate([[0], np.cumsum(rot)])
    d = np.diff(e)
    turn = np.nonzero(d[1:] != d[:-1])[0] + 1
    idx = np.concatenate([[0], turn, [2 * m]])
    return ExcursionPath(idx.astype(float), e[idx].astype(float))


def random_tree(rng, max_nodes=25):
    """Random plane tree with uniform edge lengths, already canonical."""
    root = TreeNode(0.0)
    nodes = [root]
    n_extra = int(rng.integers(0, max_nodes))
    for _ in range(n_extra):
        parent = nodes[int(rng.integers(0, len(nodes)))]
        child = TreeNode(float(rng.uniform(0.2, 2.0)))
        parent.children.append(child)
        nodes.append(child)
    # canonicalization may merge freshly built pass-through chains
    return PlaneTree(root)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
