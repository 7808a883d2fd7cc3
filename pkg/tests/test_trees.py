"""Contour/tree conversion, trimming, profiles and JSON serialization."""

import json

import pytest

from skotrim import (
    DomainError,
    ExcursionPath,
    PiecewiseLinearPath,
    PlaneTree,
    TreeNode,
    contour_to_tree,
    leaf_profile,
    mrca_height,
    profiles_equal,
    total_branch_length,
    tree_distance,
    tree_from_json_obj,
    tree_to_contour,
    tree_to_json_obj,
    trees_isometric,
    trees_structurally_equal,
    trim,
)

from conftest import random_lattice_excursion, random_tree
from oracles import brute_trimmed_length

W = ExcursionPath([0, 1, 2, 3, 4], [0, 3, 1, 4, 0])
TWIN = ExcursionPath([0, 1, 2, 3, 4], [0, 4, 0, 4, 0])
TENT = ExcursionPath([0, 1, 2], [0, 1, 0])


def chain(*lengths):
    root = TreeNode(0.0)
    node = root
    for ln in lengths:
        child = TreeNode(ln)
        node.children.append(child)
        node = child
    return PlaneTree(root)


class TestMetric:
    def test_distance_to_self(self):
        assert tree_distance(W, 2.5, 2.5) == 0.0

    def test_w_distance(self):
        assert tree_distance(W, 1.0, 3.0) == pytest.approx(5.0)

    def test_tent_symmetric_points_coincide(self):
        assert tree_distance(TENT, 0.5, 1.5) == 0.0

    def test_w_mrca(self):
        assert mrca_height(W, 1.0, 3.0) == 1.0

    def test_mrca_same_time(self):
        assert mrca_height(W, 2.5, 2.5) == W.evaluate(2.5)

    def test_twin_mrca_is_root(self):
        assert mrca_height(TWIN, 1.0, 3.0) == 0.0

    def test_ancestry_matches_subexcursion_characterization(self, rng):
        # visiting time t is an ancestor of the point at s exactly when the
        # path minimum between them equals the value at t
        for _ in range(50):
            e = random_lattice_excursion(rng, max_halfsteps=30)
            for _ in range(20):
                s, t = rng.uniform(0, e.support_end, 2)
                lo, hi = min(s, t), max(s, t)
                is_anc = e.inf_on(lo, hi)[0] == e.evaluate(t)
                d_claim = tree_distance(e, s, t) == pytest.approx(
                    e.evaluate(s) - e.evaluate(t)
                )
                assert is_anc == bool(d_claim)


class TestContourToTree:
    def test_tent_single_edge(self):
        tr = contour_to_tree(ExcursionPath([0, 2, 4], [0, 2, 0]))
        assert tr.node_count() == 2
        assert total_branch_length(tr) == 2.0

    def test_w_shape(self):
        tr = contour_to_tree(W)
        kids = tr.root.children
        assert len(kids) == 1 and kids[0].edge_length == 1.0
        sub = kids[0].children
        assert [c.edge_length for c in sub] == [2.0, 3.0]

    def test_twin_peaks(self):
        tr = contour_to_tree(TWIN)
        assert [c.edge_length for c in tr.root.children] == [4.0, 4.0]

    def test_zero_path(self):
        tr = contour_to_tree(ExcursionPath([0], [0]))
        assert tr.node_count() == 1 and total_branch_length(tr) == 0.0

    def test_plateaus_collapse(self):
        # flats at a valley or peak carry no structure
        e = ExcursionPath([0, 1, 2, 3, 4, 5, 6], [0, 2, 1, 1, 3, 3, 0])
        tr = contour_to_tree(e)
        kids = tr.root.children
        assert len(kids) == 1 and kids[0].edge_length == 1.0
        assert sorted(c.edge_length for c in kids[0].children) == [1.0, 2.0]

    def test_rejects_non_excursion(self):
        with pytest.raises(DomainError):
            contour_to_tree(PiecewiseLinearPath([0, 1, 2], [0, -1, 0]))


class TestTreeToContour:
    def test_single_edge(self):
        assert tree_to_contour(chain(1.5)).breakpoints() == [
            (0.0, 0.0),
            (1.5, 1.5),
            (3.0, 0.0),
        ]

    def test_w_tree_unit_speed(self):
        tr = contour_to_tree(W)
        c = tree_to_contour(tr)
        assert c.breakpoints() == [
            (0.0, 0.0),
            (3.0, 3.0),
            (5.0, 1.0),
            (8.0, 4.0),
            (12.0, 0.0),
        ]

    def test_single_node(self):
        assert tree_to_contour(PlaneTree()).breakpoints() == [(0.0, 0.0)]

    def test_duration_twice_length(self, rng):
        for _ in range(50):
            t = random_tree(rng)
            c = tree_to_contour(t)
            assert c.end_time == pytest.approx(2 * total_branch_length(t))

    def test_roundtrip(self, rng):
        for _ in range(200):
            t = random_tree(rng)
            back = contour_to_tree(tree_to_contour(t))
            assert trees_structurally_equal(t, back, tol=1e-12)


class TestTrim:
    def test_single_edge(self):
        out = trim(chain(3.0), 2.0)
        assert total_branch_length(out) == pytest.approx(1.0)

    def test_w_tree(self):
        out = trim(contour_to_tree(W), 2.0)
        assert out.node_count() == 2
        assert total_branch_length(out) == pytest.approx(2.0)

    def test_twin_peaks(self):
        out = trim(contour_to_tree(TWIN), 2.0)
        assert [c.edge_length for c in out.root.children] == [2.0, 2.0]

    def test_empty_below_threshold(self):
        assert trim(chain(1.5), 2.0) is None

    def test_exact_height_leaves_bare_root(self):
        out = trim(chain(2.0), 2.0)
        assert out is not None and out.node_count() == 1

    def test_length_matches_brute_force(self, rng):
        for _ in range(40):
            t = random_tree(rng, max_nodes=12)
            h = float(rng.uniform(0.3, 2.0))
            out = trim(t, h)
            expect = brute_trimmed_length(t, h, samples_per_edge=2000)
            got = total_branch_length(out) if out is not None else 0.0
            assert got == pytest.approx(expect, abs=5e-3 * max(1, got))

    def test_monotone_and_semigroup(self, rng):
        for _ in range(60):
            t = random_tree(rng)
            h1 = float(rng.uniform(0.2, 1.0))
            h2 = h1 + float(rng.uniform(0.1, 1.0))
            t1 = trim(t, h1)
            t2 = trim(t, h2)
            l1 = total_branch_length(t1) if t1 else 0.0
            l2 = total_branch_length(t2) if t2 else 0.0
            assert l2 <= l1 + 1e-12
            if t1 is not None:
                t12 = trim(t1, h2 - h1)
                if t2 is None:
                    assert t12 is None or total_branch_length(t12) <= 1e-9
                else:
                    assert t12 is not None
                    assert trees_isometric(t12, t2, tol=1e-9)

    def test_leaves_explored_at_climb_completion_times(self, rng):
        # each leaf of the pruned tree is visited at one of the direct
        # climb-completion times of the contour
        from skotrim import event_times_direct

        for _ in range(60):
            e = random_lattice_excursion(rng, max_halfsteps=40)
            h = float(rng.choice([1.0, 2.0]))
            out = trim(contour_to_tree(e), h)
            if out is None:
                continue
            tau, _, _ = event_times_direct(e, h)
            leaf_heights = sorted(y for _, y in out.leaves())
            tau_heights = sorted(e.evaluate(u) for u in tau)
            # the leaf heights form a subset of the climb completion heights
            for yl in leaf_heights:
                assert any(abs(yl - yt) <= 1e-9 for yt in tau_heights)


class TestProfiles:
    def test_single_edge(self):
        p = leaf_profile(chain(1.0))
        assert list(p.heights) == [1.0]
        assert p.mrca.tolist() == [[1.0]]

    def test_twin_trimmed(self):
        p = leaf_profile(trim(contour_to_tree(TWIN), 2.0))
        assert list(p.heights) == [2.0, 2.0]
        assert p.mrca[0, 1] == 0.0

    def test_profile_vs_itself(self):
        p = leaf_profile(contour_to_tree(W))
        assert profiles_equal(p, p)

    def test_mismatched_counts(self):
        a = leaf_profile(chain(2.0))
        b = leaf_profile(trim(contour_to_tree(TWIN), 2.0))
        assert not profiles_equal(a, b)

    def test_degenerate_leaf_elimination_from_path(self):
        # observed at the two climb completions of the cut of W, the first
        # candidate sits on the ancestral line of the second
        cutW = ExcursionPath([0, 2 / 3, 1, 8 / 3, 3, 3.5, 4], [0, 0, 1, 1, 2, 2, 0])
        p = leaf_profile(cutW, leaf_times=[2.0, 3.5])
        reduced = p.eliminate_degenerate()
        assert list(reduced.heights) == [2.0]
        q = leaf_profile(trim(contour_to_tree(W), 2.0))
        assert profiles_equal(p, q)

    def test_exploration_order_consistency(self, rng):
        for _ in range(40):
            t = random_tree(rng)
            p = leaf_profile(t)
            n = len(p)
            for i in range(n):
                assert p.mrca[i, i] == pytest.approx(p.heights[i])
                for j in range(i + 1, n):
                    assert p.mrca[i, j] <= min(p.heights[i], p.heights[j]) + 1e-12
            for i in range(n):
                for j in range(i + 1, n):
                    for k in range(j + 1, n):
                        assert p.mrca[i, k] == pytest.approx(
                            min(p.mrca[i, j], p.mrca[j, k])
                        )


class TestJson:
    def test_roundtrip(self, rng):
        for _ in range(50):
            t = random_tree(rng)
            obj = tree_to_json_obj(t)
            back = tree_from_json_obj(json.loads(json.dumps(obj)))
            assert trees_structurally_equal(t, back, tol=0.0)

    def test_schema_shape(self):
        obj = tree_to_json_obj(contour_to_tree(W))
        assert obj["edge"] == 0.0
        assert obj["children"][0]["edge"] == 1.0

    def test_rejects_negative_edge(self):
        with pytest.raises(DomainError):
            tree_from_json_obj({"edge": 0.0, "children": [{"edge": -1.0}]})

    def test_rejects_nonzero_root_edge(self):
        with pytest.raises(DomainError):
            tree_from_json_obj({"edge": 1.0, "children": []})


class TestCanonicalization:
    def test_zero_edges_contracted(self):
        root = TreeNode(0.0)
        mid = TreeNode(0.0)
        leaf = TreeNode(1.0)
        mid.children.append(leaf)
        root.children.append(mid)
        t = PlaneTree(root)
        assert t.node_count() == 2
        assert total_branch_length(t) == 1.0

    def test_pass_through_merged(self):
        t = chain(1.0, 2.0)
        assert t.node_count() == 2
        assert t.root.children[0].edge_length == 3.0
