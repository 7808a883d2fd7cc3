"""Graft-sequence reconstruction and the three-way pruning check."""

import pytest

from skotrim import (
    DomainError,
    ExcursionPath,
    GraftSequence,
    build_from_grafts,
    h_cut,
    leaf_profile,
    total_branch_length,
    verify_main1,
)

from conftest import random_lattice_excursion

W = ExcursionPath([0, 1, 2, 3, 4], [0, 3, 1, 4, 0])
TWIN = ExcursionPath([0, 1, 2, 3, 4], [0, 4, 0, 4, 0])


class TestGraftSequence:
    def test_rejects_nonzero_first_offset(self):
        with pytest.raises(DomainError, match="graft 1"):
            GraftSequence(((1.0, 0.5),))

    def test_rejects_negative_length(self):
        with pytest.raises(DomainError, match="graft 2"):
            GraftSequence(((1.0, 0.0), (-0.5, 0.2)))

    def test_rejects_offset_below_root(self):
        with pytest.raises(DomainError, match="graft 2"):
            GraftSequence(((1.0, 0.0), (1.0, 1.5)))

    def test_accepts_boundary_offset(self):
        g = GraftSequence(((1.0, 0.0), (2.0, 1.0)))
        assert len(g) == 2


class TestBuild:
    def test_degenerate_extension(self):
        t = build_from_grafts([(1.0, 0.0), (1.0, 0.0)])
        assert t.node_count() == 2
        assert total_branch_length(t) == pytest.approx(2.0)

    def test_graft_at_root(self):
        t = build_from_grafts([(2.0, 0.0), (2.0, 2.0)])
        assert [c.edge_length for c in t.root.children] == [2.0, 2.0]

    def test_single_branch(self):
        t = build_from_grafts([(1.7, 0.0)])
        assert total_branch_length(t) == pytest.approx(1.7)

    def test_mid_edge_split_goes_right(self):
        t = build_from_grafts([(2.0, 0.0), (1.0, 0.5)])
        branch = t.root.children[0]
        assert branch.edge_length == pytest.approx(1.5)
        assert [c.edge_length for c in branch.children] == [0.5, 1.0]

    def test_branch_length_identity(self, rng):
        for _ in range(100):
            n = int(rng.integers(1, 12))
            pairs = []
            height = 0.0
            for i in range(n):
                y = 0.0 if i == 0 else float(rng.uniform(0, height))
                x = float(rng.exponential(1.0))
                pairs.append((x, y))
                height = height - y + x
            t = build_from_grafts(pairs)
            assert total_branch_length(t) == pytest.approx(
                sum(p[0] for p in pairs), abs=1e-9
            )

    def test_leaf_heights_match_cut_values(self, rng):
        # the tips of the rebuilt tree sit at the cut values of the return
        # times, which equal the original path values there
        for _ in range(60):
            e = random_lattice_excursion(rng, max_halfsteps=40)
            h = float(rng.choice([1.0, 2.0]))
            dec = h_cut(e, h)
            if dec.N == 0:
                continue
            t = build_from_grafts(list(zip(dec.X, dec.Y)))
            built = sorted(y for _, y in t.leaves())
            expect = sorted(float(e.evaluate(u)) for u in dec.t)
            # degenerate grafts can merge tips; compare as multisets of the
            # surviving profile
            prof = leaf_profile(t)
            assert len(prof) <= len(expect)
            for y in prof.heights:
                assert any(abs(y - v) <= 1e-9 for v in expect)
            assert built[-1] == pytest.approx(expect[-1], abs=1e-9)


class TestVerifyMain1:
    def test_worked_example(self):
        rep = verify_main1(W, 2.0)
        assert rep["status"] == "ok"
        assert rep["profiles_equal"]
        assert rep["branch_lengths"] == pytest.approx([2.0, 2.0, 2.0])
        assert rep["N"] == 2

    def test_twin_peaks(self):
        rep = verify_main1(TWIN, 2.0)
        assert rep["status"] == "ok"
        assert rep["branch_lengths"] == pytest.approx([4.0, 4.0, 4.0])

    def test_empty(self):
        tent = ExcursionPath([0, 1, 2], [0, 1, 0])
        rep = verify_main1(tent, 2.0)
        assert rep["status"] == "empty"

    def test_exact_touch_degenerates_to_root(self):
        tall = ExcursionPath([0, 1, 2], [0, 2, 0])
        rep = verify_main1(tall, 2.0)
        assert rep["status"] == "ok"
        assert rep["branch_lengths"] == pytest.approx([0.0, 0.0, 0.0])

    def test_random_corpus(self, rng):
        checked = 0
        for _ in range(150):
            e = random_lattice_excursion(rng, max_halfsteps=60)
            for h in (0.5, 1.0, 2.0):
                rep = verify_main1(e, h)
                if rep["status"] == "empty":
                    continue
                assert rep["status"] == "ok", rep
                checked += 1
        assert checked > 100
