"""Tests for the full-shift tower, zero-backed points, and masks.

Path connectivity claims are cross-checked against the plain frontier
walk in ``_oracles.count_paths``, which never builds an adjacency
matrix.
"""

import numpy as np
import pytest

from fence_forge.constructors.shift import (
    KMask,
    ZeroBackedPoint,
    build_shift_tower,
    connecting_point,
    invariant_point_mask,
    masked_adjacency,
    masked_path_profile,
    mixing_points,
    thread_of_word,
    vertex_word,
    width,
    word_vertex,
)
from fence_forge.errors import (
    CylinderTooDeep,
    MalformedTower,
    MaskNotInvariant,
)

from _oracles import walk_frontier


@pytest.fixture(scope="module")
def shift2():
    return build_shift_tower(2)


class TestShiftTower:
    """Centered-window structure of the full 2-shift."""

    def test_window_widths(self):
        assert [width(n) for n in range(4)] == [1, 3, 5, 7]

    def test_level_sizes_are_powers_of_two(self, shift2):
        assert [lv.nv for lv in shift2.levels] == [2, 8, 32]

    def test_every_vertex_has_two_successors(self, shift2):
        for n in range(3):
            assert list(shift2.levels[n].out_degrees()) == [2] * shift2.levels[n].nv

    def test_word_round_trip(self):
        n, v = word_vertex("01101")
        assert (n, v) == (2, 13)
        assert vertex_word(n, v) == "01101"

    def test_word_must_be_odd_binary(self):
        with pytest.raises(MalformedTower):
            word_vertex("0110")
        with pytest.raises(MalformedTower):
            word_vertex("012")

    def test_thread_of_word_nests_subwindows(self, shift2):
        t = thread_of_word(shift2, "01101")
        assert t.vertices == (
            word_vertex("1")[1], word_vertex("110")[1], word_vertex("01101")[1])

    def test_thread_of_word_depth_budget(self, shift2):
        with pytest.raises(CylinderTooDeep):
            thread_of_word(shift2, "0110100")


class TestZeroBackedPoint:
    """Finite-support sequences in a zero background."""

    def test_symbols_inside_and_outside_support(self):
        p = ZeroBackedPoint(-1, "101")
        assert [p.symbol(i) for i in range(-3, 4)] == [0, 0, 1, 0, 1, 0, 0]
        assert p.end == 2

    def test_window_packs_bits(self):
        p = ZeroBackedPoint(0, "11")
        assert p.window(0, 1) == 0b011
        assert p.window(1, 1) == 0b110
        assert p.window(5, 1) == 0

    def test_rejects_non_binary_blocks(self):
        with pytest.raises(MalformedTower):
            ZeroBackedPoint(0, "21")

    def test_connecting_point_places_both_blocks(self):
        p = connecting_point("111", "101", 4)
        assert p.window(0, 1) == 0b111
        assert p.window(4, 1) == 0b101
        assert p.symbol(2) == 0

    def test_connecting_point_rejects_overlap(self):
        with pytest.raises(MalformedTower):
            connecting_point("111", "101", 2)
        with pytest.raises(MalformedTower):
            connecting_point("111", "10101", 8)

    def test_mixing_points_cover_requested_gaps(self):
        pts = mixing_points("111", "101", [4, 5])
        assert len(pts) == 4
        assert pts[0].window(0, 1) == 0b111
        assert pts[3].window(5, 1) == 0b101


class TestKMask:
    """Closure validation in all three directions."""

    def test_masked_membership_and_array(self):
        mask = KMask([[0], [0, 3]])
        assert mask.depth() == 1
        assert mask.masked(1, 3) and not mask.masked(1, 2)
        arr = mask.mask_array(1, 8)
        assert list(np.flatnonzero(arr)) == [0, 3]

    def test_too_deep_mask_rejected(self, shift2):
        with pytest.raises(CylinderTooDeep):
            KMask([[0]] * 5).validate(shift2)

    def test_missing_vertex_rejected(self, shift2):
        with pytest.raises(MaskNotInvariant):
            KMask([[99]]).validate(shift2)

    def test_mask_without_masked_successor_rejected(self, shift2):
        """The lone word 100 steps only to 00x words, both unmasked."""
        bad = KMask([[], [word_vertex("100")[1]]])
        with pytest.raises(MaskNotInvariant) as exc:
            bad.validate(shift2)
        assert "masked successor" in str(exc.value)

    def test_mask_with_unmasked_parent_rejected(self, shift2):
        bad = KMask([[word_vertex("0")[1]],
                     [word_vertex("000")[1], word_vertex("111")[1]]])
        with pytest.raises(MaskNotInvariant) as exc:
            bad.validate(shift2)
        assert "unmasked parent" in str(exc.value)

    def test_mask_without_masked_child_rejected(self, shift2):
        bad = KMask([[word_vertex("0")[1], word_vertex("1")[1]],
                     [word_vertex("000")[1]]])
        with pytest.raises(MaskNotInvariant) as exc:
            bad.validate(shift2)
        assert "no masked child" in str(exc.value)

    def test_zero_mask_validates(self, shift2):
        KMask([[0], [0], [0]]).validate(shift2)


class TestInvariantPointMask:
    """Masks generated by the cylinders a point family visits."""

    def test_zero_point_alone_gives_the_zero_mask(self, shift2):
        mask = invariant_point_mask(shift2, [])
        assert [list(m) for m in mask.marks] == [[0], [0], [0]]

    def test_single_one_marks_its_window_positions(self, shift2):
        mask = invariant_point_mask(shift2, [ZeroBackedPoint(0, "1")])
        words1 = sorted(vertex_word(1, int(v)) for v in mask.marks[1])
        assert words1 == ["000", "001", "010", "100"]

    def test_generated_mask_always_validates(self, shift2):
        pts = mixing_points("111", "101", [4, 6])
        mask = invariant_point_mask(shift2, pts)
        mask.validate(shift2)


class TestMaskedPaths:
    """Exact path-length certificates inside a mask."""

    def test_profile_matches_frontier_oracle(self, shift2):
        pts = mixing_points("101", "111", [4, 5, 6])
        mask = invariant_point_mask(shift2, pts)
        adj = masked_adjacency(shift2, mask, 1)
        lengths = list(range(3, 9))
        profile = masked_path_profile(
            shift2, mask, 1, "101", "111", lengths)
        u = word_vertex("101")[1]
        v = word_vertex("111")[1]
        src, dst = np.nonzero(adj)
        nv = adj.shape[0]
        for ln in lengths:
            expected = walk_frontier(src, dst, nv, u, ln).get(v, 0) > 0
            assert profile["reach"][ln] == expected

    def test_unmasked_edges_are_dropped(self, shift2):
        mask = KMask([[0], [0], [0]])
        adj = masked_adjacency(shift2, mask, 1)
        assert adj[0, 0]
        assert int(adj.sum()) == 1

    def test_profile_rejects_mismatched_level(self, shift2):
        mask = invariant_point_mask(shift2, [ZeroBackedPoint(0, "1")])
        with pytest.raises(MalformedTower):
            masked_path_profile(shift2, mask, 2, "101", "111", [3])
