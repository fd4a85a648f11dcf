"""Tests for the digraph tower skeleton: levels, threads, determinism."""

from fractions import Fraction

import numpy as np
import pytest

from fence_forge.constructors.shift import (
    build_shift_tower,
    thread_of_word,
    vertex_word,
)
from fence_forge.errors import InsufficientDepth, MalformedTower, NoChildren
from fence_forge.graph_systems import (
    Level,
    Thread,
    Tower,
    all_threads,
    base_image,
    base_preimage,
    compose_bond,
    iterate_base,
    level_diameter,
    project_vertices,
    segment_minmax,
    thread_check,
    thread_distance,
    thread_extensions,
    thread_from_vertex,
    validate_c_structure,
    validate_graph_c_system,
)


@pytest.fixture(scope="module")
def shift3():
    return build_shift_tower(3)


def tiny_tower():
    """Three levels: 1 -> 2 -> 4 vertices, binary splitting, identity edges."""
    lv0 = Level(1, edges=[[0, 0]])
    lv1 = Level(2, bond=[0, 0], edges=[[0, 0], [1, 1]])
    lv2 = Level(4, bond=[0, 0, 1, 1], edges=[[v, v] for v in range(4)])
    return Tower([lv0, lv1, lv2])


class TestLevel:
    """Construction rules and adjacency queries for a single level."""

    def test_rejects_empty_level(self):
        with pytest.raises(MalformedTower):
            Level(0)

    def test_rejects_bond_length_mismatch(self):
        with pytest.raises(MalformedTower):
            Level(3, bond=[0, 0])

    def test_rejects_ragged_edges(self):
        with pytest.raises(MalformedTower):
            Level(2, edges=([0, 1], [0]))

    def test_rejects_out_of_range_edge(self):
        with pytest.raises(MalformedTower):
            Level(2, edges=[[0, 2]])
        with pytest.raises(MalformedTower):
            Level(2, edges=[[-1, 0]])

    def test_rejects_label_length_mismatch(self):
        with pytest.raises(MalformedTower):
            Level(2, labels=["a"])

    def test_edges_accept_pair_of_arrays(self):
        lv = Level(3, edges=([0, 1, 2], [1, 2, 0]))
        assert lv.ne == 3
        assert list(lv.out_neighbors(1)) == [2]

    def test_neighbors_and_degrees(self):
        lv = Level(3, edges=[[0, 1], [0, 2], [1, 0], [2, 0]])
        assert sorted(lv.out_neighbors(0)) == [1, 2]
        assert sorted(lv.in_neighbors(0)) == [1, 2]
        assert list(lv.out_degrees()) == [2, 1, 1]
        assert list(lv.in_degrees()) == [2, 1, 1]
        assert lv.has_edge(0, 2)
        assert not lv.has_edge(1, 2)

    def test_label_fallbacks(self):
        """Unlabeled vertices get v-names, or level-qualified names."""
        lv = Level(2)
        assert lv.label(1) == "v1"
        assert lv.label(1, level_index=3) == "L3V1"
        named = Level(2, labels=["a", "b"])
        assert named.label(0, level_index=3) == "a"


class TestSegmentMinMax:
    def test_minmax_with_empty_segment(self):
        values = np.array([5, 1, 7, 2], dtype=np.int64)
        indptr = np.array([0, 2, 2, 4], dtype=np.int64)
        mins, maxs, nonempty = segment_minmax(values, indptr)
        assert list(nonempty) == [True, False, True]
        assert mins[0] == 1 and maxs[0] == 5
        assert mins[2] == 2 and maxs[2] == 7


class TestTower:
    """Bond consistency across levels and derived projections."""

    def test_level_zero_must_not_have_bond(self):
        with pytest.raises(MalformedTower):
            Tower([Level(1, bond=[0])])

    def test_deeper_levels_need_bonds(self):
        with pytest.raises(MalformedTower):
            Tower([Level(1), Level(2)])

    def test_bond_must_point_into_previous_level(self):
        with pytest.raises(MalformedTower):
            Tower([Level(1), Level(2, bond=[0, 1])])

    def test_empty_tower_rejected(self):
        with pytest.raises(MalformedTower):
            Tower([])

    def test_depth_and_level_access(self):
        tw = tiny_tower()
        assert tw.depth == 2
        assert tw.level(2).nv == 4
        with pytest.raises(InsufficientDepth):
            tw.level(3)

    def test_children_partition_next_level(self):
        tw = tiny_tower()
        assert sorted(tw.children(1, 0)) == [0, 1]
        assert sorted(tw.children(1, 1)) == [2, 3]
        with pytest.raises(InsufficientDepth):
            tw.children_csr(2)

    def test_compose_bond_matches_iterated_bonds(self):
        tw = tiny_tower()
        proj = compose_bond(tw, 2, 0)
        assert list(proj) == [0, 0, 0, 0]
        proj1 = compose_bond(tw, 2, 1)
        assert list(proj1) == [0, 0, 1, 1]
        with pytest.raises(ValueError):
            compose_bond(tw, 0, 2)

    def test_project_vertices_agrees_with_compose(self, shift3):
        full = compose_bond(shift3, 3, 1)
        some = project_vertices(shift3, 3, 1, [0, 17, 127])
        assert list(some) == [int(full[0]), int(full[17]), int(full[127])]

    def test_label_delegates_to_level(self):
        tw = tiny_tower()
        assert tw.label(2, 3) == "L2V3"


class TestThread:
    """Threads as bond-compatible chains, and their metric."""

    def test_needs_at_least_root(self):
        with pytest.raises(MalformedTower):
            Thread(tiny_tower(), [])

    def test_thread_from_vertex_is_bond_compatible(self):
        tw = tiny_tower()
        t = thread_from_vertex(tw, 2, 3)
        assert t.vertices == (0, 1, 3)
        thread_check(tw, t)

    def test_thread_check_rejects_broken_bond(self):
        tw = tiny_tower()
        bad = Thread(tw, (0, 0, 3))
        with pytest.raises(MalformedTower):
            thread_check(tw, bad)

    def test_thread_check_rejects_too_deep(self):
        tw = tiny_tower()
        with pytest.raises(InsufficientDepth):
            thread_check(tw, Thread(tw, (0, 0, 0, 0)))

    def test_truncate_and_accessors(self):
        tw = tiny_tower()
        t = thread_from_vertex(tw, 2, 2)
        assert t.depth == 2
        assert t.top == 2
        assert t.vertex(1) == 1
        assert t.truncate(1).vertices == (0, 1)

    def test_equality_and_hash(self):
        tw = tiny_tower()
        a = thread_from_vertex(tw, 2, 3)
        b = Thread(tw, (0, 1, 3))
        assert a == b
        assert hash(a) == hash(b)
        assert a != thread_from_vertex(tw, 2, 2)

    def test_extensions_enumerate_children(self):
        tw = tiny_tower()
        t = thread_from_vertex(tw, 1, 1)
        exts = thread_extensions(tw, t)
        assert sorted(e.top for e in exts) == [2, 3]
        assert all(e.depth == 2 for e in exts)

    def test_all_threads_counts_vertices(self, shift3):
        threads = list(all_threads(shift3, 2))
        assert len(threads) == shift3.level(2).nv
        for t in threads:
            thread_check(shift3, t)

    def test_distance_first_disagreement(self):
        tw = tiny_tower()
        a = thread_from_vertex(tw, 2, 0)
        b = thread_from_vertex(tw, 2, 1)
        c = thread_from_vertex(tw, 2, 3)
        assert thread_distance(a, b) == Fraction(1, 4)
        assert thread_distance(a, c) == Fraction(1, 2)
        assert thread_distance(a, a.truncate(1)) == 0

    def test_level_diameter_bounds_cylinder(self, shift3):
        """Threads through one level-1 vertex stay within 2^-2 of each other."""
        assert level_diameter(1) == Fraction(1, 4)
        v = 5
        deeper = [
            thread_from_vertex(shift3, 3, u)
            for u in range(shift3.level(3).nv)
            if int(compose_bond(shift3, 3, 1)[u]) == v
        ]
        assert len(deeper) == 16
        worst = max(
            thread_distance(a, b) for a in deeper for b in deeper if a is not b
        )
        assert worst <= level_diameter(1)


class TestStructureValidation:
    def test_clean_tower_reports_no_violations(self, cantor4):
        report = validate_c_structure(cantor4.tower)
        assert report["violations"] == []
        sizes = [entry["nv"] for entry in report["levels"]]
        assert sizes == [1, 2, 4, 8, 16]

    def test_binary_split_witness_is_next_level(self, cantor4):
        """Full binary splitting doubles every vertex one level down."""
        report = validate_c_structure(cantor4.tower)
        assert report["split_witness"] == [1, 2, 3, 4, None]

    def test_childless_vertex_raises_or_records(self):
        lv0 = Level(2, edges=[[0, 0], [1, 1]])
        lv1 = Level(1, bond=[0], edges=[[0, 0]])
        tw = Tower([lv0, lv1])
        with pytest.raises(NoChildren):
            validate_c_structure(tw)
        report = validate_c_structure(tw, strict=False)
        assert len(report["violations"]) == 1
        assert "no child" in report["violations"][0]

    def test_dead_end_vertex_detected(self):
        lv0 = Level(2, edges=[[0, 0]])
        tw = Tower([lv0])
        with pytest.raises(MalformedTower):
            validate_graph_c_system(tw)
        report = validate_graph_c_system(tw, strict=False)
        assert any("no out-edge" in v for v in report["violations"])

    def test_edge_projection_violation_detected(self):
        """A fine edge whose endpoints' parents are not joined is flagged."""
        lv0 = Level(2, edges=[[0, 0], [1, 1]])
        lv1 = Level(2, bond=[0, 1], edges=[[0, 1], [1, 0]])
        tw = Tower([lv0, lv1])
        with pytest.raises(MalformedTower):
            validate_graph_c_system(tw)


def witness_by_brute_force(tower, m, *, backward):
    """Oracle for the determinism witness: check every vertex directly."""
    for n in range(m, tower.depth + 1):
        lv = tower.levels[n]
        ok = True
        for v in range(lv.nv):
            nbrs = lv.in_neighbors(v) if backward else lv.out_neighbors(v)
            if len(nbrs) == 0:
                return None
            images = {int(project_vertices(tower, n, m, [u])[0]) for u in nbrs}
            if len(images) != 1:
                ok = False
                break
        if ok:
            return n
    return None


class TestDeterminismScan:
    """Graded determinism witnesses and thread images on the full shift."""

    def test_shift_witnesses_match_oracle(self, shift3):
        report = validate_graph_c_system(shift3)
        for m in range(shift3.depth + 1):
            assert report["forward_witness"][m] == witness_by_brute_force(
                shift3, m, backward=False
            )
            assert report["backward_witness"][m] == witness_by_brute_force(
                shift3, m, backward=True
            )

    def test_shift_witnesses_frozen(self, shift3):
        """One extra level of window suffices to determine the image."""
        report = validate_graph_c_system(shift3)
        assert report["forward_witness"] == [1, 2, 3, None]
        assert report["backward_witness"] == [1, 2, 3, None]

    def test_base_image_of_centered_word(self, shift3):
        t = thread_of_word(shift3, "01101")
        image = base_image(shift3, t)
        assert image.depth == 1
        assert vertex_word(1, image.top) == "101"

    def test_base_preimage_of_centered_word(self, shift3):
        t = thread_of_word(shift3, "01101")
        pre = base_preimage(shift3, t)
        assert pre.depth == 1
        assert vertex_word(1, pre.top) == "011"

    def test_image_depth_shrinks_by_one_per_step(self, shift3):
        t = thread_of_word(shift3, "0110100")
        once = base_image(shift3, t)
        twice = iterate_base(shift3, t, 2)
        assert once.depth == 2
        assert twice.depth == 1
        assert vertex_word(1, twice.top) == "100"

    def test_min_depth_budget_enforced(self, shift3):
        t = thread_of_word(shift3, "01101")
        with pytest.raises(InsufficientDepth):
            base_image(shift3, t, min_depth=2)

    def test_identity_dynamics_keeps_full_depth(self, cantor4):
        """Identity edges determine the image at the thread's own depth."""
        tower = cantor4.tower
        t = thread_from_vertex(tower, 4, 11)
        image = base_image(tower, t)
        assert image == t
