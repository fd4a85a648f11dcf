"""Tests for the cycle-based constructors: isometry lifts and the
minimal odometer-style refinement tower."""

from fractions import Fraction

import pytest

from fence_forge.constructors.cycles import build_isometry_lift
from fence_forge.constructors.odometer import (
    build_minimal_fraisse_lift,
    pair_tour,
    refine_cycle_odometer,
)
from fence_forge.errors import (
    MalformedTower,
    MTooSmall,
    OrderViolation,
    PeriodChainExhausted,
)
from fence_forge.fence_systems import classify, validate_f_system
from fence_forge.graph_systems import validate_graph_c_system

F = Fraction


def level_sizes(fs):
    return [lv.nv for lv in fs.tower.levels]


def mask_sizes(fs):
    return [len(m) for m in fs.meta["masks"]]


class TestWarmupIsometry:
    """Rotation-flavored cycles with no masked vertices at all."""

    def test_sizes_frozen(self, warmup5):
        assert level_sizes(warmup5) == [1, 3, 21, 273, 5733, 177723]

    def test_cycle_counts_frozen(self, warmup5):
        assert warmup5.meta["cycle_counts"] == [1, 2, 8, 56, 616, 9856]

    def test_no_masks(self, warmup5):
        assert mask_sizes(warmup5) == [0, 0, 0, 0, 0, 0]

    def test_structure_validates(self, warmup5):
        assert validate_graph_c_system(warmup5.tower)["violations"] == []
        assert validate_f_system(warmup5, require_dagger=False)["violations"] == []


class TestIsometryLifts:
    """The two masked variants and their frozen bookkeeping."""

    def test_fraisse_variant_sizes(self, iso_fraisse):
        assert level_sizes(iso_fraisse) == [1, 6, 60, 1440, 109440]
        assert mask_sizes(iso_fraisse) == [0, 1, 6, 60, 1440]
        assert iso_fraisse.meta["cycle_counts"] == [1, 4, 24, 312, 12168]

    def test_fraisse_variant_schedules_next_level(self, iso_fraisse):
        """The level-5 stage is recorded but too large to materialize."""
        sched = iso_fraisse.meta["scheduled"]
        assert sched["level"] == 5
        assert sched["cycles"] == 1691352
        assert sched["vertices"] == 30205440

    def test_lelek_variant_sizes(self, iso_lelek):
        assert level_sizes(iso_lelek) == [1, 2, 8, 64, 1024, 32768]
        assert mask_sizes(iso_lelek) == [0, 1, 2, 8, 64, 1024]
        assert iso_lelek.meta["cycle_counts"] == [1, 2, 6, 30, 270, 4590]

    def test_masks_grow_by_the_previous_level(self, iso_fraisse, iso_lelek):
        """Each stage masks exactly one child of every earlier vertex."""
        for fs in (iso_fraisse, iso_lelek):
            sizes = level_sizes(fs)
            assert mask_sizes(fs)[1:] == sizes[:-1]

    def test_unknown_variant_rejected(self):
        with pytest.raises(ValueError):
            build_isometry_lift("cantor")

    def test_structure_validates(self, iso_fraisse, iso_lelek):
        for fs in (iso_fraisse, iso_lelek):
            assert validate_graph_c_system(fs.tower)["violations"] == []
            report = validate_f_system(fs, require_dagger=False)
            assert report["violations"] == []


class TestPairTour:
    """The unit-step tour of the subinterval pair triangle."""

    def test_tour_for_two_pieces_frozen(self):
        assert pair_tour(2) == [(0, 2), (0, 1), (0, 2), (1, 2), (0, 2)]

    def test_tour_visits_every_pair_and_closes(self):
        for pieces in (1, 2, 3, 4):
            tour = pair_tour(pieces)
            assert tour[0] == (0, pieces)
            assert tour[-1] == (0, pieces)
            wanted = {(j, k) for j in range(pieces + 1)
                      for k in range(j + 1, pieces + 1)}
            assert wanted <= set(tour)

    def test_tour_moves_one_endpoint_by_one(self):
        tour = pair_tour(3)
        for (j0, k0), (j1, k1) in zip(tour, tour[1:]):
            assert abs(j1 - j0) + abs(k1 - k0) == 1
            assert 0 <= j1 < k1 <= 3

    def test_needs_a_piece(self):
        with pytest.raises(MalformedTower):
            pair_tour(0)


class TestRefineCycleOdometer:
    """One refinement step on an explicit interval cycle."""

    def test_pass_count_and_sizes(self):
        out = refine_cycle_odometer([F(0)], [F(1)], 2, 6)
        assert out["m0"] == 5
        assert len(out["lo"]) == 6
        assert len(out["passes"]) == 6
        assert out["passes"][-1] == (0, 2)

    def test_full_pass_reproduces_the_parent(self):
        out = refine_cycle_odometer([F(0)], [F(1)], 2, 6)
        assert out["lo"][0] == F(0) and out["hi"][0] == F(1)

    def test_m_below_minimum_carries_m0(self):
        with pytest.raises(MTooSmall) as exc:
            refine_cycle_odometer([F(0)], [F(1)], 2, 4)
        assert exc.value.m0 == 5

    def test_degenerate_parent_rejected(self):
        with pytest.raises(OrderViolation):
            refine_cycle_odometer([F(0)], [F(0)], 2, 6)

    def test_parallel_lists_required(self):
        with pytest.raises(MalformedTower):
            refine_cycle_odometer([F(0)], [F(1), F(2)], 2, 6)


class TestMinimalFraisseLift:
    """The full refinement tower over the primorial chain."""

    def test_sizes_frozen(self, minimal4):
        assert level_sizes(minimal4) == [1, 2, 12, 360, 75600]
        assert minimal4.meta["sizes"] == [1, 2, 12, 360, 75600]

    def test_chain_frozen(self, minimal4):
        assert minimal4.meta["chain"] == [2, 6, 30, 210, 2310, 30030]

    def test_refinement_table_frozen(self, minimal4):
        refs = minimal4.meta["refinements"]
        assert [r["epsilon"] for r in refs] == [F(2), F(1), F(1, 2), F(1, 4)]
        assert [r["pieces"] for r in refs] == [1, 2, 4, 8]
        assert [r["m0"] for r in refs] == [1, 5, 19, 71]
        assert [r["m"] for r in refs] == [2, 6, 30, 210]

    def test_multiple_is_least_chain_entry_at_m0(self, minimal4):
        chain = minimal4.meta["chain"]
        for r in minimal4.meta["refinements"]:
            assert r["m"] == min(c for c in chain if c >= r["m0"])

    def test_size_multiplies_by_m(self, minimal4):
        sizes = level_sizes(minimal4)
        for r in minimal4.meta["refinements"]:
            assert sizes[r["level"]] == sizes[r["level"] - 1] * r["m"]

    def test_classifies_as_two_sided_universal(self, minimal4):
        assert classify(minimal4)["kind"] == "fraisse_fence"

    def test_cycle_shift_dynamics_recorded(self, minimal4):
        assert minimal4.tower.meta["dynamic"] == "cycle_shift"

    def test_exhausted_chain_rejected(self):
        with pytest.raises(PeriodChainExhausted):
            build_minimal_fraisse_lift(2, chain=(2, 4))

    def test_structure_validates(self, minimal4):
        assert validate_graph_c_system(minimal4.tower)["violations"] == []
        assert validate_f_system(minimal4, require_dagger=False)["violations"] == []
