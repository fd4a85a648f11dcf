"""Tests for edge scaling maps, deviation rates, and point lifting."""

from fractions import Fraction

import pytest

from fence_forge.errors import (
    DegenerateInterval,
    ImageOutsideFiber,
    InsufficientDepth,
    ModeMismatch,
    RatioModeRequiresZeroLower,
    ZeroUpper,
)
from fence_forge.fence_systems import FencePoint, FSystem
from fence_forge.graph_systems import Level, Tower, thread_from_vertex
from fence_forge.lifting import (
    EdgeMap,
    condition_gamma,
    gamma_level,
    gamma_report,
    lift_apply,
    lift_inverse,
    s_estimate,
)

F = Fraction


def two_level_pair(hi0, hi1, *, lo0=None, lo1=None):
    """Two vertices per level, edges 0 -> 1 and 1 -> 0, binary bond."""
    lv0 = Level(2, edges=[[0, 1], [1, 0]])
    lv1 = Level(2, bond=[0, 1], edges=[[0, 1], [1, 0]])
    tower = Tower([lv0, lv1])
    lo0 = lo0 or [F(0), F(0)]
    lo1 = lo1 or [F(0), F(0)]
    return FSystem.from_fractions(tower, [lo0, lo1], [hi0, hi1])


class TestEdgeMap:
    def test_call_and_inverse(self):
        m = EdgeMap(F(2), F("1/3"), (F(0), F(1)), (F("1/3"), F("7/3")))
        assert m(F("1/2")) == F("4/3")
        inv = m.inverse()
        assert inv(m(F("1/4"))) == F("1/4")
        assert inv.src == m.dst and inv.dst == m.src

    def test_constant_map_has_no_inverse(self):
        m = EdgeMap(F(0), F("1/2"), (F(0), F(0)), (F("1/2"), F("1/2")))
        with pytest.raises(DegenerateInterval):
            m.inverse()


class TestSEstimate:
    """Per-edge scaling maps in both modes."""

    def test_ratio_mode_scales_by_tops(self):
        fs = two_level_pair([F(1), F("1/2")], [F(1), F("1/2")])
        m = s_estimate(fs, 0, 0, 1, "ratio")
        assert m.slope == F("1/2") and m.shift == 0
        back = s_estimate(fs, 0, 1, 0, "ratio")
        assert back.slope == F(2)

    def test_ratio_mode_requires_zero_lower(self):
        fs = two_level_pair([F(1), F(1)], [F(1), F(1)],
                            lo0=[F("1/4"), F(0)])
        with pytest.raises(RatioModeRequiresZeroLower):
            s_estimate(fs, 0, 0, 1, "ratio")

    def test_ratio_mode_rejects_zero_fiber(self):
        fs = two_level_pair([F(1), F(0)], [F(1), F(0)])
        with pytest.raises(ZeroUpper):
            s_estimate(fs, 0, 0, 1, "ratio")

    def test_affine_mode_matches_interval_ends(self):
        fs = two_level_pair([F(1), F(1)], [F(1), F(1)],
                            lo0=[F(0), F("1/2")])
        m = s_estimate(fs, 0, 0, 1, "affine")
        assert m(F(0)) == F("1/2")
        assert m(F(1)) == F(1)
        assert m.slope == F("1/2")

    def test_affine_mode_point_fiber_is_constant(self):
        fs = two_level_pair([F(0), F(0)], [F(0), F(0)])
        m = s_estimate(fs, 0, 0, 1, "affine")
        assert m.slope == 0 and m(F(0)) == 0

    def test_affine_mode_point_onto_interval_rejected(self):
        fs = two_level_pair([F(0), F(1)], [F(0), F(1)])
        with pytest.raises(DegenerateInterval):
            s_estimate(fs, 0, 0, 1, "affine")

    def test_unknown_mode_rejected(self):
        fs = two_level_pair([F(1), F(1)], [F(1), F(1)])
        with pytest.raises(ModeMismatch):
            s_estimate(fs, 0, 0, 1, "euclidean")


class TestGammaLevel:
    """Exact deviation rates on hand-built two-level systems."""

    def test_ratio_deviation_includes_inverse_direction(self):
        """Parent ratio 1 against child ratio 1/3: the inverse gap is 2."""
        fs = two_level_pair([F(1), F(1)], [F(1), F("1/3")])
        entry = gamma_level(fs, 0, "ratio")
        assert entry["gamma"] == F(2)
        assert entry["witness"] == (F(1), F(1), F(1), F("1/3"))
        assert entry["classes"] == 2

    def test_ratio_zero_when_child_ratios_repeat(self):
        fs = two_level_pair([F(1), F("1/2")], [F(1), F("1/2")])
        assert gamma_level(fs, 0, "ratio")["gamma"] == 0

    def test_affine_deviation_forward_and_backward(self):
        """Identity parent against the child [0,1/2] -> [1/2,1]: both
        directions deviate by 1/2 at the interval ends."""
        fs = two_level_pair([F(1), F(1)], [F("1/2"), F(1)],
                            lo1=[F(0), F("1/2")])
        entry = gamma_level(fs, 0, "affine")
        assert entry["gamma"] == F("1/2")
        assert entry["gamma_plus"] == F("1/2")

    def test_cache_returns_same_entry(self):
        fs = two_level_pair([F(1), F("1/2")], [F(1), F("1/2")])
        first = gamma_level(fs, 0, "ratio")
        assert gamma_level(fs, 0, "ratio") is first

    def test_needs_a_child_level(self):
        fs = two_level_pair([F(1), F(1)], [F(1), F(1)])
        with pytest.raises(InsufficientDepth):
            gamma_level(fs, 1, "affine")

    def test_hook_entries_win(self):
        fs = two_level_pair([F(1), F(1)], [F(1), F(1)])
        fs.gamma_hooks[0] = lambda mode: {"gamma": F(0), "mode": mode}
        entry = gamma_level(fs, 0, "ratio")
        assert entry["source"] == "constructor"
        assert entry["gamma"] == 0


class TestConditionGamma:
    """Summability certificates over whole towers (frozen values)."""

    def test_transitive_deviations_frozen(self, transitive4):
        rep = gamma_report(transitive4, "ratio")
        assert [e["gamma"] for e in rep] == [
            F(0), F(1, 15), F(1, 31), F(1, 63), F(16, 1905)]
        assert rep[4]["source"] == "constructor"

    def test_transitive_sum_under_default_budget(self, transitive4):
        cert = condition_gamma(transitive4, "ratio")
        assert cert["total"] == F(152783, 1240155)
        assert cert["budget"] == 1
        assert cert["satisfied"] is True
        assert cert["partial_sums"][-1] == cert["total"]

    def test_partial_sums_are_running_totals(self, transitive4):
        cert = condition_gamma(transitive4, "ratio")
        run = F(0)
        for e, p in zip(cert["entries"], cert["partial_sums"]):
            run += e["gamma"]
            assert p == run

    def test_explicit_budget_can_fail(self, transitive4):
        cert = condition_gamma(transitive4, "ratio", budget=F(1, 10))
        assert cert["satisfied"] is False

    def test_warmup_isometry_has_zero_deviation(self, warmup5):
        cert = condition_gamma(warmup5, "affine")
        assert cert["total"] == 0
        assert all(e["gamma"] == 0 for e in cert["entries"])
        assert all(e["gamma_plus"] == 0 for e in cert["entries"])

    def test_isometry_lifts_have_zero_deviation(self, iso_fraisse, iso_lelek):
        assert condition_gamma(iso_fraisse, "affine")["total"] == 0
        assert condition_gamma(iso_lelek, "ratio")["total"] == 0

    def test_affine_mode_has_no_default_budget(self, warmup5):
        cert = condition_gamma(warmup5, "affine")
        assert cert["budget"] is None
        assert cert["satisfied"] is True


class TestLiftApply:
    """Pushing fence points through the lifted dynamics."""

    def test_identity_dynamics_fixes_points(self, cantor4):
        t = thread_from_vertex(cantor4.tower, 4, 9)
        p = FencePoint(t, F("3/8"))
        out = lift_apply(cantor4, p, "affine")
        assert out["point"] == p
        assert out["level_used"] == 4
        assert out["tail_bound_built"] == 0

    def test_ratio_lift_scales_height(self):
        fs = two_level_pair([F(1), F("1/2")], [F(1), F("1/2")])
        t = thread_from_vertex(fs.tower, 1, 0)
        out = lift_apply(fs, FencePoint(t, F("1/2")), "ratio")
        assert out["point"].height == F("1/4")
        assert out["point"].thread.vertices == (1, 1)

    def test_height_outside_fiber_rejected(self, lelek5):
        t = thread_from_vertex(lelek5.tower, 1, 1)
        lo, hi = lelek5.fiber_interval(t)
        with pytest.raises(ImageOutsideFiber):
            lift_apply(lelek5, FencePoint(t, hi + 1), "ratio")

    def test_min_depth_budget_propagates(self, transitive4):
        """A shallow thread cannot deliver a depth-4 image."""
        t = thread_from_vertex(transitive4.tower, 1, 0)
        p = FencePoint(t, transitive4.fiber_interval(t)[1])
        with pytest.raises(InsufficientDepth):
            lift_apply(transitive4, p, "ratio", min_depth=4)

    def test_ratio_tail_bound_scales_with_height(self, transitive4):
        t = thread_from_vertex(transitive4.tower, 4, 100)
        hi = transitive4.fiber_interval(t)[1]
        full = lift_apply(transitive4, FencePoint(t, hi), "ratio")
        half = lift_apply(transitive4, FencePoint(t, hi / 2), "ratio")
        assert half["tail_bound_built"] * 2 == full["tail_bound_built"]

    def test_inverse_round_trip_on_identity(self, cantor4):
        t = thread_from_vertex(cantor4.tower, 3, 5)
        p = FencePoint(t, F("2/3"))
        back = lift_inverse(cantor4, p, "affine")
        assert back["point"] == p
        again = lift_apply(cantor4, back["point"], "affine")
        assert again["point"] == p

    def test_inverse_of_ratio_step(self):
        fs = two_level_pair([F(1), F("1/2")], [F(1), F("1/2")])
        t1 = thread_from_vertex(fs.tower, 1, 1)
        out = lift_inverse(fs, FencePoint(t1, F("1/4")), "ratio")
        assert out["point"].thread.vertices == (0, 0)
        assert out["point"].height == F("1/2")

    def test_inverse_checks_fiber_membership(self, lelek5):
        t = thread_from_vertex(lelek5.tower, 1, 1)
        lo, hi = lelek5.fiber_interval(t)
        with pytest.raises(ImageOutsideFiber):
            lift_inverse(lelek5, FencePoint(t, hi + 1), "ratio")
