"""Tests for the four basic fence families (frozen sizes and rates).

Level sizes and rate schedules asserted here were frozen from first
builds after checking them against the growth rules stated in each
constructor's docstring; the eta values are independently recomputed by
the exact solver, which test_fence_systems checks against a grid oracle.
"""

from fractions import Fraction

import numpy as np
import pytest

from fence_forge.constructors.basic import (
    build_cantor,
    build_fraisse,
    build_lelek,
    build_twosided,
)
from fence_forge.errors import MalformedTower
from fence_forge.fence_systems import eta_report, validate_f_system
from fence_forge.graph_systems import validate_graph_c_system

F = Fraction


def level_sizes(fs):
    return [lv.nv for lv in fs.tower.levels]


class TestCantor:
    """The full product fence: every fiber is the whole unit interval."""

    def test_sizes_and_meta(self, cantor4):
        assert level_sizes(cantor4) == [1, 2, 4, 8, 16]
        assert cantor4.meta["family"] == "cantor"
        assert cantor4.meta["dynamic"] == "identity"
        assert cantor4.meta["alphabet"] == 2

    def test_every_fiber_is_the_unit_interval(self, cantor4):
        for n in range(cantor4.depth + 1):
            for v in range(cantor4.tower.levels[n].nv):
                assert cantor4.interval(n, v) == (F(0), F(1))

    def test_binary_word_labels(self, cantor4):
        assert cantor4.tower.label(3, 5) == "101"

    def test_wider_alphabet(self):
        fs = build_cantor(2, alphabet=3)
        assert level_sizes(fs) == [1, 3, 9]
        assert fs.tower.levels[2].labels[:4] == ["00", "01", "02", "10"]
        assert fs.meta["alphabet"] == 3

    def test_alphabet_must_have_two_letters(self):
        with pytest.raises(MalformedTower):
            build_cantor(2, alphabet=1)

    def test_structure_validates(self, cantor4):
        assert validate_graph_c_system(cantor4.tower)["violations"] == []
        assert validate_f_system(cantor4)["violations"] == []


class TestLelek:
    """Spiked fence over the floor: tops dense downward, lowers zero."""

    def test_sizes_frozen(self, lelek5):
        assert level_sizes(lelek5) == [1, 3, 10, 40, 220, 1900]

    def test_lower_endpoints_all_zero(self, lelek5):
        for arr in lelek5.lo:
            vals = {lelek5.values.value(int(i)) for i in np.unique(arr)}
            assert vals == {F(0)}

    def test_plus_rate_schedule(self, lelek5):
        """Top covering rate halves per level from 1/4."""
        report = eta_report(lelek5)
        assert [e["eta_plus"] for e in report] == [
            F(1, 2 ** (n + 2)) for n in range(5)]

    def test_two_sided_rate_stays_maximal(self, lelek5):
        """Every child hangs from the floor, so a target near the top
        corner keeps the full two-sided rate at 1."""
        report = eta_report(lelek5)
        assert all(e["eta"] == 1 for e in report)

    def test_structure_validates(self, lelek5):
        assert validate_graph_c_system(lelek5.tower)["violations"] == []
        assert validate_f_system(lelek5)["violations"] == []


class TestFraisse:
    """The universal fence: all subinterval shapes appear, rate 2^-n."""

    def test_sizes_frozen(self, fraisse4):
        assert level_sizes(fraisse4) == [1, 1, 4, 64, 4096]

    def test_two_sided_rate_schedule(self, fraisse4):
        report = eta_report(fraisse4)
        assert [e["eta"] for e in report] == [
            F(1), F(1, 2), F(1, 4), F(1, 8)]

    def test_dagger_child_everywhere(self, fraisse4):
        report = validate_f_system(fraisse4)
        assert all(d["missing"] == 0 for d in report["dagger"])

    def test_structure_validates(self, fraisse4):
        assert validate_graph_c_system(fraisse4.tower)["violations"] == []


class TestTwosided:
    """Both one-sided rates fast, the two-sided rate pinned at 1/2."""

    def test_sizes_frozen(self, twosided4):
        assert level_sizes(twosided4) == [1, 3, 21, 315, 9765]

    def test_children_per_parent_growth(self, twosided4):
        """Level n parents each carry 2^(n+2) - 1 children."""
        sizes = level_sizes(twosided4)
        for n in range(4):
            assert sizes[n + 1] == sizes[n] * (2 ** (n + 2) - 1)

    def test_one_sided_rates_halve(self, twosided4):
        report = eta_report(twosided4)
        assert [e["eta_plus"] for e in report] == [
            F(1, 2 ** (n + 1)) for n in range(4)]
        assert [e["eta_minus"] for e in report] == [
            F(1, 2 ** (n + 1)) for n in range(4)]

    def test_two_sided_rate_lower_bounded(self, twosided4):
        """The middle stays uncovered: eta is exactly 1/2 at all levels,
        which disqualifies the family from the two-sided universal class."""
        report = eta_report(twosided4)
        assert all(e["eta"] == F(1, 2) for e in report)

    def test_structure_validates(self, twosided4):
        assert validate_graph_c_system(twosided4.tower)["violations"] == []
        assert validate_f_system(twosided4)["violations"] == []


class TestDepthControl:
    def test_depth_one_builds(self):
        for build in (build_cantor, build_lelek, build_fraisse, build_twosided):
            fs = build(1)
            assert fs.depth == 1
            assert fs.tower.levels[0].nv == 1
