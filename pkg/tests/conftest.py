"""Shared fixtures: one built system per family, session-cached.

Builds are deterministic, so caching them for the whole run changes
nothing about what the tests observe and keeps the suite fast.
"""

from __future__ import annotations

import pytest

from fence_forge.constructors.basic import (build_cantor, build_fraisse,
                                            build_lelek, build_twosided)
from fence_forge.constructors.cycles import (build_isometry_lift,
                                             build_warmup_isometry)
from fence_forge.constructors.odometer import build_minimal_fraisse_lift
from fence_forge.constructors.orbit import (build_chaotic_lift,
                                            build_mixing_lift,
                                            build_transitive_lift)


@pytest.fixture(scope="session")
def cantor4():
    return build_cantor(4)


@pytest.fixture(scope="session")
def lelek5():
    return build_lelek(5)


@pytest.fixture(scope="session")
def fraisse4():
    return build_fraisse(4)


@pytest.fixture(scope="session")
def twosided4():
    return build_twosided(4)


@pytest.fixture(scope="session")
def warmup5():
    return build_warmup_isometry(5)


@pytest.fixture(scope="session")
def iso_fraisse():
    return build_isometry_lift("fraisse")


@pytest.fixture(scope="session")
def iso_lelek():
    return build_isometry_lift("lelek")


@pytest.fixture(scope="session")
def minimal4():
    return build_minimal_fraisse_lift(4)


@pytest.fixture(scope="session")
def transitive4():
    return build_transitive_lift(4)


@pytest.fixture(scope="session")
def chaotic4():
    return build_chaotic_lift(4)


@pytest.fixture(scope="session")
def mixing3():
    return build_mixing_lift(3)
