from __future__ import annotations

import numpy as np
import pytest

from entrainmap.analysis import entrainment_heatmap, find_fixed_points, fixed_points_1d, map_nullclines
from entrainmap.manifolds import grow_stable_pair, grow_unstable
from entrainmap.maps import EntrainmentMap, MapPoint

# lines printed by the acceptance suite, echoed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def emap() -> EntrainmentMap:
    return EntrainmentMap()


@pytest.fixture(scope="session")
def nullclines(emap):
    return map_nullclines(emap, 96)


@pytest.fixture(scope="session")
def fixed_points(emap, nullclines):
    return find_fixed_points(emap, 96, nullclines=nullclines)


@pytest.fixture(scope="session")
def fp(fixed_points):
    return {r.label: r for r in fixed_points}


@pytest.fixture(scope="session")
def sink_1d(emap) -> MapPoint:
    y = next(f.y for f in fixed_points_1d(emap) if f.stable)
    return MapPoint(y, y)


@pytest.fixture(scope="session")
def stable_manifolds(emap, fp):
    D = fp["D"].location.as_tuple()
    return {lab: grow_stable_pair(emap, fp[lab], source=D) for lab in "BC"}


@pytest.fixture(scope="session")
def unstable_manifolds(emap, fp):
    A = fp["A"].location.as_tuple()
    return {lab: [grow_unstable(emap, fp[lab], b, sink=A) for b in (1, -1)] for lab in "BC"}


@pytest.fixture(scope="session")
def heatmaps(emap, sink_1d):
    """48x48 entrainment-time grids keyed by alpha1."""
    out = {}
    for a1 in (1.52, 2.0, 2.5):
        m = emap if a1 == 2.0 else emap.with_params(alpha1=a1)
        target = sink_1d if a1 == 2.0 else _sink(m)
        out[a1] = entrainment_heatmap(m, target, 48)
    return out


def _sink(m) -> MapPoint:
    y = next(f.y for f in fixed_points_1d(m) if f.stable)
    return MapPoint(y, y)


@pytest.fixture(scope="session")
def semi_map() -> EntrainmentMap:
    return EntrainmentMap.semi()


@pytest.fixture(scope="session")
def semi_fixed_points(semi_map):
    return find_fixed_points(semi_map, 96)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
