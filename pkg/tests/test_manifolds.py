from __future__ import annotations

import json
import math

import numpy as np
import pytest

from entrainmap.manifolds import (
    DELTA_MAX,
    DELTA_MIN,
    EPS0,
    TERMINATION_RADIUS,
    ManifoldCurve,
    forward_invariance,
    grow_stable_sc,
    preimage_contraction,
    separatrix_check,
)
from entrainmap.maps import MapPoint, iterate_to_entrainment, wrap_diff


def _all(unstable_manifolds, stable_manifolds):
    for lab in "BC":
        yield from unstable_manifolds[lab]
        yield from stable_manifolds[lab]


def test_unstable_eigenvector_at_b_is_diagonal(fp):
    v = fp["B"].eigvec("u")
    angle = math.degrees(math.acos(abs(v @ np.array([1.0, 1.0])) / math.sqrt(2)))
    assert angle < 5.0


def test_unstable_b_lies_on_diagonal(unstable_manifolds):
    for c in unstable_manifolds["B"]:
        V = c.vertices
        assert np.max(np.abs(wrap_diff(V[:, 0] - V[:, 1]))) / math.sqrt(2) < 0.1


@pytest.mark.parametrize("lab", ["B", "C"])
def test_unstable_branches_end_at_sink(unstable_manifolds, fp, lab):
    A = MapPoint(*fp["A"].location.as_tuple())
    for c in unstable_manifolds[lab]:
        assert c.termination == "reached-A"
        assert MapPoint(*c.lifted[-1]).distance(A) < TERMINATION_RADIUS


@pytest.mark.parametrize("lab", ["B", "C"])
def test_stable_branches_emanate_from_source(stable_manifolds, fp, lab):
    D = MapPoint(*fp["D"].location.as_tuple())
    for c in stable_manifolds[lab]:
        assert c.termination == "reached-D"
        assert MapPoint(*c.lifted[-1]).distance(D) < 1.0


def test_seed_along_eigenvector(unstable_manifolds, stable_manifolds):
    for c in _all(unstable_manifolds, stable_manifolds):
        S = np.array(c.saddle.location.as_tuple())
        assert np.allclose(c.lifted[0], S)
        step = c.lifted[1] - S
        v = c.saddle.eigvec("u" if c.kind == "unstable" else "s")
        assert np.hypot(*step) <= EPS0 + 1e-12
        assert abs(abs(step @ v) / np.hypot(*step) - 1.0) < 1e-9


def test_spacing_after_local_stage(unstable_manifolds, stable_manifolds):
    for c in _all(unstable_manifolds, stable_manifolds):
        # segment 0 is the eps0 seed step, then come the local-stage vertices
        s = c.spacing[1 + c.local_count:]
        assert len(s) > 10
        assert s.min() >= DELTA_MIN - 1e-9
        assert s.max() <= DELTA_MAX + 1e-9


def test_curves_are_wrapped_into_square(unstable_manifolds, stable_manifolds):
    for c in _all(unstable_manifolds, stable_manifolds):
        for seg in c.segments:
            assert np.all(seg >= -1e-9) and np.all(seg <= 24.0 + 1e-9)
        assert np.all((c.vertices > 0) & (c.vertices <= 24.0))


def test_forward_invariance_of_unstable_curves(emap, unstable_manifolds, fp):
    A = fp["A"].location.as_tuple()
    for lab in "BC":
        rows = forward_invariance(emap, unstable_manifolds[lab], n=20, exclude=A)
        assert len(rows) == 40
        assert max(r["distance"] for r in rows) < 0.1


def test_stable_vertices_map_closer_to_saddle(emap, stable_manifolds):
    for lab in "BC":
        rows = preimage_contraction(emap, stable_manifolds[lab], n=20)
        assert len(rows) == 40
        assert max(r["distance"] for r in rows) < 0.1
        assert all(r["arc_image"] < r["arc_vertex"] for r in rows)


def test_separatrix_sensitivity(emap, stable_manifolds):
    rows = separatrix_check(emap, stable_manifolds["C"], n=50, offset=0.3)
    assert sum(r["differs"] for r in rows) >= 45


def test_sides_of_stable_c_both_reach_sink(emap, fp):
    C = fp["C"].location
    A = MapPoint(*fp["A"].location.as_tuple())
    runs = [iterate_to_entrainment(C.shifted(0.0, d), A, emap) for d in (0.3, -0.3)]
    assert all(r.entrained for r in runs)
    assert runs[0].y_directions != runs[1].y_directions


def test_single_branch_wrapper(emap, fp, stable_manifolds):
    c = grow_stable_sc(emap, fp["B"], -1, source=fp["D"].location.as_tuple())
    ref = stable_manifolds["B"][1]
    assert c.branch == -1 and np.allclose(c.lifted, ref.lifted)


def test_csv_and_metadata(stable_manifolds, tmp_path):
    c: ManifoldCurve = stable_manifolds["C"][0]
    path = tmp_path / "ws_c.csv"
    c.to_csv(path)
    data = np.loadtxt(path, delimiter=",", skiprows=1)
    assert path.read_text().splitlines()[0] == "segment_id,x,y"
    assert len(data) == sum(len(s) for s in c.segments)
    assert set(data[:, 0].astype(int)) == set(range(len(c.segments)))
    meta = json.loads(path.with_suffix(".json").read_text())
    assert meta == {**c.metadata()}
    assert meta["saddle"] == "C" and meta["kind"] == "stable" and meta["termination"] == "reached-D"


def test_distance_to_curve(unstable_manifolds):
    c = unstable_manifolds["B"][0]
    v = c.vertices[len(c.vertices) // 2]
    assert c.distance_to(v) < 1e-9
