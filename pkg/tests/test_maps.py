from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import solve_ivp

from entrainmap.analysis import simulate_crossings
from entrainmap.cycles import angle_of, phase_from_angle
from entrainmap.errors import NoReturnError
from entrainmap.maps import (
    CANONICAL_SECTION,
    NOT_ENTRAINED,
    NT_SECTION,
    SEMI_SECTION,
    EntrainmentMap,
    MapPoint,
    MapStep,
    SectionSpec,
    iterate_to_entrainment,
    map_1d_nt,
    map_o1_entrained,
    torus_distance,
    verify_global_section,
    wrap_diff,
    wrap_phase,
)
from entrainmap.model import cnt_rhs_array


# ----- torus arithmetic -------------------------------------------------------

def test_wrap_conventions():
    assert wrap_phase(0.0) == 24.0
    assert wrap_phase(24.0) == 24.0
    assert wrap_phase(-1.0) == 23.0
    assert wrap_diff(12.0) == 12.0
    assert wrap_diff(-12.0) == 12.0
    assert wrap_diff(23.0) == -1.0


@given(st.floats(-100, 100), st.floats(-100, 100))
def test_map_point_wraps_into_square(x, y):
    p = MapPoint(x, y)
    assert 0.0 < p.x <= 24.0 and 0.0 < p.y <= 24.0


@given(st.floats(0, 24), st.floats(0, 24), st.floats(0, 24), st.floats(0, 24))
def test_torus_distance_is_a_symmetric_bounded_metric(a, b, c, d):
    p, q = MapPoint(a, b), MapPoint(c, d)
    assert p.distance(q) == pytest.approx(q.distance(p))
    assert 0.0 <= p.distance(q) <= math.hypot(12, 12) + 1e-9
    assert p.distance(q) == pytest.approx(torus_distance((a, b), (c, d)))


def test_map_point_difference_across_edge():
    assert np.allclose(MapPoint(23.5, 0.5) - MapPoint(0.5, 23.5), [-1.0, 1.0])
    assert MapPoint(1, 2).shifted(-2, 23) == MapPoint(23, 1)


def test_step_direction_labels():
    assert MapStep(MapPoint(1, 1), 23.0).y_direction == "advance"
    assert MapStep(MapPoint(1, 1), 25.0).y_direction == "delay"
    assert MapStep(MapPoint(1, 1), 24.0, x_winding=7.0).x_direction == "delay"
    assert MapStep(MapPoint(1, 1), 24.0, x_winding=6.0).x_direction == "advance"


def test_section_presets_and_validation():
    assert (CANONICAL_SECTION.coordinate, CANONICAL_SECTION.level, CANONICAL_SECTION.center) == ("P2", 1.72, 0.1289)
    assert CANONICAL_SECTION.direction == -1
    assert SEMI_SECTION.center == 0.1548
    assert NT_SECTION.level == 0.45
    with pytest.raises(ValueError):
        SectionSpec(delta=0.0)
    with pytest.raises(ValueError):
        SectionSpec(direction=2)


# ----- single-oscillator map ------------------------------------------------

@pytest.fixture(scope="module")
def nt_scan():
    ys = np.arange(0.0, 24.0, 0.1) + 0.05
    steps = [map_1d_nt(y) for y in ys]
    return ys, np.array([s.next.y for s in steps]), np.array([s.return_time for s in steps])


def test_nt_map_endpoints_periodic():
    assert map_1d_nt(1e-6).return_time == pytest.approx(map_1d_nt(24.0 - 1e-6).return_time, abs=0.05)


def test_nt_map_has_two_fixed_points(nt_scan):
    ys, nxt, _ = nt_scan
    r = wrap_diff(nxt - ys)
    changes = [i for i in range(len(ys)) if (r[i] < 0) != (r[(i + 1) % len(ys)] < 0)
               and abs(r[i] - r[(i + 1) % len(ys)]) < 6.0]
    assert len(changes) == 2


def test_nt_fixed_point_locks_one_to_one(nt_scan):
    from scipy.optimize import brentq

    ys, nxt, _ = nt_scan
    r = wrap_diff(nxt - ys)
    i = next(i for i in range(len(ys) - 1) if r[i] > 0 > r[i + 1])
    y_star = brentq(lambda y: wrap_diff(map_1d_nt(y).next.y - y), ys[i], ys[i + 1], xtol=1e-10)
    s = map_1d_nt(y_star)
    assert s.next.y == pytest.approx(y_star, abs=1e-6)
    assert s.return_time == pytest.approx(24.0, abs=1e-6)


# ----- two-oscillator maps ----------------------------------------------------

def test_diagonal_is_invariant(emap):
    ys = np.arange(0.5, 24.0, 1.0)
    out = emap.grid(ys, ys)
    assert np.all(out[:, 0] == 0)
    assert np.max(np.abs(wrap_diff(out[:, 1] - out[:, 2]))) < 0.05


def test_o1_entrained_map_is_the_diagonal(emap):
    for y in np.arange(0.5, 24.0, 1.0):
        assert map_o1_entrained(y, emap).next.y == pytest.approx(emap(y, y).next.y, abs=0.05)


def _oracle_step(emap, x, y):
    """Return of O2 to the section from scipy's DOP853, light intervals integrated separately."""
    p = emap.params
    u = emap.initial_state(x, y)
    t = y
    level = emap.section.level
    while t < y + 120.0:
        edge = (math.floor(t / 12.0) + 1) * 12.0
        f = float((t % 24.0) < 12.0)
        ev = lambda s, v: v[2] - level
        ev.direction = -1
        r = solve_ivp(lambda s, v: cnt_rhs_array(v, p, f), (t, edge), u, method="DOP853",
                      rtol=1e-11, atol=1e-13, events=ev, dense_output=True)
        hits = [te for te in r.t_events[0] if te > y + 1.0]
        if hits:
            te = hits[0]
            return te - y, r.sol(te)
        t, u = edge, r.y[:, -1]
    raise AssertionError("oracle saw no return")


@pytest.mark.parametrize("x, y", [(3.0, 5.0), (10.0, 10.0), (20.0, 7.0), (14.5, 22.0)])
def test_map_matches_scipy_oracle(emap, x, y):
    s = emap(x, y)
    rho, u = _oracle_step(emap, x, y)
    assert s.return_time == pytest.approx(rho, abs=1e-5)
    x_next = phase_from_angle(angle_of(u[:2], emap.frame), emap.cycle)
    assert abs(wrap_diff(s.next.x - x_next)) < 1e-3
    assert s.M2_return == pytest.approx(u[3], abs=1e-5)


@pytest.mark.parametrize("y", [2.0, 10.0, 15.0, 21.0])
def test_on_cycle_winding_matches_phase_advance(emap, y):
    """On the diagonal O1 stays on its entrained cycle, so it advances by
    exactly rho in phase, and the swept angle agrees with the angle table."""
    s = emap(y, y)
    assert abs(wrap_diff(s.next.x - (y + s.return_time))) < 1e-3
    th = emap.cycle.theta_table()
    grid = np.linspace(0.0, 24.0, len(th))
    end = y + s.return_time
    expected = np.interp(end % 24.0, grid, th) - np.interp(y, grid, th) + 2 * np.pi * math.floor(end / 24.0)
    assert s.x_winding == pytest.approx(expected, abs=1e-3)


def test_o1_map_non_monotone_with_steep_return(emap):
    ys = np.arange(0.05, 24.0, 0.1)
    out = emap.grid(ys, ys)
    lifted = ys + out[:, 3]
    assert np.any(np.diff(lifted) < 0)  # y1 < y2 with Pi(y1) > Pi(y2)
    drho = np.diff(out[:, 3]) / 0.1
    assert drho.min() < -1.0


def test_return_time_continuous_off_discontinuities(emap, rng):
    P = rng.uniform(0, 24, (200, 2))
    E = rng.normal(size=(200, 2))
    E = 0.01 * E / np.linalg.norm(E, axis=1)[:, None]
    a = emap.grid(P[:, 0], P[:, 1])
    b = emap.grid(P[:, 0] + E[:, 0], P[:, 1] + E[:, 1])
    jump = np.abs(a[:, 3] - b[:, 3])
    small = jump < 1.0
    assert small.mean() >= 0.95
    # the rest straddle a discontinuity: a whole extra cycle
    assert np.all(np.abs(jump[~small] - 24.0) < 6.0)


def test_iterate_from_target_takes_no_steps(emap, sink_1d):
    run = iterate_to_entrainment(sink_1d, sink_1d, emap)
    assert run.n_iter == 0 and run.entrainment_time == 0.0 and run.entrained


def test_iterate_counts_return_times(emap, sink_1d):
    run = iterate_to_entrainment(MapPoint(3.0, 20.0), sink_1d, emap)
    assert run.entrained
    assert run.iterates[-1].distance(sink_1d) < 0.5
    assert all(p.distance(sink_1d) >= 0.5 for p in run.iterates[:-1])
    assert run.entrainment_time == pytest.approx(sum(s.return_time for s in run.steps))
    assert run.net_shift == pytest.approx(run.entrainment_time - 24.0 * run.n_iter)


def test_iterate_not_entrained_sentinel(emap, sink_1d):
    run = iterate_to_entrainment(MapPoint(17.0, 17.0), sink_1d, emap, max_iters=2)
    assert not run.entrained and run.entrainment_time == NOT_ENTRAINED


def test_iterate_grid_agrees_with_python_loop(emap, sink_1d):
    starts = np.array([[3.0, 20.0], [15.0, 2.0], [8.0, 8.0]])
    out = emap.iterate_grid(starts[:, 0], starts[:, 1], sink_1d.as_tuple())
    for (x, y), row in zip(starts, out):
        run = iterate_to_entrainment(MapPoint(x, y), sink_1d, emap)
        assert row[1] == run.n_iter
        assert row[2] == pytest.approx(run.entrainment_time, abs=1e-9)


def test_global_section_returns(emap):
    rep = verify_global_section(emap, n_probes=30, seed=3)
    assert rep.all_returned
    assert np.all((rep.return_times > 0) & (rep.return_times < 120.0))


def test_uncoupled_o2_still_returns():
    m = EntrainmentMap().with_params(alpha1=0.0)
    rep = verify_global_section(m, n_probes=20, seed=1)
    assert rep.all_returned


def test_probe_from_centre_matches_map(emap):
    p0 = MapPoint(6.0, 13.0)
    times, _ = simulate_crossings(emap, p0, 2)
    assert times[1] - times[0] == pytest.approx(emap(p0.x, p0.y).return_time, abs=1e-9)


def test_no_return_raises():
    m = EntrainmentMap(section=SectionSpec(level=50.0))
    with pytest.raises(NoReturnError):
        m(5.0, 5.0)


def test_with_params_reuses_o1_cycle(emap):
    assert emap.with_params(alpha1=1.5).cycle is emap.cycle
    assert emap.with_params(k_L1=0.06).cycle is not emap.cycle


@settings(max_examples=30, deadline=None)
@given(st.floats(0.0, 24.0), st.floats(0.0, 24.0))
def test_map_lands_in_square(x, y):
    s = _EMAP()(x, y)
    assert 0.0 < s.next.x <= 24.0 and 0.0 < s.next.y <= 24.0
    assert s.return_time > 0.0
    assert s.next.y == pytest.approx(wrap_phase(y + s.return_time))


_cache: dict = {}


def _EMAP() -> EntrainmentMap:
    if "m" not in _cache:
        _cache["m"] = EntrainmentMap()
    return _cache["m"]


# reference fixed-point locations that this model does not reproduce; the
# acceptance suite reports them as failures, here they are kept as strict
# expected failures so a future fix is noticed
@pytest.mark.xfail(strict=True, reason="reference value not reproduced: sink sits at 10.10")
def test_reference_sink_location_is_fixed(emap):
    assert emap.apply((10.6, 10.6)).distance(MapPoint(10.6, 10.6)) < 0.1


@pytest.mark.xfail(strict=True, reason="reference value not reproduced: saddle sits at (10.16, 20.58)")
def test_reference_saddle_c_location_is_fixed(emap):
    assert emap.apply((10.6, 21.1)).distance(MapPoint(10.6, 21.1)) < 0.1
