from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import solve_ivp

from entrainmap.errors import MissingDependencyError
from entrainmap.model import (
    FullState,
    ModelParams,
    cnt_rhs,
    cnt_rhs_array,
    dark_nullcline_intersection,
    dump_params,
    hill_g,
    hill_h,
    light,
    nullcline,
    parse_assignments,
    preset,
)


@pytest.mark.parametrize("P, expected", [(0.0, 1.0), (1.0, 0.5), (2.0, 1.0 / 17.0)])
def test_hill_g_values(P, expected):
    assert hill_g(P) == pytest.approx(expected, abs=1e-12)


@pytest.mark.parametrize("P, expected", [(0.0, 0.0), (1.0, 1.0 / 3.1), (0.1, 0.1 / 0.22)])
def test_hill_h_values(P, expected):
    assert hill_h(P) == pytest.approx(expected, abs=1e-12)


@pytest.mark.parametrize("t_mod, on", [(6.0, 1), (18.0, 0), (12.0, 0), (0.0, 1)])
def test_light_half_open_schedule(t_mod, on):
    assert light(t_mod, ModelParams()) == on


def test_light_constant_modes():
    p = ModelParams()
    assert light(6.0, p, "DD") == 0
    assert light(18.0, p, "LL") == 1


def test_canonical_preset_values():
    p = preset("canonical")
    assert (p.phi1, p.phi2, p.eps1, p.eps2) == (2.1, 2.1, 0.05, 0.05)
    assert (p.k_D, p.k_L1, p.k_L2, p.k_f, p.alpha1) == (0.05, 0.05, 0.0, 1.0, 2.0)
    assert preset("semi").k_L2 == 0.025


@pytest.mark.parametrize("bad", [{"eps1": 0.0}, {"phi2": 0.0}, {"k_D": -0.1}, {"alpha1": float("nan")}])
def test_params_reject_invalid(bad):
    with pytest.raises(ValueError):
        ModelParams(**bad)


def test_full_state_validation():
    with pytest.raises(ValueError):
        FullState(1, 1, 1, 1, t_mod=24.0)
    with pytest.raises(ValueError):
        FullState(np.nan, 1, 1, 1)


def test_rhs_dP1_dark():
    d = cnt_rhs(FullState(1.0, 0.5, 1.0, 0.5, t_mod=18.0), ModelParams())
    assert d[0] == pytest.approx(2.1 * (0.5 - 1 / 3.1 - 0.05), abs=1e-12)
    assert d[0] == pytest.approx(0.2675806, abs=1e-7)


def test_rhs_dM2_coupling():
    d = cnt_rhs(FullState(1.0, 1.0, 1.0, 0.5, t_mod=18.0), ModelParams())
    assert d[3] == pytest.approx(0.105, abs=1e-12)


def test_rhs_light_term():
    p = ModelParams()
    dark = cnt_rhs(FullState(1.0, 0.5, 1.0, 0.5, t_mod=18.0), p)
    lit = cnt_rhs(FullState(1.0, 0.5, 1.0, 0.5, t_mod=6.0), p)
    assert dark[0] - lit[0] == pytest.approx(p.phi1 * p.k_L1 * 1.0)
    assert dark[2] == lit[2]  # k_L2 = 0: O2 blind to light


def test_nullcline_values():
    p = ModelParams()
    dark = nullcline("P_dark", p, (0.5, 1.5), 3)
    lit = nullcline("P_light", p, (0.5, 1.5), 3)
    m = nullcline("M1", p, (0.0, 1.0), 2)
    assert dark.M[1] == pytest.approx(0.3725806, abs=1e-7)
    assert lit.M[1] == pytest.approx(0.4225806, abs=1e-7)
    assert m.M[0] == 1.0


@pytest.mark.parametrize("kind", ["P_dark", "P_light", "M1"])
def test_nullcline_samples_satisfy_equation(kind):
    p = ModelParams()
    nc = nullcline(kind, p, (0.0, 4.0), 200)
    assert np.all(np.diff(nc.P) > 0)
    f = {"P_dark": 0.0, "P_light": 1.0}.get(kind)
    for P, M in nc.samples:
        d = cnt_rhs_array(np.array([P, M, 1.0, 0.5]), p, f or 0.0)
        resid = d[0] if f is not None else d[1]
        assert abs(resid) < 1e-10


def test_m2_nullcline_needs_cycle():
    with pytest.raises(MissingDependencyError):
        nullcline("M2_min", ModelParams())


def test_nullcline_argument_checks():
    with pytest.raises(ValueError):
        nullcline("P_dark", ModelParams(), (0.0, 1.0), 1)
    with pytest.raises(ValueError):
        nullcline("bogus", ModelParams())


def test_dark_intersection_is_on_both_nullclines():
    p = ModelParams()
    P, M = dark_nullcline_intersection(p)
    assert M == pytest.approx(hill_g(P), abs=1e-12)
    assert M == pytest.approx(hill_h(P) + p.k_D * P, abs=1e-12)


def test_assignments_round_trip():
    p = ModelParams(alpha1=1.7, k_L2=0.01)
    assert parse_assignments(dump_params(p).splitlines()) == p
    q = parse_assignments(["preset = semi", "alpha1=2.5  # stronger"])
    assert q.k_L2 == 0.025 and q.alpha1 == 2.5
    with pytest.raises(ValueError):
        parse_assignments(["nonsense=1"])


# ----- properties -------------------------------------------------------------

def test_h_unimodal_single_sign_change():
    P = np.linspace(1e-4, 10.0, 200001)
    dh = np.diff(hill_h(P))
    changes = np.count_nonzero(np.sign(dh[1:]) != np.sign(dh[:-1]))
    assert changes == 1
    assert P[np.argmax(hill_h(P))] == pytest.approx(np.sqrt(0.05), abs=1e-3)


@given(st.floats(0.0, 50.0))
def test_g_in_unit_interval(P):
    assert 0.0 < hill_g(P) <= 1.0


@given(st.floats(0.0, 23.999))
def test_light_is_24_periodic(t):
    p = ModelParams()
    assert light(t, p) == light((t + 24.0) % 24.0, p)


@settings(max_examples=20, deadline=None)
@given(st.floats(0.2, 2.5), st.floats(0.1, 1.0), st.floats(0.0, 23.0))
def test_uncoupled_symmetry(P0, M0, t0):
    """With alpha1 = 0 and equal light sensitivity, O2 started on O1's
    state follows O1 exactly."""
    p = ModelParams(alpha1=0.0, k_L2=0.05)

    def f(t, u):
        return cnt_rhs_array(u, p, float((t % 24.0) < 12.0))

    sol = solve_ivp(f, (t0, t0 + 30.0), [P0, M0, P0, M0], rtol=1e-9, atol=1e-11, max_step=0.05)
    assert np.max(np.abs(sol.y[0] - sol.y[2])) == 0.0
    assert np.max(np.abs(sol.y[1] - sol.y[3])) == 0.0
