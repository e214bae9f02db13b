"""Limit cycles of the clock oscillators and the phase-angle geometry on them."""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import _kernel as K
from .errors import DegenerateAngleError, NonConvergenceError, StiffnessError
from .model import ModelParams, dark_nullcline_intersection
from .odeint import IntegratorConfig

MODES = {"LD": K.LD, "DD": K.DD, "LL": K.LL}
SEED = (0.1, 0.6)
DT_SAMPLE = 0.005
CONVERGENCE_TOL = 1e-7
MAX_CYCLES = 300


@dataclass(frozen=True)
class AngleFrame:
    """Polar frame about ``origin``; ``rotation`` puts X0 at angle 0 and
    ``orientation`` (+1 or -1) makes the angle grow along the flow."""

    origin: tuple[float, float]
    rotation: float
    orientation: int = 1
    source: str = "dark-nullcline-intersection"

    def as_array(self) -> np.ndarray:
        return np.array([self.origin[0], self.origin[1], float(self.orientation), self.rotation])


@dataclass(frozen=True)
class LimitCycle:
    """Periodic orbit sampled uniformly over one period.

    ``samples`` has columns ``t, P, M``; ``full`` keeps the 4-component
    state ``(P1, M1, P2, M2)`` at the same times. For LD cycles
    ``t_mod_start`` is the light phase of sample 0.
    """

    samples: np.ndarray
    period: float
    x0_index: int
    origin: tuple[float, float]
    mode: str = "LD"
    oscillator: str = "O1"
    t_mod_start: float = 0.0
    full: np.ndarray | None = field(default=None, repr=False)
    params: ModelParams | None = None
    frame: AngleFrame | None = None

    @property
    def t(self) -> np.ndarray:
        return self.samples[:, 0]

    @property
    def P(self) -> np.ndarray:
        return self.samples[:, 1]

    @property
    def M(self) -> np.ndarray:
        return self.samples[:, 2]

    @property
    def dt(self) -> float:
        return self.period / len(self.samples)

    @property
    def x0(self) -> np.ndarray:
        return self.samples[self.x0_index, 1:3]

    def phase_of_index(self, i) -> np.ndarray:
        """Phase in (0, 24] of sample ``i`` measured from X0."""
        x = ((np.asarray(i) - self.x0_index) % len(self.samples)) * self.dt * 24.0 / self.period
        return np.where(x <= 0.0, 24.0, x)

    def by_phase(self) -> np.ndarray:
        """(P, M) rows rolled so row ``j`` sits at phase ``j * dt``."""
        return np.roll(self.samples[:, 1:3], -self.x0_index, axis=0)

    def theta_table(self) -> np.ndarray:
        """Unrolled oriented angle from X0 (0) back to X0 (2*pi)."""
        frame = self.frame or angle_frame(self)
        pts = self.by_phase()
        th = frame.orientation * (
            np.arctan2(pts[:, 1] - frame.origin[1], pts[:, 0] - frame.origin[0]) - frame.rotation
        )
        th = np.unwrap(th)
        th = th - th[0]
        return np.append(th, 2.0 * np.pi)

    def hourly_markers(self) -> np.ndarray:
        """(phase, P, M) at each whole hour 1..24 after X0."""
        rows = []
        step = int(round(1.0 / (self.dt * 24.0 / self.period)))
        pts = self.by_phase()
        for hour in range(1, 25):
            j = (hour * step) % len(pts)
            rows.append((float(hour), pts[j, 0], pts[j, 1]))
        return np.array(rows)

    def to_csv(self, path: str | Path) -> None:
        np.savetxt(path, self.samples, delimiter=",", header="t,P,M", comments="", fmt="%.9g")
        sidecar = {
            "period": self.period,
            "x0_index": self.x0_index,
            "origin": list(self.origin),
            "mode": self.mode,
            "oscillator": self.oscillator,
            "t_mod_start": self.t_mod_start,
            "params": self.params.as_dict() if self.params else None,
            "params_hash": params_hash(self.params) if self.params else None,
        }
        Path(path).with_suffix(".json").write_text(json.dumps(sidecar, indent=2))

    @classmethod
    def from_csv(cls, path: str | Path) -> LimitCycle:
        samples = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        meta = json.loads(Path(path).with_suffix(".json").read_text())
        params = ModelParams(**meta["params"]) if meta.get("params") else None
        return cls(
            samples,
            float(meta["period"]),
            int(meta["x0_index"]),
            tuple(meta["origin"]),
            meta.get("mode", "LD"),
            meta.get("oscillator", "O1"),
            float(meta.get("t_mod_start", 0.0)),
            params=params,
        )


def params_hash(params: ModelParams) -> str:
    blob = json.dumps(params.as_dict(), sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def _check(status: int) -> None:
    if status == K.STIFF:
        raise StiffnessError("step size underflow while converging to the limit cycle")


def _advance(u, t0, t1, a, mode, cfg):
    res = K.drive(u, t0, t1, a, mode, cfg, np.zeros(4), 0, np.zeros(3), 0.0, 0)
    _check(res[0])
    return res[2]


def _sample(u, t0, dt, n, a, mode, cfg):
    res = K.drive(u, t0, t0 + n * dt, a, mode, cfg, np.zeros(4), 0, np.zeros(3), dt, n)
    _check(res[0])
    return res[7]


def _converge_stroboscopic(u, t0, a, mode, cfg, comps):
    for _ in range(MAX_CYCLES):
        nxt = _advance(u, t0, t0 + 24.0, a, mode, cfg)
        if np.max(np.abs(nxt[comps] - u[comps])) < CONVERGENCE_TOL:
            return nxt
        u = nxt
    raise NonConvergenceError("no 24 h entrained cycle within 300 forcing periods")


def _converge_section(u, a, mode, cfg, sec, comps):
    t = 0.0
    prev_t, prev_u = None, None
    for _ in range(MAX_CYCLES):
        res = K.drive(u, t, t + 200.0, a, mode, cfg, sec, 1, np.zeros(3), 0.0, 0)
        _check(res[0])
        if res[0] == K.NO_RETURN:
            raise NonConvergenceError("trajectory stopped crossing the internal section")
        te, ue = res[3][0], res[4][0]
        if prev_u is not None and np.max(np.abs(ue[comps] - prev_u[comps])) < CONVERGENCE_TOL:
            return ue, te - prev_t, te
        prev_t, prev_u = te, ue
        t, u = te, ue
    raise NonConvergenceError("no periodic orbit within 300 cycles")


def find_limit_cycle(
    params: ModelParams,
    light_mode: str = "LD",
    oscillator: str = "O1",
    config: IntegratorConfig | None = None,
    start_phase: float = 0.0,
    dt_sample: float = DT_SAMPLE,
) -> LimitCycle:
    """Stable periodic orbit of O1, or of O2 while driven by O1.

    LD cycles are converged stroboscopically and have period 24 exactly;
    DD and LL periods are measured return times to an internal section.
    ``start_phase`` is the light phase of the first LD sample.
    """
    cfg = (config or IntegratorConfig()).as_array()
    mode = MODES[light_mode]
    osc = oscillator.upper().replace("_DRIVEN", "")
    if osc not in ("O1", "O2"):
        raise ValueError("oscillator must be 'O1' or 'O2'")
    a = params.as_array()
    if osc == "O1":
        # O2 is irrelevant for O1; decouple it so it cannot blow up the step control
        a[8] = 0.0
    u = np.array([SEED[0], SEED[1], SEED[0], SEED[1]])
    origin = dark_nullcline_intersection(params)
    comps = np.array([0, 1]) if osc == "O1" else np.arange(4)

    if light_mode == "LD":
        u = _converge_stroboscopic(u, start_phase, a, mode, cfg, comps)
        period = 24.0
        t_start = start_phase
    else:
        if osc == "O1":
            sec = np.array([0.0, origin[0], 1.0, 1.0])
        else:
            sec = np.array([2.0, 1.72, -1.0, 1.0])
        u, period, t_start = _converge_section(u, a, mode, cfg, sec, comps)

    n = int(round(period / dt_sample))
    dt = period / n
    full = _sample(u, t_start, dt, n, a, mode, cfg)
    cols = (0, 1) if osc == "O1" else (2, 3)
    t = np.arange(n) * dt
    samples = np.column_stack([t, full[:, cols[0]], full[:, cols[1]]])
    t_mod_start = start_phase % 24.0 if light_mode == "LD" else 0.0
    cycle = LimitCycle(samples, period, 0, origin, light_mode, osc, t_mod_start, full, params)
    x0 = reference_point(cycle)
    cycle = LimitCycle(samples, period, x0, origin, light_mode, osc, t_mod_start, full, params)
    frame = angle_frame(cycle)
    return LimitCycle(samples, period, x0, frame.origin, light_mode, osc, t_mod_start, full, params, frame)


def reference_point(cycle: LimitCycle) -> int:
    """Index of the sample where lights switch on (t_mod = 0).

    Cycles without light forcing use the first sample.
    """
    if cycle.mode != "LD":
        return 0
    n = len(cycle.samples)
    k = ((24.0 - cycle.t_mod_start) % 24.0) / cycle.dt
    return int(round(k)) % n


def winding_number(P, M, origin) -> float:
    th = np.unwrap(np.arctan2(np.append(M, M[0]) - origin[1], np.append(P, P[0]) - origin[0]))
    return (th[-1] - th[0]) / (2.0 * np.pi)


def angle_frame(cycle: LimitCycle) -> AngleFrame:
    """Frame centred on the dark nullcline intersection (centroid fallback)."""
    origin = tuple(cycle.origin)
    source = "dark-nullcline-intersection"
    w = winding_number(cycle.P, cycle.M, origin)
    if abs(abs(w) - 1.0) > 1e-6:
        origin = (float(cycle.P.mean()), float(cycle.M.mean()))
        source = "centroid"
        w = winding_number(cycle.P, cycle.M, origin)
        if abs(abs(w) - 1.0) > 1e-6:
            raise DegenerateAngleError("no interior origin found for the cycle")
    x0 = cycle.x0
    rotation = math.atan2(x0[1] - origin[1], x0[0] - origin[0])
    return AngleFrame(origin, rotation, 1 if w > 0 else -1, source)


def angle_of(point, frame: AngleFrame) -> float:
    """Angle of ``point`` in (0, 2*pi]; X0 itself maps to 2*pi."""
    P, M = point
    if math.hypot(P - frame.origin[0], M - frame.origin[1]) < 1e-12:
        raise DegenerateAngleError("point coincides with the frame origin")
    return float(K.frame_angle(P, M, frame.as_array()))


def phase_from_angle(theta: float, cycle: LimitCycle) -> float:
    """Phase x in (0, 24] whose cycle point has angle ``theta``."""
    table = cycle.theta_table()
    x = float(K.phase_lookup(float(theta), table, 24.0 / (len(table) - 1)))
    return 24.0 if x <= 0.0 else x


def gamma(cycle: LimitCycle, x: float, params: ModelParams | None = None,
          config: IntegratorConfig | None = None) -> np.ndarray:
    """O1 state ``(P, M)`` at phase ``x`` of an LD cycle."""
    p = params or cycle.params
    a = p.as_array()
    a[8] = 0.0
    cfg = (config or IntegratorConfig()).as_array()
    P, M = K.on_cycle_state(float(x), np.ascontiguousarray(cycle.by_phase()), cycle.dt, a, cfg)
    return np.array([P, M])
