"""Entrainment maps: single oscillator, O1-entrained, and the 2-D torus map."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from . import _kernel as K
from .cycles import LimitCycle, angle_frame, find_limit_cycle, gamma
from .errors import DegenerateAngleError, NoReturnError, StiffnessError
from .model import ModelParams, hill_h
from .odeint import IntegratorConfig

COMPONENTS = {"P1": 0, "M1": 1, "P2": 2, "M2": 3}
RETURN_WINDOW = 120.0
GUARD = 1.0
ENTRAINED_RADIUS = 0.5
NOT_ENTRAINED = -1.0


def wrap_diff(d):
    """Difference on the 24 h circle, wrapped to (-12, 12]."""
    d = np.asarray(d, dtype=float)
    w = np.mod(d + 12.0, 24.0) - 12.0
    w = np.where(w == -12.0, 12.0, w)
    return float(w) if w.ndim == 0 else w


def wrap_phase(x):
    """Representative in (0, 24]."""
    x = np.mod(np.asarray(x, dtype=float), 24.0)
    x = np.where(x <= 0.0, 24.0, x)
    return float(x) if x.ndim == 0 else x


@dataclass(frozen=True)
class SectionSpec:
    """Directional crossing of ``coordinate == level`` near ``center``.

    ``center`` is the companion coordinate (M2 for a P2 section) and
    ``delta`` the half-width used when checking that returns land on it.
    """

    coordinate: str = "P2"
    level: float = 1.72
    center: float = 0.1289
    delta: float = 0.01
    direction: int = -1
    companion: str = "M2"

    def __post_init__(self):
        if not self.delta > 0:
            raise ValueError("delta must be positive")
        if self.direction not in (-1, 0, 1):
            raise ValueError("direction must be -1, 0 or +1")

    @property
    def start(self) -> np.ndarray:
        """(section coordinate, companion) of the section centre."""
        return np.array([self.level, self.center])

    def kernel_array(self, guard: float = GUARD) -> np.ndarray:
        return np.array([COMPONENTS[self.coordinate], self.level, self.direction, guard], dtype=float)


CANONICAL_SECTION = SectionSpec()
SEMI_SECTION = SectionSpec(center=0.1548)
NT_SECTION = SectionSpec(coordinate="M1", level=0.45, center=0.0852, direction=1, companion="P1")


@dataclass(frozen=True)
class MapPoint:
    x: float
    y: float

    def __post_init__(self):
        object.__setattr__(self, "x", wrap_phase(self.x))
        object.__setattr__(self, "y", wrap_phase(self.y))

    def __sub__(self, other: MapPoint) -> np.ndarray:
        return np.array([wrap_diff(self.x - other.x), wrap_diff(self.y - other.y)])

    def shifted(self, dx: float, dy: float) -> MapPoint:
        return MapPoint(self.x + dx, self.y + dy)

    def distance(self, other: MapPoint) -> float:
        return float(np.hypot(*(self - other)))

    def as_tuple(self) -> tuple[float, float]:
        return (self.x, self.y)


def torus_distance(p, q) -> float:
    dx = wrap_diff(p[0] - q[0])
    dy = wrap_diff(p[1] - q[1])
    return math.hypot(dx, dy)


@dataclass(frozen=True)
class MapStep:
    next: MapPoint
    return_time: float
    x_winding: float = float("nan")
    M2_return: float = float("nan")

    @property
    def y_direction(self) -> str:
        return "advance" if self.return_time < 24.0 else "delay"

    @property
    def x_direction(self) -> str:
        return "delay" if self.x_winding > 2.0 * math.pi else "advance"


def _raise_status(status: int, where: str) -> None:
    if status == K.STIFF:
        raise StiffnessError(f"step size underflow evaluating {where}")
    if status == K.NO_RETURN:
        raise NoReturnError(f"no return to the section within {RETURN_WINDOW:g} h from {where}")
    if status == K.DEGENERATE:
        raise DegenerateAngleError(f"O1 ended on the frame origin from {where}")


@dataclass
class EntrainmentMap:
    """The 2-D map together with everything it needs to be evaluated.

    ``cycle`` must be the LD-entrained O1 cycle; it is computed on demand
    when omitted.
    """

    params: ModelParams = field(default_factory=ModelParams)
    section: SectionSpec = CANONICAL_SECTION
    config: IntegratorConfig = field(default_factory=IntegratorConfig)
    cycle: LimitCycle | None = None
    window: float = RETURN_WINDOW
    guard: float = GUARD

    def __post_init__(self):
        if self.cycle is None:
            self.cycle = find_limit_cycle(self.params, "LD", "O1", self.config)
        self.frame = self.cycle.frame or angle_frame(self.cycle)
        self._a = self.params.as_array()
        self._cfg = self.config.as_array()
        self._sec = self.section.kernel_array(self.guard)
        self._o2 = self.section.start
        self._cyc = np.ascontiguousarray(self.cycle.by_phase())
        self._theta = self.cycle.theta_table()
        self._frame = self.frame.as_array()

    @classmethod
    def canonical(cls, **kw) -> EntrainmentMap:
        return cls(ModelParams(), CANONICAL_SECTION, **kw)

    @classmethod
    def semi(cls, **kw) -> EntrainmentMap:
        return cls(ModelParams(k_L2=0.025), SEMI_SECTION, **kw)

    def with_params(self, **changes) -> EntrainmentMap:
        """Same map at modified parameters; the O1 cycle is reused when O1 is unchanged."""
        p = self.params.replace(**changes)
        o1_keys = {"phi1", "eps1", "k_f", "k_D", "k_L1", "photoperiod_on"}
        cyc = self.cycle if not (o1_keys & set(changes)) else None
        return EntrainmentMap(p, self.section, self.config, cyc, self.window, self.guard)

    def _args(self):
        return (self._a, K.LD, self._cfg, self._sec, self._o2, self.window, self._cyc,
                self.cycle.dt, self._theta, self._frame)

    def __call__(self, x: float, y: float) -> MapStep:
        r = K.map2d_eval(float(x), float(y), *self._args())
        _raise_status(int(r[0]), f"(x={x:.4f}, y={y:.4f})")
        return MapStep(MapPoint(r[1], r[2]), r[3], r[4], r[5])

    def apply(self, p) -> MapPoint:
        return self(p[0], p[1]).next

    def o1_entrained(self, y: float) -> MapStep:
        """1-D map with O1 already on its entrained cycle (x = y)."""
        return self(y, y)

    def grid(self, xs, ys) -> np.ndarray:
        """Rows ``(status, x_next, y_next, rho, winding, M2)`` for paired inputs."""
        xs = np.ascontiguousarray(xs, dtype=float).ravel()
        ys = np.ascontiguousarray(ys, dtype=float).ravel()
        return K.map2d_grid(xs, ys, *self._args())

    def iterate_grid(self, xs, ys, target, radius=ENTRAINED_RADIUS, max_iters=200) -> np.ndarray:
        """Rows ``(status, n_iter, entrainment_time)`` for each start."""
        xs = np.ascontiguousarray(xs, dtype=float).ravel()
        ys = np.ascontiguousarray(ys, dtype=float).ravel()
        return K.iterate_grid(xs, ys, float(target[0]), float(target[1]), float(radius), int(max_iters),
                              *self._args())

    def initial_state(self, x: float, y: float) -> np.ndarray:
        """Full ``(P1, M1, P2, M2)`` state placed on the section at light phase y."""
        o1 = gamma(self.cycle, x, self.params.replace(alpha1=0.0), self.config)
        return np.array([o1[0], o1[1], self.section.level, self.section.center])


def map_1d_nt(y: float, params: ModelParams | None = None, section: SectionSpec = NT_SECTION,
              config: IntegratorConfig | None = None) -> MapStep:
    """Light phase map of a single light-driven oscillator (the O1 equations)."""
    p = (params or ModelParams()).replace(alpha1=0.0)
    cfg = (config or IntegratorConfig()).as_array()
    start = np.array([section.center, section.level]) if section.coordinate in ("M1", "M2") else section.start
    sec = section.kernel_array()
    sec[0] = {"P1": 0, "M1": 1, "P2": 0, "M2": 1}[section.coordinate]
    status, y_next, rho = K.map1d_nt_eval(float(y), p.as_array(), cfg, sec, start, RETURN_WINDOW)
    _raise_status(int(status), f"y={y:.4f}")
    return MapStep(MapPoint(y_next, y_next), rho)


def map_o1_entrained(y: float, emap: EntrainmentMap | None = None) -> MapStep:
    return (emap or EntrainmentMap()).o1_entrained(y)


def map_2d(p: MapPoint, emap: EntrainmentMap | None = None) -> MapStep:
    return (emap or EntrainmentMap())(p.x, p.y)


@dataclass
class EntrainmentRun:
    iterates: list[MapPoint]
    steps: list[MapStep]
    entrainment_time: float
    entrained: bool

    @property
    def n_iter(self) -> int:
        return len(self.steps)

    @property
    def y_directions(self) -> list[str]:
        return [s.y_direction for s in self.steps]

    @property
    def x_directions(self) -> list[str]:
        return [s.x_direction for s in self.steps]

    @property
    def net_shift(self) -> float:
        """Accumulated return-time excess over 24 h; negative means the
        light phase was reached by advancing overall."""
        return float(sum(s.return_time - 24.0 for s in self.steps))


def iterate_to_entrainment(p0: MapPoint, target: MapPoint, emap: EntrainmentMap | None = None,
                           max_iters: int = 200, radius: float = ENTRAINED_RADIUS) -> EntrainmentRun:
    """Iterate until the torus distance to ``target`` drops below ``radius``.

    Entrainment time is the summed return time up to that iterate; a run
    that never gets there reports the sentinel -1.
    """
    emap = emap or EntrainmentMap()
    p = p0
    pts, steps = [p0], []
    total = 0.0
    while p.distance(target) >= radius:
        if len(steps) >= max_iters:
            return EntrainmentRun(pts, steps, NOT_ENTRAINED, False)
        s = emap(p.x, p.y)
        steps.append(s)
        total += s.return_time
        p = s.next
        pts.append(p)
    return EntrainmentRun(pts, steps, total, True)


@dataclass
class SectionReport:
    starts: np.ndarray
    return_times: np.ndarray
    M2_at_return: np.ndarray
    failures: list[tuple[float, float]]
    center: float
    delta: float

    @property
    def all_returned(self) -> bool:
        return not self.failures

    @property
    def max_offset(self) -> float:
        ok = np.isfinite(self.M2_at_return)
        return float(np.max(np.abs(self.M2_at_return[ok] - self.center)))

    @property
    def spread(self) -> float:
        ok = np.isfinite(self.M2_at_return)
        return float(np.ptp(self.M2_at_return[ok]))

    @property
    def within_delta(self) -> bool:
        return self.max_offset < self.delta


def verify_global_section(emap: EntrainmentMap | None = None, n_probes: int = 100, seed: int = 0) -> SectionReport:
    """Send random ``(x, y)`` starts from the section centre and record returns."""
    emap = emap or EntrainmentMap()
    rng = np.random.default_rng(seed)
    starts = rng.uniform(0.0, 24.0, size=(n_probes, 2))
    out = emap.grid(starts[:, 0], starts[:, 1])
    failed = out[:, 0] != K.OK
    failures = [tuple(s) for s in starts[failed]]
    return SectionReport(starts, out[:, 3], out[:, 5], failures, emap.section.center, emap.section.delta)
