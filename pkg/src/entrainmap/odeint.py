"""Adaptive Dormand-Prince integration with dense output and events.

This is the general-purpose driver: any Python callable ``rhs(t, y)`` works.
The Poincare-map hot paths use the jitted drivers in ``_kernel``, which run
the very same step routine.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import _dopri
from .errors import NoReturnError, StiffnessError

_step = _dopri.step.py_func
_error_norm = _dopri.error_norm.py_func
_dense = _dopri.dense.py_func
_step_factor = _dopri.step_factor.py_func


@dataclass(frozen=True)
class IntegratorConfig:
    rel_tol: float = 1e-8
    abs_tol: float = 1e-10
    max_step: float = 0.1
    event_tol: float = 1e-10

    def __post_init__(self):
        for name in ("rel_tol", "abs_tol", "max_step", "event_tol"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.max_step > 1.0:
            raise ValueError("max_step must not exceed 1 h")

    def as_array(self) -> np.ndarray:
        return np.array([self.rel_tol, self.abs_tol, self.max_step, self.event_tol])

    def scaled(self, factor: float) -> IntegratorConfig:
        """Tolerances multiplied by ``factor`` (for convergence checks)."""
        return IntegratorConfig(
            self.rel_tol * factor, self.abs_tol * factor, self.max_step, self.event_tol
        )


@dataclass(frozen=True)
class EventSpec:
    """Zero of ``function(t, y)``; direction +1 rising, -1 falling, 0 either."""

    function: Callable[[float, np.ndarray], float]
    direction: int = 0
    terminal: bool = False
    required: bool = False


@dataclass
class EventHit:
    index: int
    t: float
    y: np.ndarray


@dataclass
class Solution:
    t: np.ndarray
    y: np.ndarray
    events: list[EventHit] = field(default_factory=list)
    terminated: bool = False
    _steps: list = field(default_factory=list, repr=False)

    def sol(self, t: float) -> np.ndarray:
        """Dense output at time ``t`` inside the integrated span."""
        starts = [s[0] for s in self._steps]
        i = int(np.searchsorted(starts, t, side="right")) - 1
        i = min(max(i, 0), len(self._steps) - 1)
        t0, h, cont = self._steps[i]
        return _dense(cont, (t - t0) / h)


def _crossed(g0: float, g1: float, direction: int) -> bool:
    if direction >= 0 and g0 < 0.0 <= g1:
        return True
    if direction <= 0 and g0 > 0.0 >= g1:
        return True
    return False


def _locate(fn, t0, h, cont, g0, tol) -> float:
    """Bisection on the dense output for the sign change of ``fn``."""
    a, b = 0.0, 1.0
    ga = g0
    while (b - a) * abs(h) > tol:
        m = 0.5 * (a + b)
        gm = fn(t0 + m * h, _dense(cont, m))
        if (ga < 0.0) == (gm < 0.0) and gm != 0.0:
            a, ga = m, gm
        else:
            b = m
    return t0 + b * h


def integrate(
    rhs: Callable[[float, np.ndarray], np.ndarray],
    y0,
    t_span: tuple[float, float],
    events: Sequence[EventSpec] = (),
    config: IntegratorConfig | None = None,
    breakpoints: Sequence[float] = (),
    first_step: float | None = None,
) -> Solution:
    """Integrate ``y' = rhs(t, y)`` over ``t_span``.

    The step sequence is restarted at every breakpoint so that a forcing
    discontinuity never falls inside a step; at a breakpoint the rhs is
    evaluated one ulp to the left so it sees the pre-switch forcing.
    """
    cfg = config or IntegratorConfig()
    t0, t1 = map(float, t_span)
    if not t1 > t0:
        raise ValueError("t_span must be increasing")
    rtol, atol, hmax, etol = cfg.rel_tol, cfg.abs_tol, cfg.max_step, cfg.event_tol
    f = lambda t, y, args: np.asarray(rhs(t, y), dtype=np.float64)

    stops = sorted({b for b in breakpoints if t0 < b < t1} | {t1})
    y = np.array(y0, dtype=np.float64)
    t = t0
    ts, ys, steps, hits = [t], [y.copy()], [], []
    h = first_step or min(hmax, 0.01 * (t1 - t0))
    terminated = False
    g_prev = [ev.function(t, y) for ev in events]
    hmin = 1e-12 * max(1.0, abs(t1))

    for seg_end in stops:
        k1 = f(t, y, None)
        err_old = 1e-4
        while t < seg_end and not terminated:
            h = min(h, hmax, seg_end - t)
            last = t + h >= seg_end
            if last:
                h = seg_end - t
            t_stage = math.nextafter(seg_end, -math.inf) if last else t + h
            y_new, k7, err_vec, cont = _step(f, t, y, h, k1, None, t_stage)
            err = _error_norm(err_vec, y, y_new, rtol, atol)
            if not err <= 1.0:  # NaN from an overflowing step counts as a rejection
                h *= max(_dopri.FAC_MIN, _dopri.SAFETY * err ** -0.2) if err < np.inf else _dopri.FAC_MIN
                if h < hmin:
                    raise StiffnessError(f"step size underflow at t={t:.6g}")
                continue
            t_new = seg_end if last else t + h
            step_hits = []
            for i, ev in enumerate(events):
                g_new = ev.function(t_new, y_new)
                if _crossed(g_prev[i], g_new, ev.direction):
                    te = _locate(ev.function, t, h, cont, g_prev[i], etol)
                    step_hits.append(EventHit(i, te, _dense(cont, (te - t) / h)))
                g_prev[i] = g_new
            step_hits.sort(key=lambda e: e.t)
            for hit in step_hits:
                hits.append(hit)
                if events[hit.index].terminal:
                    terminated = True
                    break
            steps.append((t, h, cont))
            if terminated:
                te = hits[-1].t
                ts.append(te)
                ys.append(hits[-1].y)
                t = te
                break
            t, y, k1 = t_new, y_new, k7
            ts.append(t)
            ys.append(y.copy())
            h = h * _step_factor(err, err_old)
            err_old = max(err, 1e-4)
        if terminated:
            break

    for i, ev in enumerate(events):
        if ev.required and ev.terminal and not any(hit.index == i for hit in hits):
            raise NoReturnError(f"required event {i} not reached within {t_span}")
    return Solution(np.array(ts), np.array(ys), hits, terminated, steps)


def light_switch_times(t0: float, t1: float, photoperiod_on: float = 12.0) -> list[float]:
    """Absolute times in ``(t0, t1)`` where the 24 h light schedule switches."""
    out = []
    day = math.floor(t0 / 24.0)
    while day * 24.0 < t1:
        for s in (day * 24.0, day * 24.0 + photoperiod_on):
            if t0 < s < t1:
                out.append(s)
        day += 1
    return sorted(set(out))
