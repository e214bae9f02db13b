"""Fixed points, map nullclines, parameter scans and grid diagnostics."""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from . import _kernel as K
from .contours import join_segments, segment_intersection, zero_segments
from .errors import NoBifurcationError
from .maps import (
    NOT_ENTRAINED,
    EntrainmentMap,
    MapPoint,
    iterate_to_entrainment,
    torus_distance,
    wrap_diff,
    wrap_phase,
)

FD_STEP = 0.05
DEDUP = 0.2
JUMP = 6.0


def eig2(J: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues and unit eigenvectors (columns) of a 2x2 matrix, closed form."""
    a, b = J[0]
    c, d = J[1]
    tr = a + d
    det = a * d - b * c
    root = cmath.sqrt(tr * tr / 4.0 - det)
    lams = np.array([tr / 2.0 + root, tr / 2.0 - root], dtype=complex)
    vecs = np.zeros((2, 2), dtype=complex)
    scale = max(abs(a), abs(b), abs(c), abs(d), 1.0)
    for k, lam in enumerate(lams):
        if abs(b) > 1e-14 * scale:
            v = np.array([b, lam - a])
        elif abs(c) > 1e-14 * scale:
            v = np.array([lam - d, c])
        else:
            # diagonal matrix: pick the axis whose diagonal entry is this eigenvalue
            axis = k if a == d else (0 if abs(lam - a) <= abs(lam - d) else 1)
            v = np.eye(2)[axis].astype(complex)
        vecs[:, k] = v / np.linalg.norm(v)
    # real spectrum: report real vectors with a positive leading entry
    if np.all(np.abs(lams.imag) < 1e-14):
        lams = lams.real.astype(complex)
        vecs = vecs.real.astype(complex)
        for k in range(2):
            lead = vecs[0, k] if abs(vecs[0, k]) > 1e-12 else vecs[1, k]
            if lead.real < 0:
                vecs[:, k] = -vecs[:, k]
    return lams, vecs


def classify(eigenvalues) -> str:
    m = np.abs(np.asarray(eigenvalues))
    if np.all(m < 1.0):
        return "sink"
    if np.all(m > 1.0):
        return "source"
    return "saddle"


@dataclass
class FixedPointRecord:
    location: MapPoint
    jacobian: np.ndarray
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    stability: str
    label: str = "unnamed"
    converged: bool = True
    residual: float = 0.0
    iterations: int = 0

    @property
    def moduli(self) -> np.ndarray:
        return np.abs(self.eigenvalues)

    def eigvec(self, which: str) -> np.ndarray:
        """Real unit eigenvector of the unstable (``'u'``) or stable (``'s'``) direction."""
        k = int(np.argmax(self.moduli)) if which == "u" else int(np.argmin(self.moduli))
        return self.eigenvectors[:, k].real

    def as_dict(self) -> dict:
        return {
            "label": self.label,
            "x": self.location.x,
            "y": self.location.y,
            "stability": self.stability,
            "eigenvalues": [[float(l.real), float(l.imag)] for l in self.eigenvalues],
            "moduli": [float(m) for m in self.moduli],
            "eigenvectors": [[[float(v.real), float(v.imag)] for v in col] for col in self.eigenvectors.T],
            "jacobian": self.jacobian.tolist(),
            "converged": self.converged,
            "residual": self.residual,
        }


def residual(emap: EntrainmentMap, p) -> np.ndarray:
    q = emap.apply(p)
    return np.array([wrap_diff(q.x - p[0]), wrap_diff(q.y - p[1])])


def jacobian(emap: EntrainmentMap, p, h: float = FD_STEP) -> np.ndarray:
    """Central-difference Jacobian of the map, differences taken on the torus."""
    x, y = p
    pts = np.array([[x + h, y], [x - h, y], [x, y + h], [x, y - h]])
    out = emap.grid(pts[:, 0], pts[:, 1])
    if np.any(out[:, 0] != K.OK):
        raise RuntimeError(f"map failed near {p}")
    J = np.empty((2, 2))
    J[0, 0] = wrap_diff(out[0, 1] - out[1, 1]) / (2 * h)
    J[1, 0] = wrap_diff(out[0, 2] - out[1, 2]) / (2 * h)
    J[0, 1] = wrap_diff(out[2, 1] - out[3, 1]) / (2 * h)
    J[1, 1] = wrap_diff(out[2, 2] - out[3, 2]) / (2 * h)
    return J


def newton_fixed_point(emap: EntrainmentMap, p0, h: float = FD_STEP, max_iter: int = 50,
                       tol: float = 1e-7) -> FixedPointRecord:
    p = np.array(p0, dtype=float)
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        F = residual(emap, p)
        J = jacobian(emap, p, h)
        try:
            dp = np.linalg.solve(J - np.eye(2), -F)
        except np.linalg.LinAlgError:
            break
        # damp steps that would leave the local basin
        n = np.hypot(*dp)
        if n > 1.0:
            dp *= 1.0 / n
        p = np.mod(p + dp, 24.0)
        if np.hypot(*dp) < tol:
            converged = True
            break
    F = residual(emap, p)
    J = jacobian(emap, p, h)
    lams, vecs = eig2(J)
    res = float(np.hypot(*F))
    return FixedPointRecord(MapPoint(*p), J, lams, vecs, classify(lams),
                            converged=converged and res < 1e-3, residual=res, iterations=it)


@dataclass
class ResidualGrid:
    xs: np.ndarray
    ys: np.ndarray
    rx: np.ndarray  # wrapped x_next - x, indexed [iy, ix]
    ry: np.ndarray
    rho: np.ndarray


def residual_grid(emap: EntrainmentMap, grid_n: int = 96) -> ResidualGrid:
    g = np.arange(grid_n) * (24.0 / grid_n)
    X, Y = np.meshgrid(g, g)
    out = emap.grid(X.ravel(), Y.ravel())
    bad = out[:, 0] != K.OK
    rx = wrap_diff(out[:, 1] - X.ravel())
    ry = wrap_diff(out[:, 2] - Y.ravel())
    rx[bad] = np.nan
    ry[bad] = np.nan
    shape = X.shape
    return ResidualGrid(g, g, rx.reshape(shape), ry.reshape(shape), out[:, 3].reshape(shape))


@dataclass
class MapNullclines:
    n_x: list[np.ndarray]
    n_y: list[np.ndarray]
    segments_x: list = field(default_factory=list, repr=False)
    segments_y: list = field(default_factory=list, repr=False)
    grid: ResidualGrid | None = field(default=None, repr=False)


def _refiner(emap: EntrainmentMap, comp: int):
    def refine(sx, sy):
        X, Y = np.meshgrid(sx, sy)
        out = emap.grid(X.ravel(), Y.ravel())
        base = X if comp == 1 else Y
        r = wrap_diff(out[:, comp] - base.ravel())
        r[out[:, 0] != K.OK] = np.nan
        return r.reshape(X.shape)
    return refine


def map_nullclines(emap: EntrainmentMap, grid_n: int = 96, grid: ResidualGrid | None = None) -> MapNullclines:
    """Zero contours of ``x_next - x`` (n_x) and ``y_next - y`` (n_y)."""
    grid = grid or residual_grid(emap, grid_n)
    sx = zero_segments(grid.rx, grid.xs, grid.ys, _refiner(emap, 1), JUMP)
    sy = zero_segments(grid.ry, grid.xs, grid.ys, _refiner(emap, 2), JUMP)
    return MapNullclines(join_segments(sx), join_segments(sy), sx, sy, grid)


def _label(records: list[FixedPointRecord]) -> None:
    """Name the four expected fixed points by role rather than by stability,
    so a changed stability pattern is still reported against the right point.

    A: the most attracting diagonal point; B: the other diagonal point;
    C: the off-diagonal point with the smaller weakest modulus; D: the other.
    """
    def diag_gap(r):
        return abs(wrap_diff(r.location.x - r.location.y))

    good = [r for r in records if r.converged]
    if len(good) != 4:
        for kind, name in (("sink", "A"), ("source", "D")):
            group = [r for r in good if r.stability == kind]
            if len(group) == 1:
                group[0].label = name
        return
    by_gap = sorted(good, key=diag_gap)
    diag, off = by_gap[:2], by_gap[2:]
    diag.sort(key=lambda r: float(np.max(r.moduli)))
    diag[0].label, diag[1].label = "A", "B"
    off.sort(key=lambda r: float(np.min(r.moduli)))
    off[0].label, off[1].label = "C", "D"


def find_fixed_points(emap: EntrainmentMap, grid_n: int = 96,
                      nullclines: MapNullclines | None = None) -> list[FixedPointRecord]:
    """Locate fixed points at the crossings of the map nullclines and polish by Newton."""
    nc = nullclines or map_nullclines(emap, grid_n)
    by_cell: dict[tuple[int, int], list] = {}
    for p, q, cell in nc.segments_x:
        by_cell.setdefault(cell, []).append((p, q))
    seeds = []
    for p, q, cell in nc.segments_y:
        for a, b in by_cell.get(cell, ()):
            hit = segment_intersection(a, b, p, q)
            if hit is not None:
                seeds.append(np.mod(hit, 24.0))
    records: list[FixedPointRecord] = []
    for s in seeds:
        if any(torus_distance(s, r.location.as_tuple()) < DEDUP for r in records):
            continue
        rec = newton_fixed_point(emap, s)
        if rec.converged and any(torus_distance(rec.location.as_tuple(), r.location.as_tuple()) < DEDUP
                                 for r in records if r.converged):
            continue
        records.append(rec)
    _label(records)
    order = {"A": 0, "B": 1, "C": 2, "D": 3}
    records.sort(key=lambda r: (order.get(r.label, 9), r.location.x, r.location.y))
    return records


# ----- the 1-D O1-entrained map ------------------------------------------

def o1_residuals(emap: EntrainmentMap, ys: np.ndarray) -> np.ndarray:
    out = emap.grid(ys, ys)
    r = wrap_diff(out[:, 2] - ys)
    r[out[:, 0] != K.OK] = np.nan
    return r


def _sign_changes(ys, r, jump=JUMP):
    """Indices i where the periodic residual changes sign between i and i+1 without a jump."""
    idx = []
    n = len(ys)
    for i in range(n):
        a, b = r[i], r[(i + 1) % n]
        if not (np.isfinite(a) and np.isfinite(b)):
            continue
        if (a < 0.0) != (b < 0.0) and abs(b - a) < jump:
            idx.append(i)
    return idx


def count_fixed_points_1d(emap: EntrainmentMap, step: float = 0.05) -> int:
    ys = np.arange(0.0, 24.0, step) + step / 2
    return len(_sign_changes(ys, o1_residuals(emap, ys)))


@dataclass
class FixedPoint1D:
    y: float
    slope: float

    @property
    def stable(self) -> bool:
        return abs(self.slope) < 1.0


def fixed_points_1d(emap: EntrainmentMap, step: float = 0.05, h: float = 0.01) -> list[FixedPoint1D]:
    """Fixed points of the O1-entrained map with the map derivative at each."""
    ys = np.arange(0.0, 24.0, step) + step / 2
    r = o1_residuals(emap, ys)
    out = []
    F = lambda y: wrap_diff(emap.o1_entrained(y).next.y - y)
    for i in _sign_changes(ys, r):
        a = ys[i]
        b = ys[i] + step
        y = brentq(F, a, b, xtol=1e-9)
        slope = wrap_diff(emap.o1_entrained(y + h).next.y - emap.o1_entrained(y - h).next.y) / (2 * h)
        out.append(FixedPoint1D(wrap_phase(y), slope))
    return out


def saddle_node_scan(emap: EntrainmentMap, parameter: str, lo: float, hi: float,
                     step: float = 0.05, width: float = 0.005) -> float:
    """Parameter value where the O1-entrained map gains/loses its fixed-point pair."""
    count = lambda v: count_fixed_points_1d(emap.with_params(**{parameter: v}), step)
    c_lo, c_hi = count(lo), count(hi)
    if c_lo == c_hi:
        raise NoBifurcationError(f"{c_lo} fixed points at both {parameter}={lo} and {parameter}={hi}")
    while hi - lo >= width:
        mid = 0.5 * (lo + hi)
        c = count(mid)
        if c == c_lo:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@dataclass
class Cobweb:
    ys: list[float]
    return_times: list[float]
    directions: list[str]

    @property
    def signature(self) -> list[str]:
        """Directions with consecutive repeats collapsed."""
        sig = []
        for d in self.directions:
            if not sig or sig[-1] != d:
                sig.append(d)
        return sig

    @property
    def delay_then_advance(self) -> bool:
        return self.signature[:2] == ["delay", "advance"]


def cobweb(emap: EntrainmentMap, y0: float, n_iters: int = 20, until: float | None = None) -> Cobweb:
    """Iterate the O1-entrained map; stop early once within ``until`` of the previous value."""
    ys, rts, dirs = [wrap_phase(y0)], [], []
    y = y0
    for _ in range(n_iters):
        s = emap.o1_entrained(y)
        rts.append(s.return_time)
        dirs.append(s.y_direction)
        y = s.next.y
        ys.append(y)
        if until is not None and abs(wrap_diff(ys[-1] - ys[-2])) < until:
            break
    return Cobweb(ys, rts, dirs)


# ----- grids over the torus -------------------------------------------------

@dataclass
class HeatmapGrid:
    xs: np.ndarray
    ys: np.ndarray
    values: np.ndarray  # [iy, ix], hours or NOT_ENTRAINED
    iterations: np.ndarray
    target: MapPoint

    @property
    def finite(self) -> np.ndarray:
        return self.values[self.values >= 0]

    def to_csv(self, path) -> None:
        X, Y = np.meshgrid(self.xs, self.ys)
        data = np.column_stack([X.ravel(), Y.ravel(), self.values.ravel(), self.iterations.ravel()])
        np.savetxt(path, data, delimiter=",", header="x,y,time,iterations", comments="", fmt="%.9g")


def grid_nodes(n: int) -> np.ndarray:
    """Cell-centred nodes covering (0, 24]."""
    return (np.arange(n) + 0.5) * (24.0 / n)


def entrainment_heatmap(emap: EntrainmentMap, target: MapPoint, grid_n: int = 48,
                        max_iters: int = 200) -> HeatmapGrid:
    g = grid_nodes(grid_n)
    X, Y = np.meshgrid(g, g)
    out = emap.iterate_grid(X.ravel(), Y.ravel(), target.as_tuple(), max_iters=max_iters)
    vals = np.where(out[:, 0] == 0, out[:, 2], NOT_ENTRAINED)
    return HeatmapGrid(g, g, vals.reshape(X.shape), out[:, 1].reshape(X.shape).astype(int), target)


@dataclass
class IterateField:
    starts: np.ndarray   # (n, 2)
    nexts: np.ndarray    # (n, 2) first iterate
    paths: np.ndarray    # (n, n_iters + 1, 2)

    @property
    def arrows(self) -> np.ndarray:
        """Wrapped displacement start -> first iterate."""
        return wrap_diff(self.nexts - self.starts)


def iterate_field(emap: EntrainmentMap, grid_n: int = 24, n_iters: int = 1) -> IterateField:
    g = grid_nodes(grid_n)
    X, Y = np.meshgrid(g, g)
    pts = np.column_stack([X.ravel(), Y.ravel()])
    paths = np.full((len(pts), n_iters + 1, 2), np.nan)
    paths[:, 0] = pts
    cur = pts.copy()
    for k in range(n_iters):
        out = emap.grid(cur[:, 0], cur[:, 1])
        ok = out[:, 0] == K.OK
        cur = np.where(ok[:, None], out[:, 1:3], np.nan)
        paths[:, k + 1] = cur
    return IterateField(pts, paths[:, 1], paths)


# ----- map versus direct simulation -------------------------------------

@dataclass
class Comparison:
    start: MapPoint
    map_final_y: float
    sim_final_y: float
    map_entrained: bool
    sim_entrained: bool
    map_signature: list[str]
    sim_signature: list[str]
    map_time: float
    sim_crossing_times: np.ndarray
    map_net_shift: float = 0.0
    sim_net_shift: float = 0.0

    @property
    def map_direction(self) -> str:
        return "advance" if self.map_net_shift < 0 else "delay"

    @property
    def sim_direction(self) -> str:
        return "advance" if self.sim_net_shift < 0 else "delay"

    @property
    def phase_difference(self) -> float:
        return abs(wrap_diff(self.map_final_y - self.sim_final_y))

    @property
    def discrepancy(self) -> bool:
        return self.map_entrained and not self.sim_entrained


def _collapse(dirs):
    sig = []
    for d in dirs:
        if not sig or sig[-1] != d:
            sig.append(d)
    return sig


def simulate_crossings(emap: EntrainmentMap, p0: MapPoint, n_cycles: int = 100) -> tuple[np.ndarray, np.ndarray]:
    """Direct simulation from the map's initial state; returns crossing times and states."""
    u0 = emap.initial_state(p0.x, p0.y)
    t0 = p0.y
    res = K.drive(u0, t0, t0 + 40.0 * n_cycles, emap._a, K.LD, emap._cfg, emap._sec, n_cycles,
                  np.zeros(3), 0.0, 0)
    n = res[6]
    return np.concatenate([[t0], res[3][:n]]), res[4][:n]


def compare_map_vs_simulation(emap: EntrainmentMap, p0: MapPoint, target: MapPoint,
                              n_cycles: int = 100, tail: int = 20) -> Comparison:
    """Iterate the map and simulate the full system from the same state.

    Both runs are followed ``tail`` cycles past entrainment before their
    final light phase at the section is read off.
    """
    run = iterate_to_entrainment(p0, target, emap, max_iters=n_cycles)
    p = run.iterates[-1]
    for _ in range(tail):
        p = emap.apply(p.as_tuple())
    times, _ = simulate_crossings(emap, p0, n_cycles)
    rts = np.diff(times)
    phases = wrap_phase(times[1:])
    sim_entrained = False
    m = len(rts)
    for k in range(len(phases)):
        if abs(wrap_diff(phases[k] - target.y)) < 0.5:
            sim_entrained = True
            m = k + 1
            break
    sim_shift = float(np.sum(rts[:m] - 24.0))
    # per-step directions over the same number of returns
    if run.entrained:
        m = min(len(run.y_directions), len(rts))
    sim_dirs = ["advance" if r < 24.0 else "delay" for r in rts[:m]]
    return Comparison(p0, p.y, float(phases[-1]), run.entrained, sim_entrained,
                      _collapse(run.y_directions), _collapse(sim_dirs), run.entrainment_time, times,
                      run.net_shift, sim_shift)
