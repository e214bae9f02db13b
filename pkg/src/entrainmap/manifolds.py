"""One-dimensional stable and unstable manifolds of saddle points of the 2-D map.

Curves are grown in lifted (unwrapped) coordinates; every comparison with
map images is done through wrapped differences, so the 24 h periodicity
never leaks into the geometry. Output vertices are wrapped back into the
square and split into segments wherever they cross its edge.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .analysis import FixedPointRecord
from .contours import point_polyline_distance, wrap_lifted
from .maps import EntrainmentMap, wrap_diff, wrap_phase

EPS0 = 0.01
DELTA_MIN = 0.05
DELTA_MAX = 0.5
MAX_TURN = 0.3
LANDING_TOL = 0.02
TERMINATION_RADIUS = 0.5


@dataclass
class ManifoldCurve:
    saddle: FixedPointRecord
    kind: str                 # "stable" | "unstable"
    branch: int               # +1 | -1
    lifted: np.ndarray        # (n, 2) unwrapped vertices, first is the saddle
    termination: str          # reached-A | reached-D | max-points | stalled
    local_count: int = 0      # vertices grown (after the seed) before the spacing reached DELTA_MIN
    preimage_arc: np.ndarray = field(default_factory=lambda: np.zeros(0), repr=False)

    @property
    def vertices(self) -> np.ndarray:
        return wrap_phase(self.lifted)

    @property
    def segments(self) -> list[np.ndarray]:
        return wrap_lifted(self.lifted)

    @property
    def arc(self) -> np.ndarray:
        return np.concatenate([[0.0], np.cumsum(np.hypot(*np.diff(self.lifted, axis=0).T))])

    @property
    def spacing(self) -> np.ndarray:
        return np.hypot(*np.diff(self.lifted, axis=0).T)

    def distance_to(self, p) -> float:
        return point_polyline_distance(p, self.segments)

    def to_rows(self) -> list[tuple[int, float, float]]:
        return [(k, float(x), float(y)) for k, seg in enumerate(self.segments) for x, y in seg]

    def metadata(self) -> dict:
        return {
            "saddle": self.saddle.label,
            "saddle_location": [self.saddle.location.x, self.saddle.location.y],
            "kind": self.kind,
            "branch": "+" if self.branch > 0 else "-",
            "termination": self.termination,
            "n_vertices": int(len(self.lifted)),
        }

    def to_csv(self, path: str | Path) -> None:
        rows = self.to_rows()
        np.savetxt(path, np.array(rows).reshape(-1, 3), delimiter=",", header="segment_id,x,y",
                   comments="", fmt=["%d", "%.9g", "%.9g"])
        Path(path).with_suffix(".json").write_text(json.dumps(self.metadata(), indent=2))


def _lift_near(q, ref):
    """Representative of torus point ``q`` closest to the lifted point ``ref``."""
    return ref + wrap_diff(np.asarray(q) - ref)


def _point_at(curve: np.ndarray, arc: np.ndarray, s: float) -> np.ndarray:
    i = int(np.clip(np.searchsorted(arc, s, side="right") - 1, 0, len(arc) - 2))
    seg = arc[i + 1] - arc[i]
    t = 0.0 if seg <= 0 else (s - arc[i]) / seg
    return curve[i] + min(max(t, 0.0), 1.0) * (curve[i + 1] - curve[i])


def _turn(a, b) -> float:
    na, nb = np.hypot(*a), np.hypot(*b)
    if na == 0 or nb == 0:
        return 0.0
    c = np.clip(np.dot(a, b) / (na * nb), -1.0, 1.0)
    return math.acos(c)


def _reached(q, target, radius) -> bool:
    return target is not None and np.hypot(*wrap_diff(np.asarray(q) - np.asarray(target))) < radius


def grow_unstable(
    emap: EntrainmentMap,
    saddle: FixedPointRecord,
    branch: int = 1,
    sink=None,
    eps0: float = EPS0,
    delta_min: float = DELTA_MIN,
    delta_max: float = DELTA_MAX,
    max_turn: float = MAX_TURN,
    radius: float = TERMINATION_RADIUS,
    max_points: int = 400,
) -> ManifoldCurve:
    """Grow W^u point by point: each new vertex is the image of a point on the
    curve chosen so the new segment has the requested length and turn."""
    lam = float(np.max(saddle.moduli))
    v = saddle.eigvec("u") * branch
    S = np.array(saddle.location.as_tuple())
    curve = [S, S + eps0 * v]
    pre = [0.0, eps0 / lam]
    delta = delta_min
    local = 0
    status = "max-points"

    def image(p):
        return np.array(emap.apply(p % 24.0).as_tuple())

    while len(curve) < max_points:
        C = np.array(curve)
        arc = np.concatenate([[0.0], np.cumsum(np.hypot(*np.diff(C, axis=0).T))])
        end = C[-1]
        L = arc[-1]
        s_a = pre[-1]
        dist = lambda s: np.hypot(*(_lift_near(image(_point_at(C, arc, s)), end) - end))
        reach = dist(L)
        accepted = None
        while accepted is None:
            if reach < delta:
                # local stage: the whole curve's image does not yet reach one step
                if reach < 1e-9:
                    status = "stalled"
                    break
                s_new = L
                local += 1
            else:
                # first bracket along the curve beyond the previous preimage
                grid = np.linspace(s_a, L, 9)
                vals = np.array([dist(s) for s in grid]) - delta
                k = int(np.argmax(vals > 0))
                lo, hi = grid[max(k - 1, 0)], grid[k]
                for _ in range(40):
                    mid = 0.5 * (lo + hi)
                    if dist(mid) > delta:
                        hi = mid
                    else:
                        lo = mid
                    if hi - lo < 1e-10:
                        break
                s_new = hi
            q = _lift_near(image(_point_at(C, arc, s_new)), end)
            ang = _turn(end - C[-2], q - end)
            if ang > max_turn and delta > delta_min and reach >= delta:
                delta = max(delta / 2, delta_min)
                continue
            if ang > math.pi / 2:
                status = "stalled"
                break
            accepted = (q, s_new, ang)
        if accepted is None:
            break
        q, s_new, ang = accepted
        curve.append(q)
        pre.append(s_new)
        if ang < max_turn / 3:
            delta = min(delta * 1.5, delta_max)
        if _reached(q, sink, radius):
            status = "reached-A"
            break
    return ManifoldCurve(saddle, "unstable", branch, np.array(curve), status, local, np.array(pre))


def _signed_offset(z, C):
    """Signed distance of torus point ``z`` to lifted polyline ``C``, the
    arc-length of its foot point, and whether the foot lies past either end."""
    arc = np.concatenate([[0.0], np.cumsum(np.hypot(*np.diff(C, axis=0).T))])
    best = (np.inf, 0.0, True)
    last = len(C) - 2
    for i in range(len(C) - 1):
        a, b = C[i], C[i + 1]
        zz = _lift_near(z, a)
        ab = b - a
        L2 = float(np.dot(ab, ab))
        if L2 == 0:
            continue
        t = float(np.dot(zz - a, ab) / L2)
        tc = min(max(t, 0.0), 1.0)
        foot = a + tc * ab
        d = float(np.hypot(*(zz - foot)))
        if d < abs(best[0]):
            cross = ab[0] * (zz - a)[1] - ab[1] * (zz - a)[0]
            sign = 1.0 if cross >= 0 else -1.0
            off = (i == 0 and t < 0.0) or (i == last and t > 1.0)
            best = (sign * d, arc[i] + tc * math.sqrt(L2), off)
    return best


def grow_stable_pair(
    emap: EntrainmentMap,
    saddle: FixedPointRecord,
    source=None,
    eps0: float = EPS0,
    delta_min: float = DELTA_MIN,
    delta_max: float = DELTA_MAX,
    max_turn: float = MAX_TURN,
    radius: float = TERMINATION_RADIUS,
    landing_tol: float = LANDING_TOL,
    max_points: int = 400,
    fan: float = 1.0,
) -> list[ManifoldCurve]:
    """Search-circle growth of both branches of W^s, using only forward
    evaluations of the map.

    From the end of a branch a circle of radius ``delta`` is searched (within
    ``fan`` radians of the current direction) for a point whose image lands on
    the stable manifold computed so far. The map is not invertible, so images
    of one branch may land on the other; the landing test therefore uses the
    union of both branches and they are grown in alternation.
    """
    lam = float(np.min(saddle.moduli))
    S = np.array(saddle.location.as_tuple())
    v = saddle.eigvec("s")
    d_init = min(delta_min, 0.9 * eps0 * (1.0 / max(lam, 1e-3) - 1.0))
    branches = {b: {"curve": [S, S + b * eps0 * v], "delta": d_init, "local": 0, "status": None}
                for b in (1, -1)}

    def image(p):
        return np.array(emap.apply(p % 24.0).as_tuple())

    def union():
        return np.vstack([np.array(branches[-1]["curve"][::-1]), np.array(branches[1]["curve"][1:])])

    def search(end, d0, delta, U):
        def probe(phi):
            c, s = math.cos(phi), math.sin(phi)
            q = end + delta * np.array([c * d0[0] - s * d0[1], s * d0[0] + c * d0[1]])
            g, _, off = _signed_offset(image(q), U)
            return q, g, off

        phis = np.linspace(-fan, fan, 13)
        samples = [probe(p) for p in phis]
        roots = [k for k in range(len(phis) - 1)
                 if (samples[k][1] < 0) != (samples[k + 1][1] < 0)
                 and abs(samples[k][1] - samples[k + 1][1]) < 2.0]
        roots.sort(key=lambda k: abs(phis[k] + phis[k + 1]))
        for k in roots:
            lo, hi = phis[k], phis[k + 1]
            glo = samples[k][1]
            for _ in range(40):
                mid = 0.5 * (lo + hi)
                q, g, off = probe(mid)
                if (g < 0) == (glo < 0):
                    lo, glo = mid, g
                else:
                    hi = mid
                if hi - lo < 1e-9:
                    break
            if abs(g) < landing_tol and not off:
                return q, 0.5 * (lo + hi)
        return None

    def advance(b) -> bool:
        st = branches[b]
        C = np.array(st["curve"])
        end = C[-1]
        d0 = end - C[-2]
        d0 = d0 / np.hypot(*d0)
        U = union()
        while True:
            found = search(end, d0, st["delta"], U)
            if found is None:
                if st["delta"] <= 1e-4:
                    return False
                st["delta"] /= 2
                continue
            q, phi = found
            if abs(phi) > max_turn and st["delta"] > delta_min:
                st["delta"] = max(st["delta"] / 2, delta_min)
                continue
            break
        if st["delta"] < delta_min:
            st["local"] += 1
        st["curve"].append(q)
        if abs(phi) < max_turn / 3:
            st["delta"] = min(st["delta"] * 1.5, delta_max)
        if _reached(q, source, radius):
            st["status"] = "reached-D"
        elif len(st["curve"]) >= max_points:
            st["status"] = "max-points"
        return True

    waiting = set()
    while any(branches[b]["status"] is None for b in (1, -1)):
        active = [b for b in (1, -1) if branches[b]["status"] is None]
        progressed = False
        for b in active:
            saved = branches[b]["delta"]
            if advance(b):
                progressed = True
                waiting.discard(b)
            else:
                # the other branch may still grow far enough to receive images
                branches[b]["delta"] = saved
                waiting.add(b)
        if not progressed:
            for b in active:
                branches[b]["status"] = "stalled"
    return [
        ManifoldCurve(saddle, "stable", b, np.array(branches[b]["curve"]), branches[b]["status"], branches[b]["local"])
        for b in (1, -1)
    ]


def grow_stable_sc(emap: EntrainmentMap, saddle: FixedPointRecord, branch: int = 1,
                   source=None, **kw) -> ManifoldCurve:
    """One branch of W^s; both are grown since each may receive the other's images."""
    plus, minus = grow_stable_pair(emap, saddle, source=source, **kw)
    return plus if branch > 0 else minus


# ----- invariant checks ---------------------------------------------------

def _sample_indices(n_vertices: int, n: int, rng) -> np.ndarray:
    pool = np.arange(1, n_vertices)
    if len(pool) <= n:
        return pool
    return np.sort(rng.choice(pool, size=n, replace=False))


def forward_invariance(emap: EntrainmentMap, curves: list[ManifoldCurve], n: int = 20, seed: int = 0,
                       exclude=None, radius: float = TERMINATION_RADIUS) -> list[dict]:
    """Distance from Pi(v) to the union of ``curves`` for sampled vertices v.

    Images falling inside the termination ball around ``exclude`` (the sink)
    are skipped: that part of the manifold is never computed.
    """
    rng = np.random.default_rng(seed)
    segs = [seg for c in curves for seg in c.segments]
    out = []
    for c in curves:
        V = c.vertices
        picked = 0
        for i in rng.permutation(np.arange(1, len(V))):
            q = emap.apply(V[i]).as_tuple()
            if exclude is not None and _reached(q, exclude, radius):
                continue
            out.append({"branch": c.branch, "index": int(i), "distance": point_polyline_distance(q, segs)})
            picked += 1
            if picked == n:
                break
    return out


def _union(curves: list[ManifoldCurve]) -> tuple[np.ndarray, int]:
    """Both branches as one lifted polyline through the saddle, and the saddle's index."""
    by = {c.branch: c.lifted for c in curves}
    plus, minus = by.get(1), by.get(-1)
    if minus is None:
        return plus, 0
    if plus is None:
        return minus[::-1], len(minus) - 1
    return np.vstack([minus[::-1], plus[1:]]), len(minus) - 1


def preimage_contraction(emap: EntrainmentMap, curves: list[ManifoldCurve], n: int = 20,
                         seed: int = 0) -> list[dict]:
    """For sampled vertices v of W^s, where Pi(v) lands on the curve: its
    distance to the curve and its arc distance to the saddle compared with v's."""
    rng = np.random.default_rng(seed)
    U, k0 = _union(curves)
    arcU = np.concatenate([[0.0], np.cumsum(np.hypot(*np.diff(U, axis=0).T))])
    s0 = arcU[k0]
    out = []
    for c in curves:
        arc = c.arc
        for i in _sample_indices(len(c.lifted), n, rng):
            q = np.array(emap.apply(c.vertices[i]).as_tuple())
            g, foot, off = _signed_offset(q, U)
            out.append({
                "branch": c.branch,
                "index": int(i),
                "distance": abs(g),
                "arc_vertex": float(arc[i]),
                "arc_image": float(abs(foot - s0)),
            })
    return out


def separatrix_check(emap: EntrainmentMap, curves: list[ManifoldCurve], n: int = 50,
                     offset: float = 0.3, n_iters: int = 3, seed: int = 0) -> list[dict]:
    """Compare direction signatures of the first iterates from points placed
    ``offset`` either side of a stable manifold."""
    rng = np.random.default_rng(seed)
    U, _ = _union(curves)
    seg = np.hypot(*np.diff(U, axis=0).T)
    out = []
    for _ in range(n):
        k = int(rng.choice(len(seg), p=seg / seg.sum()))
        t = rng.uniform()
        a, b = U[k], U[k + 1]
        base = a + t * (b - a)
        tangent = (b - a) / seg[k]
        normal = np.array([-tangent[1], tangent[0]])
        sigs = []
        for side in (1, -1):
            p = base + side * offset * normal
            sig = []
            for _ in range(n_iters):
                step = emap(*wrap_phase(p))
                sig.append((step.x_direction, step.y_direction))
                p = np.array(step.next.as_tuple())
            sigs.append(tuple(sig))
        out.append({"point": wrap_phase(base).tolist(), "plus": sigs[0], "minus": sigs[1],
                    "differs": sigs[0] != sigs[1]})
    return out
