"""Zero contours of residual fields sampled on the periodic 24 x 24 square."""
from __future__ import annotations

from collections import defaultdict
from typing import Callable

import numpy as np

JUMP = 6.0


def _rewrap(corners: np.ndarray) -> np.ndarray:
    """Shift each corner by a multiple of 24 to sit nearest the first one."""
    ref = corners[0]
    return ref + (np.mod(corners - ref + 12.0, 24.0) - 12.0)


def _cell_segments(x0, y0, hx, hy, v):
    """Marching squares on one cell; ``v`` = values at (x0,y0),(x1,y0),(x1,y1),(x0,y1)."""
    pts = [(x0, y0), (x0 + hx, y0), (x0 + hx, y0 + hy), (x0, y0 + hy)]
    crossings = []
    for k in range(4):
        a, b = v[k], v[(k + 1) % 4]
        if (a < 0.0) != (b < 0.0):
            s = a / (a - b)
            pa, pb = pts[k], pts[(k + 1) % 4]
            crossings.append((k, (pa[0] + s * (pb[0] - pa[0]), pa[1] + s * (pb[1] - pa[1]))))
    if len(crossings) == 2:
        p, q = crossings[0][1], crossings[1][1]
        # a zero on a corner is reported by both adjacent edges
        if abs(p[0] - q[0]) + abs(p[1] - q[1]) < 1e-9 * (hx + hy):
            return []
        return [(p, q)]
    if len(crossings) == 4:
        centre = v.mean()
        c = [p for _, p in crossings]
        # pair edges so that the centre's sign region stays connected
        if (centre < 0.0) == (v[0] < 0.0):
            return [(c[0], c[1]), (c[2], c[3])]
        return [(c[3], c[0]), (c[1], c[2])]
    return []


def zero_segments(
    values: np.ndarray,
    xs: np.ndarray,
    ys: np.ndarray,
    refine: Callable[[np.ndarray, np.ndarray], np.ndarray] | None = None,
    jump: float = JUMP,
) -> list[tuple[tuple[float, float], tuple[float, float], tuple[int, int]]]:
    """Zero-level segments of ``values[iy, ix]`` on a periodic grid.

    Returns ``(p, q, (ix, iy))`` with ``p``/``q`` possibly just beyond 24 in
    wrap cells. Cells whose re-wrapped corners still differ by more than
    ``jump`` are subdivided once through ``refine(xs, ys) -> values`` (a
    3 x 3 sub-grid) and dropped if a sub-cell is still ambiguous.
    """
    ny, nx = values.shape
    hx = 24.0 / nx
    hy = 24.0 / ny
    out = []
    for iy in range(ny):
        for ix in range(nx):
            jx, jy = (ix + 1) % nx, (iy + 1) % ny
            v = np.array([values[iy, ix], values[iy, jx], values[jy, jx], values[jy, ix]])
            if not np.all(np.isfinite(v)):
                continue
            v = _rewrap(v)
            x0, y0 = xs[ix], ys[iy]
            if np.ptp(v) <= jump:
                for p, q in _cell_segments(x0, y0, hx, hy, v):
                    out.append((p, q, (ix, iy)))
                continue
            if refine is None:
                continue
            sx = x0 + np.array([0.0, 0.5, 1.0]) * hx
            sy = y0 + np.array([0.0, 0.5, 1.0]) * hy
            sub = refine(sx, sy)
            for a in range(2):
                for b in range(2):
                    w = np.array([sub[b, a], sub[b, a + 1], sub[b + 1, a + 1], sub[b + 1, a]])
                    if not np.all(np.isfinite(w)):
                        continue
                    w = _rewrap(w)
                    if np.ptp(w) > jump:
                        continue
                    for p, q in _cell_segments(sx[a], sy[b], hx / 2, hy / 2, w):
                        out.append((p, q, (ix, iy)))
    return out


def join_segments(segments, tol: float = 1e-9) -> list[np.ndarray]:
    """Chain segments sharing endpoints into polylines (coordinates wrapped)."""
    def key(p):
        return (round(p[0] % 24.0 / tol) * tol, round(p[1] % 24.0 / tol) * tol)

    adj = defaultdict(list)
    segs = [(np.array(p), np.array(q)) for p, q, *_ in segments]
    for i, (p, q) in enumerate(segs):
        adj[key(p)].append(i)
        adj[key(q)].append(i)
    used = np.zeros(len(segs), dtype=bool)
    lines = []
    for start in range(len(segs)):
        if used[start]:
            continue
        used[start] = True
        p, q = segs[start]
        chain = [p % 24.0, q % 24.0]
        for forward in (True, False):
            end = chain[-1] if forward else chain[0]
            while True:
                nxt = None
                for j in adj[key(end)]:
                    if not used[j]:
                        nxt = j
                        break
                if nxt is None:
                    break
                used[nxt] = True
                a, b = segs[nxt]
                other = b if key(a) == key(end) else a
                end = other % 24.0
                if forward:
                    chain.append(end)
                else:
                    chain.insert(0, end)
        lines.append(np.array(chain))
    return lines


def split_at_wrap(points: np.ndarray, limit: float = 12.0) -> list[np.ndarray]:
    """Break a wrapped polyline wherever consecutive points jump across the edge."""
    if len(points) == 0:
        return []
    pieces, cur = [], [points[0]]
    for a, b in zip(points[:-1], points[1:]):
        if np.any(np.abs(b - a) > limit):
            pieces.append(np.array(cur))
            cur = []
        cur.append(b)
    pieces.append(np.array(cur))
    return pieces


def wrap_lifted(points: np.ndarray, period: float = 24.0) -> list[np.ndarray]:
    """Cut an unwrapped polyline at every multiple of ``period`` and wrap the
    pieces into the square; cut points are interpolated onto the edge so the
    pieces meet without gaps."""
    pts = np.asarray(points, dtype=float)
    if len(pts) == 0:
        return []
    pieces = []
    cur = [pts[0]]
    for a, b in zip(pts[:-1], pts[1:]):
        # parameters where the segment crosses a grid line, in order
        cuts = []
        for k in range(2):
            lo, hi = sorted((a[k], b[k]))
            for m in range(int(np.ceil(lo / period)), int(np.floor(hi / period)) + 1):
                line = m * period
                if lo < line < hi:
                    cuts.append((line - a[k]) / (b[k] - a[k]))
        for t in sorted(cuts):
            c = a + t * (b - a)
            cur.append(c)
            pieces.append(np.array(cur))
            cur = [c]
        cur.append(b)
    pieces.append(np.array(cur))
    out = []
    for piece in pieces:
        if len(piece) < 2:
            continue
        # a piece lies in one closed cell, so its vertex mean does too; the
        # mean sits on an edge only if every vertex does (then either cell works)
        shift = np.floor(piece.mean(axis=0) / period) * period
        out.append(piece - shift)
    return out


def segment_intersection(p1, p2, q1, q2):
    """Intersection point of segments p1-p2 and q1-q2, or None."""
    p1, p2, q1, q2 = map(np.asarray, (p1, p2, q1, q2))
    r = p2 - p1
    s = q2 - q1
    den = r[0] * s[1] - r[1] * s[0]
    if abs(den) < 1e-15:
        return None
    d = q1 - p1
    t = (d[0] * s[1] - d[1] * s[0]) / den
    u = (d[0] * r[1] - d[1] * r[0]) / den
    if -1e-9 <= t <= 1 + 1e-9 and -1e-9 <= u <= 1 + 1e-9:
        return p1 + t * r
    return None


def point_polyline_distance(p, lines, period: float = 24.0) -> float:
    """Torus distance from ``p`` to the nearest point on any polyline."""
    p = np.asarray(p, dtype=float)
    best = np.inf
    for line in lines:
        if len(line) == 1:
            d = np.mod(line[0] - p + period / 2, period) - period / 2
            best = min(best, float(np.hypot(*d)))
            continue
        a = line[:-1]
        b = line[1:]
        # shift p near each segment's start so wrapped geometry is handled
        pa = a + (np.mod(p - a + period / 2, period) - period / 2)
        ab = b - a
        L2 = np.einsum("ij,ij->i", ab, ab)
        t = np.clip(np.einsum("ij,ij->i", pa - a, ab) / np.where(L2 > 0, L2, 1.0), 0.0, 1.0)
        proj = a + t[:, None] * ab
        d = np.hypot(*(pa - proj).T)
        best = min(best, float(d.min()))
    return best
