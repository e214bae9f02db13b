"""Fixed points, invariant curves and entrainment times on the torus.

Run from the repository root:  python3 demos/03_torus_map.py [outdir]

The full map acts on pairs (x, y) of light phases, one per clock.  Its
fixed points are the intersections of the curves x' = x and y' = y.  The
stable curves of the two saddles split the square into basins that reach
the sink by different routes, and starts close to them take longest to
entrain.  Everything is written as SVG so it can be inspected in a browser.
Takes about a minute on one core.
"""
from __future__ import annotations

import sys
from pathlib import Path

import numpy as np

from entrainmap.analysis import entrainment_heatmap, find_fixed_points, map_nullclines
from entrainmap.manifolds import grow_stable_pair, grow_unstable
from entrainmap.maps import EntrainmentMap, MapPoint
from entrainmap.svg import Figure

out = Path(sys.argv[1] if len(sys.argv) > 1 else "demo_output")
out.mkdir(parents=True, exist_ok=True)

emap = EntrainmentMap()
nc = map_nullclines(emap, 96)
recs = find_fixed_points(emap, 96, nullclines=nc)
fp = {r.label: r for r in recs}
for r in recs:
    mods = ", ".join(f"{m:.4f}" for m in sorted(r.moduli, reverse=True))
    print(f"{r.label}: ({r.location.x:7.3f}, {r.location.y:7.3f})  {r.stability:6s}  |lambda| = {mods}")

fig = Figure(title="nullclines of the torus map", xlabel="x (h)", ylabel="y (h)")
for line in nc.n_x:
    fig.polyline(line, "#1f77b4")
for line in nc.n_y:
    fig.polyline(line, "#d62728")
fig.points([r.location.as_tuple() for r in recs], labels=[r.label for r in recs])
print("wrote", fig.save(out / "nullclines.svg"))

A, D = fp["A"].location.as_tuple(), fp["D"].location.as_tuple()
stable = {lab: grow_stable_pair(emap, fp[lab], source=D) for lab in "BC"}
unstable = {lab: [grow_unstable(emap, fp[lab], b, sink=A) for b in (1, -1)] for lab in "BC"}
for lab in "BC":
    print(f"W^s({lab}): {[c.termination for c in stable[lab]]},  W^u({lab}): {[c.termination for c in unstable[lab]]}")

# a coarse heat map keeps the demo short; the tests use 48 x 48
hm = entrainment_heatmap(emap, MapPoint(*A), 24)
print(f"entrainment time: mean {hm.finite.mean():.1f} h, max {hm.finite.max():.1f} h over {hm.finite.size} cells")

fig = Figure(title="days to entrain, with stable (green) and unstable (white) curves",
             xlabel="x (h)", ylabel="y (h)")
fig.raster(hm.values, hm.xs, hm.ys)
for lab in "BC":
    for c in stable[lab]:
        for seg in c.segments:
            fig.polyline(seg, "#2ca02c", width=2)
    for c in unstable[lab]:
        for seg in c.segments:
            fig.polyline(seg, "#ffffff", width=1.5, dash="4,2")
fig.points(np.array([r.location.as_tuple() for r in recs]), color="#000000", labels=[r.label for r in recs])
print("wrote", fig.save(out / "heatmap_manifolds.svg"))
