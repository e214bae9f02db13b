"""Letting light reach the downstream clock.

Run from the repository root:  python3 demos/04_semi_hierarchical.py

With k_L2 > 0 the second clock sees a little light directly.  The average
time to re-entrain after a shift drops.  Because O1 never feels O2, the
diagonal x = y stays invariant: the sink and the diagonal saddle slide
along it rather than leaving it, and C turns into a source.
"""
from __future__ import annotations

from entrainmap.analysis import entrainment_heatmap, find_fixed_points, fixed_points_1d
from entrainmap.maps import EntrainmentMap, MapPoint

for name, emap in (("strict", EntrainmentMap()), ("semi", EntrainmentMap.semi())):
    print(f"--- {name}: k_L2 = {emap.params.k_L2}")
    for r in find_fixed_points(emap, 96):
        side = "on" if abs(r.location.x - r.location.y) < 1e-3 else ("left of" if r.location.x < r.location.y else "right of")
        print(f"  {r.label}: ({r.location.x:7.3f}, {r.location.y:7.3f})  {r.stability:6s}  {side} the diagonal")
    y = next(f.y for f in fixed_points_1d(emap) if f.stable)
    hm = entrainment_heatmap(emap, MapPoint(y, y), 16)
    print(f"  mean entrainment time on a 16 x 16 grid: {hm.finite.mean():.1f} h")
