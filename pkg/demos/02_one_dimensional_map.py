"""The O1-entrained map: one number per day.

Run from the repository root:  python3 demos/02_one_dimensional_map.py

Once O1 is locked to the light-dark cycle, the state of O2 at its section
crossing is summarised by one light phase y.  The map y -> y' has two
fixed points: a stable one (the entrained phase) and an unstable one that
separates starts that settle by advancing from those that settle by
delaying.  Cobwebs from both sides of the unstable point show the two
routes to entrainment.
"""
from __future__ import annotations

import numpy as np

from entrainmap.analysis import cobweb, fixed_points_1d
from entrainmap.maps import EntrainmentMap

emap = EntrainmentMap()

ys = np.linspace(0.25, 23.75, 48)
print(" y      y'     return time")
for y in ys[::6]:
    s = emap.o1_entrained(y)
    print(f"{y:5.2f}  {s.next.y:6.3f}  {s.return_time:7.3f} h  ({s.y_direction})")

print("\nfixed points of the map:")
for f in fixed_points_1d(emap):
    kind = "stable" if f.stable else "unstable"
    print(f"  y* = {f.y:.4f}  slope {f.slope:+.3f}  {kind}")

for y0 in (16.5, 18.0):
    cw = cobweb(emap, y0, 40, until=1e-4)
    print(f"\ncobweb from y0 = {y0}: {len(cw.ys) - 1} days, route {' then '.join(cw.signature)}")
    print("  " + " -> ".join(f"{y:.2f}" for y in cw.ys[:8]) + (" ..." if len(cw.ys) > 8 else ""))
