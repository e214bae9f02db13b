"""Free-running and light-entrained cycles of the two coupled clocks.

Run from the repository root:  python3 demos/01_cycles.py

Under constant darkness the upstream clock O1 runs slow (about 29 h),
under constant light it runs fast (about 21.6 h).  The downstream clock O2
has no light input of its own, so when it is driven by O1 it simply
inherits O1's period.  Under a 12:12 light-dark cycle both lock to 24 h.
"""
from __future__ import annotations

from entrainmap.cycles import find_limit_cycle
from entrainmap.model import ModelParams

params = ModelParams()
print(f"parameters: {params}")

for mode in ("DD", "LL", "LD"):
    for osc in ("O1", "O2"):
        cyc = find_limit_cycle(params, mode, osc)
        print(f"{mode} {osc}: period {cyc.period:8.4f} h, "
              f"P range [{cyc.P.min():.3f}, {cyc.P.max():.3f}], M range [{cyc.M.min():.3f}, {cyc.M.max():.3f}]")

# A light-dark cycle turns O1 into a clock that keeps light time: each
# point on its orbit is tagged by the light phase at which it is visited.
ld = find_limit_cycle(params, "LD", "O1")
print("\nentrained O1, one sample every 3 h of light time:")
step = max(1, len(ld.t) // 8)
for t, p, m in zip(ld.t[::step], ld.P[::step], ld.M[::step]):
    print(f"  t = {t:6.2f} h   P = {p:.4f}   M = {m:.4f}")
