"""Recurrence coefficients marching toward their ray-limit constants.

Builds the nearest-neighbor recurrence table for the reference geometry
([-2,-1] and [1,2], unit weights), then compares the coefficients along the
diagonal ray n = (k,k) and along a thin ray n = (1,k) with the constants
coming out of the spectral curve. The diagonal converges like 1/k; the thin
ray heads for the collapsing-support constants, with the first-coordinate b
famously slow.
"""

import mpmath as mp

from angelesco import AngelescoSystem, PrecisionContext, curve, lebesgue_weights, reference_geometry

ctx = PrecisionContext(512)
g = reference_geometry()
system = AngelescoSystem(g, lebesgue_weights(), ctx)

print("=== diagonal ray (k,k): limits are the half-way constants ===")
cd = curve(g, "0.5", ctx)
print(f"A = {mp.nstr(cd.A1, 12)}   B2 = -B1 = {mp.nstr(cd.B2, 12)}")
print(f"{'k':>4} {'|a1 - A|':>12} {'|b1 - B1|':>12}")
with ctx.workprec():
    for k in (2, 4, 8, 16, 24):
        a1, a2, b1, b2 = system.nnrr((k, k))
        print(f"{k:>4} {mp.nstr(abs(a1 - cd.A1), 4):>12} {mp.nstr(abs(b1 - cd.B1), 4):>12}")

print()
print("=== thin ray (1,k): limits are the collapsed-support constants ===")
cd0 = curve(g, 0, ctx)
print(f"A1 -> 0, B1 -> {mp.nstr(cd0.B1, 12)}, B2 -> {mp.nstr(cd0.B2, 12)}")
print(f"{'k':>4} {'a1':>12} {'|b1 - B01|':>12} {'|b2 - B02|':>12}")
with ctx.workprec():
    for k in (5, 10, 20, 40):
        a1, a2, b1, b2 = system.nnrr((1, k))
        print(f"{k:>4} {mp.nstr(a1, 4):>12} "
              f"{mp.nstr(abs(b1 - cd0.B1), 4):>12} {mp.nstr(abs(b2 - cd0.B2), 4):>12}")
print("note the ~1/k crawl of the b1 column: the limit is proved, no rate is.")
