"""Strong asymptotics along a thin ray, against the closed-form predictor.

Along n = (1, k) the monic polynomials are compared with the product of the
second-interval Szego factor, the extra zero's closed-form factor, and the
exterior map power. The ratio drifts to 1 as k grows; the subleading
coefficients reproduce the recurrence b's and their slow crawl toward the
collapsed-support constant.
"""

import mpmath as mp

from angelesco import AngelescoSystem, PrecisionContext, lebesgue_weights, reference_geometry
from angelesco.szego import ratio_report, ratio_report_csv, szego_rho

ctx = PrecisionContext(512)
g = reference_geometry()
system = AngelescoSystem(g, lebesgue_weights(), ctx)

with ctx.workprec():
    se = szego_rho(g, 2, mp.mpf(4), system.weights[1], ctx)
    print(f"Szego factor at z=4: {mp.nstr(se.value, 12)}  (value at infinity "
          f"{mp.nstr(se.at_infinity, 12)} = sqrt(2/pi))")

print()
print("=== P_n(4) against the predictor, n = (1, k) ===")
rows = ratio_report(system, [(1, k) for k in (5, 10, 20, 40)], 4)
print(f"{'k':>4} {'|ratio - 1|':>14}")
for r in rows:
    print(f"{r['n2']:>4} {mp.nstr(r['abs_err'], 6):>14}")

print()
print("CSV form of the report:")
print(ratio_report_csv(rows, digits=10))
