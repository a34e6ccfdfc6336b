"""Without invariance the lower bound on recurrence can fail.

The constant map x -> 1/4 sends every orbit to 1/4 in one step, so the
waiting time to any ball around 1/4 is 1 at every scale and the recurrence
rate is 0. Lebesgue measure still has dimension 1 at 1/4. The report marks
the system as non-invariant so the failed inequality is expected.
"""
from __future__ import annotations

from fractions import Fraction

from waitdim import Point, RadiusSchedule, noninvariant_counterexample
from waitdim.estimators import inequality_report

sys = noninvariant_counterexample()
y0 = Point.circle(Fraction(1, 4))
rep = inequality_report(sys, n_sources=3, n_targets=1, sched=RadiusSchedule(4, 16),
                        n=10**5, targets=[y0], seed=3)
for p in rep.pairs:
    print(f"source {p.source}: R_sup = {p.R_sup:.3f}, d(y0) = {p.d_loglog:.3f}")
print()
print(rep.to_text())
