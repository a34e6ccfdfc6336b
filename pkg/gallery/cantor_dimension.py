"""Local dimension of the Cantor measure from a single orbit.

The shift on ternary digits {0, 2} preserves the Cantor measure, whose local
dimension is log 2 / log 3 everywhere on the set. Occupation frequencies of
dyadic balls along one long orbit give the estimate; dyadic balls do not
align with the ternary structure, so single targets scatter around the value.
"""
from __future__ import annotations

import math

import numpy as np

from waitdim import RadiusSchedule, cantor_shift, sample_measure
from waitdim.estimators import auto_grid_level, dimension_estimate, measure_buffer
from waitdim.orbit import build_grid_index

sys = cantor_shift()
sched = RadiusSchedule(4, 14)
meas = measure_buffer(sys, 10**6, seed=1)
idx = build_grid_index(meas, auto_grid_level(meas, sched.k_max))

vals = []
for y in sample_measure(sys, 25, seed=2):
    est = dimension_estimate(meas, idx, y, sched)
    vals.append(est.loglog_slope)
    print(f"y = {float(y):.6f}  loglog {est.loglog_slope:.3f}  "
          f"sup {est.sup_proxy:.3f}  inf {est.inf_proxy:.3f}")

print(f"\nmean over targets {np.mean(vals):.4f}, log2/log3 = {math.log(2) / math.log(3):.4f}")
