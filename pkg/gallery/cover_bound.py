"""Covering the set of fast-return targets.

Targets y whose lower recurrence rate is at most h can be covered at scale
2**-k by the balls around the first 2**((h + eps) k) orbit points. This
script builds a sequence that only ever approaches the eight points j/8,
finds those as the low set on a 2**-12 grid, checks they are covered and
compares the closed-form tail of the cover series with direct summation.
"""
from __future__ import annotations

from waitdim import RadiusSchedule
from waitdim.acceptance import synthetic_cover_sequence
from waitdim.estimators import cover_dimension_bound, grid_targets
from waitdim.hitting import batch_hitting
from waitdim.orbit import sequence_buffer

seq = sequence_buffer(synthetic_cover_sequence(4096, level=3))
grid = grid_targets("circle", 12)
profiles = batch_hitting(seq, grid, RadiusSchedule(4, 12), mode="sequence")
cov = cover_dimension_bound(profiles, h=0.5, epsilon=0.1, d=0.8, k0=20)

print(f"low set: {cov.n_low} of {cov.n_grid} grid points ({cov.n_censored} censored)")
for k, frac in cov.covered_fraction.items():
    print(f"  k={k:2d}  balls {cov.ball_counts[k]:5d}  covered {frac:.2f}")
print(f"tail closed form {cov.tail_bound:.12g}")
print(f"tail summed      {cov.tail_direct:.12g}")
