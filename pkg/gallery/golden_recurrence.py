"""Waiting times of the golden rotation.

The golden mean has bounded partial quotients, so an orbit of the rotation
needs about 2**k steps to come within 2**-k of a target. This script prints
the first entrance times, the per-scale slopes log2(tau_k)/k and two fits.
The per-scale slopes creep up towards 1 from below because tau_k is about
2**(k-1) times an Exp(1) variable; the free-intercept log-log fit absorbs
that constant.
"""
from __future__ import annotations

from waitdim import Point, RadiusSchedule, generate_orbit, hitting_single_pass, rotation
from waitdim.estimators import slope_estimate

sys = rotation("golden")
orb = generate_orbit(sys, Point.circle(0.2), burn_in=0, n=10**7)
sched = RadiusSchedule(4, 18)

for y in (0.5, 0.7071, 0.91):
    prof = hitting_single_pass(orb, Point.circle(y), sched)
    est = slope_estimate(prof, "R_sup")
    print(f"y = {y}")
    for (k, s), t in zip(est.per_scale_slopes, prof.tau):
        print(f"  k={k:2d}  tau={int(t):9d}  s_k={s:.3f}")
    print(f"  window {est.tail_window}: sup {est.sup_proxy:.3f}  inf {est.inf_proxy:.3f}"
          f"  loglog {est.loglog_slope:.3f}\n")
