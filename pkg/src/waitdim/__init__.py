"""Waiting times, recurrence rates and local dimensions of dynamical systems."""
from __future__ import annotations

from .numerics import (
    ContinuedFraction,
    Convergent,
    FixedPointAngle,
    InsufficientDataError,
    IrrationalType,
    cf_value,
    convergents,
    irrational_type,
    type_bruteforce_oracle,
    type_threshold,
)
from .systems import (
    DomainError,
    Metric,
    Point,
    SystemSpec,
    cantor_shift,
    cat_map,
    distance,
    doubling,
    logistic,
    noninvariant_counterexample,
    rotation,
    sample_measure,
    step,
)
from .orbit import OrbitBuffer, build_grid_index, generate_orbit, occupation_counts
from .hitting import (
    CENSORED,
    HittingProfile,
    RadiusSchedule,
    batch_hitting,
    hitting_single_pass,
    min_distance_record,
)

__version__ = "0.1.0"
