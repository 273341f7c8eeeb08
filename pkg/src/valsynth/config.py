"""Run configuration: tolerances, sampling densities, seeds.

Every tolerance used by the membership checks lives here so that a report
can state exactly what was run and a rerun can reproduce it byte for byte.
"""

from __future__ import annotations

from dataclasses import dataclass, field, asdict

import numpy as np


@dataclass(frozen=True)
class Tolerances:
    snap: float = 1e-9            # kink snap distance
    merge: float = 1e-9           # gradient merge distance
    check: float = 1e-9           # inequality slack for the membership conditions
    extension: float = 1e-9       # max-min spread allowed for the canonical extension
    continuity: float = 1e-12     # piece agreement across shared boundaries
    gradient_rel: float = 1e-6    # analytic vs finite-difference gradient


@dataclass
class RunConfig:
    box_half: float = 1.0                    # spatial box [-box_half, box_half]^n
    lattice_per_dim: int = 9                 # spatial lattice density
    interior_times: int = 7                  # time samples per window
    time_floor_frac: float = 0.05            # interior margin for the base window
    e4_floor_fracs: tuple[float, ...] = (0.1, 0.01, 0.001)
    e4_growth_threshold: float = 10.0
    e4_stability_rel: float = 0.10
    e4_strata_cap: int = 30                  # strata positions per refinement window
    e2_interior_samples: int = 50            # interior points of the complement polytope
    extension_interior_samples: int = 12     # complement samples kept for the extension table
    lambda_interior_samples: int = 8         # interior representations per tested point
    membership_directions: int = 4000        # directions for the Dini membership oracle
    seed: int = 20250808
    tol: Tolerances = field(default_factory=Tolerances)

    def box(self, n: int) -> np.ndarray:
        return np.tile([-self.box_half, self.box_half], (n, 1))

    def rng(self) -> np.random.Generator:
        return np.random.default_rng(self.seed)

    def to_dict(self) -> dict:
        return asdict(self)
