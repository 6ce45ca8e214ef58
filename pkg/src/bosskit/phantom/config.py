"""Phantom family and per-subject specification."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import InvalidSpecError

DROPPABLE_SECTIONS = ("arms", "legs", "skull")

# generative factor strengths baked into the shape bases; factor draws are
# standard normal, truncated in generate_cohort
FACTOR_NAMES = ("stature", "girth", "limb_length")
STATURE_GAIN = 0.06      # relative uniform scale per unit factor
GIRTH_GAIN_SKIN = 0.18   # relative radial belly offset per unit factor
GIRTH_GAIN_ORGAN = 0.10  # relative organ scale per unit factor
LIMB_GAIN = 0.10         # relative limb stretch per unit factor


@dataclass(frozen=True)
class PhantomFamilyConfig:
    """Template dimensions and enabled generative factors (cohort-wide)."""

    n_factors: int = 3  # 2 = stature+girth, 3 adds limb length
    name: str = "phantom"

    def __post_init__(self):
        if not 1 <= self.n_factors <= 3:
            raise InvalidSpecError("n_factors must be 1, 2 or 3")


@dataclass
class PhantomSpec:
    """One subject's generative draw."""

    seed: int
    shape: np.ndarray = field(default_factory=lambda: np.zeros(3))
    torso_flex_scale: float = 0.02  # supine bias: near-zero torso flexion
    limb_angle_limit: float = 0.25  # radians, well under the +/-30 deg budget
    dropout: tuple[str, ...] = ()
    noise_mm: float = 0.0
    family: PhantomFamilyConfig = field(default_factory=PhantomFamilyConfig)

    def __post_init__(self):
        self.shape = np.asarray(self.shape, dtype=np.float64).reshape(-1)
        if len(self.shape) != 3:
            raise InvalidSpecError("shape factors must be a 3-vector (unused ones zero)")
        if np.abs(self.shape).max() > 3.0:
            raise InvalidSpecError("shape factors outside the documented +/-3 range")
        bad = set(self.dropout) - set(DROPPABLE_SECTIONS)
        if bad:
            raise InvalidSpecError(f"unknown dropout flags: {sorted(bad)}")
        if self.noise_mm < 0 or self.noise_mm > 5.0:
            raise InvalidSpecError("noise level outside [0, 5] mm")
        if self.limb_angle_limit < 0 or self.limb_angle_limit > 0.52:
            raise InvalidSpecError("limb angles must stay within +/-30 degrees")
