"""Energy-weight configuration with JSON round trip."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, fields


@dataclass
class EnergyWeights:
    """Per-term multipliers; the source equations omit their values, so
    these defaults are the toolkit's calibrated choices and everything is
    overridable from the pipeline config."""

    lm: float = 1.0          # landmark loss
    d1: float = 1.0          # data, model -> scan
    d2: float = 1.0          # data, scan -> model
    theta: float = 0.1       # pose prior
    beta: float = 0.1        # shape prior
    w: float = 1.0           # weight (mass) prior
    h: float = 0.01          # height prior (mm^2 scale)
    s: float = 1.0           # non-rigid smoothness
    o: float = 1.0           # orthogonality
    t_b: float = 0.1         # segment translation prior
    lm_s: float = 1.0        # surface-vicinity joint landmarks
    pen: float = 10.0        # penetration
    edge: float = 1.0        # unposing edge-direction loss
    sym: float = 1.0         # sagittal symmetry
    supine: float = 1.0      # one-sided supine flexion penalty

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if not (v >= 0.0 and v == v):
                raise ValueError(f"weight '{f.name}' must be finite and >= 0")

    def replaced(self, **kwargs) -> "EnergyWeights":
        data = asdict(self)
        data.update(kwargs)
        return EnergyWeights(**data)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=1, sort_keys=True)

    @classmethod
    def from_dict(cls, data: dict) -> "EnergyWeights":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown energy weights: {sorted(unknown)}")
        return cls(**data)
