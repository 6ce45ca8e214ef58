"""Robust loss on squared residuals."""

from __future__ import annotations

from dataclasses import dataclass

import torch


@dataclass
class RobustLossConfig:
    """Geman-McClure scale; sigma is in millimeters."""

    sigma_mm: float = 10.0

    def __post_init__(self):
        if self.sigma_mm <= 0:
            raise ValueError("sigma must be positive")


def geman_mcclure(squared_residual, sigma: float):
    """rho(s) = s / (s + sigma^2): monotone, bounded by 1, saturating."""
    s = torch.as_tensor(squared_residual, dtype=torch.float64)
    return s / (s + sigma * sigma)
