"""Axis-angle rotation utilities (exponential map), numpy and torch."""

from __future__ import annotations

import numpy as np
import torch

_TAYLOR_EPS = 1e-8


def axis_angle_to_matrix(v: torch.Tensor) -> torch.Tensor:
    """Rodrigues rotation matrices for axis-angle vectors (..., 3).

    Uses the sinc-style Taylor expansion below ||v|| = 1e-8 so the map and
    its derivatives stay smooth through zero.
    """
    v = torch.as_tensor(v, dtype=torch.float64)
    batch = v.shape[:-1]
    angle = torch.linalg.norm(v, dim=-1, keepdim=True)
    small = angle < _TAYLOR_EPS
    safe = torch.where(small, torch.ones_like(angle), angle)

    # sin(a)/a and (1-cos(a))/a^2 with Taylor fallbacks
    sinc = torch.where(small, 1.0 - angle**2 / 6.0, torch.sin(safe) / safe)
    cosc = torch.where(small, 0.5 - angle**2 / 24.0, (1.0 - torch.cos(safe)) / safe**2)

    x, y, z = v[..., 0], v[..., 1], v[..., 2]
    zero = torch.zeros_like(x)
    k = torch.stack(
        [zero, -z, y, z, zero, -x, -y, x, zero], dim=-1
    ).reshape(*batch, 3, 3)
    eye = torch.eye(3, dtype=v.dtype).expand(*batch, 3, 3)
    return eye + sinc[..., None] * k + cosc[..., None] * (k @ k)


def axis_angle_to_matrix_np(v: np.ndarray) -> np.ndarray:
    return axis_angle_to_matrix(torch.as_tensor(np.asarray(v, dtype=np.float64))).numpy()


def canonicalize_axis_angle(theta: np.ndarray) -> np.ndarray:
    """Wrap axis-angle vectors so every rotation magnitude is <= pi."""
    theta = np.asarray(theta, dtype=np.float64).copy()
    flat = theta.reshape(-1, 3)
    norms = np.linalg.norm(flat, axis=1)
    for i, n in enumerate(norms):
        if n > np.pi:
            wrapped = np.mod(n + np.pi, 2.0 * np.pi) - np.pi
            flat[i] *= wrapped / n
    return flat.reshape(theta.shape)
