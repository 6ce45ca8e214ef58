"""Gaussian-mixture pose prior, trained with EM on sampled poses."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import torch
from sklearn.mixture import GaussianMixture

from ..errors import UntrainedPriorError


@dataclass
class PosePriorGMM:
    """Full-covariance mixture over flattened pose vectors."""

    means: np.ndarray  # (C, D)
    covariances: np.ndarray  # (C, D, D)
    mixture_weights: np.ndarray  # (C,)
    _chol_inv: np.ndarray = field(init=False, repr=False)
    _log_norm: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.means = np.asarray(self.means, dtype=np.float64)
        self.covariances = np.asarray(self.covariances, dtype=np.float64)
        self.mixture_weights = np.asarray(self.mixture_weights, dtype=np.float64)
        if abs(self.mixture_weights.sum() - 1.0) > 1e-8:
            raise ValueError("mixture weights must sum to 1")
        c, d = self.means.shape
        chol = np.linalg.cholesky(self.covariances)  # raises if not PD
        self._chol_inv = np.stack([np.linalg.inv(l) for l in chol])
        logdet = 2.0 * np.log(np.stack([np.diag(l) for l in chol])).sum(axis=1)
        self._log_norm = -0.5 * (d * np.log(2.0 * np.pi) + logdet)

    @property
    def dimension(self) -> int:
        return self.means.shape[1]


def train_pose_prior(samples: np.ndarray, n_components: int = 4, seed: int = 0,
                     reg_covar: float = 1e-4) -> PosePriorGMM:
    """EM fit of a full-covariance GMM on flattened pose samples."""
    samples = np.asarray(samples, dtype=np.float64).reshape(len(samples), -1)
    gm = GaussianMixture(
        n_components=n_components,
        covariance_type="full",
        reg_covar=reg_covar,
        random_state=seed,
        n_init=1,
        max_iter=300,
    ).fit(samples)
    return PosePriorGMM(gm.means_, gm.covariances_, gm.weights_)


def e_pose_prior_gmm(theta, prior: PosePriorGMM | None) -> torch.Tensor:
    """Negative log mixture density of the flattened pose, log-sum-exp stabilized."""
    if prior is None:
        raise UntrainedPriorError("pose prior has not been trained")
    t = torch.as_tensor(theta, dtype=torch.float64).reshape(-1)
    if t.shape[0] != prior.dimension:
        raise ValueError(f"pose dimension {t.shape[0]} != prior dimension {prior.dimension}")
    means = torch.as_tensor(prior.means)
    linv = torch.as_tensor(prior._chol_inv)
    log_norm = torch.as_tensor(prior._log_norm)
    logw = torch.log(torch.as_tensor(prior.mixture_weights))
    y = torch.einsum("cij,cj->ci", linv, t[None, :] - means)
    log_comp = logw + log_norm - 0.5 * (y * y).sum(dim=1)
    return -torch.logsumexp(log_comp, dim=0)
