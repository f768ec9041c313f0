"""Noisy latent candidate generation.

Each ensemble candidate is the input's subspace projection plus independent
Gaussian noise per component, reconstructed back to input space. The noise
std along component i scales with the coordinate range and inversely with
the explained-variance ratio:

* constant policy:     sigma_i = range_i * sigma / var_i
* incremental policy:  sigma_i = (j - 1) * range_i * sigma / (N * var_i)

for candidate j of N. Variance ratios are floored so trailing components
cannot blow the noise up, and components flagged near-zero-variance get no
noise at all.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError, ParamError
from .rng import RngStream
from .subspace import Subspace, project, reconstruct

CONSTANT = "constant"
INCREMENTAL = "incremental"


@dataclass(frozen=True)
class NoiseSchedule:
    strategy: str
    sigma: float
    ensemble_size: int
    var_floor: float = 1e-6
    sigma_cap: float | None = None

    def __post_init__(self):
        if self.strategy not in (CONSTANT, INCREMENTAL):
            raise ParamError(f"strategy must be constant or incremental, got {self.strategy!r}")
        if self.sigma < 0:
            raise ParamError(f"sigma must be nonnegative, got {self.sigma}")
        if self.ensemble_size < 1:
            raise ParamError(f"ensemble size must be >= 1, got {self.ensemble_size}")
        if self.var_floor <= 0:
            raise ParamError(f"var_floor must be positive, got {self.var_floor}")
        if self.sigma_cap is not None and self.sigma_cap <= 0:
            raise ParamError(f"sigma_cap must be positive, got {self.sigma_cap}")


def per_component_sigma(sched: NoiseSchedule, s: Subspace, j: int) -> np.ndarray:
    """Noise std per component for candidate ``j`` (1-based)."""
    if not 1 <= j <= sched.ensemble_size:
        raise ParamError(f"candidate index {j} outside [1, {sched.ensemble_size}]")
    var = np.maximum(s.variance_ratios, sched.var_floor)
    out = s.ranges * sched.sigma / var
    if sched.strategy == INCREMENTAL:
        out = out * (j - 1) / sched.ensemble_size
    if sched.sigma_cap is not None:
        out = np.minimum(out, sched.sigma_cap * s.ranges)
    out[s.dead] = 0.0
    return out


def latent_candidates(sched: NoiseSchedule, s: Subspace, x: np.ndarray,
                      rng: RngStream) -> np.ndarray:
    """The N perturbed latent vectors for input ``x``, shape [N, n_u].

    Candidate j draws its noise from the derived stream ``rng.derive(j)``,
    so any partition of candidates over workers reproduces the serial result.
    """
    p = project(s, x)
    out = np.empty((sched.ensemble_size, s.n_u))
    for j in range(1, sched.ensemble_size + 1):
        sig = per_component_sigma(sched, s, j)
        if np.any(sig > 0):
            noise = sig * rng.derive(j).generator().standard_normal(s.n_u)
        else:
            noise = 0.0
        out[j - 1] = p + noise
    return out


def make_candidates(sched: NoiseSchedule, s: Subspace, x: np.ndarray,
                    rng: RngStream) -> np.ndarray:
    """The N reconstructed input-space candidates for ``x``, shape [N, d].

    A candidate whose noise vector is identically zero short-circuits to the
    input itself when the subspace is full rank, so a zero-noise ensemble
    reproduces the unmodified input bit for bit.
    """
    x = np.asarray(x, dtype=np.float64)
    latents = latent_candidates(sched, s, x, rng)
    out = s.mean + latents @ s.components
    base = project(s, x)
    unperturbed = np.all(latents == base, axis=1)
    if unperturbed.any():
        # Zero-noise candidates take the single-vector path so they equal
        # reconstruct(project(x)) bit for bit, or the input itself at full rank.
        out[unperturbed] = x if s.full_rank else reconstruct(s, base)
    return out


def latent_sample_covariance(latents: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Unbiased sample covariance of latent rows and its eigenvalues (descending)."""
    latents = np.asarray(latents, dtype=np.float64)
    if latents.ndim != 2 or latents.shape[0] < 2:
        raise DataError(f"need a [N, n_u] matrix with N >= 2, got shape {latents.shape}")
    k = latents.shape[1]
    if np.all(latents == latents[0]):
        # identical rows have exactly zero covariance, with no mean wobble
        return np.zeros((k, k)), np.zeros(k)
    cov = np.atleast_2d(np.cov(latents, rowvar=False, ddof=1))
    eigs = np.sort(np.linalg.eigvalsh(cov))[::-1]
    return cov, eigs
