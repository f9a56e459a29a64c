"""Exact Gaussian-process sampling of the infinite-width output field.

On any finite set of bit strings the infinite-width network output is a
zero-mean multivariate Gaussian with covariance K_ij = Q * F(x_i . x_j / n).
This module factorizes that covariance (dense Cholesky with an escalating
jitter ladder for the rank-deficient cases, e.g. duplicate points) and draws
joint samples deterministically per trial index, providing the oracle against
which finite networks and the closed-form theory are validated.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np

from .bitstrings import BitString
from .errors import ConfigError, FactorizationError
from .kernel import KernelProfile
from .rng import STREAM_GP, spawn_rng

MAX_POINTS = 4096
JITTER_START = 1e-12
JITTER_STOP = 1e-6
JITTER_FACTOR = 10.0


@dataclass(frozen=True, eq=False)
class GpEnsemble:
    """Factorized joint Gaussian over a fixed point set."""

    points: Tuple[BitString, ...]
    profile: KernelProfile
    cov: np.ndarray
    chol: np.ndarray
    jitter: float
    seed: int

    @property
    def size(self) -> int:
        return len(self.points)


def build_ensemble(
    profile: KernelProfile, points: Sequence[BitString], seed: int = 0
) -> GpEnsemble:
    """Build K from pairwise overlaps and factorize K + jitter * I.

    The jitter ladder starts at 1e-12 * Q and multiplies by 10 up to
    1e-6 * Q; failure after that signals a far-from-PSD kernel matrix,
    which would be a bug, not data.
    """
    pts = tuple(points)
    if not pts:
        raise ConfigError("ensemble needs at least one point")
    if len(pts) > MAX_POINTS:
        raise ConfigError(
            f"point set of {len(pts)} exceeds the dense factorization cap {MAX_POINTS}"
        )
    n = pts[0].n
    if any(p.n != n for p in pts):
        raise ConfigError("all ensemble points must have the same length")
    signs = np.stack([p.signs for p in pts])
    overlaps = (signs @ signs.T) / n
    cov = profile.q * np.asarray(profile.evaluate(overlaps.ravel())).reshape(
        overlaps.shape
    )
    cov = 0.5 * (cov + cov.T)
    jitter = JITTER_START * profile.q
    chol = None
    while jitter <= JITTER_STOP * profile.q * (1.0 + 1e-12):
        try:
            chol = np.linalg.cholesky(cov + jitter * np.eye(len(pts)))
            break
        except np.linalg.LinAlgError:
            jitter *= JITTER_FACTOR
    if chol is None:
        raise FactorizationError(
            f"Cholesky failed after jitter ladder up to {JITTER_STOP * profile.q:g}"
        )
    cov.flags.writeable = False
    chol.flags.writeable = False
    return GpEnsemble(
        points=pts, profile=profile, cov=cov, chol=chol, jitter=jitter, seed=seed
    )


def sample(ensemble: GpEnsemble, trial_index: int) -> np.ndarray:
    """One joint draw of phi over the point set, deterministic per
    (ensemble.seed, trial_index)."""
    rng = spawn_rng(ensemble.seed, STREAM_GP, trial_index)
    return ensemble.chol @ rng.standard_normal(ensemble.size)


def sample_block(ensemble: GpEnsemble, first_trial: int, count: int) -> np.ndarray:
    """Stack of draws for trials first_trial .. first_trial + count - 1,
    shape (count, size). Row k equals sample(ensemble, first_trial + k)."""
    out = np.empty((count, ensemble.size))
    for k in range(count):
        out[k] = sample(ensemble, first_trial + k)
    return out
