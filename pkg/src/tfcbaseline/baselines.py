"""PCA comparator: baseline = projection onto the leading principal subspace."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import SvdFailureError, as_traffic_matrix, validate


class RankTooLargeError(ValueError):
    pass


@dataclass(frozen=True)
class PcaConfig:
    rank: Optional[int] = None
    variance_fraction: float = 0.998
    center: bool = False

    def __post_init__(self):
        if not 0.0 < self.variance_fraction <= 1.0:
            raise ValueError("variance_fraction must lie in (0, 1]")
        if self.rank is not None and self.rank < 1:
            raise RankTooLargeError(f"rank must be >= 1, got {self.rank}")


def select_rank(singular_values: np.ndarray, variance_fraction: float) -> int:
    """Smallest r whose leading squared singular values carry ``variance_fraction`` of the mass."""
    energy = np.asarray(singular_values, dtype=float) ** 2
    total = energy.sum()
    if total == 0:
        return 1
    cum = np.cumsum(energy) / total
    # tolerate round-off so that variance_fraction=1 picks the numerical rank
    return int(min(np.searchsorted(cum, variance_fraction - 1e-12) + 1, energy.size))


def fit_subspace(data: np.ndarray, cfg: PcaConfig):
    """Return (column means, V_r of shape P x r) for the chosen rank."""
    T, P = data.shape
    if cfg.rank is not None and cfg.rank > min(T, P):
        raise RankTooLargeError(f"rank {cfg.rank} exceeds min(T, P) = {min(T, P)}")
    mean = data.mean(axis=0) if cfg.center else np.zeros(P)
    try:
        _, s, Vt = np.linalg.svd(data - mean, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise SvdFailureError("SVD failed in PCA baseline") from exc
    r = cfg.rank if cfg.rank is not None else select_rank(s, cfg.variance_fraction)
    return mean, Vt[:r].T


def pca_baseline(X, cfg: PcaConfig = PcaConfig()) -> np.ndarray:
    """Rank-r PCA reconstruction of ``X`` (column means re-added when centering)."""
    tm = as_traffic_matrix(X)
    validate(tm)
    data = np.asarray(tm.data)
    mean, V = fit_subspace(data, cfg)
    return (data - mean) @ V @ V.T + mean
