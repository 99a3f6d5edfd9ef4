"""Unitary DFT helpers: Fourier frequencies, the high-frequency projector and
the periodogram.

All transforms act column-wise (axis 0 is time) and use the unitary
normalization, so the projector below is orthogonal and Parseval holds
exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.fft as sfft

from .core import ShapeMismatchError


def fourier_frequency(k: int, T: int) -> float:
    """Frequency in cycles per interval of DFT bin ``k`` for length ``T``.

    >>> fourier_frequency(5, 8)
    0.375
    """
    if not 0 <= k < T:
        raise IndexError(f"bin {k} out of range for length {T}")
    return min(k / T, (T - k) / T)


def fourier_frequencies(T: int) -> np.ndarray:
    k = np.arange(T)
    return np.minimum(k, T - k) / T


@dataclass(frozen=True)
class FrequencyMask:
    """Set of DFT bins strictly above a critical frequency.

    Membership only depends on ``min(k, T - k)``, so the set is closed under
    k -> (T - k) mod T and projecting a real signal keeps it real.
    """

    T: int
    fc: float
    indices: tuple[int, ...]

    @property
    def bool_mask(self) -> np.ndarray:
        out = np.zeros(self.T, dtype=bool)
        out[list(self.indices)] = True
        return out

    @property
    def rfft_mask(self) -> np.ndarray:
        """Mask over the ``T // 2 + 1`` bins of a real FFT."""
        return self.bool_mask[: self.T // 2 + 1]

    def __len__(self) -> int:
        return len(self.indices)


def highfreq_mask(T: int, fc: float) -> FrequencyMask:
    """All bins whose frequency exceeds ``fc``.

    The inequality is strict: energy sitting exactly at ``fc`` is treated as
    baseline content.
    """
    if not 0.0 <= fc <= 0.5:
        raise ValueError(f"fc must lie in [0, 1/2], got {fc}")
    if T < 1:
        raise ValueError("T must be positive")
    k = np.arange(T)
    # compare min(k, T-k) > fc*T in integers where possible to avoid 112/2016 round-off
    keep = np.minimum(k, T - k) > fc * T + 1e-9 * max(1.0, fc * T)
    return FrequencyMask(T=T, fc=float(fc), indices=tuple(int(i) for i in np.flatnonzero(keep)))


def _check_rows(M: np.ndarray, mask: FrequencyMask) -> np.ndarray:
    M = np.asarray(M, dtype=float)
    if M.shape[0] != mask.T:
        raise ShapeMismatchError(f"mask is for length {mask.T}, matrix has {M.shape[0]} rows")
    return M


def highpass_project(M: np.ndarray, mask: FrequencyMask) -> np.ndarray:
    """Orthogonal projection of every column onto the masked DFT bins."""
    M = _check_rows(M, mask)
    if not mask.indices:
        return np.zeros_like(M)
    F = sfft.rfft(M, axis=0)
    keep = mask.rfft_mask
    F[~keep] = 0.0
    return sfft.irfft(F, n=mask.T, axis=0)


def lowpass_project(M: np.ndarray, mask: FrequencyMask) -> np.ndarray:
    """Complement of :func:`highpass_project`; the two sum to the identity."""
    M = _check_rows(M, mask)
    F = sfft.rfft(M, axis=0)
    F[mask.rfft_mask] = 0.0
    return sfft.irfft(F, n=mask.T, axis=0)


def periodogram(v: np.ndarray) -> np.ndarray:
    """Squared moduli of the unitary DFT coefficients of ``v`` (all T bins)."""
    v = np.asarray(v, dtype=float)
    if v.ndim != 1 or v.size < 1:
        raise ValueError("periodogram expects a nonempty 1-D vector")
    return np.abs(np.fft.fft(v, norm="ortho")) ** 2
