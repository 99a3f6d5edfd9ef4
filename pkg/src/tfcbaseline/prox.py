"""Proximity operators and projections used by the APG solvers."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.fft as sfft

from .core import SvdFailureError, TfcBox


@dataclass(frozen=True)
class DykstraReport:
    iterations: int
    residual: float
    converged: bool


def soft_threshold(M: np.ndarray, eps: float) -> np.ndarray:
    """Entrywise shrinkage ``sign(m) * max(|m| - eps, 0)``; prox of ``eps * l1``."""
    if eps < 0:
        raise ValueError(f"threshold must be nonnegative, got {eps}")
    M = np.asarray(M, dtype=float)
    return np.sign(M) * np.maximum(np.abs(M) - eps, 0.0)


def svt(G: np.ndarray, tau: float, return_singular_values: bool = False):
    """Singular value thresholding, the prox of ``tau * nuclear norm``.

    With ``return_singular_values`` the thresholded spectrum is returned as a
    second value, which gives the nuclear norm of the result for free.
    """
    if tau < 0:
        raise ValueError(f"threshold must be nonnegative, got {tau}")
    G = np.asarray(G, dtype=float)
    try:
        U, s, Vt = np.linalg.svd(G, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise SvdFailureError(f"SVD of {G.shape} matrix did not converge") from exc
    s = np.maximum(s - tau, 0.0)
    r = int(np.count_nonzero(s))
    out = (U[:, :r] * s[:r]) @ Vt[:r]
    if return_singular_values:
        return out, s
    return out


def project_frobenius_ball(G: np.ndarray, delta: float) -> np.ndarray:
    """Project onto ``{N : ||N||_F^2 <= delta}`` by radial scaling."""
    if not delta > 0:
        raise ValueError(f"delta must be positive, got {delta}")
    G = np.asarray(G, dtype=float)
    norm = np.linalg.norm(G)
    if norm**2 <= delta:
        return G.copy()
    return G * (np.sqrt(delta) / norm)


def _project_spectral_box(Y: np.ndarray, box: TfcBox) -> np.ndarray:
    """Clip unitary DFT coefficient moduli row-wise (rows are flows), keeping phases.

    rfft bins 1..T//2 stand for conjugate pairs (and the real Nyquist bin),
    so clipping them once keeps the spectrum Hermitian.
    """
    T = Y.shape[1]
    F = sfft.rfft(Y, axis=1, norm="ortho")
    F[:, 0] = np.clip(F[:, 0].real, -box.delta2, box.delta2)
    ac = F[:, 1:]
    mod = np.abs(ac)
    over = mod > box.coef_bound
    if over.any():
        ac[over] *= box.coef_bound / mod[over]
    return sfft.irfft(F, n=T, axis=1, norm="ortho")


def project_tfc_box(
    G: np.ndarray,
    box: TfcBox,
    max_iters: int = 200,
    tol: float = 1e-9,
) -> tuple[np.ndarray, DykstraReport]:
    """Euclidean projection of each column onto the time-frequency noise box.

    The box is the intersection of a spectral set (non-DC coefficient moduli
    at most ``delta1 / sqrt(2)``, DC at most ``delta2``) and the sup-norm ball
    of radius ``delta3``. Dykstra's alternating projections converge to the
    projection onto the intersection, not merely to a feasible point. Columns
    are iterated together; a column is frozen once its largest entry change
    drops below ``tol``.
    """
    G = np.asarray(G, dtype=float)
    squeeze = G.ndim == 1
    X = np.array(G[None, :] if squeeze else G.T, order="C")  # rows are flows
    if X.size == 0 or box.violation(X.T) <= 0.0:
        # already inside: the projection is the point itself, bit for bit
        return G.copy(), DykstraReport(iterations=1, residual=0.0, converged=True)
    P_corr = np.zeros_like(X)
    Q_corr = np.zeros_like(X)
    active = None  # None means every row is still moving
    it = 0
    for it in range(1, max_iters + 1):
        if active is None:
            x, p, q = X, P_corr, Q_corr
        else:
            x, p, q = X[active], P_corr[active], Q_corr[active]
        y = _project_spectral_box(x + p, box)
        p += x
        p -= y
        y += q
        x_new = np.clip(y, -box.delta3, box.delta3)
        q[...] = y - x_new
        change = np.max(np.abs(x_new - x), axis=1, initial=0.0)
        moving = change >= tol
        if active is None:
            X[...] = x_new
            if moving.all():
                continue
            active = np.flatnonzero(moving)
        else:
            X[active] = x_new
            P_corr[active] = p
            Q_corr[active] = q
            active = active[moving]
        if active.size == 0:
            break
    converged = active is not None and active.size == 0
    out = X[0] if squeeze else X.T
    residual = box.violation(out) if out.size else 0.0
    return out, DykstraReport(iterations=it, residual=residual, converged=converged)
