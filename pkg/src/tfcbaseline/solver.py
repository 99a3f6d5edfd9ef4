"""Accelerated proximal gradient (APG) solvers for the low-rank + sparse +
bounded-noise decomposition, with and without time-frequency constraints.

The program solved is the relaxation

    min_{A,E,N}  mu * (||A||_* + lam * ||E||_1 + indicator_C(N))
                 + 1/2 ||X - A - E - N||_F^2 + beta/2 ||H A||_F^2

where ``H`` projects each column onto DFT bins above the critical frequency
and ``C`` is either the time-frequency noise box or a Frobenius ball. ``mu``
follows a geometric continuation down to a floor.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .core import (
    Decomposition,
    NotConvergedError,
    ShapeMismatchError,
    SolverConfig,
    SolverTrace,
    TfcBox,
    as_traffic_matrix,
    estimate_sigma,
    validate,
)
from .prox import project_frobenius_ball, project_tfc_box, soft_threshold, svt
from .spectral import FrequencyMask, highfreq_mask, highpass_project, lowpass_project

logger = logging.getLogger(__name__)


def lipschitz_constant(beta: float) -> float:
    """Lipschitz bound sqrt(9 + 4 beta + beta^2) of the smooth part's gradient."""
    if beta < 0:
        raise ValueError("beta must be nonnegative")
    return math.sqrt(9.0 + 4.0 * beta + beta * beta)


def spectral_norm(X: np.ndarray, tol: float = 1e-6, max_iter: int = 1000) -> float:
    """Largest singular value by power iteration on X^T X.

    Stops once the eigen-residual ``||M v - theta v|| / theta`` of
    ``M = X^T X`` drops below ``tol``, which bounds the relative error of
    ``theta`` (and hence of its square root) by ``tol``.
    """
    X = np.asarray(X, dtype=float)
    if not np.any(X):
        return 0.0
    v = np.random.default_rng(0).standard_normal(X.shape[1])
    v /= np.linalg.norm(v)
    theta = 0.0
    for _ in range(max_iter):
        w = X.T @ (X @ v)
        theta = float(v @ w)
        if theta <= 0:
            break
        if np.linalg.norm(w - theta * v) <= tol * theta:
            break
        v = w / np.linalg.norm(w)
    return float(np.linalg.norm(X @ v))


def _check_shapes(*mats: np.ndarray) -> None:
    shape = mats[0].shape
    if any(m.shape != shape for m in mats[1:]):
        raise ShapeMismatchError(f"shape mismatch: {[m.shape for m in mats]}")


def grad_f(A, E, N, X, beta: float, mask: FrequencyMask):
    """Gradient blocks of the smooth part with respect to (A, E, N)."""
    A, E, N, X = (np.asarray(M, dtype=float) for M in (A, E, N, X))
    _check_shapes(A, E, N, X)
    resid = A + E + N - X
    gA = resid + beta * highpass_project(A, mask) if beta else resid.copy()
    return gA, resid.copy(), resid.copy()


def smooth_part(A, E, N, X, beta: float, mask: Optional[FrequencyMask]) -> float:
    val = 0.5 * np.linalg.norm(X - A - E - N) ** 2
    if beta and mask is not None:
        val += 0.5 * beta * np.linalg.norm(highpass_project(A, mask)) ** 2
    return float(val)


def objective_F(A, E, N, X, mu, lam, beta, mask, box: Optional[TfcBox] = None, slack: float = 1e-6) -> float:
    """Relaxed objective; +inf when ``N`` leaves the noise box by more than ``slack``."""
    A, E, N, X = (np.asarray(M, dtype=float) for M in (A, E, N, X))
    _check_shapes(A, E, N, X)
    if box is not None and box.violation(N) > slack:
        return math.inf
    nuc = float(np.sum(np.linalg.svd(A, compute_uv=False))) if mu else 0.0
    return mu * (nuc + lam * float(np.abs(E).sum())) + smooth_part(A, E, N, X, beta, mask)


@dataclass
class _Normalized:
    X: np.ndarray
    sigma: np.ndarray
    degenerate: tuple[int, ...]


def _normalize(data: np.ndarray, sigma) -> _Normalized:
    if sigma is not None:
        sig = np.asarray(sigma, dtype=float).copy()
        if sig.shape != (data.shape[1],):
            raise ShapeMismatchError(f"sigma has shape {sig.shape}, expected ({data.shape[1]},)")
        degenerate = tuple(int(j) for j in np.flatnonzero(~(sig > 0)))
        sig[list(degenerate)] = 1.0
    else:
        sig, degenerate = estimate_sigma(data)
    return _Normalized(X=data / sig, sigma=sig, degenerate=degenerate)


def mu_schedule_length(mu0: float, mu_floor: float, eta: float) -> int:
    """Iterations after which the continuation reaches its floor (k0)."""
    if mu0 <= 0 or mu_floor <= 0 or mu_floor >= mu0:
        return 0
    return math.ceil(math.log(mu0 / mu_floor) / math.log(1.0 / eta))


def _apg(
    Xn: np.ndarray,
    cfg: SolverConfig,
    beta: float,
    mask: Optional[FrequencyMask],
    noise_step: Callable[[np.ndarray], tuple[np.ndarray, float]],
    callback: Optional[Callable[[int, np.ndarray, np.ndarray, np.ndarray], None]] = None,
):
    T, P = Xn.shape
    L = lipschitz_constant(beta)
    lam = cfg.lambda_override if cfg.lambda_override is not None else 1.0 / math.sqrt(max(T, P))
    mu = cfg.mu0_factor * spectral_norm(Xn)
    mu_floor = cfg.mu_floor_factor * mu
    scale = max(1.0, float(np.linalg.norm(Xn)))

    A = np.zeros_like(Xn)
    E = np.zeros_like(Xn)
    N = np.zeros_like(Xn)
    A_prev, E_prev, N_prev = A, E, N
    t, t_prev = 1.0, 1.0
    g_cur, f_cur = 0.0, smooth_part(A, E, N, Xn, beta, mask)
    history: list[float] = []
    rel_change = math.inf
    dyk_resid = 0.0
    converged = False
    mu_used = mu
    k = 0

    def step(YA, YE, YN):
        resid = YA + YE + YN - Xn
        gA = resid + beta * highpass_project(YA, mask) if beta else resid
        A1, s = svt(YA - gA / L, mu / L, return_singular_values=True)
        E1 = soft_threshold(YE - resid / L, lam * mu / L)
        N1, r = noise_step(YN - resid / L)
        g1 = float(s.sum()) + lam * float(np.abs(E1).sum())
        return A1, E1, N1, r, g1, smooth_part(A1, E1, N1, Xn, beta, mask)

    while k < cfg.max_iters:
        w = (t_prev - 1.0) / t
        A_new, E_new, N_new, r, g_new, f_new = step(
            A + w * (A - A_prev), E + w * (E - E_prev), N + w * (N - N_prev)
        )
        if cfg.restart and w > 0 and mu * g_new + f_new > mu * g_cur + f_cur:
            # momentum overshot: drop it and take a plain proximal gradient step
            t_prev = t = 1.0
            A_new, E_new, N_new, r, g_new, f_new = step(A, E, N)
        dyk_resid = max(dyk_resid, r)

        rel_change = max(
            np.linalg.norm(A_new - A), np.linalg.norm(E_new - E), np.linalg.norm(N_new - N)
        ) / scale
        A_prev, E_prev, N_prev = A, E, N
        A, E, N = A_new, E_new, N_new
        g_cur, f_cur = g_new, f_new
        k += 1
        history.append(mu * g_cur + f_cur)
        if callback is not None:
            callback(k, A, E, N)
        at_floor = mu <= mu_floor
        t_prev, t = t, (1.0 + math.sqrt(4.0 * t * t + 1.0)) / 2.0
        mu_used = mu
        mu = max(cfg.eta * mu, mu_floor)
        if at_floor and rel_change < cfg.rel_tol:
            converged = True
            break
    logger.debug("APG stopped after %d iterations (rel change %.3e)", k, rel_change)
    return A, E, N, history, rel_change, mu_used, converged, dyk_resid


def _finish(data, norm: _Normalized, A, E, N, history, rel_change, mu_final, converged, dyk_resid, mask, cfg):
    sig = norm.sigma
    A, E, N = A * sig, E * sig, N * sig
    if cfg.final_hf_cleanup and mask is not None:
        A = lowpass_project(A, mask)
    hf = 0.0
    if mask is not None and len(mask):
        hf = float(np.linalg.norm(highpass_project(A, mask)) / max(1.0, np.linalg.norm(A)))
    trace = SolverTrace(
        iterations=len(history),
        objective_history=history,
        final_rel_change=float(rel_change),
        mu_final=float(mu_final),
        hf_residual=hf,
        recon_residual=float(np.linalg.norm(data - A - E - N)),
        converged=converged,
        degenerate_columns=norm.degenerate,
        dykstra_max_residual=float(dyk_resid),
    )
    result = Decomposition(baseline=A, anomaly=E, noise=N, trace=trace)
    if not converged:
        raise NotConvergedError(
            f"no convergence within {cfg.max_iters} iterations (rel change {rel_change:.3e})", result
        )
    return result


def solve_spcp_tfc(X, cfg: SolverConfig, callback=None) -> Decomposition:
    """Split ``X`` into band-limited low-rank baseline, sparse anomalies and
    box-bounded noise.

    Columns are first divided by their noise scale (``cfg.sigma`` or a robust
    estimate) and the result is scaled back before returning.

    Raises
    ------
    NotConvergedError
        ``cfg.max_iters`` reached; the partial decomposition is attached.
    SvdFailureError
        The SVD inside singular value thresholding failed.
    """
    tm = as_traffic_matrix(X)
    validate(tm)
    data = np.asarray(tm.data)
    norm = _normalize(data, cfg.sigma)
    mask = highfreq_mask(tm.T, cfg.fc)
    box = cfg.box

    def noise_step(G):
        Np, rep = project_tfc_box(G, box, cfg.dykstra_iters, cfg.dykstra_tol)
        return Np, rep.residual

    out = _apg(norm.X, cfg, cfg.beta, mask, noise_step, callback)
    return _finish(data, norm, *out, mask, cfg)


def default_spcp_delta(T: int, P: int) -> float:
    """Squared-Frobenius noise budget for unit-variance noise: n + sqrt(8 n)."""
    n = T * P
    return n + math.sqrt(8.0 * n)


def solve_spcp(X, cfg: SolverConfig, delta: float, callback=None) -> Decomposition:
    """Stable PCP comparator: same APG scaffold, no spectral penalty, and a
    Frobenius-ball noise constraint ``||N||_F^2 <= delta`` (normalized units).
    """
    if not delta > 0:
        raise ValueError("delta must be positive")
    tm = as_traffic_matrix(X)
    validate(tm)
    data = np.asarray(tm.data)
    norm = _normalize(data, cfg.sigma)

    def noise_step(G):
        return project_frobenius_ball(G, delta), 0.0

    out = _apg(norm.X, cfg, 0.0, None, noise_step, callback)
    return _finish(data, norm, *out, None, cfg)
