"""Accuracy, correlation and smoothness scores for estimated baselines."""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .core import ShapeMismatchError, TooShortError


class ZeroReferenceError(ValueError):
    pass


class EmptyInputError(ValueError):
    pass


def _pair(A_true, A_est):
    A_true = np.asarray(A_true, dtype=float)
    A_est = np.asarray(A_est, dtype=float)
    if A_true.shape != A_est.shape:
        raise ShapeMismatchError(f"{A_true.shape} vs {A_est.shape}")
    return A_true, A_est


def nrmse(A_true, A_est) -> float:
    """||A - A_hat||_F / ||A||_F."""
    A_true, A_est = _pair(A_true, A_est)
    ref = np.linalg.norm(A_true)
    if ref == 0:
        raise ZeroReferenceError("reference matrix has zero norm")
    return float(np.linalg.norm(A_true - A_est) / ref)


def pearson_per_flow(A_true, A_est) -> np.ndarray:
    """Column-wise Pearson correlation; NaN where either column is constant."""
    A_true, A_est = _pair(A_true, A_est)
    if A_true.ndim == 1:
        A_true, A_est = A_true[:, None], A_est[:, None]
    if A_true.shape[0] < 2:
        raise TooShortError("need at least two samples per flow")
    a = A_true - A_true.mean(axis=0)
    b = A_est - A_est.mean(axis=0)
    na = np.linalg.norm(a, axis=0)
    nb = np.linalg.norm(b, axis=0)
    # a column counts as constant when its spread is at round-off level
    scale_a = np.finfo(float).eps * np.sqrt(a.shape[0]) * np.max(np.abs(A_true), axis=0)
    scale_b = np.finfo(float).eps * np.sqrt(b.shape[0]) * np.max(np.abs(A_est), axis=0)
    defined = (na > scale_a) & (nb > scale_b)
    out = np.full(a.shape[1], np.nan)
    out[defined] = np.sum(a[:, defined] * b[:, defined], axis=0) / (na[defined] * nb[defined])
    return np.clip(out, -1.0, 1.0)


def tv_smoothness(A) -> float:
    """Sum over flows of the total variation sum_t |A(t+1) - A(t)|."""
    A = np.asarray(A, dtype=float)
    if A.shape[0] < 2:
        raise TooShortError("need at least two time intervals")
    return float(np.abs(np.diff(A, axis=0)).sum())


def normalized_mean_smoothness(method_values: Sequence[float], truth_values: Sequence[float]) -> float:
    if len(method_values) == 0 or len(truth_values) == 0:
        raise EmptyInputError("need at least one value on each side")
    truth = float(np.mean(truth_values))
    if not truth > 0:
        raise ZeroReferenceError("ground-truth mean smoothness must be positive")
    return float(np.mean(method_values)) / truth


@dataclass
class EvalReport:
    matrix_id: str
    method: str
    alpha: float
    nrmse: float
    pearson_per_flow: np.ndarray
    smoothness: float
    truth_smoothness: float
    beta: Optional[float] = None

    @property
    def pearson_median(self) -> float:
        vals = self.pearson_per_flow[~np.isnan(self.pearson_per_flow)]
        return float(np.median(vals)) if vals.size else float("nan")


def evaluate(matrix_id: str, method: str, alpha: float, A_true, A_est, beta: Optional[float] = None) -> EvalReport:
    return EvalReport(
        matrix_id=matrix_id,
        method=method,
        alpha=float(alpha),
        nrmse=nrmse(A_true, A_est),
        pearson_per_flow=pearson_per_flow(A_true, A_est),
        smoothness=tv_smoothness(A_est),
        truth_smoothness=tv_smoothness(A_true),
        beta=beta,
    )


def summarize(reports: Sequence[EvalReport]) -> list[dict]:
    """Aggregate per (method, beta, alpha).

    Percentiles interpolate linearly between order statistics. Correlations
    of constant flows are left out of the median and counted separately.
    """
    if not reports:
        raise EmptyInputError("nothing to summarize")
    groups: dict[tuple, list[EvalReport]] = defaultdict(list)
    for r in reports:
        groups[(r.method, r.beta, r.alpha)].append(r)
    out = []
    for key in sorted(groups, key=lambda k: (k[0], -1.0 if k[1] is None else k[1], k[2])):
        method, beta, alpha = key
        rs = sorted(groups[key], key=lambda r: r.matrix_id)
        errs = np.array([r.nrmse for r in rs])
        coefs = np.concatenate([r.pearson_per_flow for r in rs])
        defined = coefs[~np.isnan(coefs)]
        out.append({
            "method": method,
            "beta": beta,
            "alpha": alpha,
            "n_matrices": len(rs),
            "nrmse_median": float(np.median(errs)),
            "nrmse_p10": float(np.percentile(errs, 10)),
            "nrmse_p90": float(np.percentile(errs, 90)),
            "pearson_median": float(np.median(defined)) if defined.size else None,
            "pearson_undefined": int(coefs.size - defined.size),
            "normalized_mean_smoothness": normalized_mean_smoothness(
                [r.smoothness for r in rs], [r.truth_smoothness for r in rs]
            ),
        })
    return out
