"""Domain types, error classes and input validation shared by every module."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np


class TrafficMatrixError(ValueError):
    """Base class for malformed traffic matrices."""


class NonFiniteError(TrafficMatrixError):
    pass


class TooShortError(TrafficMatrixError):
    pass


class EmptyError(TrafficMatrixError):
    pass


class ShapeMismatchError(ValueError):
    pass


class SvdFailureError(RuntimeError):
    pass


class NotConvergedError(RuntimeError):
    """Raised when a solver hits its iteration cap.

    The partially converged :class:`Decomposition` is kept in ``result`` so
    callers can still inspect or persist it.
    """

    def __init__(self, message: str, result: "Decomposition"):
        super().__init__(message)
        self.result = result


@dataclass(frozen=True)
class TrafficMatrix:
    """T x P traffic volumes; rows are time intervals, columns are flows."""

    data: np.ndarray
    interval_seconds: float = 300.0

    def __post_init__(self):
        arr = np.array(self.data, dtype=float, copy=True)
        if arr.ndim == 1:
            arr = arr[:, None]
        if arr.ndim != 2:
            raise ShapeMismatchError(f"traffic matrix must be 2-D, got ndim={arr.ndim}")
        if not self.interval_seconds > 0:
            raise ValueError("interval_seconds must be positive")
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @property
    def T(self) -> int:
        return self.data.shape[0]

    @property
    def P(self) -> int:
        return self.data.shape[1]


def as_traffic_matrix(X) -> TrafficMatrix:
    if isinstance(X, TrafficMatrix):
        return X
    return TrafficMatrix(np.asarray(X, dtype=float))


def validate(X) -> tuple[int, ...]:
    """Check the shape and finiteness invariants of a traffic matrix.

    Returns the indices of all-zero columns (legal, but worth flagging).

    Raises
    ------
    EmptyError
        No flows (P == 0).
    TooShortError
        Fewer than two time intervals.
    NonFiniteError
        NaN or infinite entries.
    """
    data = X.data if isinstance(X, TrafficMatrix) else np.asarray(X, dtype=float)
    if data.ndim != 2:
        raise ShapeMismatchError(f"expected a 2-D matrix, got ndim={data.ndim}")
    T, P = data.shape
    if P == 0:
        raise EmptyError("traffic matrix has no flows")
    if T < 2:
        raise TooShortError(f"need at least 2 time intervals, got {T}")
    if not np.all(np.isfinite(data)):
        raise NonFiniteError("traffic matrix contains NaN or infinite entries")
    return tuple(int(j) for j in np.flatnonzero(~data.any(axis=0)))


@dataclass(frozen=True)
class TfcBox:
    """Per-flow noise box: non-DC spectrum, DC coefficient and time-domain bounds.

    Defaults are the 99% quantiles of the chi(2), chi(1) and |N(0,1)| laws.
    """

    delta1: float = 3.03
    delta2: float = 2.56
    delta3: float = 2.56

    def __post_init__(self):
        for name in ("delta1", "delta2", "delta3"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be strictly positive")

    @property
    def coef_bound(self) -> float:
        """Modulus bound on each non-DC unitary DFT coefficient."""
        return self.delta1 / np.sqrt(2.0)

    def violation(self, N: np.ndarray) -> float:
        """Largest amount by which ``N`` breaks any of the three constraints."""
        N = np.asarray(N, dtype=float)
        if N.ndim == 1:
            N = N[:, None]
        F = np.fft.rfft(N, axis=0, norm="ortho")
        v_freq = np.max(np.abs(F[1:]), initial=0.0) - self.coef_bound
        v_dc = np.max(np.abs(F[0].real)) - self.delta2
        v_time = np.max(np.abs(N)) - self.delta3
        return float(max(v_freq, v_dc, v_time, 0.0))

    def contains(self, N: np.ndarray, tol: float = 1e-9) -> bool:
        return self.violation(N) <= tol


@dataclass(frozen=True)
class SolverConfig:
    """Parameters of the accelerated proximal gradient solver.

    ``fc`` (critical frequency, cycles per interval) has no default on
    purpose: it is a property of the data.
    """

    fc: float
    beta: float = 25.0
    lambda_override: Optional[float] = None
    mu0_factor: float = 0.99
    mu_floor_factor: float = 1e-5
    eta: float = 0.9
    max_iters: int = 1000
    rel_tol: float = 1e-6
    dykstra_iters: int = 200
    dykstra_tol: float = 1e-9
    sigma: Optional[Sequence[float]] = None
    box: TfcBox = field(default_factory=TfcBox)
    final_hf_cleanup: bool = False
    restart: bool = True

    def __post_init__(self):
        if not 0.0 <= self.fc <= 0.5:
            raise ValueError(f"fc must lie in [0, 1/2], got {self.fc}")
        if not 0.0 < self.eta < 1.0:
            raise ValueError(f"eta must lie in (0, 1), got {self.eta}")
        if self.beta < 0:
            raise ValueError("beta must be nonnegative")
        if self.lambda_override is not None and not self.lambda_override > 0:
            raise ValueError("lambda_override must be positive")
        if self.max_iters < 1 or self.dykstra_iters < 1:
            raise ValueError("iteration caps must be positive")
        if not (self.rel_tol > 0 and self.dykstra_tol > 0):
            raise ValueError("tolerances must be positive")
        if self.sigma is not None:
            sig = np.asarray(self.sigma, dtype=float)
            if sig.ndim != 1 or np.any(~np.isfinite(sig)) or np.any(sig < 0):
                raise ValueError("sigma must be a 1-D vector of finite nonnegative scales")
            object.__setattr__(self, "sigma", tuple(float(s) for s in sig))


@dataclass
class SolverTrace:
    iterations: int
    objective_history: list[float]
    final_rel_change: float
    mu_final: float
    hf_residual: float
    recon_residual: float
    converged: bool = True
    degenerate_columns: tuple[int, ...] = ()
    dykstra_max_residual: float = 0.0

    def to_dict(self) -> dict:
        return {
            "iterations": self.iterations,
            "objective_history": [float(v) for v in self.objective_history],
            "final_rel_change": float(self.final_rel_change),
            "mu_final": float(self.mu_final),
            "hf_residual": float(self.hf_residual),
            "recon_residual": float(self.recon_residual),
            "converged": bool(self.converged),
            "degenerate_columns": list(self.degenerate_columns),
            "dykstra_max_residual": float(self.dykstra_max_residual),
        }


@dataclass
class Decomposition:
    """Baseline / anomaly / noise split of a traffic matrix."""

    baseline: np.ndarray
    anomaly: np.ndarray
    noise: np.ndarray
    trace: SolverTrace

    def __post_init__(self):
        shape = self.baseline.shape
        if self.anomaly.shape != shape or self.noise.shape != shape:
            raise ShapeMismatchError("baseline, anomaly and noise must share one shape")


def estimate_sigma(data: np.ndarray) -> tuple[np.ndarray, tuple[int, ...]]:
    """Robust per-flow white-noise scale from first differences.

    Differencing kills smooth trends; the median ignores sparse spikes. Flows
    whose estimate is zero get scale 1 and are reported back.
    """
    diffs = np.abs(np.diff(data, axis=0))
    sigma = 1.4826 * np.median(diffs, axis=0) / np.sqrt(2.0)
    degenerate = np.flatnonzero(~(sigma > 0))
    sigma[degenerate] = 1.0
    return sigma, tuple(int(j) for j in degenerate)
