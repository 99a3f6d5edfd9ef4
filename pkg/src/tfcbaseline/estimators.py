"""scikit-learn compatible wrappers.

The decomposition is transductive: ``fit(X)`` splits the given matrix and
keeps the parts, ``transform(X)`` returns the baseline for ``X`` (reusing the
fitted split when ``X`` is the training matrix, solving again otherwise).
``PCABaseline`` is inductive and projects new data on the learned subspace.
"""

from __future__ import annotations

import warnings

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import ConvergenceWarning
from sklearn.utils.validation import check_array, check_is_fitted

from .baselines import PcaConfig, fit_subspace
from .core import NotConvergedError, SolverConfig, TfcBox, validate
from .solver import default_spcp_delta, solve_spcp, solve_spcp_tfc


def _check_traffic(X) -> np.ndarray:
    X = check_array(X, dtype=np.float64, ensure_min_samples=2, copy=False)
    validate(X)
    return X


class _DecompositionMixin(TransformerMixin, BaseEstimator):
    def _solve(self, X):
        raise NotImplementedError

    def _run(self, X):
        try:
            return self._solve(X)
        except NotConvergedError as exc:
            warnings.warn(str(exc), ConvergenceWarning)
            return exc.result

    def fit(self, X, y=None):
        X = _check_traffic(X)
        dec = self._run(X)
        self._fit_X = X.copy()
        self.baseline_ = dec.baseline
        self.anomaly_ = dec.anomaly
        self.noise_ = dec.noise
        self.trace_ = dec.trace
        self.n_iter_ = dec.trace.iterations
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "baseline_")
        X = _check_traffic(X)
        if X.shape == self._fit_X.shape and np.array_equal(X, self._fit_X):
            return self.baseline_.copy()
        return self._run(X).baseline

    def fit_transform(self, X, y=None, **fit_params):
        return self.fit(X).baseline_.copy()


class SPCPTFC(_DecompositionMixin):
    """Low-rank, band-limited baseline extraction with time-frequency noise constraints.

    Parameters
    ----------
    fc : float
        Critical frequency in cycles per interval; spectra above it are
        penalized in the baseline.
    beta : float
        Weight of the high-frequency penalty on the baseline.
    lam : float or None
        Sparsity weight; ``None`` means ``1 / sqrt(max(T, P))``.
    sigma : array-like or None
        Per-flow noise scales. Estimated robustly when omitted.
    delta1, delta2, delta3 : float
        Noise box bounds (non-DC spectrum, DC coefficient, time domain).

    Attributes
    ----------
    baseline_, anomaly_, noise_ : ndarray of shape (T, P)
    trace_ : SolverTrace
    """

    def __init__(self, fc=0.0, beta=25.0, lam=None, sigma=None, delta1=3.03, delta2=2.56,
                 delta3=2.56, mu0_factor=0.99, mu_floor_factor=1e-5, eta=0.9, max_iter=1000,
                 tol=1e-6, dykstra_iter=200, dykstra_tol=1e-9, restart=True, final_hf_cleanup=False):
        self.fc = fc
        self.beta = beta
        self.lam = lam
        self.sigma = sigma
        self.delta1 = delta1
        self.delta2 = delta2
        self.delta3 = delta3
        self.mu0_factor = mu0_factor
        self.mu_floor_factor = mu_floor_factor
        self.eta = eta
        self.max_iter = max_iter
        self.tol = tol
        self.dykstra_iter = dykstra_iter
        self.dykstra_tol = dykstra_tol
        self.restart = restart
        self.final_hf_cleanup = final_hf_cleanup

    def solver_config(self) -> SolverConfig:
        return SolverConfig(
            fc=self.fc, beta=self.beta, lambda_override=self.lam, mu0_factor=self.mu0_factor,
            mu_floor_factor=self.mu_floor_factor, eta=self.eta, max_iters=self.max_iter,
            rel_tol=self.tol, dykstra_iters=self.dykstra_iter, dykstra_tol=self.dykstra_tol,
            sigma=self.sigma, box=TfcBox(self.delta1, self.delta2, self.delta3),
            final_hf_cleanup=self.final_hf_cleanup, restart=self.restart,
        )

    def _solve(self, X):
        return solve_spcp_tfc(X, self.solver_config())


class StablePCP(_DecompositionMixin):
    """Low-rank + sparse + Frobenius-bounded noise split (no spectral terms).

    ``delta`` bounds ``||N||_F^2`` after per-flow normalization; ``None``
    uses ``n + sqrt(8 n)`` with ``n = T * P``.
    """

    def __init__(self, delta=None, lam=None, sigma=None, mu0_factor=0.99, mu_floor_factor=1e-5,
                 eta=0.9, max_iter=1000, tol=1e-6, restart=True):
        self.delta = delta
        self.lam = lam
        self.sigma = sigma
        self.mu0_factor = mu0_factor
        self.mu_floor_factor = mu_floor_factor
        self.eta = eta
        self.max_iter = max_iter
        self.tol = tol
        self.restart = restart

    def _solve(self, X):
        cfg = SolverConfig(
            fc=0.5, beta=0.0, lambda_override=self.lam, mu0_factor=self.mu0_factor,
            mu_floor_factor=self.mu_floor_factor, eta=self.eta, max_iters=self.max_iter,
            rel_tol=self.tol, sigma=self.sigma, restart=self.restart,
        )
        delta = self.delta if self.delta is not None else default_spcp_delta(*X.shape)
        return solve_spcp(X, cfg, delta)


class PCABaseline(TransformerMixin, BaseEstimator):
    """Projection on the leading principal subspace.

    The rank is ``rank`` when given, else the smallest one reaching
    ``variance_fraction`` of the (optionally centered) energy.
    """

    def __init__(self, rank=None, variance_fraction=0.998, center=False):
        self.rank = rank
        self.variance_fraction = variance_fraction
        self.center = center

    def fit(self, X, y=None):
        X = _check_traffic(X)
        cfg = PcaConfig(rank=self.rank, variance_fraction=self.variance_fraction, center=self.center)
        self.mean_, V = fit_subspace(X, cfg)
        self.components_ = V.T
        self.n_components_ = V.shape[1]
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "components_")
        X = _check_traffic(X)
        V = self.components_.T
        return (X - self.mean_) @ V @ V.T + self.mean_
