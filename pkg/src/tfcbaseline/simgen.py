"""Seeded synthetic traffic matrices with known baseline, anomaly and noise parts.

Every random draw comes from a stream derived from ``(seed, baseline index,
component tag, alpha)``, so any single set can be regenerated without
producing the others first.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, replace
from typing import Sequence

import numpy as np

_COMPONENT_TAGS = {"means": 1, "baseline": 2, "anomaly": 3, "noise": 4}


@dataclass(frozen=True)
class SimSpec:
    n_nodes: int = 10
    T: int = 2016
    interval_seconds: float = 300.0
    total_mean: float = 1e6
    harmonics: tuple[int, ...] = (7, 14, 28, 56, 112)
    amp_ratio: float = 0.5
    first_amp_ratio: float = 0.5
    phase_range: float = np.pi / 5
    anomaly_density: float = 0.01
    anomaly_magnitude_ratio: float = 0.8
    anomaly_sign: int = 1
    alpha: float = 0.1
    seed: int = 0
    node_weights: str = "uniform"

    def __post_init__(self):
        object.__setattr__(self, "harmonics", tuple(int(h) for h in self.harmonics))
        if self.n_nodes < 1 or self.T < 2:
            raise ValueError("need n_nodes >= 1 and T >= 2")
        if any(not 0 < 2 * h < self.T for h in self.harmonics):
            raise ValueError("every harmonic index must satisfy 0 < l < T/2")
        if not 0.0 <= self.anomaly_density <= 1.0:
            raise ValueError("anomaly_density must lie in [0, 1]")
        if self.alpha < 0:
            raise ValueError("alpha must be nonnegative")
        if self.anomaly_sign not in (1, -1):
            raise ValueError("anomaly_sign must be +1 or -1")
        if self.node_weights not in ("uniform", "exponential"):
            raise ValueError(f"unknown node weight law {self.node_weights!r}")

    @property
    def P(self) -> int:
        return self.n_nodes**2

    @property
    def M(self) -> int:
        return len(self.harmonics)

    @property
    def critical_frequency(self) -> float:
        return max(self.harmonics, default=0) / self.T

    def to_dict(self) -> dict:
        d = asdict(self)
        d["harmonics"] = list(self.harmonics)
        return d


@dataclass
class GroundTruthSet:
    A: np.ndarray
    E: np.ndarray
    N: np.ndarray
    X: np.ndarray
    sigma: np.ndarray
    spec: SimSpec
    baseline_index: int = 0
    anomaly_index: int = 0
    noise_index: int = 0

    @property
    def set_id(self) -> str:
        return (
            f"b{self.baseline_index:03d}-e{self.anomaly_index}"
            f"-a{self.spec.alpha:g}-n{self.noise_index}"
        )


def component_rng(seed: int, baseline_index: int, component: str, alpha: float = 0.0, sub: int = 0):
    """Independent generator for one component of one simulated matrix."""
    key = [int(seed) & 0xFFFFFFFFFFFFFFFF, baseline_index, _COMPONENT_TAGS[component],
           int(round(alpha * 1_000_000)), sub]
    return np.random.default_rng(np.random.SeedSequence(key))


def gravity_means(n_nodes: int, total: float, rng: np.random.Generator, law: str = "uniform") -> np.ndarray:
    """Mean volume of every OD flow under a gravity model.

    Flow ``s * n_nodes + d`` gets ``total * w_s * w_d / (sum w)^2`` for
    random node weights ``w``.
    """
    if n_nodes < 1 or not total > 0:
        raise ValueError("need n_nodes >= 1 and total > 0")
    if law == "uniform":
        w = 1.0 - rng.random(n_nodes)  # (0, 1], keeps every mean positive
    else:
        w = rng.exponential(1.0, n_nodes)
        w[w <= 0] = np.finfo(float).tiny
    means = np.outer(w, w).ravel()
    return means * (total / means.sum())


def harmonic_amplitudes(spec: SimSpec, means: np.ndarray) -> np.ndarray:
    """M x P array; row m holds a_{., m+1} = first_amp_ratio * amp_ratio**m * a_{., 0}."""
    m = np.arange(spec.M)
    return spec.first_amp_ratio * (spec.amp_ratio ** m)[:, None] * means[None, :]


def gen_baseline(spec: SimSpec, means: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Constant level plus a few phase-shifted low-frequency sinusoids per flow."""
    P = means.size
    t = np.arange(1, spec.T + 1)[:, None]
    A = np.repeat(means[None, :], spec.T, axis=0).astype(float)
    if spec.M == 0:
        return A
    phases = rng.uniform(-spec.phase_range, spec.phase_range, size=(spec.M, P))
    amps = harmonic_amplitudes(spec, means)
    for m, l in enumerate(spec.harmonics):
        A += amps[m] * np.sin(2 * np.pi * l * t / spec.T + phases[m])
    return A


def gen_anomalies(spec: SimSpec, means: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    T, P = spec.T, means.size
    count = int(np.floor(spec.anomaly_density * T * P))
    E = np.zeros((T, P))
    if count == 0:
        return E
    flat = rng.choice(T * P, size=count, replace=False)
    rows, cols = np.unravel_index(flat, (T, P))
    E[rows, cols] = spec.anomaly_sign * spec.anomaly_magnitude_ratio * means[cols]
    return E


def gen_noise(spec: SimSpec, means: np.ndarray, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    sigma = spec.alpha * means
    N = rng.standard_normal((spec.T, means.size)) * sigma[None, :]
    return N, sigma


def gen_set(spec: SimSpec, baseline_index: int = 0, anomaly_index: int = 0, noise_index: int = 0) -> GroundTruthSet:
    """Build one ground-truth set; ``spec.alpha`` picks the noise level.

    Means and baseline depend only on the baseline index, anomalies on
    (baseline, anomaly index), noise on (baseline, alpha, noise index).
    """
    seed = spec.seed
    means = gravity_means(spec.n_nodes, spec.total_mean,
                          component_rng(seed, baseline_index, "means"), spec.node_weights)
    A = gen_baseline(spec, means, component_rng(seed, baseline_index, "baseline"))
    E = gen_anomalies(spec, means, component_rng(seed, baseline_index, "anomaly", sub=anomaly_index))
    N, sigma = gen_noise(spec, means, component_rng(seed, baseline_index, "noise", spec.alpha, sub=noise_index))
    return GroundTruthSet(A=A, E=E, N=N, X=A + E + N, sigma=sigma, spec=spec,
                          baseline_index=baseline_index, anomaly_index=anomaly_index,
                          noise_index=noise_index)


def dataset_layout(n_baselines: int, anomalies_per: int = 1, noises_per: int = 1,
                   alphas: Sequence[float] = (0.1, 0.2)) -> list[tuple[int, int, float, int]]:
    """(baseline, anomaly, alpha, noise) index tuples in canonical order."""
    if min(n_baselines, anomalies_per, noises_per) < 1 or not alphas:
        raise ValueError("all counts must be >= 1 and alphas nonempty")
    return [
        (b, e, float(a), n)
        for b in range(n_baselines)
        for e in range(anomalies_per)
        for a in alphas
        for n in range(noises_per)
    ]


def gen_dataset(spec: SimSpec, n_baselines: int = 100, anomalies_per: int = 1, noises_per: int = 1,
                alphas: Sequence[float] = (0.1, 0.2)) -> list[GroundTruthSet]:
    return [
        gen_set(replace(spec, alpha=a), b, e, n)
        for b, e, a, n in dataset_layout(n_baselines, anomalies_per, noises_per, alphas)
    ]
