"""Baseline extraction for network traffic matrices.

Splits a traffic matrix into a low-rank, band-limited baseline, sparse
anomalies and bounded noise, with simulation and scoring utilities for
comparing against PCA and stable PCP.
"""

from .baselines import PcaConfig, pca_baseline
from .core import (
    Decomposition,
    EmptyError,
    NonFiniteError,
    NotConvergedError,
    ShapeMismatchError,
    SolverConfig,
    SolverTrace,
    SvdFailureError,
    TfcBox,
    TooShortError,
    TrafficMatrix,
    TrafficMatrixError,
)
from .estimators import PCABaseline, SPCPTFC, StablePCP
from .experiment import ExperimentConfig, build_config, cmd_decompose, cmd_experiment, cmd_metrics, cmd_simulate
from .metrics import EvalReport, evaluate, nrmse, pearson_per_flow, summarize, tv_smoothness
from .prox import project_tfc_box, soft_threshold, svt
from .simgen import GroundTruthSet, SimSpec, gen_dataset, gen_set
from .solver import solve_spcp, solve_spcp_tfc
from .spectral import highfreq_mask, highpass_project, lowpass_project, periodogram

__version__ = "0.1.0"

__all__ = [
    "Decomposition", "EmptyError", "EvalReport", "ExperimentConfig", "GroundTruthSet",
    "NonFiniteError", "NotConvergedError", "PCABaseline", "PcaConfig", "SPCPTFC",
    "ShapeMismatchError", "SimSpec", "SolverConfig", "SolverTrace", "StablePCP",
    "SvdFailureError", "TfcBox", "TooShortError", "TrafficMatrix", "TrafficMatrixError",
    "build_config", "cmd_decompose", "cmd_experiment", "cmd_metrics", "cmd_simulate",
    "evaluate", "gen_dataset", "gen_set", "highfreq_mask", "highpass_project",
    "lowpass_project", "nrmse", "pca_baseline", "pearson_per_flow", "periodogram",
    "project_tfc_box", "soft_threshold", "solve_spcp", "solve_spcp_tfc", "summarize",
    "svt", "tv_smoothness",
]
