"""End-to-end experiment runner: simulate, decompose, score, summarize.

Every job regenerates its input from derived seeds, so results do not depend
on how jobs are scheduled across workers.
"""

from __future__ import annotations

import csv
import io as _stdio
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Optional

import numpy as np
from threadpoolctl import threadpool_limits

from . import io
from .baselines import PcaConfig, pca_baseline
from .core import Decomposition, NotConvergedError, SolverConfig, SolverTrace, TfcBox
from .metrics import EvalReport, evaluate, summarize
from .simgen import SimSpec, dataset_layout, gen_set
from .solver import default_spcp_delta, solve_spcp, solve_spcp_tfc

logger = logging.getLogger(__name__)

METHODS = ("spcp_tfc", "spcp", "pca")


class InvalidConfigError(ValueError):
    pass


class PartialFailureError(RuntimeError):
    def __init__(self, message: str, failed: list[str]):
        super().__init__(message)
        self.failed = failed


@dataclass
class ExperimentConfig:
    sim: dict = field(default_factory=dict)
    solver: dict = field(default_factory=dict)
    pca: dict = field(default_factory=dict)
    methods: list = field(default_factory=lambda: ["spcp_tfc", "pca"])
    beta_sweep: Optional[list] = None
    alphas: list = field(default_factory=lambda: [0.1, 0.2])
    n_baselines: int = 100
    anomalies_per: int = 1
    noises_per: int = 1
    output_dir: str = "results"
    master_seed: int = 0
    parallelism: int = 1
    spcp_delta: Optional[float] = None
    use_true_sigma: bool = True
    save_dataset: bool = False
    save_decompositions: bool = False

    def validate(self) -> "ExperimentConfig":
        if not self.methods:
            raise InvalidConfigError("methods must be nonempty")
        unknown = set(self.methods) - set(METHODS)
        if unknown:
            raise InvalidConfigError(f"unknown methods: {sorted(unknown)}")
        if self.n_baselines < 1 or self.anomalies_per < 1 or self.noises_per < 1:
            raise InvalidConfigError("n_baselines, anomalies_per and noises_per must be >= 1")
        if not self.alphas or any(a < 0 for a in self.alphas):
            raise InvalidConfigError("alphas must be a nonempty list of nonnegative rates")
        if self.parallelism < 1:
            raise InvalidConfigError("parallelism must be >= 1")
        if self.beta_sweep is not None and (not self.beta_sweep or any(b < 0 for b in self.beta_sweep)):
            raise InvalidConfigError("beta_sweep must be a nonempty list of nonnegative values")
        try:
            spec = self.sim_spec()
            self.solver_config(spec)
            PcaConfig(**self.pca)
        except (TypeError, ValueError) as exc:
            raise InvalidConfigError(str(exc)) from exc
        return self

    def sim_spec(self) -> SimSpec:
        sim = dict(self.sim)
        if "harmonics" in sim:
            sim["harmonics"] = tuple(sim["harmonics"])
        sim["seed"] = self.master_seed
        return SimSpec(**sim)

    def solver_config(self, spec: SimSpec, beta: Optional[float] = None, sigma=None) -> SolverConfig:
        opts = dict(self.solver)
        opts.setdefault("fc", spec.critical_frequency)
        box = opts.pop("box", None)
        if box is not None and not isinstance(box, TfcBox):
            opts["box"] = TfcBox(**box)
        if beta is not None:
            opts["beta"] = beta
        if sigma is not None:
            opts["sigma"] = sigma
        return SolverConfig(**opts)

    def primary_beta(self) -> float:
        return float(self.solver.get("beta", SolverConfig.__dataclass_fields__["beta"].default))

    def betas(self) -> list[float]:
        return [float(b) for b in self.beta_sweep] if self.beta_sweep else [self.primary_beta()]

    def fingerprint(self) -> dict:
        """Config fields that influence results (scheduling and paths excluded)."""
        d = asdict(self)
        for key in ("output_dir", "parallelism", "save_dataset", "save_decompositions"):
            d.pop(key)
        return d


PRESETS = {
    "paper": {
        "n_baselines": 100,
        "alphas": [0.1, 0.2],
        "methods": ["spcp_tfc", "spcp", "pca"],
        "beta_sweep": [0.1, 1, 10, 25, 50],
        "solver": {"beta": 25.0, "rel_tol": 2e-5},
    },
    "desk": {
        "n_baselines": 10,
        "alphas": [0.1, 0.2],
        "methods": ["spcp_tfc", "pca"],
        "solver": {"beta": 25.0, "rel_tol": 2e-5},
    },
}


def build_config(path: Optional[str] = None, preset: Optional[str] = None, **overrides) -> ExperimentConfig:
    """Preset, then JSON file, then explicit overrides (``None`` values ignored)."""
    data: dict = {}
    if preset is not None:
        if preset not in PRESETS:
            raise InvalidConfigError(f"unknown preset {preset!r}")
        data.update(json.loads(json.dumps(PRESETS[preset])))
    if path is not None:
        try:
            loaded = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise InvalidConfigError(f"{path}: {exc}") from exc
        if not isinstance(loaded, dict):
            raise InvalidConfigError("config file must hold a JSON object")
        for key, val in loaded.items():
            if key in ("sim", "solver", "pca") and isinstance(val, dict):
                data.setdefault(key, {}).update(val)
            else:
                data[key] = val
    known = {f.name for f in fields(ExperimentConfig)}
    unknown = set(data) - known
    if unknown:
        raise InvalidConfigError(f"unknown config fields: {sorted(unknown)}")
    for key, val in overrides.items():
        if val is None:
            continue
        if key == "beta":
            data.setdefault("solver", {})["beta"] = float(val)
            data["beta_sweep"] = None
        elif key == "alpha":
            data["alphas"] = [float(val)]
        elif key == "method":
            data["methods"] = [val]
        else:
            data[key] = val
    try:
        cfg = ExperimentConfig(**data)
    except TypeError as exc:
        raise InvalidConfigError(str(exc)) from exc
    return cfg.validate()


# ---------------------------------------------------------------- simulate


def cmd_simulate(cfg: ExperimentConfig) -> Path:
    """Write every ground-truth set plus a manifest; returns the manifest path."""
    spec = cfg.sim_spec()
    out = Path(cfg.output_dir)
    entries = []
    for b, e, a, n in dataset_layout(cfg.n_baselines, cfg.anomalies_per, cfg.noises_per, cfg.alphas):
        entries.append(io.write_set(out, gen_set(replace(spec, alpha=a), b, e, n)))
    return io.write_manifest(out, spec, entries, {"layout": {
        "n_baselines": cfg.n_baselines, "anomalies_per": cfg.anomalies_per,
        "noises_per": cfg.noises_per, "alphas": list(cfg.alphas)}})


# ---------------------------------------------------------------- decompose


def run_method(X, method: str, solver_cfg: SolverConfig, pca_cfg: PcaConfig,
               spcp_delta: Optional[float] = None) -> Decomposition:
    """Run one method; PCA yields A = projection, E = X - A, N = 0.

    ``NotConvergedError`` propagates with the partial result attached.
    """
    X = np.asarray(X, dtype=float)
    if method == "spcp_tfc":
        return solve_spcp_tfc(X, solver_cfg)
    if method == "spcp":
        delta = spcp_delta if spcp_delta is not None else default_spcp_delta(*X.shape)
        return solve_spcp(X, solver_cfg, delta)
    if method == "pca":
        A = pca_baseline(X, pca_cfg)
        trace = SolverTrace(iterations=1, objective_history=[0.0], final_rel_change=0.0,
                            mu_final=0.0, hf_residual=0.0, recon_residual=0.0)
        return Decomposition(baseline=A, anomaly=X - A, noise=np.zeros_like(X), trace=trace)
    raise InvalidConfigError(f"unknown method {method!r}")


def write_decomposition(out_dir, dec: Decomposition, extra: Optional[dict] = None) -> None:
    out = Path(out_dir)
    io.write_matrix(out / "A.csv", dec.baseline)
    io.write_matrix(out / "E.csv", dec.anomaly)
    io.write_matrix(out / "N.csv", dec.noise)
    record = dec.trace.to_dict()
    if extra:
        record.update(extra)
    io.dump_json(out / "trace.json", record)


def cmd_decompose(input_path, method: str, cfg: ExperimentConfig, out_dir=None,
                  sigma_path=None, fc: Optional[float] = None) -> Decomposition:
    """Decompose a matrix file and write A/E/N plus a trace record.

    On non-convergence the partial outputs are written with
    ``converged: false`` and the error is re-raised.
    """
    X = io.read_matrix(input_path)
    sigma = io.read_matrix(sigma_path).ravel() if sigma_path else None
    spec = cfg.sim_spec()
    solver_cfg = cfg.solver_config(spec, sigma=sigma)
    if fc is not None:
        solver_cfg = replace(solver_cfg, fc=fc)
    out = Path(out_dir if out_dir is not None else cfg.output_dir)
    extra = {"method": method, "beta": solver_cfg.beta if method == "spcp_tfc" else None}
    try:
        dec = run_method(X, method, solver_cfg, PcaConfig(**cfg.pca), cfg.spcp_delta)
    except NotConvergedError as exc:
        write_decomposition(out, exc.result, extra)
        raise
    write_decomposition(out, dec, extra)
    return dec


# ---------------------------------------------------------------- experiment


def _finite_or_none(x: float):
    return float(x) if np.isfinite(x) else None


def _label(method: str, beta: Optional[float]) -> str:
    return method if beta is None else f"{method}-b{beta:g}"


def _job(args):
    cfg, b, e, a, n, method, beta = args
    spec = replace(cfg.sim_spec(), alpha=a)
    gt = gen_set(spec, b, e, n)
    sigma = gt.sigma if cfg.use_true_sigma else None
    with threadpool_limits(limits=1):
        solver_cfg = cfg.solver_config(spec, beta=beta, sigma=sigma)
        converged = True
        try:
            dec = run_method(gt.X, method, solver_cfg, PcaConfig(**cfg.pca), cfg.spcp_delta)
        except NotConvergedError as exc:
            dec, converged = exc.result, False
        report = evaluate(gt.set_id, method, a, gt.A, dec.baseline, beta)
    noise_violation = None
    if method == "spcp_tfc":
        scale = gt.sigma if sigma is not None else None
        if scale is not None:
            noise_violation = solver_cfg.box.violation(dec.noise / scale)
    if cfg.save_decompositions:
        write_decomposition(Path(cfg.output_dir) / "decompositions" / gt.set_id / _label(method, beta),
                            dec, {"method": method, "beta": beta})
    run = {
        "id": gt.set_id,
        "method": method,
        "beta": beta,
        "alpha": a,
        "nrmse": report.nrmse,
        "pearson_median": _finite_or_none(report.pearson_median),
        "smoothness": report.smoothness,
        "truth_smoothness": report.truth_smoothness,
        "iterations": dec.trace.iterations,
        "converged": converged,
        "hf_residual": dec.trace.hf_residual,
        "recon_residual": dec.trace.recon_residual,
        "noise_violation": noise_violation,
    }
    return report, run


@dataclass
class ExperimentResult:
    reports: list[EvalReport]
    runs: list[dict]
    summary: dict
    failed: list[str]


def _jobs(cfg: ExperimentConfig):
    jobs = []
    for b, e, a, n in dataset_layout(cfg.n_baselines, cfg.anomalies_per, cfg.noises_per, cfg.alphas):
        for method in cfg.methods:
            betas = cfg.betas() if method == "spcp_tfc" else [None]
            for beta in betas:
                jobs.append((cfg, b, e, a, n, method, beta))
    return jobs


def _csv_text(header, rows) -> str:
    buf = _stdio.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(v) if isinstance(v, float) else ("" if v is None else v) for v in row])
    return buf.getvalue()


def _report_key(r: EvalReport):
    return (r.matrix_id, r.method, -1.0 if r.beta is None else r.beta)


def write_outputs(cfg: ExperimentConfig, reports: list[EvalReport], runs: list[dict], failed: list[str]) -> dict:
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    groups = summarize(reports) if reports else []
    summary = {
        "config": cfg.fingerprint(),
        "groups": groups,
        "failed": sorted(failed),
        "not_converged": sorted(f"{r['id']}/{_label(r['method'], r['beta'])}" for r in runs if not r["converged"]),
        "runs": runs,
    }
    (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")

    fig1 = [(g["method"], g["beta"], g["alpha"], g["nrmse_median"], g["nrmse_p10"], g["nrmse_p90"]) for g in groups]
    (out / "fig1_nrmse.csv").write_text(_csv_text(["method", "beta", "alpha", "median", "p10", "p90"], fig1))

    primary = cfg.primary_beta()
    shown = [r for r in reports if r.method != "spcp_tfc" or r.beta == primary]
    fig2 = [(r.method, r.alpha, float(c)) for r in shown for c in r.pearson_per_flow if not np.isnan(c)]
    (out / "fig2_corr.csv").write_text(_csv_text(["method", "alpha", "coefficient"], fig2))

    fig3 = [(r.matrix_id, r.method, r.smoothness) for r in shown]
    truth = {r.matrix_id: r.truth_smoothness for r in reports}
    fig3 += [(mid, "ground_truth", val) for mid, val in truth.items()]
    fig3.sort(key=lambda row: (row[0], row[1]))
    (out / "fig3_smoothness.csv").write_text(_csv_text(["matrix_id", "method", "smoothness"], fig3))
    return summary


def cmd_experiment(cfg: ExperimentConfig) -> ExperimentResult:
    """Run every (set, method, beta) job and write summary.json plus figure CSVs.

    Raises ``PartialFailureError`` after writing outputs if any job failed.
    Runs that hit the iteration cap are scored and listed as not converged.
    """
    cfg.validate()
    if cfg.save_dataset:
        cmd_simulate(replace(cfg, output_dir=str(Path(cfg.output_dir) / "dataset")))
    jobs = _jobs(cfg)
    results, failed = [], []
    if cfg.parallelism == 1:
        for job in jobs:
            try:
                results.append(_job(job))
            except Exception as exc:  # noqa: BLE001 - reported as partial failure
                logger.error("job %s failed: %s", job[1:], exc)
                failed.append(f"b{job[1]:03d}-e{job[2]}-a{job[3]:g}-n{job[4]}/{_label(job[5], job[6])}")
    else:
        with ProcessPoolExecutor(max_workers=cfg.parallelism) as pool:
            futures = [pool.submit(_job, job) for job in jobs]
            for job, fut in zip(jobs, futures):
                try:
                    results.append(fut.result())
                except Exception as exc:  # noqa: BLE001
                    logger.error("job %s failed: %s", job[1:], exc)
                    failed.append(f"b{job[1]:03d}-e{job[2]}-a{job[3]:g}-n{job[4]}/{_label(job[5], job[6])}")
    results.sort(key=lambda rr: _report_key(rr[0]))
    reports = [r for r, _ in results]
    runs = [run for _, run in results]
    summary = write_outputs(cfg, reports, runs, failed)
    result = ExperimentResult(reports=reports, runs=runs, summary=summary, failed=sorted(failed))
    if failed:
        raise PartialFailureError(f"{len(failed)} job(s) failed", sorted(failed))
    return result


# ---------------------------------------------------------------- metrics


def cmd_metrics(data_dir, results_dir, cfg: ExperimentConfig) -> dict:
    """Re-score decompositions found under ``results_dir/<set_id>/<label>/A.csv``
    against the dataset in ``data_dir`` and rewrite the summary files into
    ``cfg.output_dir``."""
    manifest = io.load_manifest(data_dir)
    spec = io.spec_from_dict(manifest["spec"])
    reports, runs = [], []
    for entry in manifest["sets"]:
        set_dir = Path(results_dir) / entry["id"]
        if not set_dir.is_dir():
            continue
        gt = io.read_set(data_dir, entry, spec)
        for sub in sorted(p for p in set_dir.iterdir() if (p / "A.csv").exists()):
            trace = json.loads((sub / "trace.json").read_text()) if (sub / "trace.json").exists() else {}
            method = trace.get("method", sub.name.split("-b")[0])
            beta = trace.get("beta")
            A_est = io.read_matrix(sub / "A.csv")
            rep = evaluate(gt.set_id, method, gt.spec.alpha, gt.A, A_est, beta)
            reports.append(rep)
            runs.append({
                "id": gt.set_id, "method": method, "beta": beta, "alpha": gt.spec.alpha,
                "nrmse": rep.nrmse, "pearson_median": _finite_or_none(rep.pearson_median),
                "smoothness": rep.smoothness, "truth_smoothness": rep.truth_smoothness,
                "iterations": trace.get("iterations"), "converged": trace.get("converged", True),
                "hf_residual": trace.get("hf_residual"), "recon_residual": trace.get("recon_residual"),
                "noise_violation": None,
            })
    if not reports:
        raise FileNotFoundError(f"no decompositions found under {results_dir}")
    order = sorted(range(len(reports)), key=lambda i: _report_key(reports[i]))
    reports = [reports[i] for i in order]
    runs = [runs[i] for i in order]
    return write_outputs(cfg, reports, runs, [])
