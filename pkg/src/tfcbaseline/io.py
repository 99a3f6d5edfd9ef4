"""Matrix files, content digests and dataset manifests.

Matrices are plain CSV without header, one time interval per line, each value
written as the shortest decimal that round-trips to the same double.
"""

from __future__ import annotations

import json
from dataclasses import replace
from pathlib import Path
from typing import Iterable

import numpy as np
from numba import njit

from .simgen import GroundTruthSet, SimSpec, gen_set

FNV64_OFFSET = 0xCBF29CE484222325
FNV64_PRIME = 0x100000001B3


@njit(cache=True)
def _fnv1a64(buf, h):
    prime = np.uint64(FNV64_PRIME)
    for b in buf:
        h = (h ^ np.uint64(b)) * prime
    return h


def fnv1a64(data: bytes) -> int:
    """64-bit FNV-1a hash of a byte string."""
    arr = np.frombuffer(data, dtype=np.uint8)
    return int(_fnv1a64(arr, np.uint64(FNV64_OFFSET)))


def file_digest(path) -> str:
    return f"{fnv1a64(Path(path).read_bytes()):016x}"


def format_matrix(M: np.ndarray) -> str:
    M = np.asarray(M, dtype=float)
    if M.ndim == 1:
        M = M[:, None]
    return "".join(",".join(repr(float(v)) for v in row) + "\n" for row in M.tolist())


def write_matrix(path, M: np.ndarray) -> str:
    """Write ``M`` as CSV and return its digest."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = format_matrix(M).encode("ascii")
    path.write_bytes(payload)
    return f"{fnv1a64(payload):016x}"


def read_matrix(path) -> np.ndarray:
    return np.loadtxt(path, delimiter=",", ndmin=2, dtype=float)


def dump_json(path, obj) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


COMPONENTS = ("X", "A", "E", "N")


def write_set(out_dir, gt: GroundTruthSet) -> dict:
    """Write X, A, E, N of one set under ``out_dir/<set_id>/`` and return its manifest entry."""
    set_dir = Path(out_dir) / gt.set_id
    digests = {}
    for name, M in zip(COMPONENTS, (gt.X, gt.A, gt.E, gt.N)):
        digests[name] = write_matrix(set_dir / f"{name}.csv", M)
    digests["sigma"] = write_matrix(set_dir / "sigma.csv", gt.sigma[None, :])
    return {
        "id": gt.set_id,
        "baseline_index": gt.baseline_index,
        "anomaly_index": gt.anomaly_index,
        "noise_index": gt.noise_index,
        "alpha": gt.spec.alpha,
        "dir": gt.set_id,
        "digests": digests,
    }


def write_manifest(out_dir, spec: SimSpec, entries: Iterable[dict], extra: dict | None = None) -> Path:
    manifest = {"spec": spec.to_dict(), "seed": spec.seed, "sets": list(entries)}
    if extra:
        manifest.update(extra)
    path = Path(out_dir) / "manifest.json"
    dump_json(path, manifest)
    return path


def load_manifest(out_dir) -> dict:
    return json.loads((Path(out_dir) / "manifest.json").read_text())


def spec_from_dict(d: dict) -> SimSpec:
    d = dict(d)
    d["harmonics"] = tuple(d.get("harmonics", ()))
    return SimSpec(**d)


def read_set(out_dir, entry: dict, spec: SimSpec, verify: bool = True) -> GroundTruthSet:
    """Load one set from disk, optionally checking the recorded digests."""
    set_dir = Path(out_dir) / entry["dir"]
    mats = {}
    for name in COMPONENTS + ("sigma",):
        path = set_dir / f"{name}.csv"
        if verify and file_digest(path) != entry["digests"][name]:
            raise OSError(f"digest mismatch for {path}")
        mats[name] = read_matrix(path)
    return GroundTruthSet(
        A=mats["A"], E=mats["E"], N=mats["N"], X=mats["X"], sigma=mats["sigma"].ravel(),
        spec=replace(spec, alpha=entry["alpha"]), baseline_index=entry["baseline_index"],
        anomaly_index=entry["anomaly_index"], noise_index=entry["noise_index"],
    )


def regenerate(spec: SimSpec, entry: dict) -> GroundTruthSet:
    return gen_set(replace(spec, alpha=entry["alpha"]), entry["baseline_index"],
                   entry["anomaly_index"], entry["noise_index"])
