"""Command line entry point.

Exit codes: 0 success, 2 invalid config, 3 numerical failure (including
non-convergence and partially failed experiments), 4 I/O or input-file failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from typing import Optional, Sequence

from .core import NotConvergedError, SvdFailureError, TrafficMatrixError
from .experiment import (
    METHODS,
    PRESETS,
    InvalidConfigError,
    PartialFailureError,
    build_config,
    cmd_decompose,
    cmd_experiment,
    cmd_metrics,
    cmd_simulate,
)

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 0, 2, 3, 4

log = logging.getLogger("tfcbaseline")


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", metavar="PATH", help="JSON file with ExperimentConfig fields")
    p.add_argument("--preset", choices=sorted(PRESETS))
    p.add_argument("--seed", type=int, dest="master_seed", metavar="N")
    p.add_argument("--out", dest="output_dir", metavar="DIR")
    p.add_argument("--method", choices=METHODS)
    p.add_argument("--beta", type=float, metavar="X")
    p.add_argument("--alpha", type=float, metavar="X")
    p.add_argument("--parallelism", type=int, metavar="N")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tfcbaseline", description="Traffic-matrix baseline extraction")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="write simulated ground-truth sets and a manifest")
    _common(p)

    p = sub.add_parser("decompose", help="decompose one matrix file")
    _common(p)
    p.add_argument("input", help="CSV matrix, one time interval per line")
    p.add_argument("--sigma", metavar="PATH", help="CSV row of per-flow noise scales")
    p.add_argument("--fc", type=float, help="critical frequency in cycles per interval")

    p = sub.add_parser("experiment", help="run the full evaluation and write summary files")
    _common(p)

    p = sub.add_parser("metrics", help="re-score existing decompositions")
    _common(p)
    p.add_argument("--data", required=True, metavar="DIR", help="dataset directory with manifest.json")
    p.add_argument("--results", required=True, metavar="DIR",
                   help="directory holding <set_id>/<label>/A.csv")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = build_config(
            args.config, args.preset, master_seed=args.master_seed, output_dir=args.output_dir,
            method=args.method if args.command != "decompose" else None,
            beta=args.beta, alpha=args.alpha, parallelism=args.parallelism,
        )
    except InvalidConfigError as exc:
        log.error("invalid config: %s", exc)
        return EXIT_CONFIG
    except OSError as exc:
        log.error("%s", exc)
        return EXIT_IO

    try:
        if args.command == "simulate":
            print(cmd_simulate(cfg))
        elif args.command == "decompose":
            dec = cmd_decompose(args.input, args.method or "spcp_tfc", cfg,
                                sigma_path=args.sigma, fc=args.fc)
            print(json.dumps({"iterations": dec.trace.iterations, "hf_residual": dec.trace.hf_residual}))
        elif args.command == "experiment":
            result = cmd_experiment(cfg)
            for g in result.summary["groups"]:
                print(f"{g['method']:9s} beta={g['beta']} alpha={g['alpha']:g} "
                      f"nrmse_median={g['nrmse_median']:.4f}")
        elif args.command == "metrics":
            cmd_metrics(args.data, args.results, cfg)
    except InvalidConfigError as exc:
        log.error("invalid config: %s", exc)
        return EXIT_CONFIG
    except NotConvergedError as exc:
        log.error("%s (partial outputs written, flagged converged=false)", exc)
        return EXIT_NUMERIC
    except PartialFailureError as exc:
        log.error("%s: %s", exc, ", ".join(exc.failed))
        return EXIT_NUMERIC
    except SvdFailureError as exc:
        log.error("numerical failure: %s", exc)
        return EXIT_NUMERIC
    except (OSError, TrafficMatrixError, ValueError) as exc:
        log.error("input/output failure: %s", exc)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
