"""Command line entry point.

Examples::

    pogorelov-ma convergence --problem two_dirac --sizes 33,65,129 --mode aleksandrov
    pogorelov-ma compare --problem five_dirac --size 65
    pogorelov-ma solve --config run.json
    pogorelov-ma oracle --config run.json

Exit status is 0 when every grid size solved, 2 when some failed, and 1 on a
configuration error.  ``POGORELOV_THREADS`` sets the number of worker
processes used for independent grid sizes.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace

import numpy as np

from .errors import ConfigError, NonConvergenceError
from .harness import ExperimentConfig, run_experiment
from .oracle import pogorelov_solve

EXIT_OK, EXIT_CONFIG, EXIT_PARTIAL = 0, 1, 2


def _sizes(text: str):
    try:
        return [int(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"grid sizes must be comma-separated integers, got {text!r}")


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pogorelov-ma",
                                description="Monge-Ampere solver for transport of Diracs onto the unit disk.")
    p.add_argument("-v", "--verbose", action="store_true", help="log Newton iterations")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", help="run the experiment described by a JSON config")
    s.add_argument("--config", required=True)

    o = sub.add_parser("oracle", help="exact heights for the Diracs of a JSON config")
    o.add_argument("--config", required=True)
    o.add_argument("--tolerance", type=float, default=1e-10)

    c = sub.add_parser("convergence", help="error table over several grid sizes")
    c.add_argument("--problem", required=True)
    c.add_argument("--sizes", type=_sizes, default=[33, 65, 129, 257])
    c.add_argument("--mode", default="aleksandrov",
                   choices=["aleksandrov", "viscosity", "viscosity_baseline"])
    c.add_argument("--count", type=int, default=100)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--output-dir")

    m = sub.add_parser("compare", help="both modes at one grid size")
    m.add_argument("--problem", required=True)
    m.add_argument("--size", type=int, required=True)
    m.add_argument("--count", type=int, default=100)
    m.add_argument("--seed", type=int, default=0)
    return p


def _run(cfg: ExperimentConfig) -> int:
    table = run_experiment(cfg)
    print(f"{cfg.problem} [{cfg.mode}]")
    print(table.format())
    return EXIT_PARTIAL if table.failures else EXIT_OK


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "solve":
            return _run(ExperimentConfig.from_json(args.config))

        if args.command == "oracle":
            cfg = ExperimentConfig.from_json(args.config)
            diracs = cfg.diracs()
            try:
                res = pogorelov_solve(diracs, args.tolerance)
            except NonConvergenceError as exc:
                print(str(exc), file=sys.stderr)
                return EXIT_PARTIAL
            print(json.dumps({"locations": diracs.locations.tolist(),
                              "weights": diracs.weights.tolist(),
                              "heights": res.heights.tolist(),
                              "area_errors": res.area_errors.tolist(),
                              "sweeps": res.sweeps}, indent=2))
            return EXIT_OK

        if args.command == "convergence":
            cfg = ExperimentConfig(args.problem, args.sizes, mode=args.mode, count=args.count,
                                   seed=args.seed, output_dir=args.output_dir)
            return _run(cfg)

        cfg = ExperimentConfig(args.problem, [args.size], count=args.count, seed=args.seed)
        status = EXIT_OK
        rows = {}
        for mode in ("aleksandrov", "viscosity_baseline"):
            table = run_experiment(replace(cfg, mode=mode))
            status = max(status, EXIT_PARTIAL if table.failures else EXIT_OK)
            rows[mode] = table.rows[0]
        print(f"{args.problem}, n_x = {args.size}")
        print(f"{'metric':<14}{'aleksandrov':>14}{'viscosity':>14}")
        for name in ("max_error", "l2_error", "height_error", "area_linf", "area_rss", "iterations"):
            vals = [getattr(rows[m], name) for m in rows]
            if all(isinstance(v, float) and np.isnan(v) for v in vals):
                continue
            print(f"{name:<14}" + "".join(f"{v:>14.4e}" if isinstance(v, float) else f"{v:>14d}"
                                          for v in vals))
        return status
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
