"""Command-line entry point: ``risfusion --experiment pd_vs_n --out results``."""

from __future__ import annotations

import argparse
import json
import logging
import sys

from .experiments import EXPERIMENTS, ExperimentConfig, emit_results, run_experiment

log = logging.getLogger("risfusion")


def _error_record(exc_name, message):
    return json.dumps({"error": exc_name, "message": message})


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(_error_record("UsageError", message), file=sys.stderr)
        raise SystemExit(2)


def build_parser():
    parser = _Parser(
        prog="risfusion",
        description="Decision-fusion experiments for a RIS-assisted large-array FC.")
    parser.add_argument("--experiment", choices=EXPERIMENTS)
    parser.add_argument("--config", help="JSON configuration document")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--trials-h0", type=int, dest="trials_h0")
    parser.add_argument("--trials-h1", type=int, dest="trials_h1")
    parser.add_argument("--workers", type=int)
    parser.add_argument("--out", help="output path (extension added from --format)")
    parser.add_argument("--format", choices=("csv", "json"))
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        config = ExperimentConfig.resolve(
            args.config, experiment=args.experiment, seed=args.seed,
            trials_h0=args.trials_h0, trials_h1=args.trials_h1, workers=args.workers,
            out=args.out, format=args.format)
        log.info("running %s with seed %d", config.experiment, config.seed)
        table = run_experiment(config)
        for path in emit_results(table, config.out, config.format):
            print(path)
    except Exception as exc:  # reported as a machine-readable record
        print(_error_record(type(exc).__name__, str(exc)), file=sys.stderr)
        return 2 if isinstance(exc, (ValueError, OSError)) else 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
