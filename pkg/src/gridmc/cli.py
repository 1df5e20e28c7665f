"""Command line entry point: run a Monte Carlo study and write the results bundle."""
from __future__ import annotations

import argparse
import logging
import sys

from .engine import SimConfig, run_monte_carlo
from .io import FormatError, bundled, model_hash, parse_network, parse_profile, profile_hash, write_results
from .model import apply_loading_level
from .stats import ENERGY, MAX_DEMAND


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="gridmc",
        description="Monte Carlo blackout statistics for a transmission network.",
    )
    p.add_argument("--network", help="network file (default: bundled three-area RTS-96)")
    p.add_argument("--profile", help="hourly demand-factor file (default: bundled RTS-96 profile)")
    p.add_argument("--years", type=int, default=100, help="number of simulated years (default 100)")
    p.add_argument("--seed", type=int, default=1, help="master random seed (default 1)")
    p.add_argument("--loading-level", type=float, default=1.0, help="scale factor on every peak demand (default 1.0)")
    p.add_argument(
        "--operator-response-min",
        type=float,
        default=None,
        help="time an operator needs to find a corrective action, minutes (default 15)",
    )
    p.add_argument("--no-operator", action="store_true", help="disable operator corrective actions")
    p.add_argument("--size-metric", choices=[ENERGY, MAX_DEMAND], default=ENERGY)
    p.add_argument("--workers", type=int, default=1, help="worker processes (default 1)")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")

    if args.no_operator and args.operator_response_min is not None:
        parser.error("--operator-response-min cannot be combined with --no-operator")
    if args.years < 1:
        parser.error("--years must be >= 1")
    if args.workers < 1:
        parser.error("--workers must be >= 1")
    if args.loading_level <= 0:
        parser.error("--loading-level must be > 0")
    if args.operator_response_min is not None and args.operator_response_min < 0:
        parser.error("--operator-response-min must be >= 0")
    response = 15.0 if args.operator_response_min is None else args.operator_response_min

    try:
        model = parse_network(args.network or bundled("rts96.net"))
        profile = parse_profile(args.profile or bundled("rts96_profile.txt"), len(model.areas))
    except (OSError, FormatError) as exc:
        print(f"gridmc: error: {exc}", file=sys.stderr)
        return 2
    scaled = apply_loading_level(model, args.loading_level)
    config = SimConfig(operator=not args.no_operator, response_delay=None if args.no_operator else response)
    header = {
        "seed": args.seed,
        "N": args.years,
        "L": repr(args.loading_level),
        "operator": "off" if args.no_operator else "on",
        "operator_response_min": "-" if args.no_operator else repr(response),
        "size_metric": args.size_metric,
        "model_hash": model_hash(model),
        "profile_hash": profile_hash(profile),
    }

    def progress(done, total):
        if args.verbose:
            logging.info("year %d/%d", done, total)

    results = run_monte_carlo(scaled, profile, config, args.years, args.seed, args.workers, progress)
    try:
        write_results(args.out, header, results, scaled, args.size_metric)
    except OSError as exc:
        print(f"gridmc: error: cannot write results: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
