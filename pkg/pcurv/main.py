"""
Main entry point: python -m pcurv.main --input L.json --N 1000
"""

import argparse
import logging
import sys
from typing import List, Optional

from pcurv.errors import ContractError, OperatorFormatError, PCurvError
from pcurv.file_handlers import BenchFileHandler, OperatorFileHandler, RecordFileHandler, TreeStatsFileHandler
from pcurv.models import FORMATS, MODES, RunConfig
from pcurv.oracle import ORACLE_LIMIT
from pcurv.ore import transpose_xd
from pcurv.pipeline import bench, charpoly_p_curv, compare_records, oracle_records

logger = logging.getLogger("pcurv")

EXIT_OK = 0
EXIT_INCONSISTENT = 1
EXIT_USAGE = 2


def _bench_list(text: str) -> List[int]:
    try:
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pcurv",
        description="Characteristic polynomials of the p-curvatures of a differential operator "
                    "for all primes below N.")
    parser.add_argument("--input", required=True, help="operator JSON file")
    parser.add_argument("--N", type=int, default=100, help="bound on the primes (default 100)")
    parser.add_argument("--mode", choices=MODES, default="tree")
    parser.add_argument("--out", dest="output", help="output file (default stdout)")
    parser.add_argument("--include-small-primes", action="store_true",
                        help="also handle primes p <= d")
    parser.add_argument("--jobs", type=int, default=1, help="worker processes for post-processing")
    parser.add_argument("--stats", action="store_true", help="log phase timings")
    parser.add_argument("--bench", type=_bench_list, default=[], metavar="N1,N2,...",
                        help="time the pipeline for each N and write CSV")
    parser.add_argument("--transpose", action="store_true",
                        help="apply x -> -d, d -> x before running")
    parser.add_argument("--format", choices=FORMATS, default="full")
    parser.add_argument("--tree-sizes", metavar="FILE", help="dump T node bit sizes as CSV")
    parser.add_argument("--log-level", default="WARNING",
                        choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    return parser


def configure_logging(config: RunConfig):
    level = logging.INFO if config.stats and config.log_level == "WARNING" else getattr(logging, config.log_level)
    logging.basicConfig(level=level, stream=sys.stderr,
                        format="%(asctime)s %(levelname)s %(name)s: %(message)s")


def run(config: RunConfig) -> int:
    """Execute one configured run and return the process exit code."""
    operator = OperatorFileHandler.load_operator(config.input)
    if config.transpose:
        operator = transpose_xd(operator)
        logger.info("transposed operator: order %d, degree %d", operator.order, operator.degree)

    if config.bench:
        rows = bench(operator, config.bench, config)
        BenchFileHandler.save_bench(rows, config.output)
        return EXIT_OK

    if config.mode == "oracle":
        result = oracle_records(operator, config.N, config)
    else:
        result = charpoly_p_curv(operator, config.N, config)

    if config.tree_sizes and result.tree_sizes:
        TreeStatsFileHandler.save_tree_sizes(result.tree_sizes, config.tree_sizes)

    status = EXIT_OK
    if config.mode == "compare":
        limit = min(config.N, ORACLE_LIMIT)
        reference = oracle_records(operator, limit, config)
        if compare_records(result.records, reference.records, limit):
            status = EXIT_INCONSISTENT

    RecordFileHandler.save_records(result.records, config.output, config.format)

    if result.consistency_failures:
        logger.error("consistency failures at p in %s", result.consistency_failures)
        status = EXIT_INCONSISTENT
    for phase, seconds in result.timings.items():
        logger.info("%s: %.3fs", phase, seconds)
    return status


def main(argv: Optional[List[str]] = None) -> int:
    """Parse arguments, run, and map errors onto exit codes."""
    args = build_parser().parse_args(argv)
    try:
        config = RunConfig(input=args.input, N=args.N, mode=args.mode,
                           include_small_primes=args.include_small_primes, jobs=args.jobs,
                           output=args.output, stats=args.stats, format=args.format,
                           tree_sizes=args.tree_sizes, transpose=args.transpose,
                           bench=args.bench, log_level=args.log_level)
    except ContractError as e:
        print(f"pcurv: {e}", file=sys.stderr)
        return EXIT_USAGE
    configure_logging(config)
    try:
        return run(config)
    except (OperatorFormatError, OSError) as e:
        logger.error("%s", e)
        return EXIT_USAGE
    except PCurvError as e:
        logger.error("run aborted: %s", e)
        return EXIT_INCONSISTENT


if __name__ == "__main__":
    sys.exit(main())
