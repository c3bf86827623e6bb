"""Command-line interface.

Subcommands:
    run          full pipeline, writes the data files of a scenario
    steady       steady state from the Liouvillian null space
    percentiles  converged percentiles of the estimator at (E, T)
    compare      cooling report from two percentile csv files

Exit codes are 0 on success, 2 when some sample points failed or the
percentiles did not converge, and 1 on a fatal error.
"""

import argparse
import logging
import sys
from typing import List, Optional

import pandas as pd

from chiller.birch.scenario import (ScenarioConfig, emit_outputs,
                                    load_preset, run_scenario)
from chiller.larch.compare import cooling_report, report_frame
from chiller.larch.maxent import (PercentileConvergenceError,
                                  PercentileTable, converged_percentiles)
from chiller.larch.thermometry import mvu_estimator
from chiller.poplar.functions.io import (read_csv, setup_directories,
                                         write_csv, write_json)
from chiller.poplar.functions.log import log_to_csv
from chiller.spruce.dynamics import (cold_temperature, local_temperatures,
                                     steady_state_direct)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FATAL = 1
EXIT_PARTIAL = 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="chiller",
        description="Finite-precision thermometry of a three-qubit "
                    "absorption refrigerator",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_scenario_args(p):
        p.add_argument("--config", type=str, default=None,
                       help="path to a JSON scenario file")
        p.add_argument("--regime", choices=["strong", "weak"],
                       default="strong",
                       help="shipped preset used when --config is absent")

    run = sub.add_parser("run", help="integrate and compare all points")
    add_scenario_args(run)
    run.add_argument("--out", type=str, default="chiller_output",
                     help="output folder")
    run.add_argument("--dt", type=float, default=None, help="RK4 step")
    run.add_argument("--t-end", type=float, default=None,
                     help="integration horizon")
    run.add_argument("--tol", type=float, default=None,
                     help="steady-state generator residual")
    run.add_argument("--repetitions", type=int, default=None,
                     help="single-shot estimates averaged per estimate")
    run.add_argument("--log", action="store_true",
                     help="write log messages to log.csv in the output "
                          "folder")

    steady = sub.add_parser("steady", help="steady state only")
    add_scenario_args(steady)
    steady.add_argument("--out", type=str, default=None,
                        help="folder for steady.json")

    perc = sub.add_parser("percentiles",
                          help="estimator percentiles at (E, T)")
    perc.add_argument("--E", type=float, required=True, help="qubit gap")
    perc.add_argument("--T", type=float, required=True, help="temperature")
    perc.add_argument("--M-start", type=int, default=2)
    perc.add_argument("--tol", type=float, default=None,
                      help="percentile convergence tolerance")
    perc.add_argument("--repetitions", type=int, default=1)
    perc.add_argument("--out", type=str, default=None,
                      help="folder for percentiles.csv")

    comp = sub.add_parser("compare",
                          help="cooling report from two percentile files")
    comp.add_argument("initial", type=str,
                      help="csv with columns i,Qi at the initial point")
    comp.add_argument("final", type=str,
                      help="csv with columns i,Qi at the final point")
    comp.add_argument("--out", type=str, default=None,
                      help="folder for comparison.csv")
    return parser


def scenario_from_args(args) -> ScenarioConfig:
    if args.config is not None:
        return ScenarioConfig.from_json(args.config)
    return load_preset(args.regime)


def run_command(args) -> int:
    setup_directories(args.out)
    if args.log:
        log_to_csv(args.out)
    config = scenario_from_args(args).with_overrides(
        dt=args.dt, t_end=args.t_end, steady_tol=args.tol,
        repetitions=args.repetitions,
    )
    report = run_scenario(config)
    manifest = emit_outputs(report, args.out)
    for name in manifest:
        sys.stdout.write(f"Wrote {name}\n")
    failed = report.failed_points
    for point in failed:
        sys.stdout.write(f"Point {point.index}: {point.error}\n")
    return EXIT_PARTIAL if failed else EXIT_OK


def steady_command(args) -> int:
    p = scenario_from_args(args).params
    rho = steady_state_direct(p)
    temps = local_temperatures(rho, p)
    sys.stdout.write(f"Steady cold temperature: "
                     f"{cold_temperature(rho, p):.6f}\n")
    if args.out is not None:
        setup_directories(args.out)
        write_json({"params": p.to_dict(), "local_temperatures": temps},
                   "steady", args.out)
    return EXIT_OK


def percentiles_command(args) -> int:
    model = mvu_estimator(args.E, args.T)
    kwargs = {} if args.tol is None else {"tol": args.tol}
    code = EXIT_OK
    try:
        table, M_used = converged_percentiles(model, M_start=args.M_start,
                                              repetitions=args.repetitions,
                                              **kwargs)
        sys.stdout.write(f"Converged with {M_used} moments: ")
    except PercentileConvergenceError as e:
        if e.table is None:
            raise
        logger.warning("%s", e)
        table, M_used, code = e.table, e.order, EXIT_PARTIAL
        sys.stdout.write(f"Not converged, {M_used}-moment table: ")
    sys.stdout.write(f"Q25={table.at(25):.4f} Q50={table.at(50):.4f} "
                     f"Q75={table.at(75):.4f}\n")
    if args.out is not None:
        setup_directories(args.out)
        write_csv(pd.DataFrame({"i": range(1, 100), "Qi": table.values}),
                  "percentiles", args.out)
    return code


def read_table(filepath: str) -> PercentileTable:
    df = read_csv(filepath).sort_values("i")
    return PercentileTable(tuple(df["Qi"]))


def compare_command(args) -> int:
    report = cooling_report(read_table(args.initial),
                            read_table(args.final))
    if report.cooled:
        sys.stdout.write(f"Cooling detected from percentile "
                         f"{report.first_cooling_percentile}\n")
    else:
        sys.stdout.write("No cooling detected at any percentile\n")
    if args.out is not None:
        setup_directories(args.out)
        write_csv(report_frame(report), "comparison", args.out)
    return EXIT_OK


COMMANDS = {
    "run": run_command,
    "steady": steady_command,
    "percentiles": percentiles_command,
    "compare": compare_command,
}


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (ValueError, RuntimeError, OSError) as e:
        logger.error("%s failed: %s", args.command, e)
        sys.stderr.write(f"Error: {e}\n")
        return EXIT_FATAL
