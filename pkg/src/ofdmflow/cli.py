"""Command-line front end.

Exit codes: 0 success, 2 malformed input, 3 I/O failure, 4 brute force
beyond its enumeration guard, 5 infeasible robust flow.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import formats
from .channel_model import DomainError, dbm_to_watt, generate_trace, rate_matrix_for_phase, snr
from .lp_core import OPTIMAL, MalformedProblem
from .maxmin_assign import (
    RateMatrix,
    TooLarge,
    brute_force_maxmin,
    solve_maxmin,
    static_assignment,
)
from .robust_gainflow import EqualityUnderUncertainty, solve_robust_gainflow

log = logging.getLogger("ofdmflow")

EXIT_OK, EXIT_INPUT, EXIT_IO, EXIT_GUARD, EXIT_INFEASIBLE = 0, 2, 3, 4, 5
MAX_GRID = 200

SOLVERS = {
    "milp": solve_maxmin,
    "brute": brute_force_maxmin,
    "static": static_assignment,
}


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _load_scenario(path, seed=None):
    try:
        scenario = formats.load_scenario(path)
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot read scenario: {exc}") from exc
    except formats.FormatError as exc:
        raise CliError(EXIT_INPUT, str(exc)) from exc
    if seed is not None:
        try:
            scenario = dataclasses.replace(scenario, seed=seed)
        except ValueError as exc:
            raise CliError(EXIT_INPUT, str(exc)) from exc
    try:
        scenario.rate_table()
    except DomainError as exc:
        raise CliError(EXIT_INPUT, f"invalid scenario: {exc}") from exc
    return scenario


def _write(path, text):
    try:
        Path(path).write_text(text, encoding="utf-8")
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot write {path}: {exc}") from exc


def parse_power_grid(spec: str) -> list[float]:
    """``START:STOP:STEP`` in dBm, inclusive of STOP when it lies on the grid."""
    try:
        start, stop, step = (float(x) for x in spec.split(":"))
    except ValueError as exc:
        raise CliError(EXIT_INPUT, f"--powers expects START:STOP:STEP, got {spec!r}") from exc
    if not all(math.isfinite(v) for v in (start, stop, step)):
        raise CliError(EXIT_INPUT, "--powers values must be finite")
    if step <= 0 or start > stop:
        raise CliError(EXIT_INPUT, "--powers needs start <= stop and step > 0")
    count = int(math.floor((stop - start) / step + 1e-9)) + 1
    if count > MAX_GRID:
        raise CliError(EXIT_INPUT, f"--powers grid has {count} points (max {MAX_GRID})")
    return [start + k * step for k in range(count)]


def cmd_gen_trace(args) -> int:
    scenario = _load_scenario(args.scenario, args.seed)
    trace = generate_trace(scenario, workers=args.threads)
    _write(args.out, formats.format_trace(trace))
    return EXIT_OK


def _solve(solver, rates):
    try:
        return SOLVERS[solver](rates)
    except TooLarge as exc:
        raise CliError(EXIT_GUARD, str(exc)) from exc


def cmd_assign(args) -> int:
    scenario = _load_scenario(args.scenario)
    try:
        trace = formats.read_trace(args.trace, scenario)
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot read trace: {exc}") from exc
    except formats.FormatError as exc:
        raise CliError(EXIT_INPUT, str(exc)) from exc
    if not 1 <= args.phase <= scenario.n_phases:
        raise CliError(EXIT_INPUT, f"--phase {args.phase} outside 1..{scenario.n_phases}")
    rates = RateMatrix(rate_matrix_for_phase(trace, scenario, args.phase - 1), tag=f"phase={args.phase}")
    assignment = _solve(args.solver, rates)
    _write(args.out, formats.format_assignment(assignment))
    return EXIT_OK


def sweep(scenario, trace, powers_dbm, solver, threads=1):
    """Rows ``(power_dbm, mean_min_throughput_bits, mean_snr_db)`` in grid order."""

    def one(power_dbm):
        P = float(dbm_to_watt(power_dbm))
        eps = []
        for t in range(scenario.n_phases):
            rates = RateMatrix(rate_matrix_for_phase(trace, scenario, t, total_power=P))
            eps.append(_solve(solver, rates).epsilon)
        s = snr(P / scenario.n_subcarriers, trace.attenuation, scenario.noise_power)
        return power_dbm, float(np.mean(eps)), float(np.mean(10.0 * np.log10(s)))

    if threads <= 1:
        return [one(p) for p in powers_dbm]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(one, powers_dbm))


def format_sweep(rows) -> str:
    lines = ["power_dbm,mean_min_throughput_bits,mean_snr_db"]
    lines += [f"{p!r},{m!r},{s!r}" for p, m, s in rows]
    return "\n".join(lines) + "\n"


def cmd_sweep(args) -> int:
    scenario = _load_scenario(args.scenario, args.seed)
    grid = parse_power_grid(args.powers)
    trace = generate_trace(scenario, workers=args.threads)
    rows = sweep(scenario, trace, grid, args.solver, threads=args.threads)
    _write(args.out, format_sweep(rows))
    return EXIT_OK


def cmd_gainflow(args) -> int:
    try:
        network, uncertainty = formats.load_network(args.network)
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot read network: {exc}") from exc
    except formats.FormatError as exc:
        raise CliError(EXIT_INPUT, str(exc)) from exc
    try:
        solution = solve_robust_gainflow(network, uncertainty)
    except (MalformedProblem, EqualityUnderUncertainty, ValueError) as exc:
        raise CliError(EXIT_INPUT, f"malformed network: {exc}") from exc
    if solution.status != OPTIMAL:
        detail = ", ".join(f"{k}={v:g}" for k, v in solution.protected_demand.items())
        raise CliError(EXIT_INFEASIBLE,
                       f"robust flow {solution.status.lower()}; protected demand: {detail or 'none'}")
    _write(args.out, formats.format_flows(network, solution))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ofdmflow", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-trace", help="write an attenuation trace CSV")
    p.add_argument("--scenario", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, help="override the scenario seed")
    p.add_argument("--threads", type=int, default=1)
    p.set_defaults(func=cmd_gen_trace)

    p = sub.add_parser("assign", help="solve one phase of a trace")
    p.add_argument("--scenario", required=True)
    p.add_argument("--trace", required=True)
    p.add_argument("--phase", type=int, required=True, help="1-based downlink phase")
    p.add_argument("--solver", choices=sorted(SOLVERS), default="milp")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_assign)

    p = sub.add_parser("sweep", help="min-throughput and SNR versus transmit power")
    p.add_argument("--scenario", required=True)
    p.add_argument("--powers", required=True, help="START:STOP:STEP in dBm (use --powers=-10:20:2 for negatives)")
    p.add_argument("--solver", choices=sorted(SOLVERS), default="milp")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, help="override the scenario seed")
    p.add_argument("--threads", type=int, default=1)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("gainflow", help="robust minimum-cost gain flow")
    p.add_argument("--network", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gainflow)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except CliError as exc:
        print(f"ofdmflow: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
