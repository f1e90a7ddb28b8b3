"""Command line front-end.

Subcommands: capacity, delay, simulate, sweep, compare, reproduce-tables.
Exit codes: 0 success, 2 invalid scenario, 3 acceptance tolerance violated.
NGPON_SEED and NGPON_REPLICATIONS override the scenario's simulation
settings.
"""

from __future__ import annotations

import argparse
import sys

from . import capacity, harness
from .scenario import ScenarioError, load_scenario

EXIT_OK = 0
EXIT_BAD_SCENARIO = 2
EXIT_TOLERANCE = 3


def _add_common(p, sim=False):
    p.add_argument("--scenario", required=True, help="scenario JSON file")
    p.add_argument("--output", default="-", help="CSV output path (- = stdout)")
    p.add_argument("--mode", default="epon-reflection",
                   help="protocol-carrier, e.g. epon-reflection, gpon-reflection,"
                        " epon-empty")
    if sim:
        p.add_argument("--seed", type=int, default=None,
                       help="override simulation seed")
        p.add_argument("--trace", default=None,
                       help="write an event trace (one event per line)")


def _parse_mode(mode):
    try:
        protocol, carrier = mode.split("-", 1)
    except ValueError:
        protocol, carrier = mode, "reflection"
    carrier = {"empty": "empty_carrier"}.get(carrier, carrier)
    if protocol not in ("epon", "gpon") or carrier not in ("reflection",
                                                           "empty_carrier"):
        raise ScenarioError(f"unknown mode {mode!r}")
    return protocol, carrier


def _open_out(path):
    if path == "-":
        return sys.stdout, False
    return open(path, "w"), True


def _emit(rows, header, path):
    fh, close = _open_out(path)
    try:
        harness.write_csv(rows, header, fh)
    finally:
        if close:
            fh.close()


def _grid(args):
    if args.rt:
        return [float(x) for x in args.rt.split(",")]
    return None


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="ngpon")
    sub = ap.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("capacity", help="per-constraint throughput bounds")
    _add_common(p)

    p = sub.add_parser("delay", help="analytic delays over a throughput grid")
    _add_common(p)
    p.add_argument("--rt", required=True,
                   help="comma-separated aggregate throughput targets [bit/s]")

    p = sub.add_parser("simulate", help="discrete-event simulation")
    _add_common(p, sim=True)
    p.add_argument("--rt", required=True, type=float,
                   help="aggregate offered load [bit/s]")

    p = sub.add_parser("sweep", help="analytic (optionally simulated) sweep")
    _add_common(p, sim=True)
    p.add_argument("--fractions", default="0.1,0.3,0.5,0.7,0.9",
                   help="fractions of the capacity bound")
    p.add_argument("--with-sim", action="store_true")

    p = sub.add_parser("compare", help="analysis vs simulation gate")
    _add_common(p, sim=True)
    p.add_argument("--fractions", default="0.3,0.5")
    p.add_argument("--tolerance", type=float, default=0.15)

    p = sub.add_parser("reproduce-tables",
                       help="check the reference stability-limit tables")
    p.add_argument("--output", default="-")

    args = ap.parse_args(argv)
    try:
        return _dispatch(args)
    except (ScenarioError, ValueError) as exc:
        print(f"scenario error: {exc}", file=sys.stderr)
        return EXIT_BAD_SCENARIO


def _dispatch(args) -> int:
    if args.cmd == "reproduce-tables":
        rows = harness.reproduce_tables()
        fh, close = _open_out(args.output)
        try:
            fh.write(harness.format_table_report(rows) + "\n")
        finally:
            if close:
                fh.close()
        return EXIT_OK if harness.tables_pass(rows) else EXIT_TOLERANCE

    scn = load_scenario(args.scenario)
    if getattr(args, "seed", None) is not None:
        scn = type(scn)(scn.topology, scn.traffic, scn.lengths,
                        type(scn.sim)(seed=args.seed,
                                      warmup_s=scn.sim.warmup_s,
                                      duration_s=scn.sim.duration_s,
                                      replications=scn.sim.replications))
    protocol, carrier = _parse_mode(args.mode)

    if args.cmd == "capacity":
        mode = (capacity.EMPTY_CARRIER if carrier == "empty_carrier"
                else capacity.REFLECTION)
        rows, report = harness.capacity_rows(scn, mode)
        _emit(rows, ["constraint", "bound_bps", "binding",
                     "bound_gbps_rational"], args.output)
        print(f"bottleneck: {report.bottleneck} at "
              f"{harness._fmt(report.max_rt)} bit/s", file=sys.stderr)
        return EXIT_OK

    if args.cmd == "delay":
        grid = [float(x) for x in args.rt.split(",")]
        rows = harness.delay_rows(scn, grid, protocol, carrier)
        _emit(rows, harness.delay_header(), args.output)
        return EXIT_OK

    if args.cmd == "simulate":
        trace = [] if args.trace else None
        rows, _ = harness.simulate_rows(scn, args.rt, protocol, carrier,
                                        trace=trace)
        _emit(rows, ["class", "mean_delay_s", "ci_halfwidth_s",
                     "throughput_bps"], args.output)
        if args.trace:
            with open(args.trace, "w") as fh:
                for t, name, detail in trace:
                    fh.write(f"{t} {name} {detail}\n")
        return EXIT_OK

    if args.cmd == "sweep":
        fractions = [float(x) for x in args.fractions.split(",")]
        rows, bound = harness.sweep_rows(scn, fractions, protocol, carrier,
                                         with_sim=args.with_sim)
        _emit(rows, harness.SWEEP_HEADER, args.output)
        print(f"capacity bound: {harness._fmt(bound)} bit/s", file=sys.stderr)
        return EXIT_OK

    if args.cmd == "compare":
        fractions = [float(x) for x in args.fractions.split(",")]
        rows, worst = harness.compare(scn, fractions, args.tolerance,
                                      protocol, carrier)
        out = [(r.r_t_bps, r.analytic_s, r.simulated_s, r.ci_halfwidth_s,
                r.relative_gap) for r in rows]
        _emit(out, ["r_t_bps", "analytic_s", "simulated_s", "ci_halfwidth_s",
                    "relative_gap"], args.output)
        if worst > args.tolerance:
            print(f"tolerance violated: worst gap {worst:.3f} > "
                  f"{args.tolerance}", file=sys.stderr)
            return EXIT_TOLERANCE
        return EXIT_OK

    raise AssertionError(args.cmd)


if __name__ == "__main__":
    sys.exit(main())
