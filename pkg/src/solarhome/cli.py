"""Command-line entry point.

Exit codes: 0 success, 1 invalid input or configuration, 2 when a
simulation latched a protection fault (outputs are still written).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import daq, engine, inverter, planning
from .config import load_config
from .environment import load_profile_csv, parse_day_shorthand
from .errors import SolarHomeError
from .io import atomic_write_json, atomic_write_text, dumps_json, fmt_float
from .pmic import MpptState, mppt_step
from .pv import mpp_scan

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_FAULT = 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message} (see --help)")


def _profiles(args, project):
    """Profiles named by --profile/--day, falling back to the config's day."""
    step = project.system.step_s
    out = [load_profile_csv(p) for p in (args.profile or [])]
    out += [parse_day_shorthand(d, step_s=step, ambient=project.ambient_c, seed=args.seed)
            for d in (args.day or [])]
    if not out:
        out.append(parse_day_shorthand(project.day, step_s=step, ambient=project.ambient_c,
                                       seed=args.seed))
    return out


def _emit(obj, out_dir, name):
    text = dumps_json(obj)
    if out_dir is not None:
        atomic_write_text(Path(out_dir) / name, text)
    sys.stdout.write(text)


def _write_run(result, out_dir: Path):
    atomic_write_text(out_dir / "trace.csv", result.trace_csv_text())
    atomic_write_json(out_dir / "summary.json", result.totals)
    daq.write_daq_csv(daq.records_from_sim(result), out_dir / "daq.csv")


def cmd_simulate(args):
    project = load_config(args.config[0])
    if args.profile and args.day or len(args.profile or []) + len(args.day or []) > 1:
        raise UsageError("simulate takes a single --profile or --day")
    profile = _profiles(args, project)[0]
    result = engine.run(project.system, profile, seed=args.seed)
    out = Path(args.out)
    _write_run(result, out)
    atomic_write_json(out / "run.json", result.summary())
    sys.stdout.write(dumps_json(result.summary()))
    return EXIT_FAULT if any(e["code"] in ("OVP", "OTP") for e in result.fault_events) else EXIT_OK


def cmd_sweep(args):
    projects = [load_config(c) for c in args.config]
    profiles = _profiles(args, projects[0])
    results = engine.run_sweep([p.system for p in projects], profiles, seed=args.seed,
                               workers=args.workers)
    out = Path(args.out)
    index = []
    faulted = False
    for k, result in enumerate(results):
        ci, pi = divmod(k, len(profiles))
        run_dir = out / f"run_{ci:03d}_{pi:03d}"
        _write_run(result, run_dir)
        faulted |= any(e["code"] in ("OVP", "OTP") for e in result.fault_events)
        index.append({"config": args.config[ci], "profile": profiles[pi].label,
                      "dir": run_dir.name, "totals": result.totals,
                      "peak_delivered_w": result.peak_delivered_w})
    _emit({"runs": index}, out, "sweep.json")
    return EXIT_FAULT if faulted else EXIT_OK


def cmd_mppt_trace(args):
    project = load_config(args.config[0])
    model = project.system.pv_model()
    oracle = mpp_scan(model, args.g, args.temp, 0.001)
    voc = model.open_circuit_voltage(args.g, args.temp)
    state = MpptState(target_v=args.start_fraction * voc, step_v=args.step_v)
    lines = ["step,target_v,v,i,p,oracle_p"]
    powers = []
    for k in range(args.steps):
        state, op = mppt_step(state, model, args.g, args.temp)
        powers.append(op.p)
        lines.append(",".join([str(k), fmt_float(state.target_v), fmt_float(op.v),
                               fmt_float(op.i), fmt_float(op.p), fmt_float(oracle.p)]))
    out = Path(args.out)
    atomic_write_text(out / "mppt_trace.csv", "\n".join(lines) + "\n")
    tail = powers[-min(50, len(powers)):]
    _emit({"g_wm2": args.g, "temp_c": args.temp, "steps": args.steps,
           "oracle_p_w": oracle.p, "oracle_v": oracle.v,
           "steady_p_w": sum(tail) / len(tail),
           "tracking_ratio": (sum(tail) / len(tail)) / oracle.p if oracle.p > 0 else 1.0},
          out, "mppt_summary.json")
    return EXIT_OK


def _pnl_years(args, project):
    return max(args.years or project.years, len(project.pnl.units_sold_per_year))


def cmd_size(args):
    project = load_config(args.config[0])
    profile = _profiles(args, project)[0]
    sizing = planning.size_system(project.system, profile, project.catalog,
                                  args.max_panels, args.max_batteries, workers=args.workers)
    years = args.years or project.years
    catalog = project.catalog.scaled(sizing.n_panels, sizing.n_batteries)
    report = planning.planning_report(catalog, project.pnl, years, project.daily_kwh,
                                      sizing=sizing, pnl_years=_pnl_years(args, project))
    _emit(report, None if args.out is None else Path(args.out), "sizing.json")
    return EXIT_OK


def cmd_econ(args):
    project = load_config(args.config[0])
    years = args.years or project.years
    system = project.system
    composition = planning.evaluate_composition(
        system, _profiles(args, project)[0], project.catalog,
        system.panel.count, system.battery.count)
    report = planning.planning_report(project.catalog, project.pnl, years, project.daily_kwh,
                                      sizing=composition, pnl_years=_pnl_years(args, project))
    comparison = inverter.AcDcComparison.same_conductor(230.0, 10.0, 0.9)
    report["dc_capacity_ratio"] = inverter.dc_capacity_ratio(comparison, args.pf_mode)
    report["pf_mode"] = args.pf_mode
    _emit(report, None if args.out is None else Path(args.out), "econ.json")
    return EXIT_OK


def cmd_daq_report(args):
    thresholds = {"min_uptime": daq.MIN_UPTIME, "max_faults": daq.MAX_FAULTS}
    if args.config:
        thresholds.update(load_config(args.config[0]).thresholds)
    if args.thresholds:
        thresholds.update(daq.parse_thresholds(args.thresholds))
    records = daq.ingest(args.log)
    report = daq.evaluate(records, **thresholds)
    _emit(report.to_dict(), None if args.out is None else Path(args.out), "daq_report.json")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="solarhome", description="Off-grid solar home simulator and planner.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, needs_config=True, profiles=True, out_required=True):
        p.add_argument("--config", action="append", required=needs_config, metavar="PATH",
                       help="configuration file (repeatable for sweep)")
        if profiles:
            p.add_argument("--profile", action="append", metavar="CSV",
                           help="environment CSV with header t_s,g_wm2,temp_c,rain")
            p.add_argument("--day", action="append", metavar="SPEC",
                           help="generated day: clear:<hours>h:<peakG> or "
                                "cloudy:<hours>h:<peakG>:<attenuation>")
        p.add_argument("--out", required=out_required, metavar="DIR", help="output directory")
        p.add_argument("--seed", type=int, default=0, help="seed for stochastic generators (default 0)")
        p.add_argument("--workers", type=int, default=None, help="parallel worker processes")

    p = sub.add_parser("simulate", help="run one scenario; writes trace.csv, summary.json, daq.csv")
    common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="run every config x profile pair")
    common(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("mppt-trace", help="track the MPP at fixed conditions against the grid-scan oracle")
    common(p, profiles=False)
    p.add_argument("--g", type=float, default=1000.0, help="irradiance W/m2 (default 1000)")
    p.add_argument("--temp", type=float, default=25.0, help="cell temperature degC (default 25)")
    p.add_argument("--steps", type=int, default=400, help="tracker iterations (default 400)")
    p.add_argument("--step-v", type=float, default=0.2, help="perturbation step in V (default 0.2)")
    p.add_argument("--start-fraction", type=float, default=0.5,
                   help="initial voltage as a fraction of Voc (default 0.5)")
    p.set_defaults(func=cmd_mppt_trace)

    p = sub.add_parser("size", help="exhaustive panel/battery sizing search")
    common(p, out_required=False)
    p.add_argument("--max-panels", type=int, default=4)
    p.add_argument("--max-batteries", type=int, default=4)
    p.add_argument("--years", type=int, default=None, help="ownership horizon for tco")
    p.set_defaults(func=cmd_size)

    p = sub.add_parser("econ", help="bill of materials, tco, cost per kWh and P&L")
    common(p, out_required=False)
    p.add_argument("--years", type=int, default=None, help="ownership horizon (default from config, 3)")
    p.add_argument("--pf-mode", choices=(inverter.RADIANS, inverter.POWER_FACTOR),
                   default=inverter.RADIANS,
                   help="cos(0.9) read as radians (default) or as a power factor")
    p.set_defaults(func=cmd_econ)

    p = sub.add_parser("daq-report", help="uptime/fault KPIs of a DAQ log")
    common(p, needs_config=False, profiles=False, out_required=False)
    p.add_argument("--log", required=True, metavar="CSV",
                   help="DAQ CSV with header t_s,pv_v,pv_i,batt_v,batt_i,load_w,mode,fault")
    p.add_argument("--thresholds", metavar="SPEC", help="e.g. min_uptime=0.95,max_faults=3")
    p.set_defaults(func=cmd_daq_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if getattr(args, "config", None):
            for c in args.config:
                if not Path(c).is_file():
                    raise UsageError(f"config file not found: {c}")
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (SolarHomeError, ValueError, OSError) as exc:
        print(f"error: {str(exc).splitlines()[0] if str(exc) else type(exc).__name__}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
