"""Command-line front end.

Subcommands::

    run       simulate a scenario file or bundled preset, write artifacts
    blinders  blinder resistances from a reach and swing angles
    timers    transit-time thresholds from angles and a slip frequency
    locus     predicted impedance loci (constant-current, power-control,
              or classical two-source) as CSV
    replay    feed a recorded impedance trajectory through the relay
    sweep     run a scenario under a grid of parameter overrides
    presets   list the bundled study cases

Exit codes: 0 success, 2 argument/validation error, 3 solver failure.
The default output directory is ``$GFLSWING_OUT`` (falling back to
``./runs``), with one subdirectory per scenario name.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import __version__
from .artifacts import write_artifacts
from .engine import SolverError, run as run_scenario, sweep as run_sweep
from .network import (ImpedanceSample, predict_locus_gfl, predict_locus_opc,
                      sg_apparent_impedance)
from .relay import RelayState, blinder_resistance, relay_step, timer_settings
from .scenario import ScenarioError, load_preset, load_scenario, preset_names

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_SOLVER = 3


def _angles(text: str) -> tuple[float, float, float]:
    parts = text.split(",")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("expected three comma-separated angles")
    try:
        a, b, c = (float(p) for p in parts)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None
    return a, b, c


def _complex_pair(text: str) -> complex:
    parts = text.split(",")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError("expected RE,IM")
    try:
        return complex(float(parts[0]), float(parts[1]))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _sweep_range(text: str) -> tuple[float, float, float]:
    parts = text.split(",")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("expected START,STOP,STEP")
    start, stop, step = (float(p) for p in parts)
    if step <= 0:
        raise argparse.ArgumentTypeError("STEP must be positive")
    return start, stop, step


def _load_scenario_arg(text: str):
    """A scenario argument is a file path or a bundled preset name."""
    p = Path(text)
    if p.is_file():
        return load_scenario(p)
    if "/" not in text and "\\" not in text and not text.endswith(".toml"):
        return load_preset(text)
    raise ScenarioError(f"scenario file not found: {text}")


def _out_dir(args, scenario_name: str) -> Path:
    if args.out:
        return Path(args.out)
    root = os.environ.get("GFLSWING_OUT", "runs")
    return Path(root) / (scenario_name or "run")


def _cmd_run(args) -> int:
    sc = _load_scenario_arg(args.scenario)
    res = run_scenario(sc)
    out = _out_dir(args, sc.name)
    paths = write_artifacts(res, out)
    print(f"verdict: {res.verdict.value}")
    print(f"loss of synchronism: {res.los_t if res.los_t is not None else 'none'}")
    print(f"relay events: {len(res.relay_events)}")
    print(f"artifacts: {paths.timeseries_csv.parent}")
    return EXIT_OK


def _cmd_blinders(args) -> int:
    d_o, d_m, d_i = args.angles
    rows = [("outer", blinder_resistance(args.x_total, d_o)),
            ("middle", blinder_resistance(args.x_total, d_m)),
            ("inner", blinder_resistance(args.x_total, d_i))]
    for label, r in rows:
        if args.z_base:
            print(f"{label:6s} {r:8.3f} ohm  ({r / args.z_base:.4f} pu)")
        else:
            print(f"{label:6s} {r:8.3f} ohm")
    return EXIT_OK


def _cmd_timers(args) -> int:
    d_o, d_m, d_i = args.angles
    t = timer_settings(d_o, d_m, d_i, args.f0, args.fswing)
    print(f"psb {t.psb_cycles:.3f} cycles = {t.dt_psb:.4f} s")
    print(f"ost {t.ost_cycles:.3f} cycles = {t.dt_ost:.4f} s")
    return EXIT_OK


def _locus_rows(args):
    start, stop, step = args.sweep
    n = int(math.floor((stop - start) / step + 1e-9)) + 1
    for k in range(n):
        a = start + k * step
        if args.model == "gfl":
            z = predict_locus_gfl(args.e_r, args.i_g, args.z_g, a)
        elif args.model == "opc":
            z = predict_locus_opc(args.e_r, args.i_g, args.z_g, a, args.alpha0)
        else:
            z = sg_apparent_impedance(args.n, a, args.z_s, args.z_t)
        yield a, z


def _cmd_locus(args) -> int:
    if args.model == "sg" and args.n == 1.0:
        start, stop, step = args.sweep
        if start <= 0.0 <= stop or start <= 360.0 <= stop:
            print("warning: delta = 0/360 with n = 1 is skipped (no current)",
                  file=sys.stderr)
    fh = open(args.out, "w", encoding="utf-8", newline="") if args.out else sys.stdout
    try:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["angle_deg", "z_re", "z_im"])
        for a, z in _locus_rows(args):
            writer.writerow([format(a, ".10g"), format(z.real, ".10g"),
                             format(z.imag, ".10g")])
    except ZeroDivisionError:
        print("error: sweep hits a singular angle (n=1, delta=0)", file=sys.stderr)
        return EXIT_USAGE
    finally:
        if args.out:
            fh.close()
    return EXIT_OK


def _cmd_replay(args) -> int:
    sc = _load_scenario_arg(args.relay)
    state = RelayState()
    events = []
    need = ("t_s", "z_re_ohm", "z_im_ohm")
    with open(args.trajectory, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or any(c not in reader.fieldnames for c in need):
            print(f"error: trajectory CSV must have columns {', '.join(need)}",
                  file=sys.stderr)
            return EXIT_USAGE
        for row in reader:
            try:
                t = float(row["t_s"])
                z = complex(float(row["z_re_ohm"]), float(row["z_im_ohm"]))
            except ValueError:
                continue  # rows with nan or blanks carry no sample
            if math.isnan(z.real) or math.isnan(z.imag):
                continue
            state, new = relay_step(state, ImpedanceSample(t, z, "ohm"),
                                    sc.blinders, sc.timers)
            events.extend(new)
    out_fh = open(args.out, "w", encoding="utf-8", newline="\n") if args.out else sys.stdout
    try:
        for e in events:
            out_fh.write(json.dumps({"kind": e.kind.value, "t": e.t},
                                    sort_keys=True) + "\n")
    finally:
        if args.out:
            out_fh.close()
    return EXIT_OK


def _cmd_sweep(args) -> int:
    sc = _load_scenario_arg(args.base)
    with open(args.grid, "rb") as fh:
        doc = tomllib.load(fh)
    grid = doc.get("runs")
    if not isinstance(grid, list):
        raise ScenarioError("grid file must contain an array of tables [[runs]]")
    entries = run_sweep(sc, grid)
    writer = csv.writer(sys.stdout, lineterminator="\n")
    writer.writerow(["override", "verdict", "peak_delta_pll_deg",
                     "peak_delta_s_deg", "los_t", "n_events", "error"])
    for e in entries:
        writer.writerow([
            json.dumps(e.override, sort_keys=True),
            e.verdict.value if e.verdict else "",
            format(e.peak_delta_pll, ".6g"),
            format(e.peak_delta_s, ".6g"),
            "" if e.los_t is None else format(e.los_t, ".6g"),
            e.n_events,
            e.error or "",
        ])
    return EXIT_OK


def _cmd_presets(args) -> int:
    for name in preset_names():
        print(name)
    return EXIT_OK


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="gflswing",
        description="Power-swing simulation and dual-blinder relay studies "
                    "for grid-following converters.")
    ap.add_argument("--version", action="version", version=f"gflswing {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="simulate a scenario and write artifacts")
    p.add_argument("scenario", help="scenario file path or bundled preset name")
    p.add_argument("--out", help="output directory (default $GFLSWING_OUT/<name>)")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("blinders", help="blinder resistances from reach and angles")
    p.add_argument("--x-total", type=float, required=True,
                   help="total reach in ohms")
    p.add_argument("--angles", type=_angles, required=True,
                   help="outer,middle,inner swing angles in degrees")
    p.add_argument("--z-base", type=float, default=None,
                   help="impedance base to echo per-unit values")
    p.set_defaults(func=_cmd_blinders)

    p = sub.add_parser("timers", help="transit thresholds from angles and slip")
    p.add_argument("--angles", type=_angles, required=True)
    p.add_argument("--f0", type=float, required=True, help="system frequency, Hz")
    p.add_argument("--fswing", type=float, required=True, help="slip frequency, Hz")
    p.set_defaults(func=_cmd_timers)

    p = sub.add_parser("locus", help="predicted impedance locus as CSV")
    p.add_argument("--model", choices=("gfl", "opc", "sg"), required=True)
    p.add_argument("--sweep", type=_sweep_range, default=(0.0, 360.0, 1.0),
                   metavar="START,STOP,STEP", help="angle sweep in degrees")
    p.add_argument("--e-r", type=float, default=1.0, help="source magnitude")
    p.add_argument("--i-g", type=float, default=1.0, help="current magnitude")
    p.add_argument("--z-g", type=_complex_pair, default=complex(0, 0),
                   metavar="RE,IM", help="grid impedance (circle centre)")
    p.add_argument("--alpha0", type=float, default=0.0,
                   help="power-control angle offset (opc model)")
    p.add_argument("--n", type=float, default=1.0, help="EMF ratio (sg model)")
    p.add_argument("--z-s", type=_complex_pair, default=complex(0, 0),
                   metavar="RE,IM", help="impedance behind the relay (sg model)")
    p.add_argument("--z-t", type=_complex_pair, default=complex(0, 1),
                   metavar="RE,IM", help="total transfer impedance (sg model)")
    p.add_argument("--out", help="write CSV here instead of stdout")
    p.set_defaults(func=_cmd_locus)

    p = sub.add_parser("replay", help="feed a recorded trajectory to the relay")
    p.add_argument("--trajectory", required=True,
                   help="CSV with t_s, z_re_ohm, z_im_ohm columns")
    p.add_argument("--relay", required=True,
                   help="scenario file or preset supplying blinders and timers")
    p.add_argument("--out", help="write events JSONL here instead of stdout")
    p.set_defaults(func=_cmd_replay)

    p = sub.add_parser("sweep", help="run a scenario under parameter overrides")
    p.add_argument("--base", required=True, help="base scenario file or preset")
    p.add_argument("--grid", required=True,
                   help="TOML file with [[runs]] override tables")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("presets", help="list bundled study cases")
    p.set_defaults(func=_cmd_presets)
    return ap


def main(argv=None) -> int:
    ap = _build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SolverError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
