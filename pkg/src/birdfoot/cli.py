"""Command-line entry point.

    birdfoot simulate --leg LL2SC3 --substrate pebbles --torque 2.0 --out trace.csv
    birdfoot sweep --out-dir results/
    birdfoot cop-sim --radii 0 1.0 3.2 9.0 --out cop.csv
    birdfoot calibrate --depth 20 --load 40 --area 12
    birdfoot analyze --forces plate.csv --markers markers.csv --out report.json

Every subcommand accepts ``--config run.yaml``; flags override the file and
the file overrides the presets.  Exit status: 0 on success, 1 when a trial
or an input file fails, 2 on usage errors (unknown preset, bad flags).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import yaml

from . import io
from .config import ConfigError, RunConfig, load_run_config, merge_flags
from .harness import (
    TrialAborted,
    cop_sweep,
    max_cop_excursion,
    run_trial,
    sweep,
    trial_result,
    trace_from_recordings,
)
from .params import MM, PRESET_NAMES, LegGeometry
from .substrate import SUBSTRATE_NAMES, calibrate_sinkage


def _run_config(parser, args) -> RunConfig:
    run = RunConfig()
    if getattr(args, "config", None):
        try:
            run = load_run_config(args.config)
        except (OSError, ConfigError, ValueError, KeyError) as exc:
            parser.error(f"--config: {exc}")
    leg = getattr(args, "leg", None)
    if leg is not None and leg not in PRESET_NAMES:
        parser.error(f"unknown leg preset {leg!r}; choose from {', '.join(PRESET_NAMES)}")
    sub = getattr(args, "substrate", None)
    if sub is not None and sub not in SUBSTRATE_NAMES:
        parser.error(f"unknown substrate {sub!r}; choose from {', '.join(SUBSTRATE_NAMES)}")
    return merge_flags(run, leg, sub, getattr(args, "torque", None), getattr(args, "seed", None))


def _result_dict(result, t=None) -> dict:
    ev = result.events
    out = {
        "F_hTO": result.F_hTO,
        "LL_MS": result.LL_MS,
        "LL_TO": result.LL_TO,
        "events": {"TD": ev.td, "MS": ev.ms, "TO": ev.to, "liftoff": ev.liftoff},
    }
    if t is not None:
        out["times"] = {"TD": float(t[ev.td]), "MS": float(t[ev.ms]), "TO": float(t[ev.to])}
    return out


# -- subcommands ---------------------------------------------------------------

def cmd_simulate(parser, args) -> int:
    run = _run_config(parser, args)
    if run.leg is None:
        parser.error("simulate needs --leg (or a leg in --config)")
    try:
        trace, result = run_trial(run.leg, run.build_substrate(), run.protocol, seed=run.seed)
    except TrialAborted as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    io.write_trace(args.out, trace)
    ev = result.events
    ending = "sliding" if result.slid else "lift-off"
    print(
        f"{run.leg.name} on {run.substrate} at {run.protocol.hip_torque:g} N*m: "
        f"F_hTO={result.F_hTO:.3f} N LL_MS={result.LL_MS:.4f} m LL_TO={result.LL_TO:.4f} m "
        f"TD={ev.td} MS={ev.ms} TO={ev.to} ({ending}) max_sink={result.max_sink * 1e3:.2f} mm -> {args.out}"
    )
    return 0


def cmd_sweep(parser, args) -> int:
    run = _run_config(parser, args)
    substrates = tuple(args.substrates)
    for s in substrates:
        if s not in SUBSTRATE_NAMES:
            parser.error(f"unknown substrate {s!r}")
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    res = sweep(run.protocol, substrates, PRESET_NAMES, range(args.stone_seeds), seed=run.seed)

    rows = []
    for sub in substrates:
        dF = res.dF.get(sub, {})
        for leg in PRESET_NAMES:
            r = res.results.get((leg, sub))
            if r is None:
                rows.append([leg, sub, None, None, None, None])
            else:
                rows.append([leg, sub, r.F_hTO, r.LL_MS, r.LL_TO, dF.get(leg)])
    io.write_summary(out / "summary.csv", rows)
    for sub, dF in res.dF.items():
        peaks = {leg: res.results[(leg, sub)].F_hTO for leg in dF}
        io.write_df_table(out / f"dF_{sub}.csv", peaks, dF)
    io.write_failures(out / "failures.csv", res.failures)
    print(f"{len(rows)} summary rows, {len(res.dF)} dF tables, {len(res.failures)} failed trials -> {out}")
    for leg, sub, seed, msg in res.failures:
        print(f"failed: {leg} on {sub} (seed {seed}): {msg}", file=sys.stderr)
    return 0


def cmd_cop_sim(parser, args) -> int:
    run = _run_config(parser, args)
    radii = [r * MM for r in args.radii]
    if any(r < 0 for r in radii):
        parser.error("radii must be non-negative")
    traj = cop_sweep(radii, run.protocol)
    stations = sorted({float(h) for hip, _ in traj.values() for h in hip}, reverse=True)
    cols = []
    for r in radii:
        hip, cop = traj[float(r)]
        cols.append(dict(zip((float(h) for h in hip), (float(c) for c in cop))))
    header = ["hip_x"] + [f"cop_x_r{r:g}mm" for r in args.radii]
    io.write_table(args.out, header, ([h] + [c.get(h) for c in cols] for h in stations))
    peaks = max_cop_excursion(traj)
    summary = ", ".join(f"r={r:g} mm: {peaks[float(rr)] * 1e3:.2f} mm" for r, rr in zip(args.radii, radii))
    print(f"max CoP excursion {summary} -> {args.out}")
    return 0


def cmd_calibrate(parser, args) -> int:
    for name in ("depth", "load", "area", "n"):
        if not getattr(args, name) > 0:
            parser.error(f"--{name} must be positive")
    k = calibrate_sinkage(args.depth * MM, args.load, args.area * 1e-4, args.n)
    print(f"sinkage_k={k!r} (N/m^{args.n + 2:g}) for {args.depth:g} mm under {args.load:g} N on {args.area:g} cm^2, n={args.n:g}")
    if args.out:
        entry = {"substrate": {"name": args.substrate, "sinkage_k": k, "sinkage_n": args.n}}
        Path(args.out).write_text(yaml.safe_dump(entry, sort_keys=False))
    return 0


def cmd_analyze(parser, args) -> int:
    run = _run_config(parser, args)
    geometry = run.leg.geometry if run.leg is not None else LegGeometry()
    try:
        t, F_h, F_v = io.read_forces(args.forces)
        mt, markers = io.read_markers(args.markers)
    except (OSError, io.ParseError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    try:
        trace = trace_from_recordings(geometry, t, F_h, F_v, mt, markers)
        result = trial_result(trace)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    report = _result_dict(result, t)
    Path(args.out).write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    ev = result.events
    print(f"F_hTO={result.F_hTO:.3f} N LL_MS={result.LL_MS:.4f} m LL_TO={result.LL_TO:.4f} m TD={ev.td} MS={ev.ms} TO={ev.to} -> {args.out}")
    return 0


# -- parser ---------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="birdfoot", description="Quasi-static push trials of tendon-coupled robot feet.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, leg=True, torque=True):
        sp.add_argument("--config", help="YAML run file (flags override it)")
        if leg:
            sp.add_argument("--leg", help=f"leg preset: {', '.join(PRESET_NAMES)}")
            sp.add_argument("--substrate", help=f"substrate: {', '.join(SUBSTRATE_NAMES)}")
        if torque:
            sp.add_argument("--torque", type=float, help="hip torque [N*m] (default 2.0)")
        sp.add_argument("--seed", type=int, help="random seed (default 0)")

    s = sub.add_parser("simulate", help="run one push trial and write its trace")
    common(s)
    s.add_argument("--out", default="trace.csv", help="trace CSV path (a .json metadata file is written beside it)")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("sweep", help="nine legs x four substrates")
    common(s, leg=False)
    s.add_argument("--out-dir", default="sweep", help="output directory")
    s.add_argument("--stone-seeds", type=int, default=10, help="stone fields per leg (default 10)")
    s.add_argument("--substrates", nargs="+", default=list(SUBSTRATE_NAMES), help=argparse.SUPPRESS)
    s.set_defaults(func=cmd_sweep)

    s = sub.add_parser("cop-sim", help="CoP trajectories of a one-segment foot for several toe pulleys")
    common(s, leg=False)
    s.add_argument("--radii", type=float, nargs="+", default=[1.0, 3.2, 9.0], help="toe pulley radii [mm]; 0 is the passive foot")
    s.add_argument("--out", default="cop.csv")
    s.set_defaults(func=cmd_cop_sim)

    s = sub.add_parser("calibrate", help="sinkage stiffness for a target depth")
    s.add_argument("--depth", type=float, required=True, help="target sinking depth [mm]")
    s.add_argument("--load", type=float, default=40.0, help="reference load [N]")
    s.add_argument("--area", type=float, default=12.0, help="foot area [cm^2]")
    s.add_argument("--n", type=float, default=1.0, help="sinkage exponent")
    s.add_argument("--substrate", default="sand", help="substrate name for the YAML snippet")
    s.add_argument("--out", help="write a YAML substrate entry here")
    s.set_defaults(func=cmd_calibrate)

    s = sub.add_parser("analyze", help="events and peak force from recorded force and marker data")
    s.add_argument("--config", help="YAML run file; its leg geometry is used for marker reconstruction")
    s.add_argument("--forces", required=True, help="force-plate CSV: t,F_h,F_v")
    s.add_argument("--markers", required=True, help="marker CSV: t,j0x,j0y,j1x,j1y,j2x,j2y,s3x,s3y")
    s.add_argument("--out", default="report.json")
    s.set_defaults(func=cmd_analyze)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.func(parser, args)


if __name__ == "__main__":
    sys.exit(main())
