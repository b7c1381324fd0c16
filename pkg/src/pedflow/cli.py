"""Command-line front end.

Subcommands: run (one tier of one scenario), compare (bin a lattice run
onto a PDE grid and measure discrepancies), hypmap (classification grid
of the nonhyperbolic region), list-scenarios. Every run directory gets a
manifest, written last, listing all artifacts; a present manifest marks a
complete run. Exit codes: 0 ok, 2 usage, 3 numerical failure, 4 I/O.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
import time

import numpy as np

from . import __version__
from .ca import run_ensemble
from .csvio import read_density_csv, write_density_csv
from .macro import Grid, NumericsError, run_pde
from .meso import MesoStabilityError, integrate_meso
from .model import VelocityParams, classify_hyperbolicity_map, write_hyperbolicity_csv
from .scenarios import (
    FrameMismatchError,
    bin_to_grid,
    builtin_scenarios,
    compare,
    expand,
    load_scenario,
    scenario_to_dict,
    total_variation,
    with_overrides,
    write_report_csv,
)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NUMERICAL = 3
EXIT_IO = 4

MANIFEST_NAME = "manifest.json"


def _usage_error(msg: str) -> int:
    print(f"error: {msg}", file=sys.stderr)
    return EXIT_USAGE


def _resolve_scenario(name_or_path: str):
    for spec in builtin_scenarios():
        if spec.name == name_or_path:
            return spec
    if os.path.exists(name_or_path):
        return load_scenario(name_or_path)
    known = ", ".join(s.name for s in builtin_scenarios())
    raise KeyError(f"unknown scenario {name_or_path!r} (and no such file); built-ins: {known}")


def _write_manifest(outdir: str, payload: dict) -> None:
    payload = dict(payload)
    payload["version"] = __version__
    with open(os.path.join(outdir, MANIFEST_NAME), "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _read_manifest(rundir: str) -> dict:
    path = os.path.join(rundir, MANIFEST_NAME)
    if not os.path.exists(path):
        raise FileNotFoundError(f"no manifest in {rundir}; was the run complete?")
    with open(path) as fh:
        return json.load(fh)


def cmd_run(args: argparse.Namespace) -> int:
    try:
        spec = _resolve_scenario(args.scenario)
    except KeyError as e:
        return _usage_error(str(e))
    snapshots = None
    if args.snapshots:
        try:
            snapshots = tuple(float(t) for t in args.snapshots.split(","))
        except ValueError:
            return _usage_error(f"cannot parse snapshot list {args.snapshots!r}")
    try:
        spec = with_overrides(
            spec,
            seed=args.seed,
            mc_runs=args.mc_runs,
            eps=args.eps,
            dx=args.dx,
            t_end=args.t_end,
            snapshot_times=snapshots,
        )
        bundle = expand(spec)
    except (ValueError, KeyError) as e:
        return _usage_error(str(e))

    started = time.perf_counter()
    try:
        os.makedirs(args.outdir, exist_ok=True)
        artifacts: list[str] = []
        realized: list[float] = []
        if args.tier == "ca":
            cfg = bundle.ca
            if args.literal_rates:
                cfg = dataclasses.replace(cfg, literal_rates=True)
            stats = run_ensemble(cfg)
            realized = list(stats.step_times)
            for i in range(len(stats.times)):
                fname = f"snap_{i:03d}.csv"
                write_density_csv(
                    os.path.join(args.outdir, fname),
                    "k",
                    cfg.cell_length,
                    stats.mean_plus[i],
                    stats.mean_minus[i],
                )
                artifacts.append(fname)
            frame = {"length": spec.length, "cells": cfg.n_cells, "cell_size": cfg.cell_length}
            extra = {"mc_runs": cfg.mc_runs, "seed": cfg.seed, "literal_rates": cfg.literal_rates}
        elif args.tier == "meso":
            snaps = integrate_meso(
                bundle.meso, bundle.velocities, bundle.t_end, snapshot_times=bundle.snapshot_times
            )
            for i, (t_real, st) in enumerate(snaps):
                realized.append(t_real)
                fname = f"snap_{i:03d}.csv"
                write_density_csv(
                    os.path.join(args.outdir, fname), "k", st.h, st.rho_plus, st.rho_minus
                )
                artifacts.append(fname)
            frame = {
                "length": spec.length,
                "cells": bundle.meso.n_cells,
                "cell_size": bundle.meso.h,
            }
            extra = {"seed": None}
        else:  # pde
            snaps = run_pde(
                bundle.grid,
                bundle.pde_state,
                bundle.pde_params,
                bundle.velocities,
                bundle.t_end,
                bundle.snapshot_times,
            )
            meta_snaps = []
            for i, (t_real, st) in enumerate(snaps):
                realized.append(t_real)
                fname = f"snap_{i:03d}.csv"
                write_density_csv(
                    os.path.join(args.outdir, fname), "j", bundle.grid.dx, st.rho_plus, st.rho_minus
                )
                artifacts.append(fname)
                meta_snaps.append(
                    {
                        "time": t_real,
                        "min_plus": float(st.rho_plus.min()),
                        "max_plus": float(st.rho_plus.max()),
                        "min_minus": float(st.rho_minus.min()),
                        "max_minus": float(st.rho_minus.max()),
                        "tv_plus": total_variation(st.rho_plus),
                        "tv_minus": total_variation(st.rho_minus),
                    }
                )
            meta = {
                "grid": {"length": bundle.grid.length, "m": bundle.grid.m, "dx": bundle.grid.dx},
                "scheme": dataclasses.asdict(bundle.pde_params),
                "velocities": {
                    "c0": bundle.velocities.c0,
                    "c1": bundle.velocities.c1,
                    "c2": bundle.velocities.c2,
                    "c3": bundle.velocities.c3,
                },
                "wall_time_s": time.perf_counter() - started,
                "snapshots": meta_snaps,
            }
            with open(os.path.join(args.outdir, "pde_meta.json"), "w") as fh:
                json.dump(meta, fh, indent=2, sort_keys=True)
                fh.write("\n")
            artifacts.append("pde_meta.json")
            frame = {"length": spec.length, "cells": bundle.grid.m, "cell_size": bundle.grid.dx}
            extra = {"scheme": dataclasses.asdict(bundle.pde_params), "seed": None}

        _write_manifest(
            args.outdir,
            {
                "command": ["run", args.tier, args.scenario] + _override_flags(args),
                "tier": args.tier,
                "scenario": scenario_to_dict(spec),
                "frame": frame,
                "snapshot_times": list(spec.snapshot_times),
                "realized_times": realized,
                "artifacts": artifacts,
                "duration_s": time.perf_counter() - started,
                **extra,
            },
        )
    except (NumericsError, MesoStabilityError) as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as e:
        print(f"I/O failure: {e}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


def _override_flags(args: argparse.Namespace) -> list[str]:
    flags = []
    for name in ("seed", "mc_runs", "eps", "dx", "t_end", "snapshots"):
        val = getattr(args, name)
        if val is not None:
            flags.append(f"--{name.replace('_', '-')}={val}")
    if getattr(args, "literal_rates", False):
        flags.append("--literal-rates")
    return flags


def cmd_compare(args: argparse.Namespace) -> int:
    try:
        man_a = _read_manifest(args.run_a)
        man_b = _read_manifest(args.run_b)
    except (FileNotFoundError, json.JSONDecodeError) as e:
        return _usage_error(str(e))

    frame_a, frame_b = man_a["frame"], man_b["frame"]
    if abs(frame_a["length"] - frame_b["length"]) > 1e-9 * frame_b["length"]:
        return _usage_error(
            f"frame mismatch: lengths {frame_a['length']} vs {frame_b['length']}"
        )
    times_a = man_a["snapshot_times"]
    times_b = man_b["snapshot_times"]
    if len(times_a) != len(times_b) or any(
        abs(ta - tb) > 1e-9 for ta, tb in zip(times_a, times_b)
    ):
        return _usage_error(f"snapshot mismatch: {times_a} vs {times_b}")

    try:
        grid = Grid(frame_b["length"], int(frame_b["cells"]))
        entries = []
        csvs_a = [f for f in man_a["artifacts"] if f.endswith(".csv")]
        csvs_b = [f for f in man_b["artifacts"] if f.endswith(".csv")]
        for t, fa, fb in zip(times_a, csvs_a, csvs_b):
            plus_a, minus_a = read_density_csv(os.path.join(args.run_a, fa))
            plus_b, minus_b = read_density_csv(os.path.join(args.run_b, fb))
            binned_plus = bin_to_grid(plus_a, frame_a["cell_size"], grid)
            binned_minus = bin_to_grid(minus_a, frame_a["cell_size"], grid)
            from .macro import PDEState

            entries.extend(compare(binned_plus, binned_minus, PDEState(plus_b, minus_b), grid.dx, t))
        os.makedirs(args.outdir, exist_ok=True)
        write_report_csv(os.path.join(args.outdir, "comparison.csv"), entries)
        _write_manifest(
            args.outdir,
            {
                "command": ["compare", args.run_a, args.run_b],
                "tier": "compare",
                "frame": frame_b,
                "snapshot_times": times_a,
                "artifacts": ["comparison.csv"],
                "duration_s": 0.0,
            },
        )
    except FrameMismatchError as e:
        return _usage_error(str(e))
    except OSError as e:
        print(f"I/O failure: {e}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


def cmd_hypmap(args: argparse.Namespace) -> int:
    try:
        if args.a is not None:
            v = VelocityParams.from_slowdown(args.a, c0=1.0)
        elif None not in (args.c0, args.c1, args.c2, args.c3):
            v = VelocityParams(args.c0, args.c1, args.c2, args.c3)
        else:
            return _usage_error("give either --a or all of --c0 --c1 --c2 --c3")
        rho_minus, rho_plus, flags = classify_hyperbolicity_map(v, args.resolution)
    except ValueError as e:
        return _usage_error(str(e))
    try:
        write_hyperbolicity_csv(args.out, rho_minus, rho_plus, flags)
    except OSError as e:
        print(f"I/O failure: {e}", file=sys.stderr)
        return EXIT_IO
    print(f"{int(flags.sum())} of {flags.size} samples nonhyperbolic -> {args.out}")
    return EXIT_OK


def cmd_list(_args: argparse.Namespace) -> int:
    for spec in builtin_scenarios():
        v = spec.velocities
        print(
            f"{spec.name}: {spec.family}, L={spec.length}, N={spec.ca.n_cells}, "
            f"M={spec.pde.m}, t_end={spec.t_end}, MC={spec.ca.mc_runs}, "
            f"c=({v.c0}, {v.c1}, {v.c2}, {v.c3}), eps={spec.pde.eps}"
        )
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pedflow", description=__doc__)
    sub = parser.add_subparsers(dest="cmd", required=True)

    run = sub.add_parser("run", help="run one tier of a scenario")
    run.add_argument("tier", choices=["ca", "meso", "pde"])
    run.add_argument("scenario", help="built-in scenario name or scenario JSON path")
    run.add_argument("--outdir", required=True)
    run.add_argument("--seed", type=int, default=None)
    run.add_argument("--mc-runs", type=int, default=None, dest="mc_runs")
    run.add_argument("--eps", type=float, default=None)
    run.add_argument("--dx", type=float, default=None)
    run.add_argument("--t-end", type=float, default=None, dest="t_end")
    run.add_argument("--snapshots", type=str, default=None, help="comma-separated times")
    run.add_argument("--literal-rates", action="store_true", dest="literal_rates")
    run.set_defaults(func=cmd_run)

    cmp_p = sub.add_parser("compare", help="bin run A onto run B's grid and measure distances")
    cmp_p.add_argument("run_a")
    cmp_p.add_argument("run_b")
    cmp_p.add_argument("--outdir", required=True)
    cmp_p.set_defaults(func=cmd_compare)

    hyp = sub.add_parser("hypmap", help="sample the nonhyperbolic region of the density square")
    hyp.add_argument("--a", type=float, default=None, help="slowdown strength: c1=c2=1/a, c3=1/(2a)")
    hyp.add_argument("--c0", type=float, default=None)
    hyp.add_argument("--c1", type=float, default=None)
    hyp.add_argument("--c2", type=float, default=None)
    hyp.add_argument("--c3", type=float, default=None)
    hyp.add_argument("--resolution", type=int, default=256)
    hyp.add_argument("--out", required=True)
    hyp.set_defaults(func=cmd_hypmap)

    ls = sub.add_parser("list-scenarios", help="print the built-in scenarios")
    ls.set_defaults(func=cmd_list)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
