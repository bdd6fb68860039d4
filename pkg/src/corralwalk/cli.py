"""Command-line front end.

Subcommands map one-to-one onto the reference experiments: ``corral``
(static confinement), ``herd`` (single-shot transport), ``multistation``
(chained transport), ``disorder-sweep`` (coin-noise ensembles),
``sigma-sweep`` (packet-width scan), ``oracle-check`` (momentum-space
cross-validation) and ``frames`` (per-step spin-resolved dumps).  Every
invocation writes ``report.json`` with the same top-level keys; failures
exit nonzero but still write the report with the error recorded.
"""

from __future__ import annotations

import argparse
import datetime
import sys
import time
from pathlib import Path

import numpy as np

from .analysis import (BlochGrid, average_fidelity, fidelity,
                       grid_average_distribution, packet_center)
from .disorder import default_tau, disorder_sweep
from .engine import RecordPolicy, evolve
from .errors import CorralwalkError, PlanError
from .kspace import analytic_split_state, fft_evolve, free_walk_lattice
from .planio import (build_report, export_frames, export_grid_heatmap,
                     export_heatmap, parse_plan, plan_to_dict, write_report)
from .schedule import CompiledProtocol, compile_plan
from .state import BlochSpin, GaussianSpec, gaussian_state

PROTOCOL_STATIONS = {"corral": (1, 1), "herd": (2, 2), "multistation": (1, 99)}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="corralwalk",
        description="simulate gate-scheduled quantum-walk confinement and transport")
    sub = ap.add_subparsers(dest="command", required=True)

    def add_common(p, plan_required=True):
        p.add_argument("--plan", required=plan_required, help="plan JSON path")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--seed", type=int, default=0, help="master seed (u64)")

    for name in ("corral", "herd", "multistation"):
        p = sub.add_parser(name, help=f"run the {name} protocol")
        add_common(p)
        p.add_argument("--grid", action="store_true",
                       help="average fidelity over the 451-state spin grid")
        p.add_argument("--stride", type=int, default=None,
                       help="heatmap sampling stride (default: plan setting or 1)")
        p.add_argument("--no-heatmap", action="store_true")

    p = sub.add_parser("disorder-sweep", help="coin-noise ensemble statistics")
    add_common(p)
    p.add_argument("--p-max", type=float, default=0.001,
                   help="largest relative deviation (fraction, default 0.1%%)")
    p.add_argument("--p-step", type=float, default=0.0001)
    p.add_argument("--realizations", type=int, default=100)
    p.add_argument("--kinds", default="static,dynamic,fluctuating")
    p.add_argument("--variant", default=None,
                   help="all | q_only | phase_only (default: plan or all)")

    p = sub.add_parser("sigma-sweep", help="fidelity vs packet width")
    add_common(p)
    p.add_argument("--s-min", type=int, default=1)

    p = sub.add_parser("oracle-check", help="cross-validate against the exact evolver")
    add_common(p, plan_required=False)
    p.add_argument("--s", type=float, default=10.0)
    p.add_argument("--t", type=int, default=200)

    p = sub.add_parser("frames", help="per-step spin-resolved distribution dump")
    add_common(p)
    p.add_argument("--floor", type=float, default=1e-12)
    return ap


def _compiled_parameters(pf, compiled: CompiledProtocol) -> dict:
    return {
        "plan": plan_to_dict(pf),
        "lattice": {"j_min": compiled.lattice.j_min, "j_max": compiled.lattice.j_max},
        "events": [[e.time, e.site, e.action] for e in compiled.schedule.events],
        "t_measure": compiled.t_measure,
        "x": compiled.x,
        "rest_center": compiled.rest_center,
        "estimates": compiled.estimates,
    }


def _fidelity_block(compiled: CompiledProtocol, grid_report=None) -> dict:
    return {
        "t": compiled.t_measure,
        "x": compiled.x,
        "value": compiled.fidelity,
        "grid": grid_report.as_dict() if grid_report else None,
        "curve": [[p.t, p.fidelity] for p in compiled.curve],
    }


def _run_protocol(args) -> dict:
    pf = parse_plan(args.plan)
    lo, hi = PROTOCOL_STATIONS[args.command]
    if not lo <= len(pf.plan.stations) <= hi:
        raise PlanError(
            f"{args.command} expects between {lo} and {hi} stations, "
            f"plan has {len(pf.plan.stations)}")
    compiled = compile_plan(pf.plan, pf.lattice)
    grid_report = None
    if args.grid:
        grid_report = average_fidelity(compiled.schedule, pf.plan.gaussian,
                                       BlochGrid(), compiled.t_measure, compiled.x)
    if not args.no_heatmap:
        stride = args.stride or pf.output.get("heatmap_stride", 1)
        out = Path(args.out) / "heatmap.csv"
        if args.grid:
            times = list(range(0, compiled.t_measure + 1, stride))
            times, rows = grid_average_distribution(
                compiled.schedule, pf.plan.gaussian, BlochGrid(), times)
            export_grid_heatmap(times, rows, compiled.lattice, out, floor=1e-12)
        else:
            traj = evolve(compiled.initial_state(), compiled.schedule,
                          compiled.t_measure,
                          record=RecordPolicy.distributions(stride))
            export_heatmap(traj, out, stride=stride, floor=1e-12)
    return build_report(args.command, _compiled_parameters(pf, compiled),
                        _fidelity_block(compiled, grid_report),
                        seeds={"master_seed": args.seed})


def _run_disorder_sweep(args) -> dict:
    pf = parse_plan(args.plan)
    compiled = compile_plan(pf.plan, pf.lattice)
    kinds = tuple(k.strip() for k in args.kinds.split(",") if k.strip())
    variant = args.variant or (pf.disorder.variant if pf.disorder else "all")
    seed = args.seed or (pf.disorder.master_seed if pf.disorder else 0)
    tau = pf.disorder.tau if pf.disorder and pf.disorder.tau > 0 else default_tau(compiled)
    n_points = int(round(args.p_max / args.p_step)) if args.p_step > 0 else 0
    p_values = [i * args.p_step for i in range(n_points + 1)]
    report = disorder_sweep(compiled, p_values, kinds=kinds, variant=variant,
                            realizations=args.realizations, master_seed=seed,
                            tau=tau)
    fid_block = {
        "t": compiled.t_measure, "x": compiled.x, "value": compiled.fidelity,
        "grid": None,
        "sweep": report.as_dict(),
    }
    params = _compiled_parameters(pf, compiled)
    params["tau"] = report.tau
    params["p_values"] = p_values
    params["variant"] = variant
    return build_report("disorder-sweep", params, fid_block,
                        seeds={"master_seed": seed,
                               "realizations": args.realizations})


def _run_sigma_sweep(args) -> dict:
    pf = parse_plan(args.plan)
    compiled = compile_plan(pf.plan, pf.lattice)
    s_top = int(round(pf.plan.gaussian.s))
    curve = []
    for s in range(args.s_min, s_top + 1):
        g = GaussianSpec(s=float(s), center=pf.plan.gaussian.center)
        psi0 = gaussian_state(g, pf.plan.spin, compiled.lattice)
        fin = evolve(psi0, compiled.schedule, compiled.t_measure).final
        curve.append([s, fidelity(psi0, fin, compiled.x)])
    fid_block = {"t": compiled.t_measure, "x": compiled.x,
                 "value": compiled.fidelity, "grid": None,
                 "sigma_curve": curve}
    return build_report("sigma-sweep", _compiled_parameters(pf, compiled),
                        fid_block, seeds={"master_seed": args.seed})


def _run_oracle_check(args) -> dict:
    gauss = GaussianSpec(s=args.s, center=0)
    lattice = free_walk_lattice(gauss, args.t)
    spin = BlochSpin(np.pi / 4, np.pi / 2)
    psi0 = gaussian_state(gauss, spin, lattice)
    from .engine import CoinField
    from .coins import HADAMARD
    hom = CoinField.uniform(lattice, HADAMARD)
    walked = evolve(psi0, hom, args.t).final
    oracle = fft_evolve(psi0, args.t)
    amp_diff = float(max(np.max(np.abs(walked.up - oracle.up)),
                         np.max(np.abs(walked.down - oracle.down))))
    half = args.t // 2
    semi = fft_evolve(fft_evolve(psi0, half), args.t - half)
    semi_diff = float(max(np.max(np.abs(semi.up - oracle.up)),
                          np.max(np.abs(semi.down - oracle.down))))
    t_ap = min(40, args.t)
    approx = analytic_split_state(spin, args.s, t_ap, lattice)
    exact = fft_evolve(psi0, t_ap)
    ov = abs(complex(np.vdot(approx.up, exact.up)
                     + np.vdot(approx.down, exact.down))) ** 2
    fid_block = {
        "t": args.t, "x": 0, "value": None, "grid": None,
        "max_amplitude_difference": amp_diff,
        "semigroup_difference": semi_diff,
        "split_approx_overlap": {"t": t_ap, "overlap": ov},
    }
    params = {"s": args.s, "t": args.t,
              "lattice": {"j_min": lattice.j_min, "j_max": lattice.j_max}}
    return build_report("oracle-check", params, fid_block,
                        seeds={"master_seed": args.seed})


def _run_frames(args) -> dict:
    pf = parse_plan(args.plan)
    compiled = compile_plan(pf.plan, pf.lattice)
    traj = evolve(compiled.initial_state(), compiled.schedule, compiled.t_measure,
                  record=RecordPolicy.states_at(range(compiled.t_measure + 1)))
    out = Path(args.out) / "frames.csv"
    n = export_frames(traj, out, floor=args.floor)
    fid_block = _fidelity_block(compiled)
    fid_block["frames_written"] = n
    return build_report("frames", _compiled_parameters(pf, compiled), fid_block,
                        seeds={"master_seed": args.seed})


_RUNNERS = {
    "corral": _run_protocol,
    "herd": _run_protocol,
    "multistation": _run_protocol,
    "disorder-sweep": _run_disorder_sweep,
    "sigma-sweep": _run_sigma_sweep,
    "oracle-check": _run_oracle_check,
    "frames": _run_frames,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    code = 0
    try:
        report = _RUNNERS[args.command](args)
    except CorralwalkError as exc:
        report = build_report(args.command, {"plan": getattr(args, "plan", None)},
                              {}, seeds={"master_seed": args.seed},
                              error=f"{type(exc).__name__}: {exc}")
        code = 1
    report["timings"] = {
        "wall_s": round(time.perf_counter() - t0, 3),
        "finished_at": datetime.datetime.now(datetime.timezone.utc).isoformat(),
    }
    write_report(report, out_dir / "report.json")
    if code:
        print(report["error"], file=sys.stderr)
    else:
        fb = report["fidelity"]
        if fb.get("value") is not None:
            print(f"{args.command}: t={fb.get('t')} x={fb.get('x')} "
                  f"F={fb['value']:.4f}")
        else:
            print(f"{args.command}: report written")
    return code


if __name__ == "__main__":
    raise SystemExit(main())
