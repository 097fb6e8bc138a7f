"""Command-line interface.

Subcommands: ``plan`` (solve one scenario), ``sweep`` (cost curves over a
parameter), ``coverage`` (best-link SNR grid), ``gen-scene`` (synthetic map),
``validate`` (check a config/scene pair).  Exit codes: 0 success,
2 infeasible planning instance, 1 usage or I/O error.

All outputs are plain delimited text or JSON with versioned schema headers,
written deterministically: two runs on the same inputs are byte-identical,
including with ``--threads`` greater than one.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .activation import compute_activation, write_audit_table
from .costs import build_catalog, ris_cost
from .planner import Plan, PlanningInstance, plan_min_cost
from .scenario import (ScenarioConfig, SweepSpec, apply_overrides, config_to_dict,
                       generate_scene, load_config, load_scene, load_sweep,
                       save_scene)
from .scene import generate_ncr_sites, generate_ris_sites, generate_test_points, renumber_sites

EXIT_OK = 0
EXIT_IO = 1
EXIT_INFEASIBLE = 2


def build_problem(cfg: ScenarioConfig, scn, devices=None, threads: int = 1):
    """Scene geometry -> sites, test points, device catalog, activation."""
    sites = renumber_sites(
        generate_ris_sites(scn, cfg.ris_spacing_m, cfg.ris_height_m)
        + generate_ncr_sites(scn, cfg.ncr_height_m))
    tps = generate_test_points(scn, cfg.tp_step_m, cfg.ue_height_m)
    if devices is None:
        devices = build_catalog(cfg.ris_dims, cfg.ncr_gains_db, cfg.costs)
    act = compute_activation(scn, sites, devices, tps, cfg.radio, cfg.blockage,
                             cfg.snr_threshold_db,
                             bs_shape=cfg.arrays.bs_shape,
                             ncr_panel_shape=cfg.arrays.ncr_panel_shape,
                             ue_elements=cfg.arrays.ue_elements,
                             threads=threads)
    return sites, tps, devices, act


def _resolve_scene_path(cfg_path: str, scene: str) -> Path:
    p = Path(scene)
    return p if p.is_absolute() else Path(cfg_path).parent / p


def _load(args) -> tuple:
    cfg = load_config(args.config)
    if args.param:
        cfg = apply_overrides(cfg, args.param)
    scn = load_scene(_resolve_scene_path(args.config, cfg.scene))
    return cfg, scn


def _write_manifest(outdir: Path, command: str, cfg: ScenarioConfig, args,
                    counts: dict, result: dict) -> None:
    manifest = {
        "schema": "sreplan-run/1",
        "tool_version": __version__,
        "command": command,
        "config": config_to_dict(cfg),
        "threads": args.threads,
        "counts": counts,
        "result": result,
    }
    with open(outdir / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2)
        fh.write("\n")


def _write_plan_table(path: Path, plan: Plan, sites) -> None:
    by_id = {s.id: s for s in sites}
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# schema: sreplan-plan/1\n")
        fh.write(f"# status: {plan.status}\n")
        fh.write(f"# total_cost: {plan.total_cost:.6f}\n")
        fh.write("site_id\tsite_kind\tx\ty\tz\tdevice\tcost\n")
        for sid, dev in plan.installs:
            s = by_id[sid]
            fh.write(f"{sid}\t{s.kind}\t{s.position.x:.3f}\t{s.position.y:.3f}\t"
                     f"{s.position.z:.3f}\t{dev.label}\t{dev.cost:.6f}\n")


def _write_coverage_table(path: Path, tps, plan: Plan, act) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# schema: sreplan-coverage/1\n")
        fh.write("tp_id\tx\ty\tbs_covered\tcoverage_count\n")
        for i, tp in enumerate(tps):
            fh.write(f"{tp.id}\t{tp.position.x:.3f}\t{tp.position.y:.3f}\t"
                     f"{int(act.bs_active[i])}\t{int(plan.coverage_count[i])}\n")


def _write_uncoverable(path: Path, tps, uncoverable) -> None:
    by_idx = {tp.id: tp for tp in tps}
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# schema: sreplan-uncoverable/1\n")
        fh.write("tp_id\tx\ty\n")
        for t in uncoverable:
            tp = by_idx[t]
            fh.write(f"{t}\t{tp.position.x:.3f}\t{tp.position.y:.3f}\n")


def cmd_plan(args) -> int:
    cfg, scn = _load(args)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    sites, tps, devices, act = build_problem(cfg, scn, threads=args.threads)
    inst = PlanningInstance(activation=act, sites=sites, devices=devices,
                            multiplicity=cfg.multiplicity)
    plan = plan_min_cost(inst)
    counts = {"sites": len(sites), "test_points": len(tps), "devices": len(devices)}
    result = {"status": plan.status, "total_cost": round(plan.total_cost, 9)
              if plan.status == "optimal" else None,
              "installs": len(plan.installs), "ris": plan.num_ris, "ncr": plan.num_ncr,
              "uncoverable": list(plan.uncoverable)}
    _write_manifest(outdir, "plan", cfg, args, counts, result)
    if args.audit:
        write_audit_table(outdir / "activation.tsv", act, tps, sites, devices)
    if plan.status == "infeasible":
        _write_uncoverable(outdir / "uncoverable.tsv", tps, plan.uncoverable)
        print(f"infeasible: {len(plan.uncoverable)} test point(s) cannot reach "
              f"{cfg.multiplicity}-fold coverage (see uncoverable.tsv)", file=sys.stderr)
        return EXIT_INFEASIBLE
    _write_plan_table(outdir / "plan.tsv", plan, sites)
    _write_coverage_table(outdir / "coverage.tsv", tps, plan, act)
    print(f"plan: cost {plan.total_cost:.6f}, {plan.num_ris} ris + {plan.num_ncr} ncr "
          f"at {len(plan.installs)} sites")
    return EXIT_OK


def cmd_coverage(args) -> int:
    cfg, scn = _load(args)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    sites, tps, devices, act = build_problem(cfg, scn, threads=args.threads)
    stack = np.concatenate([act.bs_snr_db[:, None],
                            act.device_snr_db.reshape(len(tps), -1)], axis=1)
    best_idx = np.argmax(stack, axis=1)  # first maximum: deterministic
    best_snr = stack[np.arange(len(tps)), best_idx]
    with open(outdir / "coverage_grid.tsv", "w", encoding="utf-8") as fh:
        fh.write("# schema: sreplan-coverage-grid/1\n")
        fh.write("tp_id\tx\ty\tbest_snr_db\tserver\n")
        for i, tp in enumerate(tps):
            if best_snr[i] == float("-inf"):
                server = "none"
            elif best_idx[i] == 0:
                server = "bs"
            else:
                ci, di = divmod(int(best_idx[i]) - 1, len(devices))
                server = f"cs{sites[ci].id}:{devices[di].label}"
            fh.write(f"{tp.id}\t{tp.position.x:.3f}\t{tp.position.y:.3f}\t"
                     f"{best_snr[i]:.3f}\t{server}\n")
    counts = {"sites": len(sites), "test_points": len(tps), "devices": len(devices)}
    _write_manifest(outdir, "coverage", cfg, args, counts, {"status": "ok"})
    print(f"coverage grid: {len(tps)} test points")
    return EXIT_OK


def _sweep_cells(cfg: ScenarioConfig, scene_path: Path, spec: SweepSpec,
                 threads: int) -> list:
    """Rows for one scenario: one dict per sweep value, in value order."""
    scn = load_scene(scene_path)
    rows = []

    def plan_row(value, sites, devices, act, multiplicity):
        inst = PlanningInstance(activation=act, sites=sites, devices=devices,
                                multiplicity=multiplicity)
        plan = plan_min_cost(inst)
        return {"scene": scene_path.name, "parameter": spec.parameter, "value": value,
                "status": plan.status,
                "cost": plan.total_cost if plan.status == "optimal" else None,
                "installs": len(plan.installs), "ris": plan.num_ris, "ncr": plan.num_ncr}

    if spec.parameter in ("price_ratio", "snr_threshold", "multiplicity"):
        # The SNR tables do not depend on the swept quantity: reuse them.
        sites, tps, devices, act = build_problem(cfg, scn, threads=threads)
        for v in spec.values:
            if spec.parameter == "price_ratio":
                ris_base = ris_cost(int(cfg.ris_dims[0]) ** 2, cfg.costs)
                swapped = [replace(d, cost=float(v) * ris_base) if d.kind == "ncr" else d
                           for d in devices]
                rows.append(plan_row(v, sites, swapped, act, cfg.multiplicity))
            elif spec.parameter == "snr_threshold":
                rows.append(plan_row(v, sites, devices, act.with_threshold(float(v)),
                                     cfg.multiplicity))
            else:
                rows.append(plan_row(v, sites, devices, act, int(v)))
        return rows

    for v in spec.values:
        if spec.parameter == "ris_dim":
            cell_cfg = replace(cfg, ris_dims=(int(v),))
        else:  # ncr_gain
            cell_cfg = replace(cfg, ncr_gains_db=(float(v),))
        sites, tps, devices, act = build_problem(cell_cfg, scn, threads=threads)
        rows.append(plan_row(v, sites, devices, act, cfg.multiplicity))
    return rows


def cmd_sweep(args) -> int:
    cfg, _ = _load(args)
    spec = load_sweep(args.sweep)
    scene_paths = [(_resolve_scene_path(args.sweep, s)) for s in spec.scenes] \
        if spec.scenes else [_resolve_scene_path(args.config, cfg.scene)]
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)

    if args.threads > 1:
        with ThreadPoolExecutor(max_workers=args.threads) as pool:
            per_scene = list(pool.map(
                lambda p: _sweep_cells(cfg, p, spec, threads=1), scene_paths))
    else:
        per_scene = [_sweep_cells(cfg, p, spec, threads=1) for p in scene_paths]

    with open(outdir / "sweep.tsv", "w", encoding="utf-8") as fh:
        fh.write("# schema: sreplan-sweep/1\n")
        fh.write("scene\tparameter\tvalue\tstatus\ttotal_cost\tinstalls\tris\tncr\n")
        for rows in per_scene:
            for r in rows:
                cost = "NA" if r["cost"] is None else f"{r['cost']:.6f}"
                fh.write(f"{r['scene']}\t{r['parameter']}\t{r['value']:g}\t{r['status']}\t"
                         f"{cost}\t{r['installs']}\t{r['ris']}\t{r['ncr']}\n")
        for vi, v in enumerate(spec.values):
            cells = [rows[vi] for rows in per_scene]
            if any(c["cost"] is None for c in cells):
                avg = "NA"
            else:
                avg = f"{sum(c['cost'] for c in cells) / len(cells):.6f}"
            n = len(cells)
            fh.write(f"(average)\t{spec.parameter}\t{v:g}\taggregate\t{avg}\t"
                     f"{sum(c['installs'] for c in cells) / n:.2f}\t"
                     f"{sum(c['ris'] for c in cells) / n:.2f}\t"
                     f"{sum(c['ncr'] for c in cells) / n:.2f}\n")
    print(f"sweep: {len(scene_paths)} scenario(s) x {len(spec.values)} value(s)")
    return EXIT_OK


def cmd_gen_scene(args) -> int:
    scn = generate_scene(seed=args.seed, size=args.size, n_buildings=args.buildings,
                         building_height=args.height, bs_height_offset=args.bs_offset)
    save_scene(scn, args.out)
    print(f"scene: {len(scn.buildings)} buildings in {args.size:g} x {args.size:g} m "
          f"-> {args.out}")
    return EXIT_OK


def cmd_validate(args) -> int:
    cfg, scn = _load(args)
    sites = renumber_sites(
        generate_ris_sites(scn, cfg.ris_spacing_m, cfg.ris_height_m)
        + generate_ncr_sites(scn, cfg.ncr_height_m))
    tps = generate_test_points(scn, cfg.tp_step_m, cfg.ue_height_m)
    devices = build_catalog(cfg.ris_dims, cfg.ncr_gains_db, cfg.costs)
    print(f"ok: {len(scn.buildings)} buildings, {len(sites)} candidate sites, "
          f"{len(tps)} test points, {len(devices)} device types")
    return EXIT_OK


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sreplan",
        description="Cost-minimal planning of reflecting surfaces and repeaters "
                    "for mmWave coverage.")
    sub = parser.add_subparsers(dest="command")

    def common(p, needs_out=True):
        p.add_argument("--config", required=True, help="scenario config JSON")
        if needs_out:
            p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--seed", type=int, default=None, help="override config seed")
        p.add_argument("--threads", type=int, default=1)
        p.add_argument("--param", action="append", default=[],
                       metavar="KEY=VALUE", help="config override (repeatable)")

    p_plan = sub.add_parser("plan", help="solve one scenario")
    common(p_plan)
    p_plan.add_argument("--audit", action="store_true",
                        help="also dump the full activation table")
    p_plan.set_defaults(func=cmd_plan)

    p_sweep = sub.add_parser("sweep", help="cost curves over a parameter")
    common(p_sweep)
    p_sweep.add_argument("--sweep", required=True, help="sweep spec JSON")
    p_sweep.set_defaults(func=cmd_sweep)

    p_cov = sub.add_parser("coverage", help="best-link SNR grid")
    common(p_cov)
    p_cov.set_defaults(func=cmd_coverage)

    p_gen = sub.add_parser("gen-scene", help="generate a synthetic scene")
    p_gen.add_argument("--out", required=True, help="output scene JSON path")
    p_gen.add_argument("--seed", type=int, default=0)
    p_gen.add_argument("--size", type=float, default=400.0)
    p_gen.add_argument("--buildings", type=int, default=12)
    p_gen.add_argument("--height", type=float, default=6.0)
    p_gen.add_argument("--bs-offset", type=float, default=1.5,
                       help="BS mast height above its host roof")
    p_gen.set_defaults(func=cmd_gen_scene)

    p_val = sub.add_parser("validate", help="check a config/scene pair")
    common(p_val, needs_out=False)
    p_val.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse exits 2 on usage errors; remap to 1
        return EXIT_OK if exc.code in (0, None) else EXIT_IO
    if not getattr(args, "command", None):
        parser.print_help()
        return EXIT_IO
    if getattr(args, "seed", None) is not None and hasattr(args, "config"):
        args.param = list(args.param) + [f"seed={args.seed}"]
    try:
        return args.func(args)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
