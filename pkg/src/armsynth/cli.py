"""Command-line surface.

Subcommands: synth, evaluate, ik, optimize, compare, sweep-dof, export-urdf.
Configuration is a single JSON document with every field defaulted; angles in
config files are degrees and are converted to radians at this boundary (the
library API is radians-only).  Design and task files are radians.

Exit codes: 0 success, 2 invalid input, 3 no solution found.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import dataclass, field

import numpy as np

from .demonstration import (
    link_fraction_anchors,
    load_task,
    save_task,
    sine_joint_path,
    synthesize_task,
)
from .fitness import FitnessWeights, IKSettings, format_report, robot_fitness, temporal_fitness
from .harness import compare_algorithms, sweep_dof, write_json_atomic, write_text_atomic
from .kinematics import DesignLimits, DHLinkParams, RobotDesign, check_design_limits
from .optimize import PSOConfig, run_design_optimization
from .urdf import design_to_urdf

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_NO_SOLUTION = 3

DEFAULT_CONFIG = {
    "task": None,
    "n": 3,
    "algorithm": "rapso",
    "seed": 0,
    "out": "results",
    "workers": 1,
    "delta_m": 0.01,
    "tool": None,
    "search_tool": False,
    "limits": {
        "alpha_min_deg": -90.0,
        "alpha_max_deg": 90.0,
        "a_max": 0.5,
        "d_max": 0.5,
        "q_min_deg": -180.0,
        "q_max_deg": 180.0,
        "L_min": 0.6,
        "L_max": 1.2,
        "epsilon_axis": 1e-3,
    },
    "weights": {"w0": 0.0, "w": [1 / 6, 1 / 3, 1 / 2], "lambda_f": 15.0, "lambda_E": 5.0},
    "ik": {
        "epsilon_deg": 10.0,
        "ee_gate": 1e-3,
        "particles": 40,
        "iterations": 60,
        "stall_iterations": 8,
        "stall_tol": 1e-8,
        "polish_steps": 12,
        "continuity_norm": "euclidean",
        "gate_particles": 40,
        "gate_iterations": 60,
        "gate_restarts": 2,
    },
    "pso": {
        "N": 400,
        "M": 200,
        "w": 0.8,
        "c1": 0.4,
        "c2": 0.6,
        "c_min": -0.5,
        "c_max": 0.5,
        "D": 2,
        "stall_iterations": 20,
        "stall_tol": 1e-4,
    },
    "compare": {"n": [3], "D": [2], "seeds": [0, 1]},
    "sweep": {"n": [3, 4, 5, 6], "seeds": [0, 1]},
}


@dataclass
class RunConfig:
    """Parsed configuration with all angle fields already in radians."""

    task_path: str | None
    n: int
    algorithm: str
    seed: int
    out: str
    workers: int
    delta_m: float
    limits: DesignLimits
    weights: FitnessWeights
    ik: IKSettings
    pso: PSOConfig
    tool: DHLinkParams | None
    search_tool: bool
    compare: dict = field(default_factory=dict)
    sweep: dict = field(default_factory=dict)
    raw: dict = field(default_factory=dict)


def _merge(base, override):
    out = dict(base)
    for k, v in override.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = v
    return out


def _apply_set_overrides(doc, assignments):
    for item in assignments or []:
        if "=" not in item:
            raise ValueError(f"--set expects key=value, got {item!r}")
        key, _, value = item.partition("=")
        node = doc
        parts = key.split(".")
        for p in parts[:-1]:
            node = node.setdefault(p, {})
        node[parts[-1]] = json.loads(value)
    return doc


def load_config(path=None, set_overrides=None, **flag_overrides) -> RunConfig:
    """Assemble the run configuration from defaults, file, --set pairs, and flags."""
    doc = json.loads(json.dumps(DEFAULT_CONFIG))
    if path:
        with open(path) as fh:
            doc = _merge(doc, json.load(fh))
    doc = _apply_set_overrides(doc, set_overrides)
    for key, value in flag_overrides.items():
        if value is None:
            continue
        if key == "continuity_norm":
            doc["ik"]["continuity_norm"] = value
        else:
            doc[key] = value

    lim = doc["limits"]
    limits = DesignLimits(
        alpha_min=math.radians(lim["alpha_min_deg"]),
        alpha_max=math.radians(lim["alpha_max_deg"]),
        a_max=lim["a_max"],
        d_max=lim["d_max"],
        q_min=math.radians(lim["q_min_deg"]),
        q_max=math.radians(lim["q_max_deg"]),
        L_min=lim["L_min"],
        L_max=lim["L_max"],
        epsilon_axis=lim["epsilon_axis"],
    )
    wdoc = doc["weights"]
    w = np.asarray(wdoc["w"], dtype=float)
    total = wdoc["w0"] + w.sum()
    if abs(total - 1.0) > 1e-9:
        print(f"warning: weights sum to {total:.6f}; normalizing", file=sys.stderr)
        w = w / total
        wdoc = dict(wdoc, w0=wdoc["w0"] / total)
    weights = FitnessWeights(w0=wdoc["w0"], w=w, lambda_f=wdoc["lambda_f"], lambda_E=wdoc["lambda_E"])
    ik = doc["ik"]
    settings = IKSettings(
        epsilon=math.radians(ik["epsilon_deg"]),
        ee_gate=ik["ee_gate"],
        particles=ik["particles"],
        iterations=ik["iterations"],
        stall_iterations=ik["stall_iterations"],
        stall_tol=ik["stall_tol"],
        polish_steps=ik["polish_steps"],
        continuity_norm=ik["continuity_norm"],
        gate_particles=ik["gate_particles"],
        gate_iterations=ik["gate_iterations"],
        gate_restarts=ik["gate_restarts"],
    )
    pso = PSOConfig(**doc["pso"])
    tool = None
    if doc.get("tool") is not None:
        t = doc["tool"]
        tool = DHLinkParams(math.radians(t["alpha_deg"]), t["a"], t["d"])
    return RunConfig(
        task_path=doc.get("task"),
        n=int(doc["n"]),
        algorithm=doc["algorithm"],
        seed=int(doc["seed"]),
        out=doc["out"],
        workers=int(doc["workers"]),
        delta_m=float(doc["delta_m"]),
        limits=limits,
        weights=weights,
        ik=settings,
        pso=pso,
        tool=tool,
        search_tool=bool(doc["search_tool"]),
        compare=doc.get("compare", {}),
        sweep=doc.get("sweep", {}),
        raw=doc,
    )


def _cfg(args, **extra):
    return load_config(
        getattr(args, "config", None),
        getattr(args, "set", None),
        seed=getattr(args, "seed", None),
        workers=getattr(args, "workers", None),
        continuity_norm=getattr(args, "continuity_norm", None),
        **extra,
    )


def _require_new_path(path, force):
    if os.path.exists(path) and not force:
        raise FileExistsError(f"{path} exists; pass --force to overwrite")


def _load_design_or_exit(path):
    try:
        return RobotDesign.load(path)
    except (OSError, ValueError, KeyError) as exc:
        print(f"error: cannot read design {path}: {exc}", file=sys.stderr)
        raise SystemExit(EXIT_INVALID) from exc


def _load_task_or_exit(path):
    try:
        return load_task(path)
    except (OSError, ValueError) as exc:
        print(f"error: cannot read task {path}: {exc}", file=sys.stderr)
        raise SystemExit(EXIT_INVALID) from exc


def cmd_synth(args):
    cfg = _cfg(args)
    design = _load_design_or_exit(args.design)
    with open(args.trajectory) as fh:
        spec = json.load(fh)
    frames = int(spec.get("frames", 60))
    kind = spec.get("kind", "sine")
    n = design.dof
    if kind == "sine":
        path = sine_joint_path(
            n,
            frames,
            center=spec.get("center"),
            amplitude=spec.get("amplitude", 0.5),
            cycles=spec.get("cycles", 1.0),
            phase=spec.get("phase"),
            epsilon=cfg.ik.epsilon,
        )
    elif kind == "linear":
        q0 = np.asarray(spec["q_start"], dtype=float)
        q1 = np.asarray(spec["q_end"], dtype=float)
        path = np.linspace(q0, q1, frames)
    elif kind == "explicit":
        path = np.asarray(spec["path"], dtype=float)
    else:
        print(f"error: unknown trajectory kind {kind!r}", file=sys.stderr)
        return EXIT_INVALID
    if args.anchors == "link-ends":
        anchors = link_fraction_anchors(design)
    else:
        anchors = np.asarray([float(v) for v in args.anchors.split(",")])
    rng = np.random.default_rng(cfg.seed)
    try:
        task = synthesize_task(design, path, anchors, noise=args.noise, rng=rng, limits=cfg.limits, epsilon=cfg.ik.epsilon)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    _require_new_path(args.out, args.force)
    save_task(task, args.out, fmt=args.format)
    print(f"wrote {task.T + 1} frames, m={task.m} -> {args.out}")
    return EXIT_OK


def _evaluate(design, task, cfg):
    rng = np.random.default_rng(cfg.seed)
    return robot_fitness(design, task, cfg.ik, cfg.weights, limits=cfg.limits, rng=rng, delta_m=cfg.delta_m)


def cmd_evaluate(args):
    cfg = _cfg(args)
    design = _load_design_or_exit(args.design)
    task = _load_task_or_exit(args.task)
    report = _evaluate(design, task, cfg)
    doc = report.to_json_dict()
    text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    if args.out:
        _require_new_path(args.out, args.force)
        write_text_atomic(args.out, text)
    else:
        sys.stdout.write(text)
    print(format_report(report), file=sys.stderr)
    return EXIT_OK if report.valid else EXIT_INVALID


def cmd_ik(args):
    cfg = _cfg(args)
    design = _load_design_or_exit(args.design)
    task = _load_task_or_exit(args.task)
    if not 0 <= args.frame <= task.T:
        print(f"error: frame {args.frame} outside 0..{task.T}", file=sys.stderr)
        return EXIT_INVALID
    q_prev = None
    if args.qprev:
        q_prev = np.asarray([float(v) for v in args.qprev.split(",")])
        if q_prev.size != design.dof:
            print("error: --qprev length must match design DOF", file=sys.stderr)
            return EXIT_INVALID
    rng = np.random.default_rng(cfg.seed)
    G, q = temporal_fitness(design, task.frames[args.frame], q_prev, cfg.ik, cfg.weights, limits=cfg.limits, rng=rng)
    doc = {"frame": args.frame, "G_mm": 1000.0 * G, "q": [float(v) for v in q]}
    sys.stdout.write(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return EXIT_OK


def cmd_optimize(args):
    cfg = _cfg(args, task=args.task, n=args.n, algorithm=args.algorithm, out=args.out)
    if not cfg.task_path:
        print("error: no task given (config 'task' or --task)", file=sys.stderr)
        return EXIT_INVALID
    task = _load_task_or_exit(cfg.task_path)
    result = run_design_optimization(
        task,
        cfg.pso,
        cfg.limits,
        cfg.weights,
        cfg.ik,
        algorithm=cfg.algorithm,
        seed=cfg.seed,
        n=cfg.n,
        tool=cfg.tool,
        search_tool=cfg.search_tool,
        delta_m=cfg.delta_m,
    )
    os.makedirs(cfg.out, exist_ok=True)
    tag = f"{cfg.algorithm}_n{cfg.n}_seed{cfg.seed}"
    result_path = os.path.join(cfg.out, f"result_{tag}.json")
    _require_new_path(result_path, args.force)
    write_json_atomic(result_path, result.to_json_dict())
    if result.no_solution:
        print(f"no valid design found; wrote {result_path}", file=sys.stderr)
        return EXIT_NO_SOLUTION
    design_path = os.path.join(cfg.out, f"design_{tag}.json")
    _require_new_path(design_path, args.force)
    result.design.save(design_path)
    summary = [
        f"algorithm: {cfg.algorithm} (n={cfg.n}, seed={cfg.seed})",
        f"iterations: {result.iterations_run}",
        format_report(result.report),
        f"design rows (alpha rad, a m, d m): "
        + "; ".join(f"({lk.alpha:.3f}, {lk.a:.3f}, {lk.d:.3f})" for lk in result.design.links),
    ]
    summary_path = os.path.join(cfg.out, f"summary_{tag}.txt")
    _require_new_path(summary_path, args.force)
    write_text_atomic(summary_path, "\n".join(summary) + "\n")
    print("\n".join(summary))
    return EXIT_OK


def cmd_compare(args):
    cfg = _cfg(args, task=args.task, out=args.out)
    if not cfg.task_path:
        print("error: no task given", file=sys.stderr)
        return EXIT_INVALID
    task = _load_task_or_exit(cfg.task_path)
    grid = cfg.compare
    table = compare_algorithms(
        task,
        cfg.pso,
        cfg.limits,
        cfg.weights,
        cfg.ik,
        n_list=grid.get("n", [cfg.n]),
        D_list=grid.get("D", [cfg.pso.D]),
        seeds=grid.get("seeds", [0, 1]),
        out_dir=cfg.out,
        workers=cfg.workers,
        delta_m=cfg.delta_m,
    )
    sys.stdout.write(table.to_csv())
    return EXIT_OK


def cmd_sweep_dof(args):
    cfg = _cfg(args, task=args.task, out=args.out)
    if not cfg.task_path:
        print("error: no task given", file=sys.stderr)
        return EXIT_INVALID
    task = _load_task_or_exit(cfg.task_path)
    grid = cfg.sweep
    series = sweep_dof(
        task,
        cfg.pso,
        cfg.limits,
        cfg.weights,
        cfg.ik,
        n_range=grid.get("n", [3, 4, 5, 6]),
        seeds=grid.get("seeds", [0, 1]),
        out_dir=cfg.out,
        algorithm=cfg.algorithm,
        workers=cfg.workers,
        delta_m=cfg.delta_m,
    )
    for row in series:
        print(row)
    return EXIT_OK


def cmd_export_urdf(args):
    cfg = _cfg(args)
    design = _load_design_or_exit(args.design)
    violations = check_design_limits(design, cfg.limits)
    if violations:
        print("error: design violates limits: " + "; ".join(violations), file=sys.stderr)
        return EXIT_INVALID
    xml = design_to_urdf(design, cfg.limits, name=args.name)
    _require_new_path(args.out, args.force)
    write_text_atomic(args.out, xml)
    print(f"wrote {args.out}")
    return EXIT_OK


def _add_common(p):
    p.add_argument("--config", help="JSON config file (defaults baked in; angles in degrees)")
    p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config field, e.g. --set pso.N=100")
    p.add_argument("--seed", type=int, default=None, help="run seed")
    p.add_argument("--workers", type=int, default=None, help="parallel runs for compare/sweep")
    p.add_argument("--continuity-norm", choices=["euclidean", "per-joint"], default=None, dest="continuity_norm",
                   help="norm of the frame-to-frame joint continuity bound")
    p.add_argument("--force", action="store_true", help="overwrite existing output files")


def build_parser():
    parser = argparse.ArgumentParser(prog="armsynth", description="Arm design synthesis from recorded whole-arm demonstrations")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="synthesize a task file from a known design and joint trajectory")
    _add_common(p)
    p.add_argument("--design", required=True)
    p.add_argument("--trajectory", required=True, help="trajectory spec JSON (kind: sine|linear|explicit)")
    p.add_argument("--noise", type=float, default=0.0, help="uniform marker noise amplitude (m)")
    p.add_argument("--anchors", default="link-ends", help="comma list of arc anchors in (0,1], or 'link-ends'")
    p.add_argument("--format", choices=["json", "csv"], default="json")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("evaluate", help="evaluate a design against a task")
    _add_common(p)
    p.add_argument("--design", required=True)
    p.add_argument("--task", required=True)
    p.add_argument("--out", help="write the report JSON here instead of stdout")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("ik", help="solve the multi-point IK of a single frame")
    _add_common(p)
    p.add_argument("--design", required=True)
    p.add_argument("--task", required=True)
    p.add_argument("--frame", type=int, default=0)
    p.add_argument("--qprev", help="comma list of joint values seeding the continuity constraint")
    p.set_defaults(func=cmd_ik)

    p = sub.add_parser("optimize", help="search for the best design for a task")
    _add_common(p)
    p.add_argument("--task")
    p.add_argument("--n", type=int, default=None, help="DOF count")
    p.add_argument("--algorithm", choices=["pso", "rapso"], default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("compare", help="paired PSO vs validity-aware comparison over n/D/seed grids")
    _add_common(p)
    p.add_argument("--task")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("sweep-dof", help="median fitness per DOF count")
    _add_common(p)
    p.add_argument("--task")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_sweep_dof)

    p = sub.add_parser("export-urdf", help="export a design as URDF")
    _add_common(p)
    p.add_argument("--design", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--name", default="synthesized_arm")
    p.set_defaults(func=cmd_export_urdf)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        code = args.func(args)
    except FileExistsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        code = EXIT_INVALID
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        code = EXIT_INVALID
    return code


if __name__ == "__main__":
    sys.exit(main())
