"""Seeded experiment runner: effort metric, algorithm comparisons, DOF sweeps.

The computational effort of a run is N_v_bar * W: the mean number of valid
agents per iteration up to the convergence iteration W, times W itself.  W is
the first iteration after which the best fitness improves by less than the
stall tolerance for a full stall window, or the iteration cap if that never
happens.  Effort is hardware-independent, so runs on different machines
compare directly.

Every run is persisted as one JSON record carrying the seed and a hash of the
full configuration; comparison tables and sweeps aggregate seed medians and
are emitted as CSV.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from .demonstration import RecordedTask
from .fitness import FitnessWeights, IKSettings
from .kinematics import DesignLimits
from .optimize import OptimizationResult, PSOConfig, run_design_optimization


@dataclass(frozen=True)
class RunRecord:
    """One optimization run reduced to the numbers the tables need."""

    algorithm: str
    seed: int
    n: int
    D: int
    fitness: float
    W: int
    mean_valid: float
    ce: float
    no_solution: bool
    config_hash: str

    def to_json_dict(self):
        doc = asdict(self)
        if not math.isfinite(doc["fitness"]):
            doc["fitness"] = None
        return doc


@dataclass(frozen=True)
class ComparisonRow:
    n: int
    D: int
    fitness_improvement_pct: float
    ce_improvement_pct: float
    pso_runs: int
    rapso_runs: int
    failed_runs: int


@dataclass(frozen=True)
class ComparisonTable:
    """Median paired improvements of the validity-aware variant over standard
    PSO, keyed by (n, D); negative percentages mean the variant is better."""

    rows: tuple[ComparisonRow, ...]

    def mean_rows(self):
        """Per-D means of the improvement columns over all n."""
        out = []
        for D in sorted({r.D for r in self.rows}):
            sub = [r for r in self.rows if r.D == D]
            out.append(
                (
                    D,
                    float(np.mean([r.fitness_improvement_pct for r in sub])),
                    float(np.mean([r.ce_improvement_pct for r in sub])),
                )
            )
        return out

    def to_csv(self):
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(["n", "D", "fitness_improvement_pct", "ce_improvement_pct", "pso_runs", "rapso_runs", "failed_runs"])
        for r in self.rows:
            writer.writerow([r.n, r.D, f"{r.fitness_improvement_pct:.4f}", f"{r.ce_improvement_pct:.4f}", r.pso_runs, r.rapso_runs, r.failed_runs])
        for D, fit, ce in self.mean_rows():
            writer.writerow(["mean", D, f"{fit:.4f}", f"{ce:.4f}", "", "", ""])
        return buf.getvalue()


def convergence_iteration(history, stall_tol=1e-4, stall_iterations=20, iteration_cap=None):
    """First iteration after which improvements stay below stall_tol for a
    full stall window; the cap (default: last recorded iteration) otherwise."""
    records = sorted(history, key=lambda h: h["iter"])
    bests = [float(h["best"]) for h in records]
    iters = [int(h["iter"]) for h in records]
    last = iters[-1] if iters else 0
    cap = last if iteration_cap is None else int(iteration_cap)
    improvements = {}
    for prev, cur, it in zip(bests, bests[1:], iters[1:]):
        if math.isinf(prev) and math.isinf(cur):
            improvements[it] = 0.0
        elif math.isinf(prev):
            improvements[it] = math.inf
        else:
            improvements[it] = prev - cur
    S = int(stall_iterations)
    for tau in range(0, last - S + 1):
        window = [improvements.get(j, 0.0) for j in range(tau + 1, tau + S + 1)]
        if all(v < stall_tol for v in window):
            return tau
    return cap


def computational_effort(history, stall_tol=1e-4, stall_iterations=20, iteration_cap=None):
    """Effort of one run from its {iter, best, n_valid} history.

    Returns (ce, W, mean_valid) with mean_valid averaged over iterations
    1..W (zero when W = 0).
    """
    W = convergence_iteration(history, stall_tol, stall_iterations, iteration_cap)
    counts = {int(h["iter"]): int(h["n_valid"]) for h in history}
    if W <= 0:
        return 0.0, W, 0.0
    window = [counts.get(j, 0) for j in range(1, W + 1)]
    mean_valid = float(np.mean(window))
    return mean_valid * W, W, mean_valid


def config_hash(*parts) -> str:
    """Stable short hash over the JSON rendering of configuration objects."""

    def canon(obj):
        if hasattr(obj, "__dataclass_fields__"):
            return {k: canon(v) for k, v in asdict(obj).items()}
        if isinstance(obj, np.ndarray):
            return obj.tolist()
        if isinstance(obj, dict):
            return {k: canon(v) for k, v in sorted(obj.items())}
        if isinstance(obj, (list, tuple)):
            return [canon(v) for v in obj]
        return obj

    text = json.dumps([canon(p) for p in parts], sort_keys=True)
    return hashlib.sha256(text.encode()).hexdigest()[:12]


def write_json_atomic(path, doc):
    tmp = f"{path}.tmp"
    with open(tmp, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
    os.replace(tmp, path)


def write_text_atomic(path, text):
    tmp = f"{path}.tmp"
    with open(tmp, "w") as fh:
        fh.write(text)
    os.replace(tmp, path)


def record_from_result(result: OptimizationResult, cfg: PSOConfig, cfg_hash: str) -> RunRecord:
    ce, W, mean_valid = computational_effort(
        result.history, stall_tol=cfg.stall_tol, stall_iterations=cfg.stall_iterations, iteration_cap=cfg.M
    )
    fitness = math.inf if result.no_solution else float(result.report.combined)
    return RunRecord(
        algorithm=result.algorithm,
        seed=result.seed,
        n=result.n,
        D=result.D,
        fitness=fitness,
        W=W,
        mean_valid=mean_valid,
        ce=ce,
        no_solution=result.no_solution,
        config_hash=cfg_hash,
    )


def _execute_run(payload):
    (task, cfg, limits, weights, settings, algorithm, seed, n, delta_m) = payload
    return run_design_optimization(
        task, cfg, limits, weights, settings, algorithm=algorithm, seed=seed, n=n, delta_m=delta_m
    )


def _run_jobs(jobs, workers):
    if workers <= 1 or len(jobs) <= 1:
        return [_execute_run(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_execute_run, jobs))


def _persist_record(out_dir, record: RunRecord, result: OptimizationResult):
    if out_dir is None:
        return
    os.makedirs(out_dir, exist_ok=True)
    name = f"run_{record.algorithm}_n{record.n}_D{record.D}_seed{record.seed}_{record.config_hash}.json"
    doc = {"record": record.to_json_dict(), "result": result.to_json_dict()}
    write_json_atomic(os.path.join(out_dir, name), doc)


def compare_algorithms(
    task: RecordedTask,
    cfg: PSOConfig,
    limits: DesignLimits,
    weights: FitnessWeights,
    settings: IKSettings,
    n_list,
    D_list,
    seeds,
    out_dir=None,
    workers: int = 1,
    delta_m: float = 0.01,
) -> ComparisonTable:
    """Paired comparison of standard PSO and the validity-aware variant.

    PSO runs once per (n, seed); the variant once per (n, D, seed) on the
    same seed list.  Improvement percentages compare seed medians; runs that
    found no solution are persisted and counted but excluded from medians.
    """
    seeds = list(seeds)
    if len(seeds) < 2:
        raise ValueError("need at least 2 seeds for a paired comparison")
    cfg_hash = config_hash(cfg, limits, weights, settings, sorted(n_list), sorted(D_list), seeds)

    pso_records = {}
    failed = 0
    for n in n_list:
        jobs = [(task, cfg, limits, weights, settings, "pso", seed, n, delta_m) for seed in seeds]
        results = _run_jobs(jobs, workers)
        recs = []
        for res in results:
            rec = record_from_result(res, cfg, cfg_hash)
            _persist_record(out_dir, rec, res)
            recs.append(rec)
            failed += rec.no_solution
        pso_records[n] = recs

    rows = []
    for n in n_list:
        for D in D_list:
            run_cfg = PSOConfig(
                N=cfg.N, M=cfg.M, w=cfg.w, c1=cfg.c1, c2=cfg.c2,
                c_min=cfg.c_min, c_max=cfg.c_max, D=D,
                stall_iterations=cfg.stall_iterations, stall_tol=cfg.stall_tol,
            )
            jobs = [(task, run_cfg, limits, weights, settings, "rapso", seed, n, delta_m) for seed in seeds]
            results = _run_jobs(jobs, workers)
            recs = []
            for res in results:
                rec = record_from_result(res, run_cfg, cfg_hash)
                _persist_record(out_dir, rec, res)
                recs.append(rec)
                failed += rec.no_solution
            rows.append(_comparison_row(n, D, pso_records[n], recs, failed))
    table = ComparisonTable(rows=tuple(rows))
    if out_dir is not None:
        write_text_atomic(os.path.join(out_dir, f"comparison_{cfg_hash}.csv"), table.to_csv())
    return table


def _median(values):
    vals = [v for v in values if math.isfinite(v)]
    return float(np.median(vals)) if vals else math.nan


def _improvement_pct(rapso, pso):
    if not math.isfinite(rapso) or not math.isfinite(pso) or pso == 0.0:
        return math.nan
    return 100.0 * (rapso - pso) / pso


def _comparison_row(n, D, pso_recs, rapso_recs, failed):
    pso_fit = _median([r.fitness for r in pso_recs if not r.no_solution])
    pso_ce = _median([r.ce for r in pso_recs if not r.no_solution])
    ra_fit = _median([r.fitness for r in rapso_recs if not r.no_solution])
    ra_ce = _median([r.ce for r in rapso_recs if not r.no_solution])
    return ComparisonRow(
        n=n,
        D=D,
        fitness_improvement_pct=_improvement_pct(ra_fit, pso_fit),
        ce_improvement_pct=_improvement_pct(ra_ce, pso_ce),
        pso_runs=len(pso_recs),
        rapso_runs=len(rapso_recs),
        failed_runs=failed,
    )


def sweep_dof(
    task: RecordedTask,
    cfg: PSOConfig,
    limits: DesignLimits,
    weights: FitnessWeights,
    settings: IKSettings,
    n_range,
    seeds,
    out_dir=None,
    algorithm: str = "rapso",
    workers: int = 1,
    delta_m: float = 0.01,
):
    """Median best fitness (and components) per DOF count; returns the rows
    and writes a plot-ready CSV sorted by n."""
    cfg_hash = config_hash(cfg, limits, weights, settings, sorted(n_range), list(seeds), algorithm)
    series = []
    for n in sorted(n_range):
        jobs = [(task, cfg, limits, weights, settings, algorithm, seed, n, delta_m) for seed in seeds]
        results = _run_jobs(jobs, workers)
        fits, fs, es = [], [], []
        failed = 0
        for res in results:
            rec = record_from_result(res, cfg, cfg_hash)
            _persist_record(out_dir, rec, res)
            if rec.no_solution:
                failed += 1
            else:
                fits.append(rec.fitness)
                fs.append(res.report.path_fitness)
                es.append(res.report.area)
        series.append(
            {
                "n": n,
                "combined_median": _median(fits),
                "f_mm_median": 1000.0 * _median(fs) if fs else math.nan,
                "E_mm_median": 1000.0 * _median(es) if es else math.nan,
                "runs": len(results),
                "failed": failed,
            }
        )
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=["n", "combined_median", "f_mm_median", "E_mm_median", "runs", "failed"])
        writer.writeheader()
        for row in series:
            writer.writerow(row)
        write_text_atomic(os.path.join(out_dir, f"sweep_dof_{cfg_hash}.csv"), buf.getvalue())
    return series
