"""Running trials and conditions, writing results, aggregating statistics."""
from __future__ import annotations

import csv
import io
import itertools
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import yaml

from . import analytics
from ._utils import trial_seed
from .baselines import ALL, run_hillclimber
from .config import ExperimentConfig, RunConfig
from .engine import JumpPolicy, run_move
from .exceptions import CalibrationError, UndefinedStatisticError
from .images import load_target, target_id
from .objectives import ImageProblem, NormalizationTable, calibrate_table, get_registry
from .results import CellRecord, RunResult

log = logging.getLogger(__name__)

MOVE = "move"
ALL_OBJECTIVE = "all_objective"
SINGLE_OBJECTIVE = "single_objective"


def make_problem(cfg: RunConfig, target_spec: str) -> ImageProblem:
    target = load_target(target_spec, cfg.width, cfg.height)
    return ImageProblem(target, get_registry(cfg.objectives), cfg.mutation)


def run_move_trial(cfg: RunConfig, target_spec: str, seed: int, label: str = "") -> RunResult:
    problem = make_problem(cfg, target_spec)
    run = run_move(problem, cfg.num_cells, cfg.functions_per_cell, cfg.generations,
                   cfg.jump_policy, seed)
    return RunResult.from_cell_map(
        run.cell_map,
        algorithm=MOVE,
        seed=seed,
        target_id=target_id(target_spec),
        objective_names=problem.objective_names,
        settings=cfg.to_dict(),
        lineage=run.lineage,
        initial_uids=run.initial_uids,
        history=[h.to_dict() for h in run.history],
        raw_min=run.raw_min,
        raw_max=run.raw_max,
        label=label,
    )


def run_hillclimber_trial(cfg: RunConfig, target_spec: str, seed: int, scope=ALL,
                          children: Optional[int] = None, label: str = "") -> RunResult:
    """All-objective climber (``scope=ALL``) or one single-objective climber."""
    problem = make_problem(cfg, target_spec)
    children = cfg.num_cells if children is None else children
    run = run_hillclimber(problem, scope, children, cfg.generations, seed)
    k = problem.n_objectives
    subset = tuple(range(k)) if scope == ALL else (int(scope),)
    settings = cfg.to_dict()
    settings.update({"children_per_gen": children, "scope": scope})
    st = run.state
    return RunResult(
        algorithm=ALL_OBJECTIVE if scope == ALL else SINGLE_OBJECTIVE,
        seed=seed,
        target_id=target_id(target_spec),
        objective_names=problem.objective_names,
        settings=settings,
        cells=[CellRecord(0, subset, st.incumbent, st.incumbent_raw.copy())],
        lineage=run.lineage,
        initial_uids=[run.lineage.ancestors(st.incumbent.uid)[-1]],
        history=run.history,
        raw_min=run.raw_min,
        raw_max=run.raw_max,
        label=label,
    )


@dataclass(frozen=True)
class Condition:
    functions_per_cell: int
    num_cells: int
    jump_policy: str

    @property
    def name(self) -> str:
        return f"n{self.functions_per_cell}-m{self.num_cells}-{self.jump_policy}"

    def apply(self, cfg: RunConfig) -> RunConfig:
        return cfg.replace(functions_per_cell=self.functions_per_cell,
                           num_cells=self.num_cells, jump_policy=self.jump_policy)


def sweep_conditions(exp: ExperimentConfig) -> list:
    return [Condition(n, m, JumpPolicy.parse(p).value)
            for n, m, p in itertools.product(exp.sweep_functions_per_cell,
                                             exp.sweep_num_cells, exp.sweep_jump_policy)]


@dataclass(frozen=True)
class Job:
    kind: str            # MOVE or ALL_OBJECTIVE
    cfg: RunConfig
    target_spec: str
    seed: int
    label: str
    path: str
    children: Optional[int] = None


def _execute(job: Job) -> str:
    if job.kind == MOVE:
        result = run_move_trial(job.cfg, job.target_spec, job.seed, job.label)
    else:
        result = run_hillclimber_trial(job.cfg, job.target_spec, job.seed, ALL,
                                       job.children, job.label)
    result.save(job.path)
    return job.path


def execute_jobs(jobs: Sequence[Job], workers: int = 1, resume: bool = True) -> list:
    """Run jobs (skipping ones whose result file exists); returns failures.

    Each job writes its own file, so results do not depend on ``workers``.
    """
    todo = [j for j in jobs if not (resume and Path(j.path).exists())]
    skipped = len(jobs) - len(todo)
    if skipped:
        log.info("skipping %d completed runs", skipped)
    failures = []
    if workers <= 1 or len(todo) <= 1:
        for job in todo:
            try:
                _execute(job)
            except Exception as exc:  # recorded and excluded from aggregates
                log.warning("run %s failed: %s", job.path, exc)
                failures.append((job, exc))
        return failures
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [(job, pool.submit(_execute, job)) for job in todo]
        for job, fut in futures:
            try:
                fut.result()
            except Exception as exc:
                log.warning("run %s failed: %s", job.path, exc)
                failures.append((job, exc))
    return failures


def calibration_jobs(exp: ExperimentConfig, out_dir) -> list:
    jobs = []
    for spec in exp.targets:
        tid = target_id(spec)
        for t in range(exp.trials):
            seed = trial_seed(exp.base_seed, t)
            path = Path(out_dir) / "calibration" / tid / f"trial_{t:03d}.json"
            jobs.append(Job(ALL_OBJECTIVE, exp.run, spec, seed, "all_objective", str(path),
                            exp.baseline_children))
    return jobs


def calibrate(exp: ExperimentConfig, out_dir, workers: Optional[int] = None) -> NormalizationTable:
    """Run all-objective baselines per target and build the table from them."""
    jobs = calibration_jobs(exp, out_dir)
    failures = execute_jobs(jobs, workers or exp.workers)
    if failures:
        raise CalibrationError(f"{len(failures)} calibration runs failed")
    table = NormalizationTable()
    for spec in exp.targets:
        tid = target_id(spec)
        runs = [RunResult.load(j.path) for j in jobs if j.target_spec == spec]
        table = table.merge(calibrate_table(runs, tid))
    return table


def sweep_jobs(exp: ExperimentConfig, out_dir) -> list:
    jobs = []
    for cond in sweep_conditions(exp):
        cfg = cond.apply(exp.run)
        for spec in exp.targets:
            tid = target_id(spec)
            for t in range(exp.trials):
                seed = trial_seed(exp.base_seed, t)
                path = Path(out_dir) / "sweep" / cond.name / tid / f"trial_{t:03d}.json"
                jobs.append(Job(MOVE, cfg, spec, seed, cond.name, str(path)))
    return jobs


def _fmt(value) -> str:
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


ROW_KEYS = ("condition", "target", "algorithm", "seed", "num_cells", "jump_policy")


def result_row(result: RunResult, table: Optional[NormalizationTable]) -> dict:
    stats = analytics.run_statistics(result, table)
    row = {
        "condition": result.label,
        "target": result.target_id,
        "algorithm": result.algorithm,
        "seed": result.seed,
        "num_cells": result.num_cells,
        "jump_policy": result.settings.get("jump_policy", ""),
        "Functions per cell": result.settings.get("functions_per_cell", ""),
    }
    if result.algorithm != MOVE:
        # a climber is one cell scored on its whole scope; report its children
        row["num_cells"] = result.settings.get("children_per_gen", "")
        row["jump_policy"] = ""
        row["Functions per cell"] = len(result.cells[0].subset)
    for key, header in analytics.TABLE_COLUMNS.items():
        row[header] = getattr(stats, key)
    if result.algorithm != MOVE:
        for header in ("Total unique solutions", "Cells in ancestry", "Jumps in ancestry",
                       "Total replacements", "Jump proportion", "Mean pairwise subset overlap",
                       "Mean overlap on replacement", "Mean overlap on jump"):
            row[header] = None
    return row


CSV_COLUMNS = list(ROW_KEYS) + ["Functions per cell"] + list(analytics.TABLE_COLUMNS.values())


def rows_to_csv(rows: Sequence[dict]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in rows:
        writer.writerow([_fmt(row.get(c)) for c in CSV_COLUMNS])
    return buf.getvalue()


def summarize(rows: Sequence[dict]) -> dict:
    """Mean and 95% CI per (condition, target) for every numeric column."""
    groups: dict = {}
    for row in rows:
        groups.setdefault((row["condition"], row["target"]), []).append(row)
    out = {}
    for (cond, tid), members in sorted(groups.items()):
        entry = {"runs": len(members)}
        for header in analytics.TABLE_COLUMNS.values():
            vals = [r[header] for r in members if r.get(header) is not None]
            if not vals:
                continue
            mean, half = analytics.mean_ci95(vals)
            entry[header] = {"mean": float(f"{mean:.4g}"),
                             "ci95": None if math.isnan(half) else float(f"{half:.4g}")}
        out.setdefault(cond, {})[tid] = entry
    return out


def compare_conditions(rows: Sequence[dict], alpha: float = 0.05,
                       column: str = "Champion fitness") -> list:
    """Two-sided rank-sum tests between every pair of conditions per target."""
    by: dict = {}
    for r in rows:
        if r.get(column) is not None:
            by.setdefault(r["target"], {}).setdefault(r["condition"], []).append(r[column])
    out = []
    for tid, conds in sorted(by.items()):
        for a, b in itertools.combinations(sorted(conds), 2):
            rec = {"target": tid, "a": a, "b": b, "column": column,
                   "mean_a": sum(conds[a]) / len(conds[a]),
                   "mean_b": sum(conds[b]) / len(conds[b])}
            try:
                res = analytics.wilcoxon_rank_sum(conds[a], conds[b])
                rec.update(statistic=res.statistic, p=res.pvalue,
                           significant=bool(res.pvalue < alpha))
            except UndefinedStatisticError as exc:
                rec.update(statistic=None, p=None, significant=None, note=str(exc))
            out.append(rec)
    return out


def write_report(results: Sequence[RunResult], table: Optional[NormalizationTable], out_dir,
                 alpha: float = 0.05, prefix: str = "sweep",
                 references: Sequence[RunResult] = ()) -> dict:
    """Write ``<prefix>.csv`` and ``<prefix>_summary.yaml``.

    ``references`` (e.g. baseline runs) join the summary and the pairwise
    tests but not the CSV, which holds one row per run in ``results``.
    """
    rows = [result_row(r, table) for r in results]
    ref_rows = [result_row(r, table) for r in references]
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / f"{prefix}.csv").write_text(rows_to_csv(rows), encoding="utf-8")
    summary = summarize(rows + ref_rows)
    comparisons = compare_conditions(rows + ref_rows, alpha) if table is not None else []
    (out_dir / f"{prefix}_summary.yaml").write_text(
        yaml.safe_dump({"alpha": alpha, "conditions": summary, "comparisons": comparisons},
                       sort_keys=True), encoding="utf-8")
    return {"rows": rows, "summary": summary, "comparisons": comparisons}
