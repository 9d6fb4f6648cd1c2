"""Command-line entry point: ``move <command> [options]``.

Commands
--------
calibrate  all-objective baselines per target, then the normalization table
run        one MOVE run per trial
baseline   all-objective or single-objective hillclimbers per trial
sweep      MOVE over the Cartesian product of the sweep axes, plus report
report     CSV and summary for existing result files
render     PNGs and a lineage trajectory for one result file

Exit codes: 0 success, 2 configuration error, 3 I/O error, 4 undefined or
degenerate statistic, 5 one or more runs failed.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np
import yaml

from . import __version__, analytics, cppn, experiment
from ._utils import derive_rng, trial_seed
from .config import default_config_dict, load_config
from .exceptions import (
    CalibrationError,
    ConfigError,
    InvalidArgumentsError,
    RunAbortedError,
    UndefinedStatisticError,
)
from .images import save_png, target_id, tile
from .objectives import NormalizationTable
from .results import RunResult

log = logging.getLogger("move")

EXIT_OK, EXIT_CONFIG, EXIT_IO, EXIT_STATS, EXIT_RUNS = 0, 2, 3, 4, 5
TABLE_FILE = "normalization.yaml"


class RunsFailedError(Exception):
    pass


def _parse_set(items) -> dict:
    """``section.key=value`` pairs (YAML values) into a nested dict."""
    out: dict = {}
    for item in items or ():
        key, sep, raw = item.partition("=")
        if not sep or "." not in key:
            raise ConfigError(f"--set expects section.key=value, got {item!r}")
        section, name = key.split(".", 1)
        out.setdefault(section, {})[name] = yaml.safe_load(raw)
    return out


def _config(args):
    overrides = _parse_set(getattr(args, "set", None))
    exp_over = overrides.setdefault("experiment", {})
    if args.out is not None:
        exp_over["out"] = args.out
    if args.seed is not None:
        exp_over["base_seed"] = args.seed
    if args.workers is not None:
        exp_over["workers"] = args.workers
    if getattr(args, "trials", None) is not None:
        exp_over["trials"] = args.trials
    if getattr(args, "target", None):
        exp_over["targets"] = list(args.target)
    return load_config(args.config, args.profile, overrides)


def _table_path(exp, given=None) -> Path:
    return Path(given) if given else Path(exp.out) / TABLE_FILE


def _load_table(path: Path) -> NormalizationTable:
    if not path.exists():
        raise FileNotFoundError(f"calibration table {path} not found; run 'move calibrate' first")
    return NormalizationTable.load(path)


def _load_results(paths) -> list:
    files = []
    for p in paths:
        p = Path(p)
        if p.is_dir():
            files.extend(sorted(p.rglob("*.json")))
        elif p.exists():
            files.append(p)
        else:
            raise FileNotFoundError(f"no such result file or directory: {p}")
    results = []
    for f in files:
        if f.name.startswith("metadata"):
            continue
        results.append(_read_result(f))
    return results


def _read_result(path) -> RunResult:
    try:
        return RunResult.load(path)
    except (ValueError, KeyError, TypeError) as exc:
        raise OSError(f"corrupt run file {path}: {exc}") from None


# --- commands ----------------------------------------------------------------

def cmd_calibrate(args, exp) -> dict:
    table = experiment.calibrate(exp, exp.out, exp.workers)
    path = _table_path(exp)
    path.parent.mkdir(parents=True, exist_ok=True)
    table.save(path)
    print(f"wrote {path} ({len(table.entries)} entries)")
    return {"table": str(path)}


def cmd_run(args, exp) -> dict:
    cfg = exp.run
    jobs = []
    for spec in exp.targets:
        tid = target_id(spec)
        for t in range(exp.trials):
            path = Path(exp.out) / "runs" / "move" / tid / f"trial_{t:03d}.json"
            jobs.append(experiment.Job(experiment.MOVE, cfg, spec, trial_seed(exp.base_seed, t),
                                       args.label, str(path)))
    return _run_jobs(jobs, exp, args.resume)


def cmd_baseline(args, exp) -> dict:
    written = []
    if args.kind == "all":
        jobs = []
        for spec in exp.targets:
            tid = target_id(spec)
            for t in range(exp.trials):
                path = Path(exp.out) / "runs" / "all_objective" / tid / f"trial_{t:03d}.json"
                jobs.append(experiment.Job(experiment.ALL_OBJECTIVE, exp.run, spec,
                                           trial_seed(exp.base_seed, t), "all_objective",
                                           str(path), exp.baseline_children))
        return _run_jobs(jobs, exp, args.resume)
    k = len(exp.run.objectives)
    for spec in exp.targets:
        tid = target_id(spec)
        for t in range(exp.trials):
            seed = trial_seed(exp.base_seed, t)
            for f in range(k):
                name = exp.run.objectives[f]
                path = Path(exp.out) / "runs" / "single_objective" / tid / name / f"trial_{t:03d}.json"
                if args.resume and path.exists():
                    continue
                sub = int(derive_rng(seed, f"climber-{f}").integers(2 ** 63))
                res = experiment.run_hillclimber_trial(exp.run, spec, sub, f,
                                                       exp.children_per_climber,
                                                       f"single_{name}")
                res.save(path)
                written.append(str(path))
    print(f"wrote {len(written)} single-objective results")
    return {"written": written}


def _run_jobs(jobs, exp, resume: bool) -> dict:
    failures = experiment.execute_jobs(jobs, exp.workers, resume)
    done = [j.path for j in jobs if Path(j.path).exists()]
    print(f"{len(done)} of {len(jobs)} runs complete")
    if failures:
        raise RunsFailedError(f"{len(failures)} runs failed")
    return {"results": done}


def cmd_sweep(args, exp) -> dict:
    table = _load_table(_table_path(exp, args.table))
    jobs = experiment.sweep_jobs(exp, exp.out)
    failures = experiment.execute_jobs(jobs, exp.workers, resume=True)
    if failures:
        log.warning("%d runs failed and are excluded from the aggregates", len(failures))
    results = [_read_result(j.path) for j in jobs if Path(j.path).exists()]
    baselines = []
    calib = Path(exp.out) / "calibration"
    if calib.exists():
        wanted = {target_id(s) for s in exp.targets}
        baselines = [r for r in _load_results([calib]) if r.target_id in wanted]
    report = experiment.write_report(results, table, exp.out, exp.alpha, prefix="sweep",
                                     references=baselines)
    print(f"wrote {Path(exp.out) / 'sweep.csv'} ({len(report['rows'])} rows, "
          f"{len(failures)} failed runs)")
    return {"runs": len(results), "baselines": len(baselines), "failed": len(failures)}


def cmd_report(args, exp) -> dict:
    table = None
    path = _table_path(exp, args.table)
    if path.exists():
        table = _load_table(path)
    elif args.table:
        raise FileNotFoundError(f"calibration table {path} not found")
    results = _load_results(args.results)
    if not results:
        raise FileNotFoundError("no result files found")
    report = experiment.write_report(results, table, exp.out, exp.alpha, prefix=args.prefix)
    print(f"wrote {Path(exp.out) / (args.prefix + '.csv')} ({len(report['rows'])} rows)")
    return {"rows": len(report["rows"])}


RENDER_KINDS = ("champion", "map-grid", "per-objective-best", "trajectory")


def cmd_render(args, exp) -> dict:
    result = _read_result(args.result)
    width = args.width or int(result.settings.get("width", 64))
    height = args.height or int(result.settings.get("height", 64))
    out = Path(exp.out)
    out.mkdir(parents=True, exist_ok=True)
    stem = Path(args.result).stem
    kinds = RENDER_KINDS if "all" in args.what else tuple(dict.fromkeys(args.what))
    genomes = [c.genome for c in result.cells]
    if kinds != ("trajectory",) and not all(isinstance(g, cppn.Genome) for g in genomes):
        raise InvalidArgumentsError("only CPPN results can be rendered as images")
    written = []
    champ = None
    if "champion" in kinds or "trajectory" in kinds:
        table = _load_table(_table_path(exp, args.table))
        champ = analytics.champion(result.score_matrix(), table, result.target_id,
                                   result.objective_names, genomes)
    if "champion" in kinds:
        written.append(save_png(cppn.render(champ.genome, width, height),
                                out / f"{stem}_champion.png"))
    if "map-grid" in kinds:
        tiles = [cppn.render(g, width, height) for g in genomes]
        written.append(save_png(tile(tiles, args.columns), out / f"{stem}_map.png"))
    if "per-objective-best" in kinds:
        scores = result.score_matrix()
        for f, name in enumerate(result.objective_names):
            best = int(np.argmax(scores[:, f]))
            written.append(save_png(cppn.render(genomes[best], width, height),
                                    out / f"{stem}_best_{name}.png"))
    if "trajectory" in kinds:
        path = out / f"{stem}_trajectory.dot"
        path.write_text(analytics.trajectory_dot(result.lineage, champ.genome.uid),
                        encoding="utf-8")
        written.append(path)
    for p in written:
        print(f"wrote {p}")
    return {"written": [str(p) for p in written]}


COMMANDS = {
    "calibrate": cmd_calibrate,
    "run": cmd_run,
    "baseline": cmd_baseline,
    "sweep": cmd_sweep,
    "report": cmd_report,
    "render": cmd_render,
}


def _common(suppress: bool) -> argparse.ArgumentParser:
    # subcommand copies must not reset values given before the subcommand
    kw = {"default": argparse.SUPPRESS} if suppress else {}
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="YAML config file", **kw)
    common.add_argument("--profile", choices=("desk", "paper"),
                        **(kw or {"default": "desk"}))
    common.add_argument("--out", metavar="DIR", help="output directory", **kw)
    common.add_argument("--seed", type=int, metavar="N", help="base seed", **kw)
    common.add_argument("--workers", type=int, metavar="N", help="parallel worker processes",
                        **kw)
    common.add_argument("--set", action="append", metavar="SECTION.KEY=VALUE",
                        help="override one config value (repeatable)", **kw)
    common.add_argument("-v", "--verbose", action="store_true", **kw)
    return common


def build_parser() -> argparse.ArgumentParser:
    common, sub_common = _common(False), _common(True)

    parser = argparse.ArgumentParser(prog="move", parents=[common],
                                     description="Voting-based many-objective elites.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--print-default-config", action="store_true",
                        help="print the resolved default config for --profile and exit")
    sub = parser.add_subparsers(dest="command")

    def add(name, help_):
        return sub.add_parser(name, help=help_, parents=[sub_common])

    trials = dict(type=int, metavar="N", help="number of trials")
    target = dict(action="append", metavar="SPEC", help="target (builtin:NAME or PNG path)")

    p = add("calibrate", "all-objective baselines and normalization table")
    p.add_argument("--trials", **trials)
    p.add_argument("--target", **target)

    p = add("run", "MOVE runs for every target and trial")
    p.add_argument("--trials", **trials)
    p.add_argument("--target", **target)
    p.add_argument("--label", default="move")
    p.add_argument("--no-resume", dest="resume", action="store_false", default=True)

    p = add("baseline", "hillclimber baselines")
    p.add_argument("--kind", choices=("all", "single"), default="all")
    p.add_argument("--trials", **trials)
    p.add_argument("--target", **target)
    p.add_argument("--no-resume", dest="resume", action="store_false", default=True)

    p = add("sweep", "MOVE over the sweep axes, then CSV and summary")
    p.add_argument("--trials", **trials)
    p.add_argument("--target", **target)
    p.add_argument("--table", metavar="PATH", default=None)

    p = add("report", "CSV and summary for existing results")
    p.add_argument("results", nargs="+", help="result files or directories")
    p.add_argument("--table", metavar="PATH", default=None)
    p.add_argument("--prefix", default="report")

    p = add("render", "images and trajectory for one result")
    p.add_argument("result", help="run result file")
    p.add_argument("--what", nargs="+", choices=RENDER_KINDS + ("all",), default=["all"])
    p.add_argument("--table", metavar="PATH", default=None)
    p.add_argument("--width", type=int, default=None)
    p.add_argument("--height", type=int, default=None)
    p.add_argument("--columns", type=int, default=None)
    return parser


def _write_metadata(out: Path, command: str, argv, started: float, info: dict, code: int):
    meta = {
        "command": command,
        "argv": list(argv),
        "version": __version__,
        "started": time.strftime("%Y-%m-%dT%H:%M:%S%z", time.localtime(started)),
        "finished": time.strftime("%Y-%m-%dT%H:%M:%S%z", time.localtime()),
        "elapsed_seconds": round(time.time() - started, 3),
        "exit_code": code,
        "info": info,
    }
    try:
        out.mkdir(parents=True, exist_ok=True)
        (out / f"metadata_{command}.json").write_text(json.dumps(meta, indent=2, default=str),
                                                      encoding="utf-8")
    except OSError as exc:
        log.warning("cannot write metadata: %s", exc)


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.print_default_config:
        try:
            print(yaml.safe_dump(default_config_dict(args.profile), sort_keys=False), end="")
        except ConfigError as exc:
            print(f"config error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        return EXIT_OK
    if args.command is None:
        parser.print_help()
        return EXIT_CONFIG

    started = time.time()
    info: dict = {}
    exp = None
    try:
        exp = _config(args)
        info = COMMANDS[args.command](args, exp) or {}
        code = EXIT_OK
    except (ConfigError, InvalidArgumentsError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        code = EXIT_CONFIG
    except (UndefinedStatisticError, CalibrationError) as exc:
        print(f"statistics error: {exc}", file=sys.stderr)
        code = EXIT_STATS
    except (RunsFailedError, RunAbortedError) as exc:
        print(f"run error: {exc}", file=sys.stderr)
        code = EXIT_RUNS
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        code = EXIT_IO
    if exp is not None:
        _write_metadata(Path(exp.out), args.command, argv, started, info, code)
    return code


if __name__ == "__main__":
    sys.exit(main())
