"""(1+lambda) hillclimber baselines.

Two controls are provided: one climber per objective (each scoring a single
raw objective) and a single all-objective climber whose scalar fitness is
the mean of per-objective scores min-max normalised within the run.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from ._utils import derive_rng
from .exceptions import InvalidArgumentsError, RunAbortedError
from .lineage import LineageLog, ReplacementEvent

ALL = "all"


class SingleObjectiveScorer:
    """Scalar fitness = the raw score of one objective."""

    def __init__(self, objective: int):
        self.objective = int(objective)

    def update(self, raw: np.ndarray) -> None:
        pass

    def __call__(self, raw: np.ndarray) -> np.ndarray:
        return np.asarray(raw)[..., self.objective]


class RunningMinMaxScorer:
    """Mean over objectives of ``(raw - min) / (max - min)``.

    ``min`` and ``max`` are running extremes over every score seen so far in
    the run. :meth:`update` is called once per generation, before scoring,
    so every child of a generation and the incumbent share one state.
    Objectives whose range is still zero contribute 0.
    """

    def __init__(self, n_objectives: int):
        self.lo = np.full(n_objectives, np.inf)
        self.hi = np.full(n_objectives, -np.inf)

    def update(self, raw: np.ndarray) -> None:
        raw = np.atleast_2d(raw)
        self.lo = np.minimum(self.lo, raw.min(axis=0))
        self.hi = np.maximum(self.hi, raw.max(axis=0))

    def __call__(self, raw: np.ndarray) -> np.ndarray:
        span = self.hi - self.lo
        live = span > 0
        scaled = np.where(live, (np.asarray(raw) - self.lo) / np.where(live, span, 1.0), 0.0)
        return scaled.mean(axis=-1)


@dataclass
class HillclimberState:
    incumbent: object
    incumbent_raw: np.ndarray
    objective_scope: object          # objective index or ALL
    children_per_gen: int
    generation: int = 0

    def __post_init__(self):
        if self.children_per_gen < 1:
            raise InvalidArgumentsError("children_per_gen must be >= 1")


@dataclass
class HillclimberRun:
    state: HillclimberState
    lineage: LineageLog
    history: list
    raw_min: np.ndarray
    raw_max: np.ndarray


def _scorer_for(scope, k: int):
    if scope == ALL:
        return RunningMinMaxScorer(k)
    if not 0 <= int(scope) < k:
        raise InvalidArgumentsError(f"objective {scope} out of range for {k} objectives")
    return SingleObjectiveScorer(int(scope))


def hillclimber_generation(state: HillclimberState, problem, scorer, rng,
                           lineage: Optional[LineageLog] = None):
    """One (1+lambda) step; returns ``(state, best child score, child raws)``.

    The best child (first one on ties) replaces the incumbent only when its
    scalar score is strictly greater than the incumbent's.
    """
    children = [problem.mutate(state.incumbent, rng) for _ in range(state.children_per_gen)]
    try:
        raws = np.asarray(problem.evaluate(children), dtype=np.float64)
    except Exception as exc:
        raise RunAbortedError(f"hillclimber evaluation failed: {exc}", cell_id=0) from exc
    if not np.isfinite(raws).all():
        raise RunAbortedError("non-finite fitness in hillclimber child", cell_id=0)
    scorer.update(raws)
    scores = scorer(np.vstack([state.incumbent_raw[None, :], raws]))
    incumbent_score, child_scores = scores[0], scores[1:]
    best = int(np.argmax(child_scores))
    state.generation += 1
    if child_scores[best] > incumbent_score:
        child = children[best]
        if lineage is not None:
            lineage.register(child.uid, child.parent_uid, state.generation)
            lineage.append(ReplacementEvent(state.generation, 0, 0, 0, child.uid))
        state.incumbent = child
        state.incumbent_raw = raws[best].copy()
    return state, float(child_scores[best]), raws


def run_hillclimber(problem, scope, children_per_gen: int, generations: int,
                    seed: int = 0) -> HillclimberRun:
    """Seed one random incumbent and climb for ``generations`` steps."""
    k = problem.n_objectives
    scorer = _scorer_for(scope, k)
    if hasattr(problem, "reset"):
        problem.reset()
    init = problem.random_genome(derive_rng(seed, "init"))
    init_raw = np.asarray(problem.evaluate([init]), dtype=np.float64)[0]
    scorer.update(init_raw)
    state = HillclimberState(init, init_raw, scope, children_per_gen)
    lineage = LineageLog()
    lineage.register(init.uid, None, 0, seed_cell=0)
    raw_min, raw_max = init_raw.copy(), init_raw.copy()
    history = []
    rng = derive_rng(seed, "mutation")
    for _ in range(generations):
        before = state.incumbent.uid
        state, best, raws = hillclimber_generation(state, problem, scorer, rng, lineage)
        raw_min = np.minimum(raw_min, raws.min(axis=0))
        raw_max = np.maximum(raw_max, raws.max(axis=0))
        history.append({
            "generation": state.generation,
            "evaluations": len(raws),
            "replacements": int(state.incumbent.uid != before),
            "best_child_score": best,
            "incumbent_score": float(scorer(state.incumbent_raw)),
        })
    return HillclimberRun(state, lineage, history, raw_min, raw_max)


def run_all_objective_baseline(problem, generations: int, children_per_gen: int,
                               seed: int = 0) -> HillclimberRun:
    """Single climber on the running-normalised mean of all objectives."""
    return run_hillclimber(problem, ALL, children_per_gen, generations, seed)


def run_single_objective_suite(problem, generations: int, children_per_gen: int = 7,
                               seed: int = 0) -> list:
    """One independent climber per objective, each with its own seed stream."""
    runs = []
    for f in range(problem.n_objectives):
        sub_seed = int(derive_rng(seed, f"climber-{f}").integers(2 ** 63))
        runs.append(run_hillclimber(problem, f, children_per_gen, generations, sub_seed))
    return runs
