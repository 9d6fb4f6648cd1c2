"""Scikit-learn style front ends.

``fit`` takes the target image ``X`` (``(H, W, 3)`` floats in [0, 1]);
learned state lives in trailing-underscore attributes, and
``get_params``/``set_params``/``clone`` work as usual.
"""
from __future__ import annotations

from typing import Optional, Sequence

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from . import analytics, cppn
from ._utils import check_image, derive_rng
from .baselines import ALL, run_hillclimber
from .engine import JumpPolicy, run_move
from .objectives import ImageProblem, NormalizationTable, calibrate_table, get_registry, normalize
from .results import CellRecord, RunResult


def _mutation(params) -> cppn.MutationParams:
    if params is None:
        return cppn.MutationParams()
    if isinstance(params, cppn.MutationParams):
        return params
    return cppn.MutationParams(**params)


class _ImageEstimator(BaseEstimator):
    def _problem(self, X) -> ImageProblem:
        registry = get_registry(self.objectives)
        target = check_image(X, "X", min_size=max(s.min_size for s in registry))
        return ImageProblem(target, registry, _mutation(self.mutation))

    def _settings(self, problem) -> dict:
        params = self.get_params()
        params["mutation"] = dict(_mutation(self.mutation).__dict__)
        params["objectives"] = problem.objective_names
        params["width"], params["height"] = problem.width, problem.height
        return params

    def _champion(self, table):
        check_is_fitted(self, "result_")
        table = self.normalization if table is None else table
        return analytics.champion(self.result_.score_matrix(), table, self.target_id,
                                  self.result_.objective_names,
                                  [c.genome for c in self.result_.cells])

    def predict(self, X=None, table: Optional[NormalizationTable] = None) -> np.ndarray:
        """Render the champion; at the shape of ``X`` when given."""
        champ = self._champion(table)
        if X is None:
            h, w = self.problem_.height, self.problem_.width
        else:
            h, w = np.asarray(X).shape[:2]
        return cppn.render(champ.genome, w, h)

    def score(self, X=None, y=None, table: Optional[NormalizationTable] = None) -> float:
        """Mean normalized fitness of the champion."""
        return self._champion(table).fitness


class MOVE(_ImageEstimator):
    """Map of elites over random objective subsets, replaced by majority vote.

    Parameters
    ----------
    n_cells : int
        Number of cells (population size).
    functions_per_cell : int
        Objectives assigned to each cell; must be odd.
    generations : int
        Generations to run after seeding.
    jump_policy : {"unlimited", "one", "none"}
        Which cells a child may replace.
    objectives : sequence of str, optional
        Metric names; defaults to the full registry.
    mutation : dict or MutationParams, optional
    random_state : int
    target_id : str
        Name used to look the target up in a normalization table.
    normalization : NormalizationTable, optional
        Used by :meth:`predict` and :meth:`score` when no table is passed.
    """

    def __init__(self, n_cells=100, functions_per_cell=5, generations=1000,
                 jump_policy="unlimited", objectives=None, mutation=None, random_state=0,
                 target_id="target", normalization=None):
        self.n_cells = n_cells
        self.functions_per_cell = functions_per_cell
        self.generations = generations
        self.jump_policy = jump_policy
        self.objectives = objectives
        self.mutation = mutation
        self.random_state = random_state
        self.target_id = target_id
        self.normalization = normalization

    def fit(self, X, y=None):
        problem = self._problem(X)
        run = run_move(problem, self.n_cells, self.functions_per_cell, self.generations,
                       JumpPolicy.parse(self.jump_policy), int(self.random_state))
        self.problem_ = problem
        self.cell_map_ = run.cell_map
        self.lineage_ = run.lineage
        self.history_ = run.history
        self.subsets_ = run.cell_map.subsets
        self.n_evaluations_ = problem.evaluations
        settings = self._settings(problem)
        settings.pop("normalization", None)
        self.result_ = RunResult.from_cell_map(
            run.cell_map, algorithm="move", seed=int(self.random_state),
            target_id=self.target_id, objective_names=problem.objective_names,
            settings=settings, lineage=run.lineage, initial_uids=run.initial_uids,
            history=[h.to_dict() for h in run.history], raw_min=run.raw_min,
            raw_max=run.raw_max)
        return self

    def statistics(self, table: Optional[NormalizationTable] = None) -> analytics.RunStatistics:
        check_is_fitted(self, "result_")
        return analytics.run_statistics(self.result_, table or self.normalization)


class AllObjectiveHillclimber(_ImageEstimator):
    """(1+lambda) climber on the running-normalized mean of every objective."""

    def __init__(self, n_children=100, generations=1000, objectives=None, mutation=None,
                 random_state=0, target_id="target", normalization=None, scope=ALL):
        self.n_children = n_children
        self.generations = generations
        self.objectives = objectives
        self.mutation = mutation
        self.random_state = random_state
        self.target_id = target_id
        self.normalization = normalization
        self.scope = scope

    def fit(self, X, y=None):
        problem = self._problem(X)
        run = run_hillclimber(problem, self.scope, self.n_children, self.generations,
                              int(self.random_state))
        k = problem.n_objectives
        subset = tuple(range(k)) if self.scope == ALL else (int(self.scope),)
        self.problem_ = problem
        self.incumbent_ = run.state.incumbent
        self.history_ = run.history
        self.n_evaluations_ = problem.evaluations
        settings = self._settings(problem)
        settings.pop("normalization", None)
        self.result_ = RunResult(
            algorithm="all_objective" if self.scope == ALL else "single_objective",
            seed=int(self.random_state), target_id=self.target_id,
            objective_names=problem.objective_names, settings=settings,
            cells=[CellRecord(0, subset, run.state.incumbent, run.state.incumbent_raw.copy())],
            lineage=run.lineage, initial_uids=[run.lineage.ancestors(self.incumbent_.uid)[-1]],
            history=run.history, raw_min=run.raw_min, raw_max=run.raw_max)
        return self


class SingleObjectiveHillclimbers(BaseEstimator):
    """One independent raw-score climber per objective."""

    def __init__(self, n_children=7, generations=1000, objectives=None, mutation=None,
                 random_state=0, target_id="target"):
        self.n_children = n_children
        self.generations = generations
        self.objectives = objectives
        self.mutation = mutation
        self.random_state = random_state
        self.target_id = target_id

    def fit(self, X, y=None):
        registry = get_registry(self.objectives)
        self.climbers_ = []
        for f in range(len(registry)):
            seed = int(derive_rng(int(self.random_state), f"climber-{f}").integers(2 ** 63))
            est = AllObjectiveHillclimber(self.n_children, self.generations, self.objectives,
                                          self.mutation, seed, self.target_id, scope=f)
            self.climbers_.append(est.fit(X))
        self.results_ = [c.result_ for c in self.climbers_]
        self.best_scores_ = np.array([r.cells[0].scores[f] for f, r in enumerate(self.results_)])
        return self


class FitnessNormalizer(TransformerMixin, BaseEstimator):
    """Fit the reporting normalization from all-objective baseline runs.

    ``fit`` takes a sequence of :class:`~move.results.RunResult`;
    ``transform`` maps raw fitness rows ``(n, K)`` so the calibration
    mean-best lands on 1 and the observed floor on 0.
    """

    def __init__(self, target_id="target"):
        self.target_id = target_id

    def fit(self, X: Sequence[RunResult], y=None):
        self.table_ = calibrate_table(list(X), self.target_id)
        self.objective_names_ = list(X[0].objective_names)
        self.floor_, self.best_ = self.table_.arrays(self.objective_names_, self.target_id)
        return self

    def transform(self, X) -> np.ndarray:
        check_is_fitted(self, "table_")
        return normalize(X, self.table_, self.target_id, self.objective_names_)

    def inverse_transform(self, X) -> np.ndarray:
        check_is_fitted(self, "table_")
        return np.asarray(X, dtype=np.float64) * (self.best_ - self.floor_) + self.floor_
