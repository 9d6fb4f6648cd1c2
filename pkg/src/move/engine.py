"""Voting-for-elites map: subset assignment, vote tallying, replacement.

The engine is generic over the genome type. A *problem* object supplies
three callables::

    problem.n_objectives            -> int
    problem.random_genome(rng)      -> genome
    problem.mutate(genome, rng)     -> genome
    problem.evaluate(genomes)       -> ndarray of shape (len(genomes), K)

Genomes must expose ``uid`` and ``parent_uid`` attributes.

Within a generation the parent set is frozen first, every parent produces
one child, all children are evaluated as one batch, and then children are
processed in ascending parent cell order. Each child is compared to the
*current* elites, so a cell replaced by an earlier child is defended by
that child.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from ._utils import check_subset_args, derive_rng
from .exceptions import InvalidArgumentsError, LengthMismatchError, RunAbortedError
from .lineage import LineageLog, ReplacementEvent


class JumpPolicy(str, enum.Enum):
    NONE = "none"
    ONE = "one"
    UNLIMITED = "unlimited"

    @classmethod
    def parse(cls, value) -> "JumpPolicy":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise InvalidArgumentsError(
                f"unknown jump policy {value!r}; expected one of "
                f"{[p.value for p in cls]}"
            ) from None


@dataclass(frozen=True)
class VoteTally:
    child_votes: int
    elite_votes: int
    ties: int
    subset_size: int

    @property
    def margin(self) -> int:
        return self.child_votes - self.elite_votes

    @property
    def child_wins(self) -> bool:
        # votes > n/2, written in integers
        return 2 * self.child_votes > self.subset_size


@dataclass
class Cell:
    cell_id: int
    subset: tuple
    elite: object = None
    elite_scores: Optional[np.ndarray] = None

    @property
    def uid(self):
        return None if self.elite is None else self.elite.uid


@dataclass
class CellMap:
    cells: list
    generation: int = 0

    def __post_init__(self):
        ids = [c.cell_id for c in self.cells]
        if ids != list(range(len(ids))):
            raise InvalidArgumentsError("cell ids must be dense and ordered 0..m-1")

    def __len__(self) -> int:
        return len(self.cells)

    @property
    def subsets(self) -> list:
        return [c.subset for c in self.cells]

    def uids(self) -> list:
        return [c.uid for c in self.cells]

    def score_matrix(self) -> np.ndarray:
        return np.array([c.elite_scores for c in self.cells], dtype=np.float64)


@dataclass(frozen=True)
class GenerationStats:
    generation: int
    evaluations: int
    replacements: int
    jumps: int
    unique_elites: int

    def to_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass
class MoveRun:
    """Everything a run produces; serialisable through :mod:`move.results`."""

    cell_map: CellMap
    lineage: LineageLog
    initial_uids: list
    history: list = field(default_factory=list)
    raw_min: Optional[np.ndarray] = None
    raw_max: Optional[np.ndarray] = None
    initial_evaluations: int = 0


def assign_subsets(m: int, n: int, k: int, rng: np.random.Generator) -> list:
    """Draw ``m`` independent uniform ``n``-combinations of ``range(k)``.

    Members are sorted within each subset. Identical subsets in different
    cells are allowed.
    """
    check_subset_args(m, n, k)
    # the first n entries of a uniform random permutation per row
    picks = np.sort(np.argsort(rng.random((m, k)), axis=1)[:, :n], axis=1)
    return [tuple(int(i) for i in row) for row in picks]


def tally_votes(child_scores, elite_scores, subset) -> VoteTally:
    """Count strict wins, strict losses and ties on the subset's objectives."""
    child = np.asarray(child_scores, dtype=np.float64)
    elite = np.asarray(elite_scores, dtype=np.float64)
    if child.shape != elite.shape or child.ndim != 1:
        raise LengthMismatchError(
            f"fitness vectors differ in shape: {child.shape} vs {elite.shape}"
        )
    idx = np.asarray(subset, dtype=np.intp)
    if idx.size and (idx.min() < 0 or idx.max() >= child.size):
        raise LengthMismatchError("subset references objectives beyond the vector length")
    c, e = child[idx], elite[idx]
    wins = int(np.count_nonzero(c > e))
    losses = int(np.count_nonzero(c < e))
    return VoteTally(wins, losses, idx.size - wins - losses, idx.size)


def membership_matrix(subsets: Sequence, k: int) -> np.ndarray:
    mask = np.zeros((len(subsets), k), dtype=bool)
    for i, s in enumerate(subsets):
        mask[i, list(s)] = True
    return mask


def _tally_against_all(child: np.ndarray, elites: np.ndarray, mask: np.ndarray):
    """Vectorised tally of one child against every cell; (wins, losses)."""
    wins = np.count_nonzero((child > elites) & mask, axis=1)
    losses = np.count_nonzero((child < elites) & mask, axis=1)
    return wins, losses


def select_targets(policy: JumpPolicy, parent_cell: int, wins: np.ndarray,
                   losses: np.ndarray, subset_sizes: np.ndarray) -> list:
    """Cells a child replaces under ``policy``, in ascending cell order."""
    winners = 2 * wins > subset_sizes
    if policy is JumpPolicy.NONE:
        return [parent_cell] if winners[parent_cell] else []
    if not winners.any():
        return []
    if policy is JumpPolicy.ONE:
        margins = np.where(winners, wins - losses, np.iinfo(np.int64).min)
        # argmax returns the first maximum, i.e. the lowest cell id
        return [int(np.argmax(margins))]
    return [int(i) for i in np.flatnonzero(winners)]


def _evaluate(problem, genomes: list, cell_ids: list) -> np.ndarray:
    try:
        scores = np.asarray(problem.evaluate(genomes), dtype=np.float64)
    except Exception as exc:
        # locate the offending child so the error carries its cell
        for cid, g in zip(cell_ids, genomes):
            try:
                problem.evaluate([g])
            except Exception as inner:
                raise RunAbortedError(
                    f"evaluation failed for child of cell {cid}: {inner}", cell_id=cid
                ) from inner
        raise RunAbortedError(f"batch evaluation failed: {exc}") from exc
    k = problem.n_objectives
    if scores.shape != (len(genomes), k):
        raise RunAbortedError(
            f"evaluator returned shape {scores.shape}, expected {(len(genomes), k)}"
        )
    bad = ~np.isfinite(scores).all(axis=1)
    if bad.any():
        cid = cell_ids[int(np.argmax(bad))]
        raise RunAbortedError(f"non-finite fitness for child of cell {cid}", cell_id=cid)
    return scores


def seed_map(problem, subsets: Sequence, rng: np.random.Generator,
             lineage: Optional[LineageLog] = None) -> CellMap:
    """Fill every cell with an independent random genome (generation 0)."""
    genomes = [problem.random_genome(rng) for _ in subsets]
    scores = _evaluate(problem, genomes, list(range(len(subsets))))
    cells = []
    for i, (subset, g, s) in enumerate(zip(subsets, genomes, scores)):
        cells.append(Cell(i, tuple(subset), g, s.copy()))
        if lineage is not None:
            lineage.register(g.uid, None, 0, seed_cell=i)
    return CellMap(cells, generation=0)


def step_generation(cell_map: CellMap, policy, problem, rng: np.random.Generator,
                    lineage: Optional[LineageLog] = None, mask: Optional[np.ndarray] = None):
    """Advance the map by one generation; returns (events, child score matrix)."""
    policy = JumpPolicy.parse(policy)
    cells = cell_map.cells
    if any(c.elite is None for c in cells):
        raise InvalidArgumentsError("every cell must hold an elite before stepping")
    k = problem.n_objectives
    if mask is None:
        mask = membership_matrix(cell_map.subsets, k)
    sizes = mask.sum(axis=1)
    generation = cell_map.generation + 1

    parents = [(c.cell_id, c.elite) for c in cells]
    children = [problem.mutate(g, rng) for _, g in parents]
    child_scores = _evaluate(problem, children, [cid for cid, _ in parents])

    elites = cell_map.score_matrix()
    events = []
    for (parent_cell, _), child, scores in zip(parents, children, child_scores):
        wins, losses = _tally_against_all(scores, elites, mask)
        targets = select_targets(policy, parent_cell, wins, losses, sizes)
        if not targets:
            continue
        if lineage is not None:
            lineage.register(child.uid, child.parent_uid, generation)
        for t in targets:
            cells[t].elite = child
            cells[t].elite_scores = scores.copy()
            elites[t] = scores
            ev = ReplacementEvent(generation, parent_cell, t, int(wins[t] - losses[t]),
                                  child.uid)
            events.append(ev)
            if lineage is not None:
                lineage.append(ev)
    cell_map.generation = generation
    return events, child_scores


def run_move(problem, n_cells: int, functions_per_cell: int, generations: int,
             jump_policy="unlimited", seed: int = 0,
             callback: Optional[Callable] = None) -> MoveRun:
    """Run the voting-for-elites loop from scratch.

    The result is a pure function of ``(problem, arguments, seed)``:
    subsets, initial genomes and mutations each draw from their own
    seeded stream.
    """
    policy = JumpPolicy.parse(jump_policy)
    if generations < 0:
        raise InvalidArgumentsError(f"generations must be >= 0, got {generations}")
    k = problem.n_objectives
    subsets = assign_subsets(n_cells, functions_per_cell, k, derive_rng(seed, "subsets"))
    if hasattr(problem, "reset"):
        problem.reset()
    lineage = LineageLog()
    cell_map = seed_map(problem, subsets, derive_rng(seed, "init"), lineage)
    initial = cell_map.score_matrix()
    raw_min, raw_max = initial.min(axis=0), initial.max(axis=0)
    run = MoveRun(cell_map, lineage, cell_map.uids(), initial_evaluations=n_cells)

    mask = membership_matrix(subsets, k)
    rng = derive_rng(seed, "mutation")
    for _ in range(generations):
        events, scores = step_generation(cell_map, policy, problem, rng, lineage, mask)
        raw_min = np.minimum(raw_min, scores.min(axis=0))
        raw_max = np.maximum(raw_max, scores.max(axis=0))
        stats = GenerationStats(
            generation=cell_map.generation,
            evaluations=len(scores),
            replacements=len(events),
            jumps=sum(ev.is_jump for ev in events),
            unique_elites=len(set(cell_map.uids())),
        )
        run.history.append(stats)
        if callback is not None:
            callback(cell_map, events, stats)
    run.raw_min, run.raw_max = raw_min, raw_max
    return run
