"""Post-hoc statistics over finished runs.

Covers the per-run table (unique solutions, ancestry, replacements, jump
proportion, champion fitness), subset-overlap measurements, the rank-sum
test used to compare conditions, and summaries with 95% intervals.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import NamedTuple, Optional, Sequence

import numpy as np
from scipy import stats as sps

from .exceptions import (
    CalibrationError,
    DegenerateTestError,
    LineageError,
    UndefinedStatisticError,
)
from .lineage import LineageLog
from .objectives import NormalizationTable, normalize


class Champion(NamedTuple):
    cell_id: int
    genome: object
    fitness: float


class RankSumResult(NamedTuple):
    statistic: float
    pvalue: float


@dataclass
class RunStatistics:
    total_unique_solutions: int
    cells_in_ancestry: int
    jumps_in_ancestry: int
    total_replacements: int
    jump_proportion: Optional[float]
    champion_fitness: Optional[float]
    mean_pairwise_subset_overlap: Optional[float]
    mean_overlap_on_replacement: Optional[float]
    mean_overlap_on_jump: Optional[float]

    def to_dict(self) -> dict:
        return asdict(self)


TABLE_COLUMNS = {
    "total_unique_solutions": "Total unique solutions",
    "cells_in_ancestry": "Cells in ancestry",
    "jumps_in_ancestry": "Jumps in ancestry",
    "total_replacements": "Total replacements",
    "jump_proportion": "Jump proportion",
    "champion_fitness": "Champion fitness",
    "mean_pairwise_subset_overlap": "Mean pairwise subset overlap",
    "mean_overlap_on_replacement": "Mean overlap on replacement",
    "mean_overlap_on_jump": "Mean overlap on jump",
}


def unique_solutions(uids: Sequence) -> int:
    """Number of distinct genomes among the final elites."""
    if hasattr(uids, "uids"):
        uids = uids.uids()
    return len(set(uids))


def champion(scores, table: NormalizationTable, target_id: str,
             objective_names: Sequence[str], genomes: Optional[Sequence] = None) -> Champion:
    """Elite with the highest mean normalized fitness (lowest cell id on ties)."""
    if table is None:
        raise CalibrationError("champion selection needs a normalization table")
    scores = np.atleast_2d(np.asarray(scores, dtype=np.float64))
    fitness = normalize(scores, table, target_id, objective_names).mean(axis=1)
    best = int(np.argmax(fitness))
    genome = None if genomes is None else genomes[best]
    return Champion(best, genome, float(fitness[best]))


def ancestry_stats(log: LineageLog, champion_uid: int):
    """``(cells_in_ancestry, jumps_in_ancestry)`` along the champion's chain.

    The chain runs from the champion up through ``parent_uid`` links to a
    generation-0 root. Cells counted are every cell any ancestor occupied:
    the root's seed cell plus the targets of the ancestors' replacement
    events. Jumps are those events whose target differs from the cell of
    the parent that produced the child.
    """
    chain = log.ancestors(champion_uid)
    by_child = log.events_by_child()
    cells = set()
    jumps = 0
    for uid in chain:
        rec = log.registry[uid]
        if rec.parent_uid is None:
            if rec.seed_cell is None:
                raise LineageError(f"root genome {uid} has no seed cell")
            cells.add(rec.seed_cell)
        for ev in by_child.get(uid, ()):
            cells.add(ev.target_cell)
            jumps += ev.is_jump
    return len(cells), jumps


def jump_proportion(log) -> float:
    events = log.events if isinstance(log, LineageLog) else list(log)
    if not events:
        raise UndefinedStatisticError("jump proportion is undefined without replacements")
    return sum(ev.is_jump for ev in events) / len(events)


def pairwise_overlap(subsets: Sequence) -> float:
    """Mean ``|s_a & s_b|`` over unordered cell pairs."""
    sets = [frozenset(s) for s in subsets]
    if len(sets) < 2:
        raise UndefinedStatisticError("pairwise overlap needs at least two cells")
    # sum over pairs via objective counts: sum_f C(c_f, 2)
    counts: dict = {}
    for s in sets:
        for f in s:
            counts[f] = counts.get(f, 0) + 1
    shared = sum(c * (c - 1) // 2 for c in counts.values())
    return shared / (len(sets) * (len(sets) - 1) / 2)


def subset_overlap_stats(subsets: Sequence, log, jumps_only: bool = False):
    """``(mean_pairwise, mean_on_replacement)``.

    ``mean_on_replacement`` averages ``|s_parent & s_target|`` over every
    replacement event, or only over jumps when ``jumps_only`` is set; it is
    ``nan`` when there is nothing to average.
    """
    events = log.events if isinstance(log, LineageLog) else list(log)
    sets = [frozenset(s) for s in subsets]
    pairwise = pairwise_overlap(sets)
    chosen = [ev for ev in events if ev.is_jump or not jumps_only]
    if not chosen:
        return pairwise, math.nan
    on_rep = float(np.mean([len(sets[ev.parent_cell] & sets[ev.target_cell]) for ev in chosen]))
    return pairwise, on_rep


def _midranks(values: np.ndarray) -> np.ndarray:
    return sps.rankdata(values, method="average")


def _exact_rank_sum_counts(doubled_ranks: Sequence[int], n_a: int) -> dict:
    """Number of size-``n_a`` subsets attaining each sum of doubled ranks."""
    dp = [dict() for _ in range(n_a + 1)]
    dp[0][0] = 1
    for r in doubled_ranks:
        for k in range(min(n_a, len(doubled_ranks)) - 1, -1, -1):
            for s, c in dp[k].items():
                dp[k + 1][s + r] = dp[k + 1].get(s + r, 0) + c
    return dp[n_a]


def wilcoxon_rank_sum(sample_a, sample_b, alternative: str = "two-sided",
                      method: str = "auto") -> RankSumResult:
    """Wilcoxon rank-sum test; the statistic is the rank sum of ``sample_a``.

    Ties receive midranks. With ``method="auto"`` the null distribution is
    enumerated exactly when both samples have at most 10 values, otherwise
    a normal approximation with tie and continuity corrections is used.
    ``alternative="greater"`` tests whether ``sample_a`` tends to be larger.
    """
    a = np.asarray(sample_a, dtype=np.float64).ravel()
    b = np.asarray(sample_b, dtype=np.float64).ravel()
    if a.size < 2 or b.size < 2:
        raise UndefinedStatisticError("each sample needs at least two values")
    if alternative not in ("two-sided", "greater", "less"):
        raise ValueError(f"unknown alternative {alternative!r}")
    pooled = np.concatenate([a, b])
    if np.all(pooled == pooled[0]):
        raise DegenerateTestError("all observations are identical")
    n_a, n_b = a.size, b.size
    n = n_a + n_b
    ranks = _midranks(pooled)
    w = float(ranks[:n_a].sum())
    if method == "auto":
        method = "exact" if max(n_a, n_b) <= 10 else "normal"

    if method == "exact":
        doubled = [int(round(2 * r)) for r in ranks]
        counts = _exact_rank_sum_counts(doubled, n_a)
        total = math.comb(n, n_a)
        w2 = sum(doubled[:n_a])
        centre2 = n_a * (n + 1)  # null mean of the doubled rank sum, integral
        if alternative == "two-sided":
            obs = abs(w2 - centre2)
            hits = sum(c for s, c in counts.items() if abs(s - centre2) >= obs)
        elif alternative == "greater":
            hits = sum(c for s, c in counts.items() if s >= w2)
        else:
            hits = sum(c for s, c in counts.items() if s <= w2)
        return RankSumResult(w, min(1.0, hits / total))
    if method != "normal":
        raise ValueError(f"unknown method {method!r}")

    mean = n_a * (n + 1) / 2.0
    _, tie_counts = np.unique(pooled, return_counts=True)
    tie_term = float(np.sum(tie_counts ** 3 - tie_counts)) / (n * (n - 1))
    var = n_a * n_b / 12.0 * ((n + 1) - tie_term)
    sd = math.sqrt(var)
    if alternative == "two-sided":
        z = max(abs(w - mean) - 0.5, 0.0) / sd
        p = 2.0 * sps.norm.sf(z)
    elif alternative == "greater":
        p = sps.norm.sf((w - mean - 0.5) / sd)
    else:
        p = sps.norm.cdf((w - mean + 0.5) / sd)
    return RankSumResult(w, float(min(1.0, p)))


def run_statistics(result, table: Optional[NormalizationTable] = None) -> RunStatistics:
    """Every per-run statistic for one :class:`~move.results.RunResult`."""
    log = result.lineage
    uids = result.final_uids
    champ = None
    cells_anc, jumps_anc = 0, 0
    if table is not None:
        champ = champion(result.score_matrix(), table, result.target_id, result.objective_names)
        cells_anc, jumps_anc = ancestry_stats(log, uids[champ.cell_id])
    try:
        jp = jump_proportion(log)
    except UndefinedStatisticError:
        jp = None
    subsets = result.subsets
    if len(subsets) >= 2:
        pairwise, on_rep = subset_overlap_stats(subsets, log)
        _, on_jump = subset_overlap_stats(subsets, log, jumps_only=True)
    else:
        pairwise = on_rep = on_jump = None
    return RunStatistics(
        total_unique_solutions=unique_solutions(uids),
        cells_in_ancestry=cells_anc,
        jumps_in_ancestry=jumps_anc,
        total_replacements=len(log.events),
        jump_proportion=jp,
        champion_fitness=None if champ is None else champ.fitness,
        mean_pairwise_subset_overlap=pairwise,
        mean_overlap_on_replacement=None if on_rep is None or math.isnan(on_rep) else on_rep,
        mean_overlap_on_jump=None if on_jump is None or math.isnan(on_jump) else on_jump,
    )


def mean_ci95(values: Sequence[float]):
    """Mean and half-width of a t-based 95% confidence interval."""
    v = np.asarray([x for x in values if x is not None], dtype=np.float64)
    if v.size == 0:
        return math.nan, math.nan
    if v.size == 1:
        return float(v[0]), math.nan
    half = sps.t.ppf(0.975, v.size - 1) * v.std(ddof=1) / math.sqrt(v.size)
    return float(v.mean()), float(half)


def replay_matches(result) -> bool:
    """True when replaying the lineage over generation 0 gives the final map."""
    return result.lineage.replay(result.initial_uids) == result.final_uids


def trajectory(log: LineageLog, champion_uid: int) -> dict:
    """Cells and ordered jump arrows in the champion's ancestry."""
    chain = set(log.ancestors(champion_uid))
    nodes = set()
    arrows = []
    for uid in chain:
        rec = log.registry[uid]
        if rec.parent_uid is None and rec.seed_cell is not None:
            nodes.add(rec.seed_cell)
    for ev in log.events:
        if ev.child_uid in chain:
            nodes.add(ev.target_cell)
            if ev.is_jump:
                arrows.append(ev)
    return {"nodes": sorted(nodes), "arrows": arrows}


def trajectory_dot(log: LineageLog, champion_uid: int, name: str = "lineage") -> str:
    """Graphviz description of :func:`trajectory`; edges labelled by generation."""
    traj = trajectory(log, champion_uid)
    lines = [f"digraph {name} {{"]
    for c in traj["nodes"]:
        lines.append(f'  c{c} [label="{c}"];')
    for i, ev in enumerate(traj["arrows"]):
        lines.append(f'  c{ev.parent_cell} -> c{ev.target_cell} '
                     f'[label="{ev.generation}", order={i}];')
    lines.append("}")
    return "\n".join(lines) + "\n"
