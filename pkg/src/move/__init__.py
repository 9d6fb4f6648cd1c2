"""Many-objective evolution by voting elites over random objective subsets."""
__version__ = "0.1.0"

from .engine import CellMap, JumpPolicy, assign_subsets, run_move, step_generation, tally_votes
from .estimators import MOVE, AllObjectiveHillclimber, FitnessNormalizer, SingleObjectiveHillclimbers
from .lineage import LineageLog, ReplacementEvent
from .objectives import ImageProblem, NormalizationTable, SyntheticProblem
from .results import RunResult

__all__ = [
    "AllObjectiveHillclimber",
    "CellMap",
    "FitnessNormalizer",
    "ImageProblem",
    "JumpPolicy",
    "LineageLog",
    "MOVE",
    "NormalizationTable",
    "ReplacementEvent",
    "RunResult",
    "SingleObjectiveHillclimbers",
    "SyntheticProblem",
    "assign_subsets",
    "run_move",
    "step_generation",
    "tally_votes",
]
