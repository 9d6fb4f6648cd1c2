"""Objective registry, normalization table and ready-made problems.

Scores coming out of this module are *oriented*: greater is always better.
Dissimilarity metrics (MSE, GMSD, MDSI) are exposed negated.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
import yaml

from . import cppn, metrics
from ._utils import check_image, check_image_batch, check_same_shape
from .exceptions import CalibrationError, InvalidArgumentsError, LengthMismatchError

SIMILARITY = "similarity"
DISSIMILARITY = "dissimilarity"


@dataclass(frozen=True)
class MetricSpec:
    name: str
    kind: str
    function: Callable
    min_size: int = 2
    params: dict = field(default_factory=dict)

    def oriented(self, raw):
        raw = np.asarray(raw, dtype=np.float64)
        # 0.0 - x rather than -x so an exact match reports +0.0
        return 0.0 - raw if self.kind == DISSIMILARITY else raw


METRICS = {
    spec.name: spec
    for spec in (
        MetricSpec("mse", DISSIMILARITY, metrics.mse),
        MetricSpec("psnr", SIMILARITY, metrics.psnr,
                   params={"cap_db": metrics.PSNR_CAP_DB}),
        MetricSpec("ssim", SIMILARITY, metrics.ssim, min_size=metrics.SSIM_WINDOW,
                   params={"window": metrics.SSIM_WINDOW, "sigma": metrics.SSIM_SIGMA,
                           "c1": metrics.SSIM_C1, "c2": metrics.SSIM_C2}),
        MetricSpec("ms_ssim", SIMILARITY, metrics.ms_ssim, min_size=metrics.SSIM_WINDOW,
                   params={"weights": metrics.MS_SSIM_WEIGHTS,
                           "min_scale": metrics.MS_SSIM_MIN_SCALE}),
        MetricSpec("gmsd", DISSIMILARITY, metrics.gmsd, min_size=6,
                   params={"c": metrics.GMSD_C}),
        MetricSpec("mdsi", DISSIMILARITY, metrics.mdsi, min_size=3,
                   params={"c1": metrics.MDSI_C1, "c2": metrics.MDSI_C2,
                           "c3": metrics.MDSI_C3, "alpha": metrics.MDSI_ALPHA}),
        MetricSpec("hist_intersection", SIMILARITY, metrics.histogram_intersection,
                   params={"bins": metrics.HIST_BINS}),
        MetricSpec("gradient_cosine", SIMILARITY, metrics.gradient_cosine, min_size=3),
    )
}

DEFAULT_OBJECTIVES = tuple(METRICS)


def get_registry(names: Optional[Sequence[str]] = None) -> tuple:
    """Resolve metric names (default: all eight) into ordered specs."""
    names = DEFAULT_OBJECTIVES if names is None else tuple(names)
    if not names:
        raise InvalidArgumentsError("objective registry must not be empty")
    if len(set(names)) != len(names):
        raise InvalidArgumentsError(f"duplicate objectives in {names}")
    try:
        return tuple(METRICS[n] for n in names)
    except KeyError as exc:
        raise InvalidArgumentsError(
            f"unknown objective {exc.args[0]!r}; available: {sorted(METRICS)}"
        ) from None


def evaluate_metric(spec: MetricSpec, image, target) -> float:
    """Oriented score of one image against one target."""
    img = check_image(image, "image", min_size=spec.min_size)
    tgt = check_image(target, "target", min_size=spec.min_size)
    check_same_shape(img, tgt)
    return float(spec.oriented(spec.function(img, tgt)))


def evaluate_all(images, target, registry: Sequence[MetricSpec]) -> np.ndarray:
    """Fitness vectors for one image ``(K,)`` or a batch ``(B, K)``."""
    imgs = check_image_batch(images)
    tgt = check_image(target, "target", min_size=max(s.min_size for s in registry))
    check_same_shape(imgs, tgt)
    cols = [spec.oriented(spec.function(imgs, tgt)) for spec in registry]
    return np.stack(cols, axis=-1)


def self_similarity(target, registry: Sequence[MetricSpec]) -> np.ndarray:
    return evaluate_all(target, target, registry)


# --- synthetic objectives ----------------------------------------------------

@dataclass
class VectorGenome:
    x: np.ndarray
    uid: int
    parent_uid: Optional[int] = None


class SyntheticObjectives:
    """``f_i(x) = -||x - c_i||^2`` with known maxima at the centres ``c_i``."""

    def __init__(self, centers):
        self.centers = np.asarray(centers, dtype=np.float64)
        if self.centers.ndim != 2:
            raise InvalidArgumentsError("centers must be a (K, d) array")

    @classmethod
    def basis(cls, k: int) -> "SyntheticObjectives":
        return cls(np.eye(k))

    @property
    def n_objectives(self) -> int:
        return self.centers.shape[0]

    def __call__(self, index: int, x) -> float:
        if not 0 <= index < self.n_objectives:
            raise InvalidArgumentsError(f"objective index {index} out of range")
        x = np.asarray(x, dtype=np.float64)
        if not np.all(np.isfinite(x)):
            raise InvalidArgumentsError("parameter vector must be finite")
        d = x - self.centers[index]
        return float(0.0 - d @ d)

    def vector(self, x) -> np.ndarray:
        d = np.asarray(x, dtype=np.float64)[None, :] - self.centers
        return 0.0 - np.einsum("ij,ij->i", d, d)


def synthetic_objective(index: int, x, centers=None) -> float:
    """Evaluate objective ``index`` of the basis-centred family (or ``centers``)."""
    x = np.asarray(x, dtype=np.float64)
    family = SyntheticObjectives(np.eye(x.size) if centers is None else centers)
    return family(index, x)


class SyntheticProblem:
    """Real-vector genomes with Gaussian mutation over synthetic objectives."""

    def __init__(self, objectives: SyntheticObjectives, sigma: float = 0.1,
                 init_scale: float = 1.0, transform: Optional[Callable] = None):
        self.objectives = objectives
        self.sigma = sigma
        self.init_scale = init_scale
        self.transform = transform
        self.evaluations = 0
        self.reset()

    @property
    def n_objectives(self) -> int:
        return self.objectives.n_objectives

    def reset(self) -> None:
        self._uids = itertools.count()
        self.evaluations = 0

    def random_genome(self, rng):
        d = self.objectives.centers.shape[1]
        return VectorGenome(rng.uniform(-self.init_scale, self.init_scale, d), next(self._uids))

    def mutate(self, genome, rng):
        x = genome.x + rng.normal(0.0, self.sigma, genome.x.shape)
        return VectorGenome(x, next(self._uids), genome.uid)

    def evaluate(self, genomes) -> np.ndarray:
        self.evaluations += len(genomes)
        out = np.array([self.objectives.vector(g.x) for g in genomes]).reshape(len(genomes), -1)
        if self.transform is not None:
            out = self.transform(out)
        return out


class ImageProblem:
    """CPPN genomes scored by image-quality metrics against a target."""

    def __init__(self, target, registry: Optional[Sequence[MetricSpec]] = None,
                 mutation: cppn.MutationParams = cppn.MutationParams()):
        self.registry = get_registry() if registry is None else tuple(registry)
        self.target = check_image(target, "target",
                                  min_size=max(s.min_size for s in self.registry))
        self.height, self.width = self.target.shape[:2]
        self.mutation = mutation
        self.evaluations = 0
        self.reset()

    @property
    def n_objectives(self) -> int:
        return len(self.registry)

    @property
    def objective_names(self) -> list:
        return [s.name for s in self.registry]

    def reset(self) -> None:
        self._uids = itertools.count()
        self.evaluations = 0

    def random_genome(self, rng):
        return cppn.random_genome(rng, self.mutation, uid=next(self._uids))

    def mutate(self, genome, rng):
        return cppn.mutate(genome, self.mutation, rng, uid=next(self._uids))

    def render(self, genome) -> np.ndarray:
        return cppn.render(genome, self.width, self.height)

    def evaluate(self, genomes) -> np.ndarray:
        self.evaluations += len(genomes)
        images = np.stack([self.render(g) for g in genomes])
        return evaluate_all(images, self.target, self.registry)


# --- normalization -----------------------------------------------------------

@dataclass
class NormalizationTable:
    """Per-(objective, target) floor and mean-best constants.

    ``normalize`` maps ``floor -> 0`` and ``best -> 1``. The table is a
    reporting device only; voting never sees it.
    """

    entries: dict = field(default_factory=dict)   # (objective, target_id) -> (floor, best)
    provenance: dict = field(default_factory=dict)  # target_id -> list of run ids

    def objectives_for(self, target_id: str) -> list:
        return [name for name, t in self.entries if t == target_id]

    def arrays(self, objective_names: Sequence[str], target_id: str):
        try:
            pairs = [self.entries[(name, target_id)] for name in objective_names]
        except KeyError as exc:
            raise CalibrationError(
                f"normalization table has no entry for objective {exc.args[0][0]!r} "
                f"on target {target_id!r}"
            ) from None
        floor = np.array([p[0] for p in pairs])
        best = np.array([p[1] for p in pairs])
        return floor, best

    def merge(self, other: "NormalizationTable") -> "NormalizationTable":
        entries = dict(self.entries)
        entries.update(other.entries)
        prov = dict(self.provenance)
        prov.update(other.provenance)
        return NormalizationTable(entries, prov)

    def to_dict(self) -> dict:
        targets: dict = {}
        for (name, tid), (floor, best) in sorted(self.entries.items(), key=lambda kv: (kv[0][1], kv[0][0])):
            targets.setdefault(tid, {})[name] = {"floor": float(floor), "best": float(best)}
        return {"targets": targets,
                "provenance": {t: list(v) for t, v in sorted(self.provenance.items())}}

    @classmethod
    def from_dict(cls, data: dict) -> "NormalizationTable":
        entries = {}
        for tid, objs in data.get("targets", {}).items():
            for name, rec in objs.items():
                entries[(name, tid)] = (float(rec["floor"]), float(rec["best"]))
        prov = {t: list(v) for t, v in data.get("provenance", {}).items()}
        table = cls(entries, prov)
        for (name, tid), (floor, best) in entries.items():
            if not best > floor:
                raise CalibrationError(f"degenerate table entry for {name!r} on {tid!r}")
        return table

    def dumps(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=True)

    @classmethod
    def loads(cls, text: str) -> "NormalizationTable":
        return cls.from_dict(yaml.safe_load(text))

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.dumps())

    @classmethod
    def load(cls, path) -> "NormalizationTable":
        with open(path, encoding="utf-8") as fh:
            return cls.loads(fh.read())


def normalize(raw, table: NormalizationTable, target_id: str,
              objective_names: Optional[Sequence[str]] = None) -> np.ndarray:
    """``(raw - floor) / (best - floor)`` per objective; works on batches."""
    raw = np.asarray(raw, dtype=np.float64)
    names = list(objective_names) if objective_names is not None else list(DEFAULT_OBJECTIVES)
    if raw.shape[-1] != len(names):
        raise LengthMismatchError(f"fitness vector has {raw.shape[-1]} entries, "
                                  f"expected {len(names)}")
    floor, best = table.arrays(names, target_id)
    return (raw - floor) / (best - floor)


def calibrate_table(results: Sequence, target_id: str) -> NormalizationTable:
    """Build table entries from completed all-objective baseline runs.

    ``best`` is the mean over runs of each run's highest raw score, and
    ``floor`` the lowest raw score seen in any run.
    """
    results = [r for r in results if r.target_id == target_id]
    if not results:
        raise CalibrationError(f"no baseline runs for target {target_id!r}")
    names = results[0].objective_names
    for r in results[1:]:
        if r.objective_names != names:
            raise CalibrationError("baseline runs disagree on the objective list")
    best = np.mean([r.raw_max for r in results], axis=0)
    floor = np.min([r.raw_min for r in results], axis=0)
    entries = {}
    for name, f, b in zip(names, floor, best):
        if not b > f:
            raise CalibrationError(
                f"degenerate calibration for objective {name!r}: best ({b}) <= floor ({f})"
            )
        entries[(name, target_id)] = (float(f), float(b))
    return NormalizationTable(entries, {target_id: [r.run_id for r in results]})
