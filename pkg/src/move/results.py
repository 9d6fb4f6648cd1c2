"""Serializable run results.

A :class:`RunResult` is written as a single JSON document with sorted keys
and no timestamps, so identical runs give identical bytes.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .cppn import Genome
from .engine import Cell, CellMap
from .lineage import LineageLog
from .objectives import VectorGenome

FORMAT_VERSION = 1


def genome_to_dict(genome) -> dict:
    if isinstance(genome, Genome):
        return {"type": "cppn", **genome.to_dict()}
    if isinstance(genome, VectorGenome):
        return {"type": "vector", "uid": genome.uid, "parent_uid": genome.parent_uid,
                "x": [float(v) for v in genome.x]}
    raise TypeError(f"cannot serialise genome of type {type(genome).__name__}")


def genome_from_dict(data: dict):
    kind = data.get("type", "cppn")
    if kind == "cppn":
        return Genome.from_dict(data)
    if kind == "vector":
        return VectorGenome(np.array(data["x"], dtype=np.float64), int(data["uid"]),
                            None if data["parent_uid"] is None else int(data["parent_uid"]))
    raise ValueError(f"unknown genome type {kind!r}")


@dataclass
class CellRecord:
    cell_id: int
    subset: tuple
    genome: object
    scores: np.ndarray

    @property
    def uid(self) -> int:
        return self.genome.uid


@dataclass
class RunResult:
    algorithm: str                 # "move", "all_objective" or "single_objective"
    seed: int
    target_id: str
    objective_names: list
    settings: dict
    cells: list
    lineage: LineageLog
    initial_uids: list
    history: list = field(default_factory=list)
    raw_min: Optional[np.ndarray] = None
    raw_max: Optional[np.ndarray] = None
    label: str = ""

    @property
    def run_id(self) -> str:
        base = f"{self.algorithm}:{self.target_id}:{self.seed}"
        return f"{self.label}/{base}" if self.label else base

    @property
    def subsets(self) -> list:
        return [c.subset for c in self.cells]

    @property
    def num_cells(self) -> int:
        return len(self.cells)

    @property
    def final_uids(self) -> list:
        return [c.uid for c in self.cells]

    def score_matrix(self) -> np.ndarray:
        return np.array([c.scores for c in self.cells], dtype=np.float64)

    def evaluations_per_generation(self) -> list:
        return [h["evaluations"] for h in self.history]

    def to_cell_map(self) -> CellMap:
        generation = self.history[-1]["generation"] if self.history else 0
        return CellMap([Cell(c.cell_id, tuple(c.subset), c.genome, np.array(c.scores))
                        for c in self.cells], generation=generation)

    @classmethod
    def from_cell_map(cls, cell_map: CellMap, **kwargs) -> "RunResult":
        cells = [CellRecord(c.cell_id, tuple(c.subset), c.elite, np.array(c.elite_scores))
                 for c in cell_map.cells]
        return cls(cells=cells, **kwargs)

    def to_dict(self) -> dict:
        return {
            "format": FORMAT_VERSION,
            "algorithm": self.algorithm,
            "label": self.label,
            "seed": int(self.seed),
            "target_id": self.target_id,
            "objective_names": list(self.objective_names),
            "settings": self.settings,
            "cells": [
                {"cell_id": c.cell_id, "subset": [int(i) for i in c.subset],
                 "scores": [float(v) for v in c.scores], "genome": genome_to_dict(c.genome)}
                for c in self.cells
            ],
            "lineage": self.lineage.to_dict(),
            "initial_uids": [int(u) for u in self.initial_uids],
            "history": self.history,
            "raw_min": None if self.raw_min is None else [float(v) for v in self.raw_min],
            "raw_max": None if self.raw_max is None else [float(v) for v in self.raw_max],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "RunResult":
        if data.get("format") != FORMAT_VERSION:
            raise ValueError(f"unsupported run-result format {data.get('format')!r}")
        cells = [CellRecord(int(c["cell_id"]), tuple(c["subset"]), genome_from_dict(c["genome"]),
                            np.array(c["scores"], dtype=np.float64))
                 for c in data["cells"]]
        return cls(
            algorithm=data["algorithm"],
            seed=int(data["seed"]),
            target_id=data["target_id"],
            objective_names=list(data["objective_names"]),
            settings=data["settings"],
            cells=cells,
            lineage=LineageLog.from_dict(data["lineage"]),
            initial_uids=[int(u) for u in data["initial_uids"]],
            history=data["history"],
            raw_min=None if data["raw_min"] is None else np.array(data["raw_min"]),
            raw_max=None if data["raw_max"] is None else np.array(data["raw_max"]),
            label=data.get("label", ""),
        )

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":")) + "\n"

    @classmethod
    def loads(cls, text: str) -> "RunResult":
        return cls.from_dict(json.loads(text))

    def save(self, path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_suffix(path.suffix + ".tmp")
        tmp.write_text(self.dumps(), encoding="utf-8")
        tmp.replace(path)
        return path

    @classmethod
    def load(cls, path) -> "RunResult":
        return cls.loads(Path(path).read_text(encoding="utf-8"))
