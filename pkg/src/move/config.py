"""Experiment configuration: embedded defaults, profiles, YAML files, env vars.

Resolution order (later wins): built-in defaults, profile overlay, config
file, ``MOVE_<SECTION>__<KEY>`` environment variables, explicit overrides.
"""
from __future__ import annotations

import copy
import os
from dataclasses import dataclass, fields
from typing import Mapping, Optional

import yaml

from .cppn import MutationParams
from .engine import JumpPolicy
from .exceptions import ConfigError, InvalidArgumentsError
from .objectives import DEFAULT_OBJECTIVES, get_registry

ENV_PREFIX = "MOVE_"

DEFAULTS = {
    "run": {
        "num_cells": 50,
        "functions_per_cell": 5,
        "generations": 200,
        "jump_policy": "unlimited",
        "width": 64,
        "height": 64,
        "objectives": list(DEFAULT_OBJECTIVES),
    },
    "mutation": {f.name: f.default for f in fields(MutationParams)},
    "baselines": {
        "children_per_climber": 7,
        "all_objective_children": None,  # None: match num_cells
    },
    "experiment": {
        "trials": 10,
        "base_seed": 0,
        "targets": ["builtin:sunrise"],
        "out": "results",
        "workers": 1,
        "alpha": 0.05,
    },
    "sweep": {  # null: the single value from the run section
        "functions_per_cell": None,
        "num_cells": None,
        "jump_policy": None,
    },
}

PROFILES = {
    "desk": {},
    "paper": {
        "run": {"num_cells": 100, "generations": 1000},
        "experiment": {"trials": 20},
        "sweep": {"functions_per_cell": [1, 3, 5, 7]},
    },
}


def deep_merge(base: dict, overlay: Mapping) -> dict:
    out = copy.deepcopy(base)
    for key, value in overlay.items():
        if isinstance(value, Mapping) and isinstance(out.get(key), dict):
            out[key] = deep_merge(out[key], value)
        else:
            out[key] = copy.deepcopy(value)
    return out


def _check_known(data: Mapping, reference: Mapping, path: str = "") -> None:
    for key, value in data.items():
        if key not in reference:
            raise ConfigError(f"unknown config key {path + key!r}")
        if isinstance(reference[key], dict):
            if not isinstance(value, Mapping):
                raise ConfigError(f"config key {path + key!r} must be a section")
            _check_known(value, reference[key], f"{path}{key}.")


def env_overrides(environ: Mapping[str, str]) -> dict:
    """``MOVE_RUN__NUM_CELLS=25`` becomes ``{"run": {"num_cells": 25}}``."""
    out: dict = {}
    for name, raw in sorted(environ.items()):
        if not name.startswith(ENV_PREFIX):
            continue
        path = name[len(ENV_PREFIX):].lower().split("__")
        if len(path) < 2:
            continue
        node = out
        for part in path[:-1]:
            node = node.setdefault(part, {})
        node[path[-1]] = yaml.safe_load(raw)
    return out


@dataclass(frozen=True)
class RunConfig:
    num_cells: int = 50
    functions_per_cell: int = 5
    generations: int = 200
    jump_policy: str = "unlimited"
    width: int = 64
    height: int = 64
    objectives: tuple = DEFAULT_OBJECTIVES
    mutation: MutationParams = MutationParams()

    def __post_init__(self):
        if self.num_cells < 1:
            raise ConfigError("run.num_cells must be >= 1")
        if self.generations < 0:
            raise ConfigError("run.generations must be >= 0")
        k = len(self.objectives)
        n = self.functions_per_cell
        if n < 1 or n % 2 == 0 or n > k:
            raise ConfigError(f"run.functions_per_cell must be odd and <= {k}, got {n}")
        if self.width < 16 or self.height < 16:
            raise ConfigError("run.width and run.height must be >= 16")
        try:
            JumpPolicy.parse(self.jump_policy)
            get_registry(self.objectives)
        except InvalidArgumentsError as exc:
            raise ConfigError(str(exc)) from None

    def replace(self, **changes) -> "RunConfig":
        data = {f.name: getattr(self, f.name) for f in fields(self)}
        data.update(changes)
        return RunConfig(**data)

    def to_dict(self) -> dict:
        return {
            "num_cells": self.num_cells,
            "functions_per_cell": self.functions_per_cell,
            "generations": self.generations,
            "jump_policy": JumpPolicy.parse(self.jump_policy).value,
            "width": self.width,
            "height": self.height,
            "objectives": list(self.objectives),
            "mutation": {f.name: getattr(self.mutation, f.name) for f in fields(MutationParams)},
        }


@dataclass(frozen=True)
class ExperimentConfig:
    run: RunConfig
    trials: int
    base_seed: int
    targets: tuple
    out: str
    workers: int
    alpha: float
    children_per_climber: int
    all_objective_children: Optional[int]
    sweep_functions_per_cell: tuple
    sweep_num_cells: tuple
    sweep_jump_policy: tuple
    raw: dict

    @property
    def baseline_children(self) -> int:
        return self.all_objective_children or self.run.num_cells

    def dump(self) -> str:
        return yaml.safe_dump(self.raw, sort_keys=False)

    @classmethod
    def from_dict(cls, data: Mapping) -> "ExperimentConfig":
        _check_known(data, DEFAULTS)
        data = deep_merge(DEFAULTS, data)
        try:
            mutation = MutationParams(**{k: float(v) for k, v in data["mutation"].items()})
        except ValueError as exc:
            raise ConfigError(f"mutation: {exc}") from None
        r = data["run"]
        run = RunConfig(
            num_cells=int(r["num_cells"]),
            functions_per_cell=int(r["functions_per_cell"]),
            generations=int(r["generations"]),
            jump_policy=str(r["jump_policy"]),
            width=int(r["width"]),
            height=int(r["height"]),
            objectives=tuple(r["objectives"]),
            mutation=mutation,
        )
        e, s, b = data["experiment"], data["sweep"], data["baselines"]
        if int(e["trials"]) < 1:
            raise ConfigError("experiment.trials must be >= 1")
        if int(e["workers"]) < 1:
            raise ConfigError("experiment.workers must be >= 1")
        if not e["targets"]:
            raise ConfigError("experiment.targets must not be empty")
        for axis in ("functions_per_cell", "num_cells", "jump_policy"):
            if s[axis] is None:
                s[axis] = [r[axis]]
            elif isinstance(s[axis], (str, int)):
                s[axis] = [s[axis]]
            if not s[axis]:
                raise ConfigError(f"sweep.{axis} must not be empty")
        for n in s["functions_per_cell"]:
            run.replace(functions_per_cell=int(n))
        for m in s["num_cells"]:
            run.replace(num_cells=int(m))
        for p in s["jump_policy"]:
            run.replace(jump_policy=str(p))
        if not 0 < float(e["alpha"]) < 1:
            raise ConfigError("experiment.alpha must lie in (0, 1)")
        return cls(
            run=run,
            trials=int(e["trials"]),
            base_seed=int(e["base_seed"]),
            targets=tuple(str(t) for t in e["targets"]),
            out=str(e["out"]),
            workers=int(e["workers"]),
            alpha=float(e["alpha"]),
            children_per_climber=int(b["children_per_climber"]),
            all_objective_children=None if b["all_objective_children"] is None
            else int(b["all_objective_children"]),
            sweep_functions_per_cell=tuple(int(v) for v in s["functions_per_cell"]),
            sweep_num_cells=tuple(int(v) for v in s["num_cells"]),
            sweep_jump_policy=tuple(JumpPolicy.parse(v).value for v in s["jump_policy"]),
            raw=data,
        )


def default_config_dict(profile: str = "desk") -> dict:
    if profile not in PROFILES:
        raise ConfigError(f"unknown profile {profile!r}; choose from {sorted(PROFILES)}")
    return deep_merge(DEFAULTS, PROFILES[profile])


def load_config(path=None, profile: str = "desk", overrides: Optional[Mapping] = None,
                environ: Optional[Mapping[str, str]] = None) -> ExperimentConfig:
    data = default_config_dict(profile)
    if path is not None:
        try:
            with open(path, encoding="utf-8") as fh:
                file_data = yaml.safe_load(fh) or {}
        except yaml.YAMLError as exc:
            raise ConfigError(f"cannot parse {path}: {exc}") from None
        if not isinstance(file_data, Mapping):
            raise ConfigError(f"{path} must contain a mapping at top level")
        _check_known(file_data, DEFAULTS)
        data = deep_merge(data, file_data)
    env = env_overrides(os.environ if environ is None else environ)
    if env:
        _check_known(env, DEFAULTS)
        data = deep_merge(data, env)
    if overrides:
        _check_known(overrides, DEFAULTS)
        data = deep_merge(data, overrides)
    return ExperimentConfig.from_dict(data)
