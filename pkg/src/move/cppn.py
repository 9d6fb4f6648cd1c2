"""Compositional pattern producing networks: construction, mutation, rendering.

Node ids 0, 1, 2 are the x, y and bias inputs; 3, 4, 5 are the R, G, B
outputs; hidden nodes are numbered from 6 upwards.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace
from functools import cached_property, lru_cache
from typing import Optional

import numpy as np

ACTIVATIONS = ("sine", "cosine", "gaussian", "identity", "sigmoid")

# output range of each activation, used to rescale outputs onto [0, 1]
ACTIVATION_RANGES = {
    "sine": (-1.0, 1.0),
    "cosine": (-1.0, 1.0),
    "gaussian": (0.0, 1.0),
    "identity": (-1.0, 1.0),
    "sigmoid": (0.0, 1.0),
}

INPUT_IDS = (0, 1, 2)
OUTPUT_IDS = (3, 4, 5)
FIRST_HIDDEN_ID = 6

INPUT, HIDDEN, OUTPUT = "input", "hidden", "output"

_uid_counter = itertools.count()


def activate(function: str, x):
    """Apply a named activation; works on scalars and arrays."""
    if function == "sine":
        return np.sin(np.pi * x)
    if function == "cosine":
        return np.cos(np.pi * x)
    if function == "gaussian":
        return np.exp(-((2.5 * x) ** 2))
    if function == "identity":
        return np.clip(x, -1.0, 1.0)
    if function == "sigmoid":
        return 1.0 / (1.0 + np.exp(-4.9 * x))
    raise ValueError(f"unknown activation {function!r}")


@dataclass(frozen=True)
class NodeGene:
    node_id: int
    activation: str
    role: str


@dataclass(frozen=True)
class ConnectionGene:
    source: int
    sink: int
    weight: float
    enabled: bool = True


@dataclass(frozen=True)
class MutationParams:
    p_perturb_weight: float = 0.8
    weight_sigma: float = 0.5
    p_reset_weight: float = 0.05
    p_add_connection: float = 0.15
    p_add_node: float = 0.10
    p_remove_connection: float = 0.05
    p_change_activation: float = 0.10
    p_init_conn: float = 0.5
    init_weight: float = 3.0

    def __post_init__(self):
        for name in ("p_perturb_weight", "p_reset_weight", "p_add_connection",
                     "p_add_node", "p_remove_connection", "p_change_activation",
                     "p_init_conn"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")
        if self.weight_sigma <= 0:
            raise ValueError("weight_sigma must be > 0")
        if self.init_weight <= 0:
            raise ValueError("init_weight must be > 0")

    @classmethod
    def zero(cls) -> "MutationParams":
        """Parameters under which mutation copies the parent unchanged."""
        return cls(p_perturb_weight=0.0, p_reset_weight=0.0, p_add_connection=0.0,
                   p_add_node=0.0, p_remove_connection=0.0, p_change_activation=0.0)


@dataclass(eq=False)
class Genome:
    """A CPPN. Treated as immutable once built; mutation returns a copy."""

    nodes: tuple
    connections: tuple
    uid: int = field(default_factory=lambda: next(_uid_counter))
    parent_uid: Optional[int] = None

    def node(self, node_id: int) -> NodeGene:
        return self._node_index[node_id]

    @cached_property
    def _node_index(self) -> dict:
        return {n.node_id: n for n in self.nodes}

    @property
    def hidden_ids(self) -> list:
        return [n.node_id for n in self.nodes if n.role == HIDDEN]

    def same_structure(self, other: "Genome") -> bool:
        return self.nodes == other.nodes and self.connections == other.connections

    @cached_property
    def _plan(self):
        """Topological evaluation plan over enabled connections."""
        incoming = {n.node_id: [] for n in self.nodes}
        for c in self.connections:
            if c.enabled:
                incoming[c.sink].append((c.source, c.weight))
        order = topological_order(self.nodes, self.connections)
        return [(nid, self._node_index[nid].activation, incoming[nid])
                for nid in order if self._node_index[nid].role != INPUT]

    def to_dict(self) -> dict:
        return {
            "uid": self.uid,
            "parent_uid": self.parent_uid,
            "nodes": [[n.node_id, n.activation, n.role] for n in self.nodes],
            "connections": [[c.source, c.sink, c.weight, c.enabled] for c in self.connections],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Genome":
        nodes = tuple(NodeGene(int(i), str(a), str(r)) for i, a, r in data["nodes"])
        conns = tuple(ConnectionGene(int(s), int(t), float(w), bool(e))
                      for s, t, w, e in data["connections"])
        genome = cls(nodes, conns, uid=int(data["uid"]),
                     parent_uid=None if data["parent_uid"] is None else int(data["parent_uid"]))
        validate_genome(genome)
        return genome


def topological_order(nodes, connections) -> list:
    """Kahn's algorithm over *all* connections; raises on a cycle."""
    ids = sorted(n.node_id for n in nodes)
    succ = {i: [] for i in ids}
    indeg = {i: 0 for i in ids}
    for c in connections:
        succ[c.source].append(c.sink)
        indeg[c.sink] += 1
    ready = [i for i in ids if indeg[i] == 0]
    order = []
    while ready:
        ready.sort()
        i = ready.pop(0)
        order.append(i)
        for j in succ[i]:
            indeg[j] -= 1
            if indeg[j] == 0:
                ready.append(j)
    if len(order) != len(ids):
        raise ValueError("connection graph contains a cycle")
    return order


def is_acyclic(genome: Genome) -> bool:
    try:
        topological_order(genome.nodes, genome.connections)
    except ValueError:
        return False
    return True


def validate_genome(genome: Genome) -> None:
    """Check the structural invariants; raises ``ValueError`` on violation."""
    roles = {n.node_id: n.role for n in genome.nodes}
    if len(roles) != len(genome.nodes):
        raise ValueError("duplicate node ids")
    if sorted(i for i, r in roles.items() if r == INPUT) != list(INPUT_IDS):
        raise ValueError("inputs must be exactly x, y, bias")
    if sorted(i for i, r in roles.items() if r == OUTPUT) != list(OUTPUT_IDS):
        raise ValueError("outputs must be exactly R, G, B")
    for n in genome.nodes:
        if n.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {n.activation!r}")
        if n.role == INPUT and n.activation != "identity":
            raise ValueError("input nodes must use the identity activation")
    pairs = set()
    for c in genome.connections:
        if c.source not in roles or c.sink not in roles:
            raise ValueError(f"connection {c.source}->{c.sink} references a missing node")
        if c.source == c.sink:
            raise ValueError("self-loop")
        if roles[c.sink] == INPUT:
            raise ValueError("connections may not feed an input node")
        if (c.source, c.sink) in pairs:
            raise ValueError(f"duplicate connection {c.source}->{c.sink}")
        pairs.add((c.source, c.sink))
    if not is_acyclic(genome):
        raise ValueError("connection graph contains a cycle")


def _base_nodes(rng: np.random.Generator) -> list:
    nodes = [NodeGene(i, "identity", INPUT) for i in INPUT_IDS]
    for i in OUTPUT_IDS:
        nodes.append(NodeGene(i, ACTIVATIONS[int(rng.integers(len(ACTIVATIONS)))], OUTPUT))
    return nodes


def random_genome(rng: np.random.Generator, params: MutationParams = MutationParams(),
                  uid: Optional[int] = None) -> Genome:
    """Minimal-topology genome: inputs wired straight to outputs."""
    nodes = _base_nodes(rng)
    pairs = [(s, t) for s in INPUT_IDS for t in OUTPUT_IDS]
    keep = rng.random(len(pairs)) < params.p_init_conn
    if not keep.any():
        keep[int(rng.integers(len(pairs)))] = True
    weights = rng.uniform(-params.init_weight, params.init_weight, size=len(pairs))
    conns = tuple(ConnectionGene(s, t, float(w)) for (s, t), k, w in zip(pairs, keep, weights) if k)
    if uid is None:
        uid = next(_uid_counter)
    return Genome(tuple(nodes), conns, uid=uid)


def _reachable(start: int, edges) -> set:
    succ: dict = {}
    for s, t in edges:
        succ.setdefault(s, []).append(t)
    seen = {start}
    stack = [start]
    while stack:
        for j in succ.get(stack.pop(), ()):
            if j not in seen:
                seen.add(j)
                stack.append(j)
    return seen


def _connected_outputs(connections) -> set:
    edges = [(c.source, c.sink) for c in connections if c.enabled]
    out = set()
    for i in INPUT_IDS:
        out |= _reachable(i, edges)
    return out & set(OUTPUT_IDS)


def _try_add_connection(nodes, conns, rng, params):
    sources = [n.node_id for n in nodes if n.role in (INPUT, HIDDEN)]
    sinks = [n.node_id for n in nodes if n.role in (HIDDEN, OUTPUT)]
    existing = {(c.source, c.sink) for c in conns}
    edges = list(existing)
    for _ in range(20):
        s = sources[int(rng.integers(len(sources)))]
        t = sinks[int(rng.integers(len(sinks)))]
        if s == t or (s, t) in existing:
            continue
        if s in _reachable(t, edges):
            continue
        w = float(rng.uniform(-params.init_weight, params.init_weight))
        return conns + [ConnectionGene(s, t, w)]
    return conns


def _try_add_node(nodes, conns, rng):
    enabled = [i for i, c in enumerate(conns) if c.enabled]
    if not enabled:
        return nodes, conns
    i = enabled[int(rng.integers(len(enabled)))]
    old = conns[i]
    new_id = max(n.node_id for n in nodes) + 1
    act = ACTIVATIONS[int(rng.integers(len(ACTIVATIONS)))]
    nodes = nodes + [NodeGene(new_id, act, HIDDEN)]
    conns = list(conns)
    conns[i] = replace(old, enabled=False)
    conns += [ConnectionGene(old.source, new_id, 1.0), ConnectionGene(new_id, old.sink, old.weight)]
    return nodes, conns


def _try_remove_connection(conns, rng):
    if not conns:
        return conns
    i = int(rng.integers(len(conns)))
    trial = conns[:i] + conns[i + 1:]
    if _connected_outputs(conns) - _connected_outputs(trial):
        return conns
    return trial


def mutate(parent: Genome, params: MutationParams, rng: np.random.Generator,
           uid: Optional[int] = None) -> Genome:
    """Return a mutated copy of ``parent``; the parent is left untouched.

    Operators run in a fixed order (weights, add connection, add node,
    remove connection, change activation) and each consumes random draws
    even when it ends up being skipped.
    """
    nodes = list(parent.nodes)
    conns = []
    u_reset = rng.random(len(parent.connections))
    u_perturb = rng.random(len(parent.connections))
    noise = rng.normal(0.0, params.weight_sigma, size=len(parent.connections))
    fresh = rng.uniform(-params.init_weight, params.init_weight, size=len(parent.connections))
    for c, ur, up, dn, fw in zip(parent.connections, u_reset, u_perturb, noise, fresh):
        if ur < params.p_reset_weight:
            c = replace(c, weight=float(fw))
        elif up < params.p_perturb_weight:
            c = replace(c, weight=float(c.weight + dn))
        conns.append(c)

    if rng.random() < params.p_add_connection:
        conns = _try_add_connection(nodes, conns, rng, params)
    if rng.random() < params.p_add_node:
        nodes, conns = _try_add_node(nodes, conns, rng)
    if rng.random() < params.p_remove_connection:
        conns = _try_remove_connection(conns, rng)
    if rng.random() < params.p_change_activation:
        mutable = [i for i, n in enumerate(nodes) if n.role != INPUT]
        i = mutable[int(rng.integers(len(mutable)))]
        nodes[i] = replace(nodes[i], activation=ACTIVATIONS[int(rng.integers(len(ACTIVATIONS)))])

    if uid is None:
        uid = next(_uid_counter)
    return Genome(tuple(nodes), tuple(conns), uid=uid, parent_uid=parent.uid)


@lru_cache(maxsize=16)
def _coordinates(width: int, height: int):
    if width < 2 or height < 2:
        raise ValueError("render size must be at least 2x2")
    xs = 2.0 * np.arange(width) / (width - 1) - 1.0
    ys = 2.0 * np.arange(height) / (height - 1) - 1.0
    x, y = np.meshgrid(xs, ys)  # x varies along columns, y along rows
    x = x.ravel()
    y = y.ravel()
    x.setflags(write=False)
    y.setflags(write=False)
    return x, y


def render(genome: Genome, width: int, height: int) -> np.ndarray:
    """Render to a float64 ``(height, width, 3)`` array with values in [0, 1].

    A node without enabled incoming connections is silent: hidden nodes
    output 0 and output nodes paint their channel 0.
    """
    x, y = _coordinates(width, height)
    values = {0: x, 1: y, 2: np.ones_like(x)}
    image = np.zeros((height * width, 3))
    for nid, act, incoming in genome._plan:
        if not incoming:
            values[nid] = np.zeros_like(x)
            continue
        src, w = incoming[0]
        pre = w * values[src]
        for src, w in incoming[1:]:
            pre = pre + w * values[src]
        out = activate(act, pre)
        values[nid] = out
        if nid in OUTPUT_IDS:
            lo, hi = ACTIVATION_RANGES[act]
            image[:, nid - OUTPUT_IDS[0]] = np.clip((out - lo) / (hi - lo), 0.0, 1.0)
    return image.reshape(height, width, 3)
