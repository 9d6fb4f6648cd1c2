"""Append-only record of who replaced whom, and when."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional

from .exceptions import LineageError


@dataclass(frozen=True)
class ReplacementEvent:
    generation: int
    parent_cell: int
    target_cell: int
    margin: int
    child_uid: int

    @property
    def is_jump(self) -> bool:
        return self.target_cell != self.parent_cell

    def to_list(self) -> list:
        return [self.generation, self.parent_cell, self.target_cell, self.margin, self.child_uid]

    @classmethod
    def from_list(cls, row) -> "ReplacementEvent":
        return cls(*(int(v) for v in row))


@dataclass(frozen=True)
class GenomeRecord:
    """Registry entry: ``seed_cell`` is set only for generation-0 genomes."""

    parent_uid: Optional[int]
    birth_generation: int
    seed_cell: Optional[int] = None


@dataclass
class LineageLog:
    events: list = field(default_factory=list)
    registry: dict = field(default_factory=dict)

    def register(self, uid: int, parent_uid: Optional[int], birth_generation: int,
                 seed_cell: Optional[int] = None) -> None:
        if uid in self.registry:
            return
        if parent_uid is not None and parent_uid not in self.registry:
            raise LineageError(f"parent {parent_uid} of genome {uid} is not registered")
        self.registry[uid] = GenomeRecord(parent_uid, birth_generation, seed_cell)

    def append(self, event: ReplacementEvent) -> None:
        if event.child_uid not in self.registry:
            raise LineageError(f"event references unregistered genome {event.child_uid}")
        if self.events:
            last = self.events[-1]
            if event.generation < last.generation:
                raise ValueError("events must be appended in generation order")
        self.events.append(event)

    def extend(self, events: Iterable[ReplacementEvent]) -> None:
        for ev in events:
            self.append(ev)

    def __len__(self) -> int:
        return len(self.events)

    def ancestors(self, uid: int) -> list:
        """``uid`` followed by its parent, grandparent, ... up to a root."""
        chain = []
        seen = set()
        current = uid
        while current is not None:
            if current not in self.registry:
                raise LineageError(f"genome {current} missing from lineage registry")
            if current in seen:
                raise LineageError(f"lineage cycle through genome {current}")
            seen.add(current)
            chain.append(current)
            current = self.registry[current].parent_uid
        return chain

    def events_by_child(self) -> dict:
        out: dict = {}
        for ev in self.events:
            out.setdefault(ev.child_uid, []).append(ev)
        return out

    def replay(self, initial_uids: list) -> list:
        """Apply every event to a generation-0 uid layout; returns final layout."""
        cells = list(initial_uids)
        for ev in self.events:
            cells[ev.target_cell] = ev.child_uid
        return cells

    def to_dict(self) -> dict:
        return {
            "events": [ev.to_list() for ev in self.events],
            "registry": [
                [uid, rec.parent_uid, rec.birth_generation, rec.seed_cell]
                for uid, rec in sorted(self.registry.items())
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "LineageLog":
        log = cls()
        for uid, parent, birth, seed_cell in data["registry"]:
            log.registry[int(uid)] = GenomeRecord(
                None if parent is None else int(parent),
                int(birth),
                None if seed_cell is None else int(seed_cell),
            )
        log.events = [ReplacementEvent.from_list(row) for row in data["events"]]
        return log
