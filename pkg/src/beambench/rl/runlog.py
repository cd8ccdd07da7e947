"""Per-run training logs: one validation entry per epoch.

Persisted as JSON Lines ({run_id, seed, epoch, steps, value} per line)
so a crashed run keeps everything up to its last finished epoch.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Union


@dataclass(frozen=True)
class LogEntry:
    epoch: int
    steps: int
    value: float

    def __post_init__(self):
        if not 0.0 <= self.value <= 1.0:
            raise ValueError(f"validation value {self.value} outside [0, 1]")


@dataclass
class RunLog:
    run_id: str
    seed: int
    entries: list = field(default_factory=list)

    def append(self, entry: LogEntry, path: Optional[Union[str, Path]] = None) -> None:
        """Record one epoch; with a path, durably append it to the file."""
        if self.entries and entry.steps <= self.entries[-1].steps:
            raise ValueError("cumulative steps must be strictly increasing")
        self.entries.append(entry)
        if path is not None:
            with open(path, "a") as fh:
                fh.write(self._line(entry) + "\n")
                fh.flush()

    def _line(self, entry: LogEntry) -> str:
        return json.dumps(
            {
                "run_id": self.run_id,
                "seed": self.seed,
                "epoch": entry.epoch,
                "steps": entry.steps,
                "value": entry.value,
            }
        )

    @property
    def values(self) -> list:
        return [e.value for e in self.entries]

    def write_jsonl(self, path: Union[str, Path]) -> None:
        with open(path, "w") as fh:
            for entry in self.entries:
                fh.write(self._line(entry) + "\n")

    @classmethod
    def read_jsonl(cls, path: Union[str, Path]) -> "RunLog":
        entries = []
        run_id, seed = None, None
        with open(path) as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                doc = json.loads(line)
                run_id = doc["run_id"] if run_id is None else run_id
                seed = doc["seed"] if seed is None else seed
                if doc["run_id"] != run_id or doc["seed"] != seed:
                    raise ValueError(f"{path}: mixed run ids in one file")
                entries.append(LogEntry(doc["epoch"], doc["steps"], doc["value"]))
        if run_id is None:
            raise ValueError(f"{path}: empty run log")
        log = cls(run_id=run_id, seed=seed)
        for e in entries:
            log.append(e)
        return log


def run_filename(seed: int) -> str:
    return f"run-{seed}.jsonl"
