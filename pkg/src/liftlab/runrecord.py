"""Append-only JSON-lines store of run records for reproducibility."""

from __future__ import annotations

import json
import time
import uuid
from dataclasses import asdict, dataclass, field


@dataclass
class RunRecord:
    command: str
    config: dict
    fingerprints: dict = field(default_factory=dict)
    outputs: list = field(default_factory=list)
    wall_time_s: float = 0.0
    solver_stats: dict = field(default_factory=dict)
    run_id: str = field(default_factory=lambda: uuid.uuid4().hex)
    timestamp: float = field(default_factory=time.time)

    def to_line(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)


def append_record(store_path: str, record: RunRecord):
    """Single-write append keeps concurrent runs line-atomic."""
    with open(store_path, "a") as fh:
        fh.write(record.to_line() + "\n")


def read_records(store_path: str) -> list:
    out = []
    with open(store_path) as fh:
        for line in fh:
            line = line.strip()
            if line:
                out.append(json.loads(line))
    return out
