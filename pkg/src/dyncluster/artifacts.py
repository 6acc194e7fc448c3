"""Files produced by runs: dataset snapshots, event logs, metric reports.

* Snapshot CSV: header ``x1,...,xd,birth_tick,source_dgc``, one row per point,
  oldest first. Floats are written in shortest round-trip form.
* Event log: JSON lines. The first line is a header record carrying the
  schema version, PRNG identifier, seed and config hash; every further line
  is one change event.
"""
from __future__ import annotations

import csv
import json
from collections import Counter
from pathlib import Path
from typing import Iterable

import numpy as np

from .config import ScenarioConfig, config_hash
from .engine import ChangeEvent, DatasetWindow
from .evaluation import EvaluationRecord
from .stochastics import PRNG_ID

SCHEMA_VERSION = 1


def write_snapshot_csv(path, window: DatasetWindow) -> None:
    d = window.d
    with open(path, "w", newline="", encoding="utf-8") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow([f"x{j + 1}" for j in range(d)] + ["birth_tick", "source_dgc"])
        for row, birth, src in zip(window.points.tolist(), window.birth.tolist(), window.source.tolist()):
            out.writerow([repr(v) for v in row] + [birth, src])


def read_snapshot_csv(path) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Points, birth ticks and source indices from a snapshot file."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    d = len(header) - 2
    if header[-2:] != ["birth_tick", "source_dgc"] or header[:d] != [f"x{j + 1}" for j in range(d)]:
        raise ValueError(f"{path}: unexpected snapshot header {header}")
    points = np.array([[float(v) for v in r[:d]] for r in body]).reshape(len(body), d)
    birth = np.array([int(r[d]) for r in body], dtype=np.int64)
    source = np.array([int(r[d + 1]) for r in body], dtype=np.int64)
    return points, birth, source


def snapshot_name(tick: int) -> str:
    return f"tick_{tick:09d}.csv"


def header_record(cfg: ScenarioConfig, seed: int) -> dict:
    return {
        "record": "header",
        "schema_version": SCHEMA_VERSION,
        "prng": PRNG_ID,
        "seed": seed,
        "config_hash": config_hash(cfg),
        "scenario": cfg.name,
        "shock_direction": "per-dgc",
    }


class EventLogWriter:
    """Streams events to a JSON-lines file."""

    def __init__(self, path, cfg: ScenarioConfig, seed: int):
        self._fh = open(path, "w", encoding="utf-8")
        self._write(header_record(cfg, seed))

    def _write(self, record: dict) -> None:
        self._fh.write(json.dumps(record, sort_keys=True) + "\n")

    def write(self, events: Iterable[ChangeEvent]) -> None:
        for event in events:
            self._write(event.to_record())

    def close(self) -> None:
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def read_event_log(path) -> tuple[dict, list[dict]]:
    with open(path, encoding="utf-8") as fh:
        lines = [json.loads(line) for line in fh if line.strip()]
    if not lines or lines[0].get("record") != "header":
        raise ValueError(f"{path}: missing header record")
    header = lines[0]
    if header.get("schema_version") != SCHEMA_VERSION:
        raise ValueError(f"{path}: unsupported schema version {header.get('schema_version')}")
    return header, lines[1:]


def summarize_event_log(path) -> dict:
    header, events = read_event_log(path)
    kinds = Counter(e["kind"] for e in events)
    ticks = [e["tick"] for e in events]
    return {
        "scenario": header.get("scenario"),
        "seed": header["seed"],
        "prng": header["prng"],
        "config_hash": header["config_hash"],
        "events": len(events),
        "by_kind": dict(sorted(kinds.items())),
        "first_tick": min(ticks) if ticks else None,
        "last_tick": max(ticks) if ticks else None,
        "local_by_dgc": dict(sorted(Counter(e["dgc"] for e in events if e["kind"] == "local").items())),
    }


def write_best_csv(path, records: Iterable[EvaluationRecord]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(["tick", "value", "best", "changed", "deployed_value"])
        for r in records:
            out.writerow([r.tick, repr(r.value), repr(r.best), int(r.changed), repr(r.deployed_value)])


def write_density_csv(path, grid) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(["x1", "x2", "density"])
        for x, y, dens in grid.rows():
            out.writerow([repr(x), repr(y), repr(dens)])


def write_json(path, data: dict) -> None:
    Path(path).write_text(json.dumps(data, indent=2, sort_keys=True) + "\n", encoding="utf-8")
