# qssmix/harness/report.py
"""
Nested report scopes.

A ``Job`` is a context manager; ``record`` and ``check`` append to the innermost
open job, and on exit a job hands its entries to its parent, the same way nested
blocks collect into the enclosing one.

    with Job("scaling") as job:
        with Job("level-fit"):
            record("grad_sup_slope", 1.02, "qss_family.scaling_diagnostics")
            check("grad_sup_slope_window", 0.9 <= 1.02 <= 1.1)
        job.export(out_dir)
"""
from __future__ import annotations

import contextvars
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from contextvars import ContextVar
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Sequence

import numpy as np
import pandas as pd

logger = logging.getLogger(__name__)

_current: ContextVar["Job"] = ContextVar("_current")

ENTRY_COLUMNS = ["job", "kind", "name", "value", "passed", "provenance"]


def _plain(value: Any) -> Any:
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return _plain(value.tolist())
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    return value


@dataclass
class Entry:
    job: str
    kind: str                   # "record" or "check"
    name: str
    value: Any = None
    passed: bool | None = None
    provenance: str = ""

    def as_dict(self) -> dict:
        return {k: _plain(v) for k, v in self.__dict__.items()}


class Job:
    def __init__(self, name: str):
        parent = _current.get(None)
        self.name = name
        self.depth = parent.depth + 1 if parent else 0
        self.path = f"{parent.path}/{name}" if parent else name
        self.entries: list[Entry] = []
        self.tables: dict[str, list[dict]] = {}

    # ---------- context ----------
    def __enter__(self):
        self._token = _current.set(self)
        logger.info("%sjob %s started", "  " * self.depth, self.path)
        return self

    def __exit__(self, exc_type, exc, tb):
        _current.reset(self._token)
        parent = _current.get(None)
        if parent is not None:
            parent.adopt(self)
        logger.info("%sjob %s finished: %d entries, %d failed checks",
                    "  " * self.depth, self.path, len(self.entries), len(self.failures))

    def adopt(self, child: "Job") -> None:
        self.entries.extend(child.entries)
        for name, rows in child.tables.items():
            self.tables.setdefault(name, []).extend(rows)

    # ---------- collection ----------
    def record(self, name: str, value: Any, provenance: str = "") -> Any:
        self.entries.append(Entry(self.path, "record", name, _plain(value), None, provenance))
        return value

    def check(self, name: str, passed: bool, value: Any = None, provenance: str = "") -> bool:
        passed = bool(passed)
        self.entries.append(Entry(self.path, "check", name, _plain(value), passed, provenance))
        if not passed:
            logger.warning("check %s failed in %s (value %s)", name, self.path, value)
        return passed

    def table(self, name: str, rows: Sequence[dict]) -> None:
        self.tables.setdefault(name, []).extend(_plain(dict(r)) for r in rows)

    @property
    def failures(self) -> list[Entry]:
        return [e for e in self.entries if e.kind == "check" and not e.passed]

    @property
    def passed(self) -> bool:
        return not self.failures

    # ---------- export ----------
    def to_dict(self) -> dict:
        return {
            "job": self.path,
            "passed": self.passed,
            "failures": [e.name for e in self.failures],
            "entries": [e.as_dict() for e in self.entries],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([e.as_dict() for e in self.entries], columns=ENTRY_COLUMNS)

    def export(self, directory: str | Path) -> list[Path]:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        stem = self.name.replace("/", "_")
        written = [directory / f"{stem}.json", directory / f"{stem}.csv"]
        written[0].write_text(self.to_json() + "\n")
        self.to_frame().to_csv(written[1], index=False)
        for name, rows in sorted(self.tables.items()):
            path = directory / f"{stem}_{name}.csv"
            pd.DataFrame(rows).to_csv(path, index=False, float_format="%.12g")
            written.append(path)
        for path in written:
            logger.info("wrote %s", path)
        return written


def current_job() -> Job:
    job = _current.get(None)
    if job is None:
        raise RuntimeError("no report job is open; use `with Job(name):`")
    return job


def record(name: str, value: Any, provenance: str = "") -> Any:
    return current_job().record(name, value, provenance)


def check(name: str, passed: bool, value: Any = None, provenance: str = "") -> bool:
    return current_job().check(name, passed, value, provenance)


def table(name: str, rows: Sequence[dict]) -> None:
    current_job().table(name, rows)


def _run_isolated(name: str, task: Callable[[], None]) -> Job:
    with Job(name) as job:
        task()
    return job


def run_jobs(tasks: Sequence[tuple[str, Callable[[], None]]], threads: int = 1) -> list[Job]:
    """
    Run independent jobs, each in a fresh context, and adopt them into the current
    job in submission order so outputs do not depend on scheduling.
    """
    parent = _current.get(None)
    if parent is not None:
        tasks = [(f"{parent.path}/{name}", task) for name, task in tasks]
    if threads <= 1:
        jobs = [contextvars.Context().run(_run_isolated, name, task) for name, task in tasks]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            futures = [pool.submit(contextvars.Context().run, _run_isolated, name, task) for name, task in tasks]
            jobs = [f.result() for f in futures]
    if parent is not None:
        for job in jobs:
            parent.adopt(job)
    return jobs


def aggregate(directory: str | Path) -> Job:
    """Collect every job JSON under ``directory`` into one summary job."""
    directory = Path(directory)
    summary = Job("summary")
    for path in sorted(directory.rglob("*.json")):
        if path.name == "summary.json":
            continue
        data = json.loads(path.read_text())
        for e in data.get("entries", []):
            summary.entries.append(Entry(**e))
    return summary
