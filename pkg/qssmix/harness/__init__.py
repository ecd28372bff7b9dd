# qssmix/harness/__init__.py
"""Configuration, snapshots, report scopes and the experiment suites behind the CLI."""

from .config import ExperimentConfig
from .snapshot import Snapshot, SnapshotKind, read_snapshot, write_snapshot
from .report import Job, record, check, table, run_jobs, aggregate
from .suites import SUITES

__all__ = [
    "ExperimentConfig",
    "Snapshot",
    "SnapshotKind",
    "read_snapshot",
    "write_snapshot",
    "Job",
    "record",
    "check",
    "table",
    "run_jobs",
    "aggregate",
    "SUITES",
]
