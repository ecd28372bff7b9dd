# qssmix/harness/config.py
"""
Experiment configuration: a dataclass with embedded defaults and a plain-text
``key = value`` file format (``#`` comments, comma-separated lists).
"""
from __future__ import annotations

import dataclasses
import logging
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any

from ..core import ConfigError
from ..families import default_families
from ..qss_family import MAX_LEVEL, tiles_per_side

logger = logging.getLogger(__name__)

MAX_EPSILON = 0.1
MAX_DISSIPATION_LEVEL = 3


@dataclass
class ExperimentConfig:
    family: str = "snake"
    family_params: dict[str, float] = field(default_factory=dict)
    blocks: int = 6
    epsilons: tuple[float, ...] = (0.1, 0.01, 0.001, 0.0001)
    n_max: int = 3
    m_range: tuple[int, ...] = (1, 2)
    alphas: tuple[float, ...] = (0.5,)
    nodes: int = 512
    sweep_nodes: int = 128
    tile_resolution: int = 64
    supersample: int = 8
    spectral_tile_resolution: int = 8
    solver_resolution: int = 128
    dissipation_resolution: int = 250
    cycle: tuple[int, ...] = (0, 1, 2, 3, 4, 5)
    tol_jacobian: float = 1e-6
    tol_roundtrip: float = 1e-10
    tol_constraint: float = 1e-10
    tol_energy: float = 1e-6
    tol_norm: float = 1e-4
    slope_low: float = 0.9
    slope_high: float = 1.1
    output: str = "qssmix-out"
    seed: int = 0
    threads: int = 1

    # ---------- parsing ----------
    @classmethod
    def from_text(cls, text: str) -> "ExperimentConfig":
        known = {f.name: f for f in fields(cls)}
        values: dict[str, Any] = {}
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"line {lineno}", f"expected 'key = value', got {raw.strip()!r}")
            key, value = (part.strip() for part in line.split("=", 1))
            if key not in known:
                raise ConfigError(key, "unknown key")
            values[key] = _parse(known[key], value)
        config = cls(**values)
        config.validate()
        return config

    @classmethod
    def load(cls, path: str | Path) -> "ExperimentConfig":
        path = Path(path)
        if not path.is_file():
            raise ConfigError("config", f"no such file {str(path)!r}")
        logger.info("reading config %s", path)
        return cls.from_text(path.read_text())

    def override(self, **changes) -> "ExperimentConfig":
        changes = {k: v for k, v in changes.items() if v is not None}
        config = dataclasses.replace(self, **changes)
        config.validate()
        return config

    # ---------- validation ----------
    def validate(self) -> None:
        for name in ("tol_jacobian", "tol_roundtrip", "tol_constraint", "tol_energy", "tol_norm"):
            if getattr(self, name) <= 0:
                raise ConfigError(name, f"tolerance must be positive, got {getattr(self, name)}")
        if not self.epsilons:
            raise ConfigError("epsilons", "at least one value is required")
        for eps in self.epsilons:
            if not 0 < eps <= MAX_EPSILON:
                raise ConfigError("epsilons", f"every value must lie in (0, {MAX_EPSILON}], got {eps}")
        if not 0 <= self.n_max <= MAX_LEVEL:
            raise ConfigError("n_max", f"must lie in [0, {MAX_LEVEL}], got {self.n_max}")
        if not self.m_range:
            raise ConfigError("m_range", "at least one level is required")
        if min(self.m_range) < 1 or max(self.m_range) > MAX_DISSIPATION_LEVEL:
            raise ConfigError("m_range", f"levels must lie in [1, {MAX_DISSIPATION_LEVEL}], got {list(self.m_range)}")
        if not self.alphas or any(not 0 < a < 1 for a in self.alphas):
            raise ConfigError("alphas", f"Holder exponents must lie in (0, 1), got {list(self.alphas)}")
        for name in ("blocks", "nodes", "sweep_nodes", "tile_resolution", "supersample", "spectral_tile_resolution",
                     "solver_resolution", "dissipation_resolution", "threads"):
            if getattr(self, name) <= 0:
                raise ConfigError(name, f"must be positive, got {getattr(self, name)}")
        step = tiles_per_side(max(self.m_range))
        if self.dissipation_resolution % step:
            raise ConfigError("dissipation_resolution",
                              f"must be a multiple of {step} for m = {max(self.m_range)}, "
                              f"got {self.dissipation_resolution}")
        if not self.slope_low < self.slope_high:
            raise ConfigError("slope_low", f"slope window [{self.slope_low}, {self.slope_high}] is empty")
        if self.family not in default_families:
            raise ConfigError("family", f"unknown family {self.family!r}; known: {', '.join(default_families.names())}")
        if not self.cycle or any(c < 0 for c in self.cycle):
            raise ConfigError("cycle", f"needs non-negative block indices, got {list(self.cycle)}")
        if not self.output:
            raise ConfigError("output", "missing value")

    # ---------- output ----------
    def to_text(self) -> str:
        lines = []
        for f in fields(self):
            lines.append(f"{f.name} = {_format(getattr(self, f.name))}")
        return "\n".join(lines) + "\n"


def _parse(f: dataclasses.Field, raw: str) -> Any:
    if raw == "":
        if f.name == "family_params":
            return {}
        raise ConfigError(f.name, "missing value")
    annotation = str(f.type)
    try:
        if f.name == "family_params":
            params = {}
            for pair in raw.split(";"):
                if pair.strip():
                    name, value = pair.split(":", 1)
                    params[name.strip()] = float(value)
            return params
        if annotation.startswith("tuple"):
            item = int if "int" in annotation else float
            return tuple(item(v) for v in (p.strip() for p in raw.split(",")) if v)
        if annotation == "int":
            return int(raw)
        if annotation == "float":
            return float(raw)
        return raw
    except ValueError as exc:
        raise ConfigError(f.name, f"cannot parse {raw!r}: {exc}") from None


def _format(value: Any) -> str:
    if isinstance(value, dict):
        return "; ".join(f"{k}:{v!r}" for k, v in value.items())
    if isinstance(value, tuple):
        return ", ".join(repr(v) for v in value)
    return str(value)
