# run_config.py
# RunConfig: built-in defaults, then a YAML/JSON file, then CLI flags; DEFECTLAB_SEED as seed fallback.
from __future__ import annotations

import logging
import os
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional

import numpy as np
import yaml

from errors import ConfigError
from lax import DIMENSION_CAP, POLE_EPSILON, LaxVariant, NbarReference
from tensor_core import Ordering

logger = logging.getLogger(__name__)

SEED_ENV = "DEFECTLAB_SEED"
FORMATS = ("json", "csv")


@dataclass(frozen=True)
class GridSpec:
    min: float = -5.0
    max: float = 5.0
    count: int = 21

    def values(self) -> List[float]:
        return [float(x) for x in np.linspace(self.min, self.max, self.count)]


@dataclass(frozen=True)
class RunConfig:
    rank: int = 2
    fock_cutoff: int = 5
    chain_sites: int = 2
    chain_cutoff: int = 3
    theta: complex = 0j
    lambda_grid: GridSpec = field(default_factory=GridSpec)
    grid_imag: float = 0.0
    tolerances: Dict[str, float] = field(default_factory=dict)
    seed: int = 7
    ordering: Ordering = Ordering.NORMAL
    shift: float = 1.0
    nbar_reference: NbarReference = NbarReference.NORMAL
    variant: Optional[LaxVariant] = None  # None runs both defect variants
    defect_site: int = 1
    samples: int = 3
    jobs: int = 1
    pole_epsilon: float = POLE_EPSILON
    dimension_cap: int = DIMENSION_CAP
    retry_limit: int = 2
    output: Optional[str] = None
    format: str = "json"

    def tolerance(self, name: str, default: float) -> float:
        return float(self.tolerances.get(name, default))

    def validate(self) -> "RunConfig":
        problems = []
        if self.rank < 2:
            problems.append(f"rank must be >= 2, got {self.rank}")
        if self.fock_cutoff < 0 or self.chain_cutoff < 0:
            problems.append("Fock cutoffs must be non-negative")
        if self.chain_sites < 0:
            problems.append(f"chain_sites must be non-negative, got {self.chain_sites}")
        if not 1 <= self.defect_site <= self.chain_sites + 1:
            problems.append(f"defect_site {self.defect_site} outside 1..{self.chain_sites + 1}")
        if self.lambda_grid.count < 2:
            problems.append(f"lambda_grid.count must be >= 2, got {self.lambda_grid.count}")
        if not self.lambda_grid.min < self.lambda_grid.max:
            problems.append("lambda_grid.min must be below lambda_grid.max")
        for name, tol in self.tolerances.items():
            if not tol > 0:
                problems.append(f"tolerance {name} must be positive, got {tol}")
        if not 0 <= self.seed < 2 ** 64:
            problems.append(f"seed must fit in 64 bits, got {self.seed}")
        if self.samples < 1 or self.jobs < 1 or self.retry_limit < 0:
            problems.append("samples and jobs must be >= 1, retry_limit >= 0")
        if self.pole_epsilon <= 0 or self.dimension_cap < 1:
            problems.append("pole_epsilon and dimension_cap must be positive")
        if self.format not in FORMATS:
            problems.append(f"format must be one of {FORMATS}, got {self.format!r}")
        if problems:
            raise ConfigError("; ".join(problems))
        return self

    def to_dict(self) -> Dict[str, Any]:
        """Everything that shapes the results; the output path is left out so reports compare byte for byte."""
        d = asdict(self)
        del d["output"]
        d["theta"] = [self.theta.real, self.theta.imag]
        for k in ("ordering", "nbar_reference"):
            d[k] = getattr(self, k).value
        d["variant"] = None if self.variant is None else self.variant.value
        return d


def _coerce(key: str, value: Any) -> Any:
    if key == "theta":
        if isinstance(value, (list, tuple)) and len(value) == 2:
            return complex(float(value[0]), float(value[1]))
        return complex(value)
    if key == "lambda_grid":
        if isinstance(value, GridSpec):
            return value
        if not isinstance(value, Mapping):
            raise ConfigError("lambda_grid must be a mapping with min, max, count")
        unknown = set(value) - {"min", "max", "count"}
        if unknown:
            raise ConfigError(f"unknown lambda_grid keys: {sorted(unknown)}")
        base = GridSpec()
        return GridSpec(
            float(value.get("min", base.min)), float(value.get("max", base.max)), int(value.get("count", base.count))
        )
    if key == "tolerances":
        return {str(k): float(v) for k, v in dict(value).items()}
    if key == "ordering":
        return Ordering(value)
    if key == "nbar_reference":
        return NbarReference(value)
    if key == "variant":
        return None if value is None else LaxVariant(value)
    if key in ("rank", "fock_cutoff", "chain_sites", "chain_cutoff", "seed", "defect_site", "samples",
               "jobs", "dimension_cap", "retry_limit"):
        if isinstance(value, bool) or int(value) != float(value):
            raise ValueError(f"{key} must be an integer")
        return int(value)
    if key in ("shift", "grid_imag", "pole_epsilon"):
        return float(value)
    return value


def load_config_file(path: str | Path) -> Dict[str, Any]:
    """YAML or JSON mapping; JSON is a YAML subset so one loader reads both."""
    try:
        doc = yaml.safe_load(Path(path).read_text(encoding="utf-8"))
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from e
    except yaml.YAMLError as e:
        raise ConfigError(f"cannot parse config {path}: {e}") from e
    if doc is None:
        return {}
    if not isinstance(doc, dict):
        raise ConfigError(f"config {path} must be a mapping")
    return doc


def build_config(
    path: Optional[str | Path] = None,
    overrides: Optional[Mapping[str, Any]] = None,
    environ: Optional[Mapping[str, str]] = None,
) -> RunConfig:
    """defaults <- file <- flags; the seed falls back to DEFECTLAB_SEED when neither sets it."""
    environ = os.environ if environ is None else environ
    known = {f.name for f in fields(RunConfig)}
    merged: Dict[str, Any] = {}
    layers = [load_config_file(path) if path else {}, {k: v for k, v in (overrides or {}).items() if v is not None}]
    for layer in layers:
        unknown = set(layer) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        grid = layer.get("lambda_grid")
        if isinstance(grid, Mapping) and isinstance(merged.get("lambda_grid"), Mapping):
            layer = {**layer, "lambda_grid": {**merged["lambda_grid"], **grid}}
        merged.update(layer)
    if "seed" not in merged and environ.get(SEED_ENV):
        merged["seed"] = environ[SEED_ENV]
        logger.debug("seed taken from %s", SEED_ENV)
    try:
        coerced = {k: _coerce(k, v) for k, v in merged.items()}
        cfg = replace(RunConfig(), **coerced)
    except (TypeError, ValueError) as e:
        if isinstance(e, ConfigError):
            raise
        raise ConfigError(f"bad config value: {e}") from e
    return cfg.validate()
