"""
ExperimentConfig: one flat [experiment] section in an INI file.

Floats are written with repr, lists comma separated, None as an empty
value, so parse_config(emit_config(c)) == c for every valid config.
"""

import configparser
import dataclasses
import hashlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional

from src.config.settings import (
    PATH_SETTINGS,
    RUNTIME_SETTINGS,
    SIMULATION_SETTINGS,
)
from src.orchestration.logger import setup_logger

logger = setup_logger()

SECTION = "experiment"

KINDS = (
    "simulate", "profile", "verify-spread", "verify-collapse", "verify-majorization",
    "paths", "bootstrap", "uniformity", "duality", "meancut",
)


class ConfigError(ValueError):
    """Experiment configuration is missing, malformed or inconsistent."""


@dataclass
class ExperimentConfig:
    kind:      str = "simulate"
    seed:      int = 0
    replicas:  Optional[int] = None
    output_directory: str = RUNTIME_SETTINGS["output_directory"]
    threads:   int = RUNTIME_SETTINGS["threads"]
    format:    str = RUNTIME_SETTINGS["format"]

    # simulation
    n:            int = SIMULATION_SETTINGS["n"]
    phases:       int = SIMULATION_SETTINGS["num_phases"]
    phase_length: Optional[float] = SIMULATION_SETTINGS["phase_length"]
    a_exponent:   float = SIMULATION_SETTINGS["a_exponent"]
    count_mode:   str = SIMULATION_SETTINGS["count_mode"]
    initial:      str = SIMULATION_SETTINGS["initial"]
    snapshot_profile: bool = False

    # graphs / profiles
    graph:     Optional[str] = None
    color:     str = "red"
    kmax:      Optional[int] = None
    variant:   str = "both"
    witnesses: bool = False
    hypothesis_form: str = "per_set"

    # hypothesis / campaigns
    gamma:     float = 0.5
    d:         float = float(PATH_SETTINGS["degree"])
    k:         Optional[int] = None
    family:    str = "pointer"
    n_values:  List[int] = field(default_factory=lambda: [8, 10, 12])
    seeds:     Optional[List[int]] = None
    t_grid:    List[float] = field(default_factory=lambda: [0.0, 0.1, 0.3, 1.0, 3.0, 10.0])
    samples:   int = 20
    t_end:     float = 1.0

    # paths
    walks_per_source: Optional[int] = None
    path_length:      Optional[int] = None
    lazy:             bool = PATH_SETTINGS["lazy"]

    # statistical tests / bootstrap
    members:         List[int] = field(default_factory=list)
    T:               float = 1.0
    simulation_only: bool = False

    @property
    def seed_list(self) -> List[int]:
        """Campaign seeds; when unset, a run of consecutive seeds starting at the base seed."""
        if self.seeds is not None:
            return list(self.seeds)
        return list(range(self.seed, self.seed + RUNTIME_SETTINGS["campaign_seeds"]))

    @property
    def replica_count(self) -> int:
        if self.replicas is not None:
            return self.replicas
        return 1 if self.kind == "simulate" else RUNTIME_SETTINGS["replicas"]

    def validate(self) -> "ExperimentConfig":
        problems = []
        if self.kind not in KINDS:
            problems.append(f"kind must be one of {KINDS} (got '{self.kind}')")
        if self.format not in ("csv", "json"):
            problems.append(f"format must be csv or json (got '{self.format}')")
        if self.threads < 1:
            problems.append(f"threads must be >= 1 (got {self.threads})")
        if self.replicas is not None and self.replicas < 1:
            problems.append(f"replicas must be >= 1 (got {self.replicas})")
        if self.n < 3:
            problems.append(f"n must be >= 3 (got {self.n})")
        if self.phases < 1:
            problems.append(f"phases must be >= 1 (got {self.phases})")
        if self.phase_length is not None and self.phase_length <= 0:
            problems.append(f"phase_length must be > 0 (got {self.phase_length})")
        if not 0 < self.gamma <= 1:
            problems.append(f"gamma must lie in (0, 1] (got {self.gamma})")
        if self.d <= 0:
            problems.append(f"d must be > 0 (got {self.d})")
        if self.T < 0 or self.t_end < 0 or any(t < 0 for t in self.t_grid):
            problems.append("times must be >= 0")
        if self.color not in ("red", "blue"):
            problems.append(f"color must be red or blue (got '{self.color}')")
        if self.hypothesis_form not in ("per_set", "cumulative"):
            problems.append(f"hypothesis_form must be per_set or cumulative (got '{self.hypothesis_form}')")
        if self.variant not in ("card", "ratio", "both"):
            problems.append(f"variant must be card, ratio or both (got '{self.variant}')")
        if self.family not in ("pointer", "regular"):
            problems.append(f"family must be pointer or regular (got '{self.family}')")
        if self.count_mode not in ("owner_endpoint", "owner"):
            problems.append(f"count_mode must be owner_endpoint or owner (got '{self.count_mode}')")
        if self.initial not in ("random", "identity", "reverse"):
            problems.append(f"initial must be random, identity or reverse (got '{self.initial}')")
        if self.kind in ("profile", "paths") and not self.graph:
            problems.append(f"{self.kind} needs a graph file")
        if self.seeds is not None and not self.seeds:
            problems.append("seeds must be nonempty when given")
        if self.kind in ("duality", "meancut") and not self.members:
            problems.append(f"{self.kind} needs a nonempty members list")
        if problems:
            raise ConfigError("; ".join(problems))
        return self


# ═══════════════════════════════════════════════════════════════════════
# INI ROUND TRIP
# ═══════════════════════════════════════════════════════════════════════

def _format_value(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, list):
        return ",".join(_format_value(v) for v in value)
    return str(value)


def _base_type(annotation):
    text = str(annotation)
    for name, kind in (("bool", bool), ("float", float), ("int", int), ("str", str)):
        if name in text:
            return kind
    return str


def _parse_value(name: str, annotation, raw: str):
    text = str(annotation)
    optional = "Optional" in text or "None" in text
    is_list = "List[" in text or "list[" in text
    kind = _base_type(annotation)
    raw = raw.strip()

    def _one(token: str):
        if kind is bool:
            lowered = token.lower()
            if lowered not in ("true", "false"):
                raise ConfigError(f"{name}: expected true/false (got '{token}')")
            return lowered == "true"
        try:
            return kind(token)
        except ValueError:
            raise ConfigError(f"{name}: cannot read '{token}' as {kind.__name__}") from None

    if raw == "" and optional:
        return None
    if is_list:
        return [_one(t.strip()) for t in raw.split(",") if t.strip()]
    return _one(raw)


def emit_config(config: ExperimentConfig) -> str:
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    parser[SECTION] = {f.name: _format_value(getattr(config, f.name)) for f in dataclasses.fields(config)}
    lines = [f"[{SECTION}]"]
    lines.extend(f"{key} = {value}" for key, value in parser[SECTION].items())
    return "\n".join(lines) + "\n"


def parse_config(text: str) -> ExperimentConfig:
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.Error as e:
        raise ConfigError(f"config file is not valid INI: {e}") from None
    if SECTION not in parser:
        raise ConfigError(f"config file needs an [{SECTION}] section")

    known = {f.name: f for f in dataclasses.fields(ExperimentConfig)}
    values = {}
    for key, raw in parser[SECTION].items():
        if key not in known:
            raise ConfigError(f"unknown config key '{key}'")
        values[key] = _parse_value(key, known[key].type, raw)
    return ExperimentConfig(**values)


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise ConfigError(f"config file not found at {path}") from None
    config = parse_config(text)
    logger.info(f"Configuration loaded from {path}")
    return config


def save_config(config: ExperimentConfig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(emit_config(config), encoding="utf-8")
    return path


def config_hash(config: ExperimentConfig) -> str:
    return hashlib.md5(emit_config(config).encode("utf-8")).hexdigest()
