"""Run configuration: flat ``key = value`` files with ``#`` comments."""
from __future__ import annotations

import dataclasses
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Optional

from .errors import ConfigError

SCENARIOS = ("lake_at_rest", "dam_break", "parabolic_bowl", "soliton")
_BC_RE = re.compile(r"^\s*(wall|periodic|given_flux|given_depth)\s*(?:\(\s*([^)]*?)\s*\))?\s*$")


@dataclass(frozen=True)
class BoundarySpec:
    """Boundary as written in a config: ``kind`` plus a number or ``soliton``."""

    kind: str
    value: Optional[float | str] = None

    def __str__(self) -> str:
        return self.kind if self.value is None else f"{self.kind}({self.value})"


def parse_boundary(text: str, key: str = "boundary") -> BoundarySpec:
    m = _BC_RE.match(str(text))
    if not m:
        raise ConfigError(f"{key}: cannot parse boundary {text!r}; expected wall, periodic, "
                          "given_flux(Q0) or given_depth(H0)")
    kind, arg = m.group(1), m.group(2)
    if kind in ("wall", "periodic"):
        if arg:
            raise ConfigError(f"{key}: {kind} takes no argument")
        return BoundarySpec(kind)
    if not arg:
        raise ConfigError(f"{key}: {kind} needs a value, e.g. {kind}(1.0)")
    if kind == "given_flux" and arg == "soliton":
        return BoundarySpec(kind, "soliton")
    try:
        return BoundarySpec(kind, float(arg))
    except ValueError:
        raise ConfigError(f"{key}: {kind} value {arg!r} is not a number") from None


@dataclass(frozen=True)
class RunConfig:
    scenario: str
    cells: int = 100
    x_min: float = 0.0
    x_max: float = 1.0
    order: int = 1
    cfl: float = 0.5
    t_final: float = 1.0
    max_steps: Optional[int] = None
    max_dt: float = math.inf
    alpha: float = 2.0
    epsilon: float = 1e-6
    g: float = 9.81
    h_dry: float = 1e-10
    bc_left: BoundarySpec = field(default_factory=lambda: BoundarySpec("wall"))
    bc_right: BoundarySpec = field(default_factory=lambda: BoundarySpec("wall"))
    out_dir: Optional[str] = None
    snapshot_interval: Optional[float] = None
    nonhydrostatic: bool = True
    final_projection: bool = True
    positivity_resolve: bool = True
    quadrature_points: int = 2
    # lake at rest / dam break
    level: float = 1.0
    h_left: float = 1.0
    h_right: float = 0.0
    x_dam: float = 0.0
    bathymetry: str = "flat"
    bump_center: float = 10.0
    bump_height: float = 0.2
    bump_curvature: float = 0.05
    # parabolic bowl
    bowl_H0: float = 1.0
    bowl_a: float = 1.0
    bowl_b1: float = 0.0
    bowl_b2: float = 1.0
    probe_x: float = 0.8
    # solitary wave
    soliton_H0: float = 1.0
    soliton_l: float = 1.7
    soliton_d: float = 1.0
    soliton_x0: float = 0.0

    def __post_init__(self) -> None:
        if self.scenario not in SCENARIOS:
            raise ConfigError(f"scenario must be one of {', '.join(SCENARIOS)} (got {self.scenario!r})")
        if self.order not in (1, 2):
            raise ConfigError("order must be 1 or 2")
        if not 0.0 < self.cfl <= 1.0:
            raise ConfigError("cfl must lie in (0, 1]")
        if not self.alpha > 0.0:
            raise ConfigError("alpha must be positive")
        if not self.epsilon > 0.0:
            raise ConfigError("epsilon must be positive")
        if self.cells < 3:
            raise ConfigError("cells must be at least 3")
        if not self.x_max > self.x_min:
            raise ConfigError("x_max must exceed x_min")
        if not self.t_final >= 0.0:
            raise ConfigError("t_final must be non-negative")
        if self.max_steps is not None and self.max_steps < 0:
            raise ConfigError("max_steps must be non-negative")
        if not self.max_dt > 0.0:
            raise ConfigError("max_dt must be positive")
        if self.snapshot_interval is not None and not self.snapshot_interval > 0.0:
            raise ConfigError("snapshot_interval must be positive")
        if self.quadrature_points not in (1, 2):
            raise ConfigError("quadrature_points must be 1 or 2")
        if (self.bc_left.kind == "periodic") != (self.bc_right.kind == "periodic"):
            raise ConfigError("bc_left/bc_right: periodic must be used on both sides")
        for key in ("bc_left", "bc_right"):
            spec = getattr(self, key)
            if spec.value == "soliton" and self.scenario != "soliton":
                raise ConfigError(f"{key}: given_flux(soliton) requires the soliton scenario")

    @property
    def periodic(self) -> bool:
        return self.bc_left.kind == "periodic"

    def replace(self, **changes) -> "RunConfig":
        return dataclasses.replace(self, **changes)

    def to_text(self) -> str:
        """Config file text with every field, defaults included."""
        lines = []
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            if v is None:
                continue
            lines.append(f"{f.name} = {v}")
        return "\n".join(lines) + "\n"


_FIELDS = {f.name: f for f in dataclasses.fields(RunConfig)}
_INT = {"cells", "order", "max_steps", "quadrature_points"}
_BOOL = {"nonhydrostatic", "final_projection", "positivity_resolve"}
_STR = {"scenario", "out_dir", "bathymetry"}
_BC = {"bc_left", "bc_right"}


def _convert(key: str, raw: Any):
    if key in _BC:
        return raw if isinstance(raw, BoundarySpec) else parse_boundary(raw, key)
    if key in _STR:
        return str(raw)
    text = str(raw).strip()
    if key in _BOOL:
        if isinstance(raw, bool):
            return raw
        low = text.lower()
        if low in ("true", "yes", "1", "on"):
            return True
        if low in ("false", "no", "0", "off"):
            return False
        raise ConfigError(f"{key}: expected true or false, got {text!r}")
    if key in _INT:
        if text.lower() in ("none", ""):
            return None
        try:
            return int(text)
        except ValueError:
            raise ConfigError(f"{key}: expected an integer, got {text!r}") from None
    if text.lower() == "none" and _FIELDS[key].default is None:
        return None
    try:
        return float(text)
    except ValueError:
        raise ConfigError(f"{key}: expected a number, got {text!r}") from None


def config_from_mapping(values: Mapping[str, Any]) -> RunConfig:
    """Validate a mapping of raw values; unknown keys are rejected."""
    unknown = sorted(set(values) - set(_FIELDS))
    if unknown:
        raise ConfigError(f"unknown config key(s): {', '.join(unknown)}")
    if "scenario" not in values:
        raise ConfigError("scenario: required key missing")
    kwargs = {k: _convert(k, v) for k, v in values.items() if v is not None}
    return RunConfig(**kwargs)


def read_config_file(path) -> dict[str, str]:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    values: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if key in values:
            raise ConfigError(f"{path}:{lineno}: duplicate key {key}")
        values[key] = value
    return values


def parse_config(source=None, **overrides) -> RunConfig:
    """Build a :class:`RunConfig` from a file path and/or keyword overrides.

    Overrides set to ``None`` are ignored, which lets command-line flags that
    were not given fall through to the file.
    """
    values: dict[str, Any] = {}
    if source is not None:
        if isinstance(source, Mapping):
            values.update(source)
        else:
            values.update(read_config_file(source))
    values.update({k: v for k, v in overrides.items() if v is not None})
    return config_from_mapping(values)
