"""Run configuration: flat ``key = value`` files plus command-line overrides."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

import numpy as np

from .errors import DomainError, OscBathError
from .model import CavityConfig, PhysParams
from .quadrature import QuadratureSpec

__all__ = ["ConfigError", "RunConfig", "parse_config_text", "load_config"]


class ConfigError(OscBathError, ValueError):
    """Invalid or inconsistent run configuration."""


APPROACHES = ("bare", "dressed")
MODES = ("cavity", "continuum")
POLES = ("cavity", "principal")

# key -> (type, default); order fixes the emitted layout
_KEYS: dict[str, tuple[type, Any]] = {
    "approach": (str, "bare"),
    "mode": (str, "continuum"),
    "omega_bar": (float, 1.0),
    "g": (float, 0.1),
    "beta": (float, 2.0),
    "n0": (float, 1.0),
    "R": (float, None),
    "c": (float, 1.0),
    "N": (int, None),
    "t_start": (float, 1.0),
    "t_end": (float, 50.0),
    "steps": (int, 50),
    "log_grid": (bool, False),
    "pole": (str, "cavity"),
    "abs_tol": (float, 1e-9),
    "rel_tol": (float, 1e-7),
    "output": (str, "occupation.csv"),
}


def _coerce(key: str, raw: Any) -> Any:
    typ = _KEYS[key][0]
    if raw is None:
        return None
    if typ is bool:
        if isinstance(raw, bool):
            return raw
        s = str(raw).strip().lower()
        if s in ("1", "true", "yes", "on"):
            return True
        if s in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"{key}: expected a boolean, got {raw!r}")
    try:
        if typ is int:
            v = float(raw)
            if not v.is_integer():
                raise ValueError
            return int(v)
        return typ(raw)
    except (TypeError, ValueError):
        raise ConfigError(f"{key}: cannot parse {raw!r} as {typ.__name__}") from None


def parse_config_text(text: str) -> dict[str, Any]:
    """Parse ``key = value`` lines; ``#`` starts a comment; blank lines are ignored."""
    out: dict[str, Any] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = (s.strip() for s in body.split("=", 1))
        key = key.replace("-", "_")
        if key not in _KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        out[key] = _coerce(key, value)
    return out


def load_config(path: str | Path) -> dict[str, Any]:
    try:
        return parse_config_text(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None


@dataclass(frozen=True)
class RunConfig:
    approach: str = "bare"
    mode: str = "continuum"
    params: PhysParams = field(default_factory=PhysParams)
    cavity: CavityConfig | None = None
    t_start: float = 1.0
    t_end: float = 50.0
    steps: int = 50
    log_grid: bool = False
    pole: str = "cavity"
    quad: QuadratureSpec = field(default_factory=QuadratureSpec)
    output_path: str = "occupation.csv"

    def __post_init__(self):
        if self.approach not in APPROACHES:
            raise ConfigError(f"approach must be one of {APPROACHES}")
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}")
        if self.pole not in POLES:
            raise ConfigError(f"pole must be one of {POLES}")
        if not (math.isfinite(self.t_start) and math.isfinite(self.t_end)):
            raise ConfigError("time limits must be finite")
        if not self.t_start < self.t_end:
            raise ConfigError("t_start must be < t_end")
        if self.steps < 2:
            raise ConfigError("steps must be >= 2")
        if (self.cavity is None) != (self.mode != "cavity"):
            raise ConfigError("a cavity (R and N) is required exactly when mode = cavity")
        if self.mode == "continuum" and not self.t_start > 0:
            raise ConfigError("continuum mode needs t_start > 0")
        if self.log_grid and not self.t_start > 0:
            raise ConfigError("log grid needs t_start > 0")

    @classmethod
    def from_mapping(cls, values: Mapping[str, Any]) -> "RunConfig":
        v = {k: d for k, (_, d) in _KEYS.items()}
        for k, raw in values.items():
            if raw is not None:
                v[k] = _coerce(k, raw)
        try:
            params = PhysParams(v["omega_bar"], v["g"], v["beta"], v["n0"])
            cavity = None
            if v["mode"] == "cavity":
                if v["R"] is None or v["N"] is None:
                    raise ConfigError("mode = cavity needs R and N")
                cavity = CavityConfig(v["R"], v["c"], v["N"])
            quad = QuadratureSpec(abs_tol=v["abs_tol"], rel_tol=v["rel_tol"])
        except DomainError as exc:
            raise ConfigError(str(exc)) from None
        return cls(v["approach"], v["mode"], params, cavity, v["t_start"], v["t_end"],
                   v["steps"], v["log_grid"], v["pole"], quad, v["output"])

    def to_mapping(self) -> dict[str, Any]:
        p = self.params
        m = {
            "approach": self.approach, "mode": self.mode,
            "omega_bar": p.omega_bar, "g": p.g, "beta": p.beta, "n0": p.n0_init,
            "R": self.cavity.R if self.cavity else None,
            "c": self.cavity.c if self.cavity else 1.0,
            "N": self.cavity.N if self.cavity else None,
            "t_start": self.t_start, "t_end": self.t_end, "steps": self.steps,
            "log_grid": self.log_grid, "pole": self.pole,
            "abs_tol": self.quad.abs_tol, "rel_tol": self.quad.rel_tol,
            "output": self.output_path,
        }
        return m

    def to_text(self) -> str:
        """Effective configuration in the file format; re-parsing reproduces this config."""
        lines = ["# effective run configuration"]
        for k, v in self.to_mapping().items():
            if v is None:
                continue
            if isinstance(v, bool):
                v = "true" if v else "false"
            elif isinstance(v, float):
                v = repr(v)
            lines.append(f"{k} = {v}")
        return "\n".join(lines) + "\n"

    def times(self) -> np.ndarray:
        if self.log_grid:
            return np.geomspace(self.t_start, self.t_end, self.steps)
        return np.linspace(self.t_start, self.t_end, self.steps)
