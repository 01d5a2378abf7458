"""Run configuration: flat ``key = value`` text files.

Blank lines and ``#`` comments are ignored.  Every key below may appear at
most once; unknown keys are rejected.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

from .errors import ConfigError


@dataclass(frozen=True)
class RunConfig:
    dimension: int = 1
    half_length: float = 40.0
    points: int = 256
    velocity_points: int = 256
    vmax: float = 1.5
    dt: float = 0.02
    horizon: float = 30.0
    mode: str = "grid"
    particles: int = 0
    amplitude: float = 1e-3          # epsilon_0, scale of f0
    x_width: float = 1.0             # Gaussian width of f0 in x
    v_support: float = 1.0           # radius of the velocity bump
    drift: float = 0.0               # shift of the velocity bump along v_1
    phi0_amplitude: float = 0.0
    phi0_width: float = 1.0
    phi1_amplitude: float = 1e-3
    phi1_width: float = 1.0
    coupling: float = 1.0            # force = coupling * E
    series_order: int = 8
    alpha0: int = 8
    seed: int = 0
    cadence: float = 1.0             # snapshot interval (a multiple of dt)
    probes: int = 64                 # characteristic probes used by reports

    @property
    def steps(self) -> int:
        return int(round(self.horizon / self.dt))

    @property
    def cadence_steps(self) -> int:
        return max(int(round(self.cadence / self.dt)), 1)

    @property
    def dx(self) -> float:
        return 2.0 * self.half_length / self.points

    @property
    def support_radius(self) -> float:
        # Gaussian profiles are treated as supported within five widths
        radii = [5.0 * self.x_width]
        if self.phi0_amplitude:
            radii.append(5.0 * self.phi0_width)
        if self.phi1_amplitude:
            radii.append(5.0 * self.phi1_width)
        return max(radii)

    @property
    def t_wrap(self) -> float:
        return self.half_length - self.support_radius

    def validate(self) -> "RunConfig":
        if self.dimension not in (1, 2, 3):
            raise ConfigError("dimension must be 1, 2 or 3")
        if self.mode not in ("grid", "particle"):
            raise ConfigError("mode must be 'grid' or 'particle'")
        if self.mode == "grid" and self.dimension == 3:
            raise ConfigError("grid mode supports d <= 2; use particle mode in 3-D")
        if self.mode == "particle" and self.particles <= 0:
            raise ConfigError("particle mode needs a positive particle count")
        for name in ("half_length", "vmax", "dt", "horizon", "x_width", "v_support",
                     "phi0_width", "phi1_width", "cadence"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive")
        if self.points < 8 or self.points & (self.points - 1):
            raise ConfigError("points must be a power of two >= 8")
        if self.velocity_points < 8 or self.velocity_points % 2:
            raise ConfigError("velocity_points must be even and >= 8")
        if self.amplitude < 0:
            raise ConfigError("amplitude must be nonnegative")
        if self.alpha0 < 2 or self.series_order < 0 or self.probes < 1:
            raise ConfigError("alpha0 >= 2, series_order >= 0 and probes >= 1 required")
        if abs(self.steps * self.dt - self.horizon) > 1e-9 * self.horizon:
            raise ConfigError("horizon must be a multiple of dt")
        if abs(self.cadence_steps * self.dt - self.cadence) > 1e-9 * self.cadence:
            raise ConfigError("cadence must be a multiple of dt")
        if self.dt > 0.5 * self.dx:
            raise ConfigError(f"dt = {self.dt} exceeds half the grid spacing {0.5 * self.dx}")
        if self.horizon >= self.t_wrap:
            raise ConfigError(f"horizon {self.horizon} reaches the wrap time {self.t_wrap}")
        if self.vmax <= self.v_support + abs(self.drift):
            raise ConfigError("vmax must exceed the velocity support")
        return self

    def to_text(self) -> str:
        lines = []
        for f in fields(self):
            val = getattr(self, f.name)
            lines.append(f"{f.name} = {val!r}" if isinstance(val, float) else f"{f.name} = {val}")
        return "\n".join(lines) + "\n"

    def digest(self) -> str:
        """SHA-256 of the canonical text form, used to tag snapshots."""
        return hashlib.sha256(self.to_text().encode()).hexdigest()

    def with_changes(self, **changes) -> "RunConfig":
        return replace(self, **changes)

    def as_dict(self) -> dict:
        return asdict(self)


def _coerce(name: str, raw: str, kind):
    try:
        if kind is int:
            return int(raw)
        if kind is float:
            val = float(raw)
            if not math.isfinite(val):
                raise ValueError
            return val
        return raw
    except ValueError:
        raise ConfigError(f"bad value {raw!r} for {name}") from None


def parse_config(text: str) -> RunConfig:
    kinds = {f.name: f.type for f in fields(RunConfig)}
    types = {"int": int, "float": float, "str": str}
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, raw = (part.strip() for part in line.split("=", 1))
        if key not in kinds:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        values[key] = _coerce(key, raw, types[kinds[key]])
    return RunConfig(**values).validate()


def load_config(path: str | Path) -> RunConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config(text)
