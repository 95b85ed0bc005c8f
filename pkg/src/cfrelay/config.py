"""System parameters and their text-file representation.

Config files are TOML with one flat table whose keys are the field names of
:class:`SystemConfig`. Every field has a default, so an empty file is valid.
"""

from __future__ import annotations

import dataclasses
import math
import sys
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Any

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib


class ConfigError(ValueError):
    """Raised for invalid parameter values or malformed config files."""


@dataclass(frozen=True)
class SystemConfig:
    num_aps: int = 200
    antennas_per_ap: int = 3
    num_pairs: int = 5
    area_side: float = 1000.0  # m
    coherence_symbols: int = 200  # 1 ms x 200 kHz
    pilot_symbols: int = 10
    carrier_freq: float = 2e9  # Hz
    bandwidth: float = 20e6  # Hz
    noise_figure_db: float = 9.0
    noise_temp: float = 290.0  # K
    boltzmann: float = 1.381e-23  # J/K
    pilot_power_dbm: float = 20.0
    uplink_power_dbm: float = 20.0
    # None means p_r = 2 W p_u (equal MAC and BC transmit energy)
    relay_power_dbm: float | None = None
    shadow_std_db: float = 4.0
    shadow_decorrelation_m: float = 9.0
    min_distance: float = 1.0  # m, clamp before the path-loss formula
    num_realizations: int = 1000
    rng_seed: int = 0

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if self.num_aps < 1 or self.antennas_per_ap < 1 or self.num_pairs < 1:
            raise ConfigError("num_aps, antennas_per_ap and num_pairs must be >= 1")
        if not self.area_side > 0:
            raise ConfigError("area_side must be positive")
        if self.pilot_symbols < 2 * self.num_pairs:
            raise ConfigError(
                f"pilot_symbols={self.pilot_symbols} < 2*num_pairs={2 * self.num_pairs}; "
                "pilots cannot be mutually orthogonal"
            )
        if self.pilot_symbols >= self.coherence_symbols:
            raise ConfigError("pilot_symbols must be smaller than coherence_symbols")
        if self.bandwidth <= 0 or self.noise_temp <= 0 or self.boltzmann <= 0:
            raise ConfigError("bandwidth, noise_temp and boltzmann must be positive")
        if self.shadow_std_db < 0 or self.shadow_decorrelation_m <= 0:
            raise ConfigError("invalid shadowing parameters")
        if self.min_distance < 0:
            raise ConfigError("min_distance must be non-negative")
        if self.num_realizations < 2:
            raise ConfigError("num_realizations must be >= 2")

    def replace(self, **changes: Any) -> "SystemConfig":
        return dataclasses.replace(self, **changes)

    @property
    def prelog(self) -> float:
        """Fraction of each coherence block carrying data in one direction."""
        return (self.coherence_symbols - self.pilot_symbols) / (2 * self.coherence_symbols)

    def as_dict(self) -> dict[str, Any]:
        return dataclasses.asdict(self)


_FIELD_TYPES = {f.name: f.type for f in fields(SystemConfig)}


def _coerce(key: str, value: Any) -> Any:
    kind = _FIELD_TYPES[key]
    if value is None or (isinstance(value, str) and value.lower() in {"none", "null"}):
        if "None" in str(kind):
            return None
        raise ConfigError(f"{key} may not be empty")
    try:
        if kind == "int":
            num = float(value) if isinstance(value, str) else value
            if isinstance(num, float) and not num.is_integer():
                raise ValueError(value)
            return int(num)
        val = float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"bad value for {key}: {value!r}") from None
    if not math.isfinite(val):
        raise ConfigError(f"{key} must be finite")
    return val


def from_mapping(data: dict[str, Any], base: SystemConfig | None = None) -> SystemConfig:
    unknown = sorted(set(data) - set(_FIELD_TYPES))
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    base = base or SystemConfig()
    return base.replace(**{k: _coerce(k, v) for k, v in data.items()})


def load_config(path: str | Path, base: SystemConfig | None = None) -> SystemConfig:
    """Read a TOML config file; parse errors report the offending line."""
    text = Path(path).read_text()
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        line = getattr(exc, "lineno", None)
        where = f"line {line}: " if line is not None else ""
        raise ConfigError(f"{path}: {where}{exc}") from None
    return from_mapping(data, base)


def parse_overrides(items: list[str], base: SystemConfig) -> SystemConfig:
    """Apply ``key=value`` strings on top of ``base``."""
    data = {}
    for item in items:
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"override must look like key=value, got {item!r}")
        data[key.strip()] = value.strip()
    return from_mapping(data, base)


def dump_config(cfg: SystemConfig) -> str:
    lines = []
    for key, value in cfg.as_dict().items():
        if value is None:
            lines.append(f'# {key} = (derived)')
        else:
            lines.append(f"{key} = {value!r}")
    return "\n".join(lines) + "\n"

