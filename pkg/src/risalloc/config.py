"""Scenario parameters, validation, unit conversions, and JSON round-trip.

Units: distances in meters, carrier_freq in GHz, bandwidth in Hz, tx_power
and noise_power in dBm, shadow_sigma in dB, densities per square kilometer.
dBm values are converted to linear watts once, at config load, through the
``tx_power_watts`` / ``noise_watts`` properties.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, fields

SPEED_OF_LIGHT = 3.0e8  # free-space propagation speed, m/s


class ConfigError(ValueError):
    """Invalid or malformed scenario configuration."""


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


@dataclass(frozen=True)
class ScenarioConfig:
    """Deployment geometry, channel constants, and power budget for one cell.

    The transmitter sits at ``bs_position`` with an N-antenna planar panel,
    the reflecting surface at ``ris_position`` with ``ris_side`` x
    ``ris_side`` elements. Users drop uniformly over the
    ``area_side`` x ``area_side`` square with x, y >= 0, so everything stays
    on the same side of the transmitter and the surface.
    """

    bs_position: tuple = (0.0, 0.0, 10.0)
    ris_position: tuple = (25.0, 25.0, 10.0)
    area_side: float = 100.0
    n_bs_antennas: int = 4
    ris_side: int = 20
    num_ues: int = 3
    ue_density: float = 150.0
    blockage_density: float = 10.0
    blockage_mean_length: float = 15.0
    blockage_mean_width: float = 15.0
    carrier_freq: float = 28.0
    bandwidth: float = 50e6
    tx_power: float = 35.0
    noise_power: float = -84.0
    shadow_sigma: float = 4.0
    ue_height: float = 1.5
    bs_height: float = 10.0

    def __post_init__(self):
        # keep positions hashable and JSON-friendly
        object.__setattr__(self, "bs_position", tuple(float(v) for v in self.bs_position))
        object.__setattr__(self, "ris_position", tuple(float(v) for v in self.ris_position))

    # ---- derived quantities ----

    @property
    def total_elements(self) -> int:
        """Number of surface elements, L^2."""
        return self.ris_side * self.ris_side

    @property
    def carrier_freq_hz(self) -> float:
        return self.carrier_freq * 1e9

    @property
    def tx_power_watts(self) -> float:
        return dbm_to_watts(self.tx_power)

    @property
    def noise_watts(self) -> float:
        return dbm_to_watts(self.noise_power)

    @property
    def area_km2(self) -> float:
        return (self.area_side / 1000.0) ** 2

    # ---- validation ----

    def validate(self) -> "ScenarioConfig":
        if len(self.bs_position) != 3 or len(self.ris_position) != 3:
            raise ConfigError("bs_position and ris_position must be 3-D points")
        if self.n_bs_antennas < 1:
            raise ConfigError("n_bs_antennas must be >= 1")
        if self.ris_side < 1:
            raise ConfigError("ris_side must be >= 1")
        if self.num_ues < 1:
            raise ConfigError("num_ues must be >= 1")
        if self.area_side <= 0:
            raise ConfigError("area_side must be positive")
        if self.carrier_freq <= 0:
            raise ConfigError("carrier_freq must be positive")
        if self.bandwidth <= 0:
            raise ConfigError("bandwidth must be positive")
        if self.ue_density < 0 or self.blockage_density < 0:
            raise ConfigError("densities must be non-negative")
        if self.blockage_mean_length <= 0 or self.blockage_mean_width <= 0:
            raise ConfigError("blockage mean dimensions must be positive")
        if self.shadow_sigma < 0:
            raise ConfigError("shadow_sigma must be non-negative")
        if self.ue_height <= 0 or self.bs_height <= 0:
            raise ConfigError("antenna heights must be positive")
        if abs(self.bs_height - self.bs_position[2]) > 1e-9:
            raise ConfigError("bs_height must match the z coordinate of bs_position")
        return self

    # ---- JSON round-trip ----

    def to_dict(self) -> dict:
        out = {}
        for f in fields(self):
            v = getattr(self, f.name)
            out[f.name] = list(v) if isinstance(v, tuple) else v
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, data: dict) -> "ScenarioConfig":
        if not isinstance(data, dict):
            raise ConfigError("scenario config must be a JSON object")
        names = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - names)
        if unknown:
            raise ConfigError(f"unknown scenario config fields: {', '.join(unknown)}")
        missing = sorted(names - set(data))
        if missing:
            raise ConfigError(f"missing scenario config fields: {', '.join(missing)}")
        kwargs = dict(data)
        for key in ("bs_position", "ris_position"):
            kwargs[key] = tuple(kwargs[key])
        cfg = cls(**kwargs)
        cfg.validate()
        return cfg

    @classmethod
    def from_json(cls, text: str) -> "ScenarioConfig":
        return cls.from_dict(json.loads(text))


def desk_config() -> ScenarioConfig:
    """Small profile that runs interactively: 3 users, 4 antennas, 8x8 surface."""
    return ScenarioConfig(ris_side=8)


def full_scale_config() -> ScenarioConfig:
    """Full-scale profile (20x20 surface); heavy for PCA and exhaustive search."""
    return ScenarioConfig()
