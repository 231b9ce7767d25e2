"""Random scenario generation: device/BS placement, task demands, channel gains.

All quantities are stored in SI units (bits, bits/s, seconds, watts, Hz,
meters).  Randomness flows from a single numpy PCG64 generator seeded from the
scenario seed, so an identical seed reproduces a bit-identical scenario.  Draw
order is fixed: device positions, task sizes, deadlines, local compute rates,
server compute rates, energy budgets, then per-(device, BS, subchannel) fading.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import yaml

AREA_SIDE_M = 1000.0
DEFAULT_BS_GRID_SIDE = 2  # 2x2 grid reproduces the canonical 4-BS layout

# Far-field guard: distances are clamped below at 1 m so the log-distance
# path loss stays defined when a device spawns on top of a BS.
MIN_DISTANCE_M = 1.0


class ConfigError(ValueError):
    """Raised for invalid generation parameters."""


@dataclass(frozen=True)
class RadioConfig:
    """Radio constants shared by every link.

    bandwidth_hz is per subchannel; noise density is in dBm/Hz; the path loss
    law is `intercept + slope * log10(d_km)` in dB.
    """

    bandwidth_hz: float = 410e3
    noise_density_dbm_hz: float = -174.0
    pathloss_intercept_db: float = 128.1
    pathloss_slope_db_per_decade: float = 37.6
    max_power_dbm: float = 27.8

    def __post_init__(self):
        if self.bandwidth_hz <= 0:
            raise ConfigError(f"bandwidth_hz must be > 0, got {self.bandwidth_hz}")

    @property
    def max_power_w(self) -> float:
        return dbm_to_watts(self.max_power_dbm)

    @property
    def noise_power_w(self) -> float:
        return noise_power(self.bandwidth_hz, self.noise_density_dbm_hz)


@dataclass(frozen=True)
class Device:
    id: int
    position: tuple[float, float]
    task_bits: float
    deadline_s: float
    local_rate_bps: float
    energy_budget_j: float

    def __post_init__(self):
        if min(self.task_bits, self.deadline_s, self.local_rate_bps, self.energy_budget_j) <= 0:
            raise ConfigError(f"device {self.id} has a non-positive field")


@dataclass(frozen=True)
class BaseStation:
    id: int
    position: tuple[float, float]
    compute_rate_bps: float
    subchannel_count: int

    def __post_init__(self):
        if self.compute_rate_bps <= 0 or self.subchannel_count < 1:
            raise ConfigError(f"base station {self.id} has an invalid field")


@dataclass(frozen=True)
class Scenario:
    """Immutable world description, safe to share read-only across workers."""

    devices: tuple[Device, ...]
    base_stations: tuple[BaseStation, ...]
    gains: np.ndarray  # linear power gain, shape (N, M, G)
    radio: RadioConfig
    noise_power_w: float
    seed: int = 0

    # dense views derived from the device/BS lists, kept for fast math
    task_bits: np.ndarray = field(init=False, repr=False)
    deadlines_s: np.ndarray = field(init=False, repr=False)
    local_rate_bps: np.ndarray = field(init=False, repr=False)
    energy_budget_j: np.ndarray = field(init=False, repr=False)
    compute_rate_bps: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        n, m, g = len(self.devices), len(self.base_stations), self.n_subchannels
        if self.gains.shape != (n, m, g):
            raise ConfigError(f"gain tensor shape {self.gains.shape} != {(n, m, g)}")
        if not np.all(np.isfinite(self.gains)) or np.any(self.gains < 0):
            raise ConfigError("channel gains must be finite and non-negative")
        if self.noise_power_w <= 0:
            raise ConfigError("noise power must be positive")
        self.gains.setflags(write=False)
        put = object.__setattr__
        put(self, "task_bits", _frozen([d.task_bits for d in self.devices]))
        put(self, "deadlines_s", _frozen([d.deadline_s for d in self.devices]))
        put(self, "local_rate_bps", _frozen([d.local_rate_bps for d in self.devices]))
        put(self, "energy_budget_j", _frozen([d.energy_budget_j for d in self.devices]))
        put(self, "compute_rate_bps", _frozen([b.compute_rate_bps for b in self.base_stations]))

    @property
    def n_devices(self) -> int:
        return len(self.devices)

    @property
    def n_bs(self) -> int:
        return len(self.base_stations)

    @property
    def n_subchannels(self) -> int:
        return self.base_stations[0].subchannel_count if self.base_stations else 0

    @property
    def max_power_w(self) -> float:
        return self.radio.max_power_w

    def distances_m(self) -> np.ndarray:
        """Device-to-BS distances, shape (N, M), clamped below at 1 m."""
        dev = np.array([d.position for d in self.devices], dtype=float)
        bs = np.array([b.position for b in self.base_stations], dtype=float)
        d = np.linalg.norm(dev[:, None, :] - bs[None, :, :], axis=2)
        return np.maximum(d, MIN_DISTANCE_M)

    def nearest_bs(self) -> np.ndarray:
        """Index of the Euclidean-nearest BS per device (ties: lowest index)."""
        return np.argmin(self.distances_m(), axis=1)


def _frozen(values) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class GenerationParams:
    """Scenario generation knobs, mirroring the standard parameter table."""

    n_devices: int = 80
    n_bs: int = 4
    n_subchannels: int = 5
    bandwidth_hz: float = 410e3
    noise_density_dbm_hz: float = -174.0
    task_bits_range: tuple[float, float] = (5e6, 15e6)
    deadline_range_s: tuple[float, float] = (0.2, 1.2)
    local_rate_range: tuple[float, float] = (3e6, 8e6)
    mec_rate_range: tuple[float, float] = (7e9, 10e9)
    max_power_dbm: float = 27.8
    energy_budget_range_j: tuple[float, float] = (0.152, 0.910)
    area_m: float = AREA_SIDE_M

    def __post_init__(self):
        if self.n_devices <= 0 or self.n_bs <= 0 or self.n_subchannels <= 0:
            raise ConfigError(
                "n_devices, n_bs and n_subchannels must all be positive, got "
                f"({self.n_devices}, {self.n_bs}, {self.n_subchannels})"
            )

    def radio(self) -> RadioConfig:
        return RadioConfig(
            bandwidth_hz=self.bandwidth_hz,
            noise_density_dbm_hz=self.noise_density_dbm_hz,
            max_power_dbm=self.max_power_dbm,
        )

    @classmethod
    def from_file(cls, path) -> "GenerationParams":
        """Load params from a flat YAML/JSON mapping of field names to values."""
        with open(path, "r", encoding="utf-8") as fh:
            raw = yaml.safe_load(fh)
        if not isinstance(raw, dict):
            raise ConfigError(f"config file {path} must contain a key-value mapping")
        return cls.from_dict(raw)

    @classmethod
    def from_dict(cls, raw: dict) -> "GenerationParams":
        known = set(cls.__dataclass_fields__)
        unknown = set(raw) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        kwargs = {}
        for key, value in raw.items():
            if key.endswith("_range") or key.endswith("_range_s") or key.endswith("_range_j"):
                lo, hi = value
                kwargs[key] = (float(lo), float(hi))
            elif key in ("n_devices", "n_bs", "n_subchannels"):
                kwargs[key] = int(value)
            else:
                kwargs[key] = float(value)
        return cls(**kwargs)


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


def path_loss_db(distance_km: float) -> float:
    """Large-scale fading in dB for a link of the given length.

    Distances are clamped below at 1 m before evaluating the log-distance law.
    """
    distance_km = max(distance_km, MIN_DISTANCE_M / 1000.0)
    if distance_km <= 0 or not math.isfinite(distance_km):
        raise ValueError(f"distance must be positive and finite, got {distance_km} km")
    return 128.1 + 37.6 * math.log10(distance_km)


def noise_power(bandwidth_hz: float, noise_density_dbm_hz: float) -> float:
    """Thermal noise power in watts over the given bandwidth."""
    if bandwidth_hz <= 0:
        raise ValueError(f"bandwidth_hz must be > 0, got {bandwidth_hz}")
    return bandwidth_hz * dbm_to_watts(noise_density_dbm_hz)


def bs_grid_positions(n_bs: int, area_m: float = AREA_SIDE_M) -> list[tuple[float, float]]:
    """BS coordinates on the smallest uniform k x k grid holding n_bs sites.

    Cells are visited column by column with y descending, which reproduces the
    canonical layout (250,750), (250,250), (750,750), (750,250) for n_bs = 4.
    """
    k = max(DEFAULT_BS_GRID_SIDE, math.ceil(math.sqrt(n_bs)))
    cell = area_m / k
    coords = []
    for i in range(k):
        for j in range(k - 1, -1, -1):
            coords.append(((i + 0.5) * cell, (j + 0.5) * cell))
    return coords[:n_bs]


def generate_scenario(params: GenerationParams, seed: int) -> Scenario:
    """Draw a random scenario. Pure function of (params, seed)."""
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    n, m, g = params.n_devices, params.n_bs, params.n_subchannels

    positions = rng.uniform(0.0, params.area_m, size=(n, 2))
    task_bits = rng.uniform(*params.task_bits_range, size=n)
    deadlines = rng.uniform(*params.deadline_range_s, size=n)
    local_rates = rng.uniform(*params.local_rate_range, size=n)
    mec_rates = rng.uniform(*params.mec_rate_range, size=m)
    energy_budgets = rng.uniform(*params.energy_budget_range_j, size=n)

    bs_positions = bs_grid_positions(m, params.area_m)
    devices = tuple(
        Device(
            id=i,
            position=(positions[i, 0], positions[i, 1]),
            task_bits=task_bits[i],
            deadline_s=deadlines[i],
            local_rate_bps=local_rates[i],
            energy_budget_j=energy_budgets[i],
        )
        for i in range(n)
    )
    stations = tuple(
        BaseStation(
            id=j,
            position=bs_positions[j],
            compute_rate_bps=mec_rates[j],
            subchannel_count=g,
        )
        for j in range(m)
    )

    dist = np.linalg.norm(positions[:, None, :] - np.asarray(bs_positions)[None, :, :], axis=2)
    dist = np.maximum(dist, MIN_DISTANCE_M)
    pl_db = 128.1 + 37.6 * np.log10(dist / 1000.0)
    large_scale = 10.0 ** (-pl_db / 10.0)

    # Rayleigh small-scale fading: |z|^2 with z complex Gaussian of unit
    # variance, one i.i.d. draw per (device, BS, subchannel), static per
    # scenario (block fading).
    re = rng.standard_normal(size=(n, m, g))
    im = rng.standard_normal(size=(n, m, g))
    fading = 0.5 * (re**2 + im**2)
    gains = large_scale[:, :, None] * fading

    radio = params.radio()
    return Scenario(
        devices=devices,
        base_stations=stations,
        gains=gains,
        radio=radio,
        noise_power_w=radio.noise_power_w,
        seed=int(seed),
    )
