"""Whole-system energy accounting.

Internal units are millijoules, seconds and milliwatts; platform static
power is declared in watts and converted once at this boundary.  The total
energy of a run charges every platform's static draw for the full wall-clock
duration -- idle platforms are not free, which is what makes the cheapest
configuration of a heterogeneous system differ from the cheapest
configuration of each platform in isolation.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .platforms import NativeConfig, PlatformSpec

W_TO_MW = 1000.0


@dataclass(frozen=True)
class PlatformEnergy:
    platform: str
    static_mj: float
    dynamic_mj: float


@dataclass(frozen=True)
class EnergyBreakdown:
    """Per-platform static/dynamic split for one run; idle platforms carry
    zero dynamic energy."""

    platforms: tuple[PlatformEnergy, ...]
    active: frozenset[str]

    @property
    def total_mj(self) -> float:
        return sum(p.static_mj + p.dynamic_mj for p in self.platforms)


@dataclass(frozen=True)
class RunMeasurement:
    """Mean measurement of one (application, configuration) point."""

    app_id: int
    config: NativeConfig
    mean_time: float
    mean_energy: float
    time_stddev: float = 0.0
    energy_stddev: float = 0.0
    runs: int = 1

    def __post_init__(self) -> None:
        if self.mean_time <= 0:
            raise ValueError("mean_time must be positive")
        if self.mean_energy < 0:
            raise ValueError("mean_energy must be non-negative")
        if self.time_stddev < 0 or self.energy_stddev < 0:
            raise ValueError("stddevs must be non-negative")
        if self.runs < 1:
            raise ValueError("runs must be >= 1")

    @property
    def mean_power(self) -> float:
        return power_from(self.mean_energy, self.mean_time)


def power_from(energy_mj: float, time_s: float) -> float:
    """Mean power (mW) of a run measured as ``energy_mj`` over ``time_s``."""
    if time_s <= 0:
        raise ValueError(f"time must be positive, got {time_s}")
    return energy_mj / time_s


def static_energy(spec: PlatformSpec, duration_s: float) -> float:
    """Idle energy (mJ) of one platform over ``duration_s``."""
    if duration_s < 0:
        raise ValueError(f"duration must be non-negative, got {duration_s}")
    return spec.static_power * W_TO_MW * duration_s


def static_power_mw(system: Sequence[PlatformSpec]) -> float:
    """Combined static draw of every platform in the system, in mW."""
    return sum(spec.static_power for spec in system) * W_TO_MW


def total_energy(
    system: Sequence[PlatformSpec],
    active: str,
    dynamic_mj: float,
    duration_s: float,
) -> EnergyBreakdown:
    """Whole-system energy of one run: the active platform contributes its
    static and dynamic energy, every idle platform its static energy."""
    names = [spec.name for spec in system]
    if active not in names:
        raise ValueError(f"active platform {active!r} not in system {names}")
    parts = tuple(
        PlatformEnergy(
            platform=spec.name,
            static_mj=static_energy(spec, duration_s),
            dynamic_mj=dynamic_mj if spec.name == active else 0.0,
        )
        for spec in system
    )
    return EnergyBreakdown(platforms=parts, active=frozenset({active}))


def total_energy_row(
    power_row: np.ndarray,
    time_row: np.ndarray,
    system: Sequence[PlatformSpec],
) -> np.ndarray:
    """Vectorized whole-system energy per configuration.

    ``power_row`` is dynamic power (mW) and ``time_row`` duration (s) per
    configuration; the run duration charges all platforms' static draw.
    """
    power_row = np.asarray(power_row, dtype=float)
    time_row = np.asarray(time_row, dtype=float)
    return time_row * (power_row + static_power_mw(system))
