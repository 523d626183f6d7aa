"""Discrete-time water heater physics, hazard accounting, and the guard.

The plant is a well-mixed single tank advanced by explicit Euler. The
hazard of interest is outflowing water above 90 degC for more than 2 s;
the guard is an independent safety monitor that latches power off and
closes the valve when it observes an over-limit outflow temperature.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional

from .model import EnvironmentSample, SimulationFault, ValidationError

HAZARD_TEMP = 90.0  # degC, strict
HAZARD_DURATION = 2.0  # s, strict

# Guards float accumulation drift at the exact duration boundary.
_EPS = 1e-6


@dataclass(frozen=True)
class PlantParams:
    volume: float = 50.0  # L
    density: float = 1.0  # kg/L
    specific_heat: float = 4186.0  # J/(kg K)
    max_power: float = 10000.0  # W
    tick: float = 0.1  # s

    def __post_init__(self) -> None:
        for name in ("volume", "density", "specific_heat", "max_power", "tick"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValidationError(f"plant {name} must be positive, got {value!r}")
        # The 2 s hazard window must span at least 4 ticks.
        if self.tick > 0.5:
            raise ValidationError(f"tick must be <= 0.5 s, got {self.tick}")

    @property
    def heat_capacity(self) -> float:
        """Thermal mass of the tank contents, J/K."""
        return self.density * self.specific_heat * self.volume

    def to_dict(self) -> dict:
        return {
            "volume": self.volume,
            "density": self.density,
            "specific_heat": self.specific_heat,
            "max_power": self.max_power,
            "tick": self.tick,
        }

    @classmethod
    def from_dict(cls, data) -> "PlantParams":
        return cls(**{k: float(v) for k, v in data.items()})


@dataclass(frozen=True)
class PlantState:
    tank_temp: float
    valve_open: bool = True
    power_cmd: float = 0.0
    hazard_accum: float = 0.0
    hazard_count: int = 0
    #: True once the current contiguous over-limit episode has been counted.
    episode_counted: bool = False

    @property
    def outflow_temp(self) -> float:
        # Well-mixed tank: outflow equals tank temperature.
        return self.tank_temp


@dataclass(frozen=True)
class GuardState:
    enabled: bool = True
    tripped: bool = False
    trip_time: Optional[float] = None


@dataclass(frozen=True)
class GuardOverrides:
    power_zeroed: bool = False
    valve_closed: bool = False


def plant_step(
    state: PlantState,
    params: PlantParams,
    env: EnvironmentSample,
    power_in: float,
) -> PlantState:
    """Advance the tank temperature one tick by explicit Euler.

    dT/dt = (q/V) (T_in - T) + P/(rho c V), with q = 0 while the valve
    is closed. ``power_in`` must already be clamped to [0, max_power].
    """
    if not (math.isfinite(power_in) and math.isfinite(state.tank_temp)
            and math.isfinite(env.inflow_temp) and math.isfinite(env.inflow_rate)):
        raise SimulationFault("non-finite input to plant step")
    if not 0.0 <= power_in <= params.max_power:
        raise ValidationError(
            f"power {power_in} outside [0, {params.max_power}]"
        )
    flow = env.inflow_rate if state.valve_open else 0.0
    rate = (flow / params.volume) * (env.inflow_temp - state.tank_temp)
    rate += power_in / params.heat_capacity
    new_temp = state.tank_temp + params.tick * rate
    if not math.isfinite(new_temp):
        raise SimulationFault("non-finite tank temperature")
    return replace(state, tank_temp=new_temp, power_cmd=power_in)


def hazard_update(state: PlantState, params: PlantParams) -> PlantState:
    """Accumulate over-limit outflow time and count completed episodes.

    The hazard condition is strict (> 90 degC) and requires the valve
    open; an episode is counted once, when its duration first exceeds
    2 s.
    """
    if state.outflow_temp > HAZARD_TEMP and state.valve_open:
        accum = state.hazard_accum + params.tick
        count = state.hazard_count
        counted = state.episode_counted
        if not counted and accum > HAZARD_DURATION + _EPS:
            count += 1
            counted = True
        return replace(
            state, hazard_accum=accum, hazard_count=count, episode_counted=counted
        )
    return replace(state, hazard_accum=0.0, episode_counted=False)


def guard_step(
    guard: GuardState, state: PlantState, now: float = 0.0
) -> tuple[GuardState, GuardOverrides]:
    """Evaluate the independent safety monitor for one tick.

    The guard observes the previous tick's outflow temperature, so the
    trip latency is exactly one tick. Once tripped it stays latched
    (power zeroed, valve closed) until guard_reset.
    """
    if guard.enabled and not guard.tripped and state.outflow_temp > HAZARD_TEMP:
        guard = replace(guard, tripped=True, trip_time=now)
    if guard.tripped:
        return guard, GuardOverrides(power_zeroed=True, valve_closed=True)
    return guard, GuardOverrides()


def guard_reset(guard: GuardState) -> GuardState:
    """Manual reset; the only way to clear the latch."""
    return replace(guard, tripped=False, trip_time=None)
