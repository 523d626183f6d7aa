"""Scenario definitions: environment schedules driving one simulation run."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Sequence, Union

from .model import ValidationError


@dataclass(frozen=True)
class Trace:
    """Piecewise trace of (time, value) points.

    "hold" keeps each value until the next point (default); "linear"
    interpolates between points. Before the first point the first value
    applies, after the last point the last value applies.
    """

    points: tuple[tuple[float, float], ...]
    interp: str = "hold"

    def __post_init__(self) -> None:
        if not self.points:
            raise ValidationError("trace needs at least one point")
        if self.interp not in ("hold", "linear"):
            raise ValidationError(f"unknown interpolation {self.interp!r}")
        times = [t for t, _ in self.points]
        if times != sorted(times):
            raise ValidationError("trace points must be sorted by time")

    def value_at(self, t: float) -> float:
        points = self.points
        if t <= points[0][0]:
            return points[0][1]
        for (t0, v0), (t1, v1) in zip(points, points[1:]):
            if t < t1:
                if self.interp == "hold":
                    return v0
                frac = (t - t0) / (t1 - t0)
                return v0 + frac * (v1 - v0)
        return points[-1][1]

    def to_dict(self) -> dict[str, Any]:
        return {"points": [list(p) for p in self.points], "interp": self.interp}

    @classmethod
    def from_dict(cls, data: Union[Mapping[str, Any], Sequence[Any]]) -> "Trace":
        if isinstance(data, Mapping):
            points = data["points"]
            interp = data.get("interp", "hold")
        else:
            points, interp = data, "hold"
        return cls(tuple((float(t), float(v)) for t, v in points), interp)

    @classmethod
    def constant(cls, value: float) -> "Trace":
        return cls(((0.0, float(value)),))


@dataclass(frozen=True)
class Scenario:
    id: str
    duration: float
    setpoint_schedule: tuple[tuple[float, float], ...]
    inflow_temp_trace: Trace
    inflow_rate_trace: Trace
    tick: float = 0.1
    seed: int = 0
    guard_enabled: bool = True
    initial_tank_temp: float = 20.0
    #: Optional operator-injected adaptation requests: (time, option id).
    manual_triggers: tuple[tuple[float, str], ...] = ()

    def __post_init__(self) -> None:
        if self.duration < 0:
            raise ValidationError(f"duration must be >= 0, got {self.duration}")
        if not self.setpoint_schedule:
            raise ValidationError("setpoint schedule needs at least one step")
        times = [t for t, _ in self.setpoint_schedule]
        if times != sorted(times):
            raise ValidationError("setpoint schedule must be sorted by time")

    def setpoint_at(self, t: float) -> float:
        value = self.setpoint_schedule[0][1]
        for step_time, step_value in self.setpoint_schedule:
            if t >= step_time:
                value = step_value
            else:
                break
        return value

    def ticks(self) -> int:
        return int(round(self.duration / self.tick))

    def to_dict(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "tick": self.tick,
            "duration": self.duration,
            "setpoint_schedule": [list(p) for p in self.setpoint_schedule],
            "inflow_temp_trace": self.inflow_temp_trace.to_dict(),
            "inflow_rate_trace": self.inflow_rate_trace.to_dict(),
            "seed": self.seed,
            "guard_enabled": self.guard_enabled,
            "initial_tank_temp": self.initial_tank_temp,
            "manual_triggers": [list(p) for p in self.manual_triggers],
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "Scenario":
        return cls(
            id=data["id"],
            tick=float(data.get("tick", 0.1)),
            duration=float(data["duration"]),
            setpoint_schedule=tuple(
                (float(t), float(v)) for t, v in data["setpoint_schedule"]
            ),
            inflow_temp_trace=Trace.from_dict(data["inflow_temp_trace"]),
            inflow_rate_trace=Trace.from_dict(data["inflow_rate_trace"]),
            seed=int(data.get("seed", 0)),
            guard_enabled=bool(data.get("guard_enabled", True)),
            initial_tank_temp=float(data.get("initial_tank_temp", 20.0)),
            manual_triggers=tuple(
                (float(t), str(o)) for t, o in data.get("manual_triggers", ())
            ),
        )


def load_scenario(path: Union[str, Path]) -> Scenario:
    with open(path, encoding="utf-8") as fh:
        return Scenario.from_dict(json.load(fh))


def save_scenario(scenario: Scenario, path: Union[str, Path]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(scenario.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
