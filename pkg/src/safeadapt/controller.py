"""Managed-system control laws: PID and the parametric network controller."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

import numpy as np

from .model import SystemConfiguration, ValidationError

#: Inputs consumed by the network controller, in order.
NET_INPUTS = ("setpoint", "outflow_temp", "inflow_temp", "inflow_rate", "outflow_temp_rate")
NET_INPUT_COUNT = len(NET_INPUTS)


@dataclass(frozen=True)
class PidConfig:
    kp: float = 0.0
    ki: float = 0.0
    kd: float = 0.0

    def __post_init__(self) -> None:
        for name in ("kp", "ki", "kd"):
            if not math.isfinite(getattr(self, name)):
                raise ValidationError(f"PID gain {name} must be finite")

    @classmethod
    def from_configuration(cls, config: SystemConfiguration) -> "PidConfig":
        p = config.parameters
        return cls(kp=p.get("kp", 0.0), ki=p.get("ki", 0.0), kd=p.get("kd", 0.0))


@dataclass(frozen=True)
class PidState:
    integral: float = 0.0  # degC s
    prev_error: float = 0.0  # degC


def pid_compute(
    cfg: PidConfig,
    st: PidState,
    setpoint: float,
    measured: float,
    tick: float,
    max_power: float = 10000.0,
) -> tuple[float, PidState]:
    """Positional-form PID with output clamp and clamped anti-windup.

    The integral is frozen (not advanced) on any tick where the output
    saturates at either clamp.
    """
    if tick <= 0:
        raise ValidationError(f"tick must be positive, got {tick}")
    error = setpoint - measured
    derivative = (error - st.prev_error) / tick
    tentative_integral = st.integral + error * tick
    raw = cfg.kp * error + cfg.ki * tentative_integral + cfg.kd * derivative
    if 0.0 <= raw <= max_power:
        return raw, PidState(integral=tentative_integral, prev_error=error)
    # Saturated: freeze the integral and clamp the output.
    raw = cfg.kp * error + cfg.ki * st.integral + cfg.kd * derivative
    power = min(max(raw, 0.0), max_power)
    return power, PidState(integral=st.integral, prev_error=error)


@dataclass(frozen=True)
class NetControllerSpec:
    """Feed-forward network mapping five plant signals to a heating level.

    Hidden activations are tanh; the scalar output passes through a
    logistic squash and is scaled by max_power. Weights are stored flat,
    per layer: row-major (fan_in x fan_out) matrix followed by the bias
    vector.
    """

    layer_sizes: tuple[int, ...]
    weights: tuple[float, ...]
    activation: str = "tanh"

    def __post_init__(self) -> None:
        if self.activation != "tanh":
            raise ValidationError(f"unsupported activation {self.activation!r}")
        if not self.layer_sizes:
            raise ValidationError("at least one hidden layer is required")
        for size in self.layer_sizes:
            if size < 1:
                raise ValidationError(f"layer size must be positive, got {size}")
        expected = weight_count(self.layer_sizes)
        if len(self.weights) != expected:
            raise ValidationError(
                f"topology {self.layer_sizes} needs {expected} weights, "
                f"got {len(self.weights)}"
            )
        if not all(math.isfinite(w) for w in self.weights):
            raise ValidationError("weights must be finite")

    def layers(self) -> list[tuple[np.ndarray, np.ndarray]]:
        """Unflatten to (matrix, bias) pairs, output layer last."""
        dims = (NET_INPUT_COUNT, *self.layer_sizes, 1)
        out = []
        pos = 0
        flat = np.asarray(self.weights, dtype=float)
        for fan_in, fan_out in zip(dims, dims[1:]):
            matrix = flat[pos:pos + fan_in * fan_out].reshape(fan_in, fan_out)
            pos += fan_in * fan_out
            bias = flat[pos:pos + fan_out]
            pos += fan_out
            out.append((matrix, bias))
        return out

    def to_dict(self) -> dict[str, Any]:
        return {
            "layer_sizes": list(self.layer_sizes),
            "activation": self.activation,
            "weights": list(self.weights),
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "NetControllerSpec":
        return cls(
            layer_sizes=tuple(int(s) for s in data["layer_sizes"]),
            weights=tuple(float(w) for w in data["weights"]),
            activation=data.get("activation", "tanh"),
        )


def weight_count(layer_sizes: Sequence[int]) -> int:
    dims = (NET_INPUT_COUNT, *layer_sizes, 1)
    return sum(fan_in * fan_out + fan_out for fan_in, fan_out in zip(dims, dims[1:]))


def zero_spec(layer_sizes: Sequence[int]) -> NetControllerSpec:
    sizes = tuple(int(s) for s in layer_sizes)
    return NetControllerSpec(sizes, (0.0,) * weight_count(sizes))


def net_compute(
    spec: NetControllerSpec, inputs: Sequence[float], max_power: float
) -> float:
    """Deterministic forward pass; returns a power in [0, max_power]."""
    if len(inputs) != NET_INPUT_COUNT:
        raise ValidationError(
            f"expected {NET_INPUT_COUNT} inputs, got {len(inputs)}"
        )
    x = np.asarray(inputs, dtype=float)
    layers = spec.layers()
    for matrix, bias in layers[:-1]:
        x = np.tanh(x @ matrix + bias)
    matrix, bias = layers[-1]
    z = float((x @ matrix + bias)[0])
    # Logistic squash keeps the command in [0, 1] before power scaling.
    level = 0.5 * (1.0 + math.tanh(0.5 * z))
    return level * max_power
