"""Core domain types shared across the toolkit.

Houses system configurations, adaptation models/options/actions,
operational domains, environment samples, and the knowledge repository
that the managing system reads and writes.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Any, Iterable, Mapping, Optional

if TYPE_CHECKING:
    from .assurance import SafetyCase
    from .controller import NetControllerSpec
    from .spi import SpiWindow
    from .taxonomy import AdaptationDescriptor


class ValidationError(ValueError):
    """A domain value violates its declared invariants."""


class SimulationFault(RuntimeError):
    """A numerical fault (non-finite value) occurred during simulation."""


CONTROLLER_KINDS = ("pid", "parametric-net")

#: Environment variables an operational domain may constrain.
DOMAIN_VARIABLES = ("inflow_temp", "inflow_rate")

_NEG_INF = float("-inf")
_POS_INF = float("inf")


def _check_finite(name: str, value: float) -> None:
    if not math.isfinite(value):
        raise ValidationError(f"{name} must be finite, got {value!r}")


@dataclass(frozen=True)
class OperationalDomain:
    """Axis-aligned interval box over named environment variables.

    A missing variable is unbounded; explicit bounds may use +/- infinity.
    """

    bounds: dict[str, tuple[float, float]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        for name, (low, high) in self.bounds.items():
            if low > high:
                raise ValidationError(
                    f"domain bound for {name!r} has low {low} > high {high}"
                )

    def interval(self, name: str) -> tuple[float, float]:
        return self.bounds.get(name, (_NEG_INF, _POS_INF))

    def normalized(self) -> "OperationalDomain":
        """Drop axes that are fully unbounded."""
        kept = {
            name: bound
            for name, bound in self.bounds.items()
            if bound != (_NEG_INF, _POS_INF)
        }
        return OperationalDomain(kept)

    def contains(self, values: Mapping[str, float]) -> bool:
        """True iff every bounded variable present in ``values`` is in range."""
        for name, (low, high) in self.bounds.items():
            if name in values and not (low <= values[name] <= high):
                return False
        return True

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {}
        for name, (low, high) in self.bounds.items():
            out[name] = [
                None if low == _NEG_INF else low,
                None if high == _POS_INF else high,
            ]
        return out

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "OperationalDomain":
        bounds = {}
        for name, pair in data.items():
            low = _NEG_INF if pair[0] is None else float(pair[0])
            high = _POS_INF if pair[1] is None else float(pair[1])
            bounds[name] = (low, high)
        return cls(bounds)


#: The fully permissive domain.
UNBOUNDED_DOMAIN = OperationalDomain({})


def domain_subset(inner: OperationalDomain, outer: OperationalDomain) -> bool:
    """True iff ``inner`` is contained in ``outer`` on every axis.

    Axes absent from a domain are treated as unbounded, so an axis bounded
    only in ``inner`` never violates containment.
    """
    for name, (olow, ohigh) in outer.bounds.items():
        ilow, ihigh = inner.interval(name)
        if ilow < olow or ihigh > ohigh:
            return False
    return True


@dataclass(frozen=True)
class SystemConfiguration:
    """A concrete configuration of the managed system."""

    controller_kind: str
    parameters: dict[str, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.controller_kind not in CONTROLLER_KINDS:
            raise ValidationError(
                f"unknown controller kind {self.controller_kind!r}"
            )
        for name, value in self.parameters.items():
            _check_finite(f"parameter {name!r}", value)

    def with_assignment(self, assignment: Mapping[str, float]) -> "SystemConfiguration":
        merged = dict(self.parameters)
        merged.update(assignment)
        return SystemConfiguration(self.controller_kind, merged)

    def to_dict(self) -> dict[str, Any]:
        return {
            "controller_kind": self.controller_kind,
            "parameters": dict(self.parameters),
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "SystemConfiguration":
        return cls(
            controller_kind=data["controller_kind"],
            parameters={k: float(v) for k, v in data["parameters"].items()},
        )


@dataclass(frozen=True)
class ParameterConstraint:
    """Interval or conditional bound on one configuration parameter.

    A conditional constraint applies only while its guard parameter
    exceeds the guard threshold; otherwise it is vacuously satisfied.
    """

    kind: str  # "interval" | "conditional"
    target: str
    low: Optional[float] = None
    high: Optional[float] = None
    condition: Optional[tuple[str, float]] = None  # (guard param, threshold)

    def __post_init__(self) -> None:
        if self.kind not in ("interval", "conditional"):
            raise ValidationError(f"unknown constraint kind {self.kind!r}")
        if self.kind == "conditional" and self.condition is None:
            raise ValidationError(
                f"conditional constraint on {self.target!r} lacks a condition"
            )
        if self.low is not None and self.high is not None and self.low > self.high:
            raise ValidationError(
                f"constraint on {self.target!r} has low {self.low} > high {self.high}"
            )

    def satisfied_by(self, assignment: Mapping[str, float]) -> bool:
        if self.kind == "conditional":
            guard_name, threshold = self.condition  # type: ignore[misc]
            guard_value = assignment.get(guard_name)
            if guard_value is None or guard_value <= threshold:
                return True
        value = assignment[self.target]
        if self.low is not None and value < self.low:
            return False
        if self.high is not None and value > self.high:
            return False
        return True

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {"kind": self.kind, "target": self.target}
        if self.low is not None:
            out["low"] = self.low
        if self.high is not None:
            out["high"] = self.high
        if self.condition is not None:
            out["condition"] = [self.condition[0], self.condition[1]]
        return out

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "ParameterConstraint":
        condition = data.get("condition")
        return cls(
            kind=data["kind"],
            target=data["target"],
            low=data.get("low"),
            high=data.get("high"),
            condition=None if condition is None else (condition[0], float(condition[1])),
        )


@dataclass(frozen=True)
class AdaptationOption:
    """A concrete parameter assignment reachable by one adaptation."""

    id: str
    model_id: str
    assignment: dict[str, float] = field(default_factory=dict)
    domain: Optional[OperationalDomain] = None
    design_time_evidence: tuple[str, ...] = ()
    #: Rise time (s) recorded for this option by design-time simulation;
    #: used by the planner's selection rule.
    design_rise_time: Optional[float] = None

    def __post_init__(self) -> None:
        for name, value in self.assignment.items():
            _check_finite(f"assignment {name!r}", value)

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {
            "id": self.id,
            "model_id": self.model_id,
            "assignment": dict(self.assignment),
            "design_time_evidence": list(self.design_time_evidence),
        }
        if self.domain is not None:
            out["domain"] = self.domain.to_dict()
        if self.design_rise_time is not None:
            out["design_rise_time"] = self.design_rise_time
        return out

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "AdaptationOption":
        domain = data.get("domain")
        return cls(
            id=data["id"],
            model_id=data["model_id"],
            assignment={k: float(v) for k, v in data["assignment"].items()},
            domain=None if domain is None else OperationalDomain.from_dict(domain),
            design_time_evidence=tuple(data.get("design_time_evidence", ())),
            design_rise_time=data.get("design_rise_time"),
        )


@dataclass(frozen=True)
class AdaptationModel:
    """A parameterized template for one kind of change to the managed system."""

    id: str
    parameters: tuple[str, ...]
    constraints: tuple[ParameterConstraint, ...] = ()
    descriptor: "AdaptationDescriptor" = None  # type: ignore[assignment]
    options: Optional[tuple[AdaptationOption, ...]] = None

    def __post_init__(self) -> None:
        if len(set(self.parameters)) != len(self.parameters):
            raise ValidationError(f"model {self.id!r} repeats a parameter name")
        for constraint in self.constraints:
            if constraint.target not in self.parameters:
                raise ValidationError(
                    f"constraint targets unknown parameter {constraint.target!r}"
                )
        if self.descriptor is not None and self.descriptor.options_enumerated_at_design_time:
            if not self.options:
                raise ValidationError(
                    f"model {self.id!r} declares enumerated options but lists none"
                )

    def option_by_id(self, option_id: str) -> Optional[AdaptationOption]:
        for option in self.options or ():
            if option.id == option_id:
                return option
        return None

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {
            "id": self.id,
            "parameters": list(self.parameters),
            "constraints": [c.to_dict() for c in self.constraints],
            "descriptor": self.descriptor.to_dict(),
        }
        if self.options is not None:
            out["options"] = [o.to_dict() for o in self.options]
        return out

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "AdaptationModel":
        from .taxonomy import AdaptationDescriptor

        options = data.get("options")
        return cls(
            id=data["id"],
            parameters=tuple(data["parameters"]),
            constraints=tuple(
                ParameterConstraint.from_dict(c) for c in data.get("constraints", ())
            ),
            descriptor=AdaptationDescriptor.from_dict(data["descriptor"]),
            options=None
            if options is None
            else tuple(AdaptationOption.from_dict(o) for o in options),
        )


def option_satisfies_model(option: AdaptationOption, model: AdaptationModel) -> bool:
    """Check an option's assignment against its model's contract.

    The assignment must cover exactly the model's parameters and satisfy
    every constraint; conditional constraints are checked only while their
    guard condition holds.
    """
    declared = set(model.parameters)
    unknown = sorted(set(option.assignment) - declared)
    if unknown:
        raise ValidationError(
            f"assignment names unknown parameter(s): {', '.join(unknown)}"
        )
    if set(option.assignment) != declared:
        return False
    return all(c.satisfied_by(option.assignment) for c in model.constraints)


@dataclass(frozen=True)
class AdaptationAction:
    """Executable change plan realizing one adaptation option."""

    option_id: str
    steps: tuple[tuple[str, float], ...]
    post_steps: tuple[str, ...] = ()

    _POST_STEPS = ("update-case-constraints", "attach-assessment-evidence", "reset-spi")

    def __post_init__(self) -> None:
        for step in self.post_steps:
            if step not in self._POST_STEPS:
                raise ValidationError(f"unknown post step {step!r}")

    @classmethod
    def from_option(
        cls, option: AdaptationOption, post_steps: Iterable[str] = ()
    ) -> "AdaptationAction":
        steps = tuple(sorted(option.assignment.items()))
        return cls(option_id=option.id, steps=steps, post_steps=tuple(post_steps))

    def resulting_assignment(self) -> dict[str, float]:
        out: dict[str, float] = {}
        for name, value in self.steps:
            out[name] = value
        return out


@dataclass(frozen=True)
class EnvironmentSample:
    """One observation of the environment and the plant's response."""

    time: float
    inflow_temp: float
    inflow_rate: float
    setpoint: float
    outflow_temp: float

    def __post_init__(self) -> None:
        if self.time < 0:
            raise ValidationError(f"sample time must be non-negative, got {self.time}")
        if self.inflow_rate < 0:
            raise ValidationError(f"inflow rate must be >= 0, got {self.inflow_rate}")

    def domain_values(self) -> dict[str, float]:
        return {"inflow_temp": self.inflow_temp, "inflow_rate": self.inflow_rate}

    def to_dict(self) -> dict[str, float]:
        return {
            "time": self.time,
            "inflow_temp": self.inflow_temp,
            "inflow_rate": self.inflow_rate,
            "setpoint": self.setpoint,
            "outflow_temp": self.outflow_temp,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "EnvironmentSample":
        return cls(**{k: float(data[k]) for k in (
            "time", "inflow_temp", "inflow_rate", "setpoint", "outflow_temp")})


@dataclass
class KnowledgeRepository:
    """Shared state maintained by the managing system.

    Single-writer contract: only the simulation loop's owner mutates it.
    """

    current_config: SystemConfiguration
    safety_case: "SafetyCase"
    models: list["AdaptationModel"] = field(default_factory=list)
    sample_history: deque = field(default_factory=lambda: deque(maxlen=36000))
    spi_windows: list["SpiWindow"] = field(default_factory=list)
    active_option_id: str = ""
    #: Active network controller spec when controller_kind is parametric-net.
    active_net: Optional["NetControllerSpec"] = None
    baseline_option_id: str = ""
    baseline_config: Optional[SystemConfiguration] = None
    baseline_net: Optional["NetControllerSpec"] = None

    def __post_init__(self) -> None:
        if self.sample_history.maxlen is None or self.sample_history.maxlen < 1:
            raise ValidationError("sample history must be a bounded ring")

    def model_by_id(self, model_id: str) -> Optional["AdaptationModel"]:
        for model in self.models:
            if model.id == model_id:
                return model
        return None

    def find_option(self, option_id: str):
        """Return (model, option) for an option id, or (None, None)."""
        for model in self.models:
            option = model.option_by_id(option_id)
            if option is not None:
                return model, option
        return None, None

    def latest_sample(self) -> Optional[EnvironmentSample]:
        return self.sample_history[-1] if self.sample_history else None


def history_capacity(tick: float, horizon: float = 3600.0) -> int:
    """Ring capacity covering at least ``horizon`` seconds at ``tick`` rate."""
    return max(1, int(round(horizon / tick)))
