"""The managing system: analyzer, per-type planners, executor, fail-safe.

The planner policies realize the taxonomy's behavioural obligations:
Type I only ever selects design-time options, Type II admits options by
statistical analysis under monotonically tightening domain constraints,
Type III assesses run-time generated candidates in embedded simulations
and refuses any candidate that fails.
"""
from __future__ import annotations

import hashlib
import json
import math
import random
import statistics
from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping, Optional, Sequence

from . import taxonomy
from .assurance import (
    AttachEvidence,
    DEFAULT_RUNTIME_FRESHNESS,
    EvidenceItem,
    ReplaceConstraintContext,
    StaticNodeError,
    adapt_case,
    constraint_context_id,
    current_constraints,
    nodes_discharging,
)
from .controller import NetControllerSpec, net_compute, zero_spec
from .model import (
    AdaptationModel,
    AdaptationOption,
    EnvironmentSample,
    KnowledgeRepository,
    OperationalDomain,
    ValidationError,
    domain_subset,
)
from .plant import PlantParams, PlantState, hazard_update, plant_step
from .scenario import Scenario
from .spi import spi_reset


@dataclass(frozen=True)
class AdaptationGoal:
    rise_time_limit: float = 60.0  # s
    settle_band: float = 1.0  # degC

    def __post_init__(self) -> None:
        if self.rise_time_limit <= 0 or self.settle_band <= 0:
            raise ValidationError("goal limits must be positive")

    def to_dict(self) -> dict[str, float]:
        return {"rise_time_limit": self.rise_time_limit, "settle_band": self.settle_band}

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "AdaptationGoal":
        return cls(**{k: float(v) for k, v in data.items()})


class GoalTracker:
    """Incremental rise-time tracking over a sample stream.

    Opens an event on every setpoint increase; records the first time the
    outflow enters the settle band, and flags a violation either when the
    entry is late or when the limit elapses without entry.
    """

    def __init__(self, goal: AdaptationGoal):
        self.goal = goal
        self.events: list[dict[str, Any]] = []
        self._prev_setpoint: Optional[float] = None
        self._open: Optional[dict[str, Any]] = None
        self._violations_seen = 0
        self._violations_taken = 0

    def observe(self, t: float, setpoint: float, outflow: float) -> None:
        if self._prev_setpoint is not None and setpoint > self._prev_setpoint + 1e-12:
            self._open = {
                "event_time": t,
                "setpoint": setpoint,
                "rise_time": None,
                "violation": False,
            }
            self.events.append(self._open)
        elif self._open is not None and setpoint != self._open["setpoint"]:
            self._open = None  # setpoint moved again without an increase
        self._prev_setpoint = setpoint

        event = self._open
        if event is None:
            return
        elapsed = t - event["event_time"]
        if abs(outflow - event["setpoint"]) <= self.goal.settle_band:
            event["rise_time"] = elapsed
            if elapsed > self.goal.rise_time_limit and not event["violation"]:
                event["violation"] = True
                self._violations_seen += 1
            self._open = None
        elif elapsed > self.goal.rise_time_limit and not event["violation"]:
            event["violation"] = True
            self._violations_seen += 1

    def take_violation(self) -> bool:
        """True once per newly observed violation (planner trigger edge)."""
        if self._violations_seen > self._violations_taken:
            self._violations_taken = self._violations_seen
            return True
        return False

    @property
    def any_violation(self) -> bool:
        return self._violations_seen > 0


def analyze_goal(
    history: Iterable[EnvironmentSample], goal: AdaptationGoal
) -> dict[str, Any]:
    """Rise-time verdict for the most recent setpoint increase in a stream."""
    tracker = GoalTracker(goal)
    for sample in history:
        tracker.observe(sample.time, sample.setpoint, sample.outflow_temp)
    if not tracker.events:
        return {"violation": False, "rise_time": None}
    last = tracker.events[-1]
    return {"violation": last["violation"], "rise_time": last["rise_time"]}


# --- decisions --------------------------------------------------------------

@dataclass
class AdaptationDecision:
    trigger: str  # "goal-violation" | "spi-breach" | "manual"
    chosen_option: Optional[str]
    applied: bool
    reason: str
    time: float = 0.0
    model_id: str = ""
    assessment_evidence: list[str] = field(default_factory=list)
    evidence_items: list[EvidenceItem] = field(default_factory=list)
    candidate_net: Optional[NetControllerSpec] = None
    admission: Optional["AdmissionReport"] = None

    def to_dict(self) -> dict[str, Any]:
        out = {
            "time": self.time,
            "trigger": self.trigger,
            "model_id": self.model_id,
            "chosen_option": self.chosen_option,
            "applied": self.applied,
            "reason": self.reason,
            "assessment_evidence": list(self.assessment_evidence),
        }
        if self.admission is not None:
            out["admission"] = self.admission.to_dict()
        return out


@dataclass(frozen=True)
class AdaptationTrigger:
    kind: str  # "goal-violation" | "spi-breach" | "manual"
    requested_option_id: Optional[str] = None
    time: float = 0.0


def _rank(option: AdaptationOption) -> tuple[float, str]:
    rise = option.design_rise_time
    return (math.inf if rise is None else rise, option.id)


def _single_model(models: Sequence[AdaptationModel], type_id: str) -> AdaptationModel:
    for model in models:
        if taxonomy.classify(model.descriptor) == type_id:
            return model
    raise ValidationError(f"no model classified {type_id}")


def plan_type1(
    models: Sequence[AdaptationModel],
    trigger: AdaptationTrigger,
    active_option_id: str = "",
    now: float = 0.0,
) -> AdaptationDecision:
    """Type I policy: select strictly from the design-time option set.

    A requested option outside the enumerated set is refused (never
    synthesized); otherwise the eligible option with the smallest
    design-time rise time is chosen, ties broken by lowest id.
    """
    model = _single_model(models, "TI")
    options = list(model.options or ())
    by_id = {o.id: o for o in options}

    if trigger.requested_option_id is not None:
        requested = by_id.get(trigger.requested_option_id)
        if requested is None:
            return AdaptationDecision(
                trigger=trigger.kind,
                chosen_option=None,
                applied=False,
                reason=(
                    f"refused: option {trigger.requested_option_id!r} is not "
                    "among the design-time options (TI.B1)"
                ),
                time=now,
                model_id=model.id,
            )
        return AdaptationDecision(
            trigger=trigger.kind,
            chosen_option=requested.id,
            applied=True,
            reason="requested design-time option",
            time=now,
            model_id=model.id,
        )

    active = by_id.get(active_option_id)
    candidates = [o for o in options if o.id != active_option_id]
    if active is not None:
        candidates = [c for c in candidates if _rank(c) < _rank(active)]
    if not candidates:
        return AdaptationDecision(
            trigger=trigger.kind,
            chosen_option=None,
            applied=False,
            reason="no better design-time option available",
            time=now,
            model_id=model.id,
        )
    best = min(candidates, key=_rank)
    return AdaptationDecision(
        trigger=trigger.kind,
        chosen_option=best.id,
        applied=True,
        reason=f"best design-time rise time {best.design_rise_time}",
        time=now,
        model_id=model.id,
    )


# --- Type II admission ------------------------------------------------------

@dataclass(frozen=True)
class AdmissionPolicy:
    window: float = 300.0  # s
    min_samples: int = 300
    confidence_z: float = 2.326  # one-sided 99%

    def __post_init__(self) -> None:
        if self.min_samples < 2:
            raise ValidationError("min_samples must be >= 2")
        if self.confidence_z <= 0:
            raise ValidationError("confidence_z must be positive")

    def to_dict(self) -> dict[str, Any]:
        return {
            "window": self.window,
            "min_samples": self.min_samples,
            "confidence_z": self.confidence_z,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "AdmissionPolicy":
        return cls(
            window=float(data.get("window", 300.0)),
            min_samples=int(data.get("min_samples", 300)),
            confidence_z=float(data.get("confidence_z", 2.326)),
        )


@dataclass
class AdmissionReport:
    status: str  # "admit" | "reject" | "not-ready"
    variables: dict[str, dict[str, float]] = field(default_factory=dict)
    n: int = 0
    window_start: float = 0.0
    window_end: float = 0.0

    @property
    def admit(self) -> bool:
        return self.status == "admit"

    def to_dict(self) -> dict[str, Any]:
        return {
            "status": self.status,
            "n": self.n,
            "window_start": self.window_start,
            "window_end": self.window_end,
            "variables": {k: dict(v) for k, v in self.variables.items()},
        }


def admission_test(
    samples: Sequence[EnvironmentSample],
    option_domain: OperationalDomain,
    policy: AdmissionPolicy,
) -> AdmissionReport:
    """Statistical admission of an option's operational domain.

    For each bounded variable the one-sided confidence bound
    (mean +/- z s / sqrt(n)) and the sample extremum must both respect
    the bound. Insufficient data yields not-ready, never a reject.
    """
    samples = list(samples)
    if not samples:
        return AdmissionReport(status="not-ready")
    latest = samples[-1].time
    windowed = [s for s in samples if s.time >= latest - policy.window]
    span = samples[-1].time - samples[0].time
    if len(windowed) < policy.min_samples or span < policy.window:
        return AdmissionReport(
            status="not-ready",
            n=len(windowed),
            window_start=windowed[0].time,
            window_end=latest,
        )

    n = len(windowed)
    root_n = math.sqrt(n)
    all_ok = True
    variables: dict[str, dict[str, float]] = {}
    for name, (low, high) in sorted(option_domain.normalized().bounds.items()):
        values = [s.domain_values()[name] for s in windowed]
        mean = statistics.fmean(values)
        stdev = statistics.stdev(values) if n > 1 else 0.0
        margin = policy.confidence_z * stdev / root_n
        stats: dict[str, float] = {
            "mean": mean,
            "stdev": stdev,
            "min": min(values),
            "max": max(values),
        }
        ok = True
        if math.isfinite(high):
            stats["upper_cb"] = mean + margin
            stats["bound_high"] = high
            ok = ok and mean + margin <= high and stats["max"] <= high
        if math.isfinite(low):
            stats["lower_cb"] = mean - margin
            stats["bound_low"] = low
            ok = ok and mean - margin >= low and stats["min"] >= low
        stats["ok"] = float(ok)
        variables[name] = stats
        all_ok = all_ok and ok

    return AdmissionReport(
        status="admit" if all_ok else "reject",
        variables=variables,
        n=n,
        window_start=windowed[0].time,
        window_end=latest,
    )


def plan_type2(
    models: Sequence[AdaptationModel],
    samples: Sequence[EnvironmentSample],
    policy: AdmissionPolicy,
    case,
    active_option_id: str = "",
    now: float = 0.0,
    trigger: Optional[AdaptationTrigger] = None,
) -> AdaptationDecision:
    """Type II policy: statistical admission under monotone constraints.

    An option is admitted only if the admission test passes on the
    sample window and the option's domain is a subset of the case's
    current constraints (TII.C5). The admission statistics are recorded
    as runtime evidence on the decision.
    """
    model = _single_model(models, "TII")
    options = list(model.options or ())
    by_id = {o.id: o for o in options}
    kind = trigger.kind if trigger is not None else "goal-violation"
    constraints = current_constraints(case)

    def build(option: AdaptationOption, report: AdmissionReport) -> AdaptationDecision:
        item = EvidenceItem(
            id=f"adm-{option.id}-r{int(round(now * 10))}",
            kind="runtime-observation",
            verdict="pass",
            produced_at=now,
            freshness=DEFAULT_RUNTIME_FRESHNESS,
            payload_ref=json.dumps(report.to_dict(), sort_keys=True),
        )
        return AdaptationDecision(
            trigger=kind,
            chosen_option=option.id,
            applied=True,
            reason=f"admission passed on {report.n} samples",
            time=now,
            model_id=model.id,
            assessment_evidence=[item.id],
            evidence_items=[item],
            admission=report,
        )

    if trigger is not None and trigger.requested_option_id is not None:
        requested = by_id.get(trigger.requested_option_id)
        if requested is None:
            return AdaptationDecision(
                trigger=kind, chosen_option=None, applied=False,
                reason=(
                    f"refused: option {trigger.requested_option_id!r} is not "
                    "among the design-time options (TII.B1)"
                ),
                time=now, model_id=model.id,
            )
        if requested.domain is None or not domain_subset(requested.domain, constraints):
            return AdaptationDecision(
                trigger=kind, chosen_option=None, applied=False,
                reason=(
                    f"refused: option {requested.id!r} would relax the current "
                    "operational constraints (TII.C5)"
                ),
                time=now, model_id=model.id,
            )
        report = admission_test(samples, requested.domain, policy)
        if report.admit:
            return build(requested, report)
        return AdaptationDecision(
            trigger=kind, chosen_option=None, applied=False,
            reason=f"admission {report.status} for requested option {requested.id!r}",
            time=now, model_id=model.id, admission=report,
        )

    active = by_id.get(active_option_id)
    candidates = sorted((o for o in options if o.id != active_option_id), key=_rank)
    if active is not None:
        candidates = [c for c in candidates if _rank(c) < _rank(active)]
    last_report: Optional[AdmissionReport] = None
    for candidate in candidates:
        if candidate.domain is None or not domain_subset(candidate.domain, constraints):
            continue
        report = admission_test(samples, candidate.domain, policy)
        if report.admit:
            return build(candidate, report)
        last_report = report
        if report.status == "not-ready":
            break
    reason = "no admissible option"
    if last_report is not None:
        reason = f"admission {last_report.status}"
    return AdaptationDecision(
        trigger=kind, chosen_option=None, applied=False, reason=reason,
        time=now, model_id=model.id, admission=last_report,
    )


# --- Type III candidates ----------------------------------------------------

WEIGHT_NOISE_SCALE = 0.1
WEIGHT_BRANCH_PROBABILITY = 0.9
MAX_LAYER_SIZE = 16
MAX_LAYER_COUNT = 2


def propose_candidate(current: NetControllerSpec, seed: int) -> NetControllerSpec:
    """Seeded perturbation of the active network controller.

    With probability 0.9 the weights receive additive Gaussian noise
    (scale 0.1); otherwise exactly one hyperparameter mutates (a layer
    size by +/-1 within [1, 16], or the layer count within [1, 2]) and
    the weights are re-initialized to zero.
    """
    rng = random.Random(seed)
    if rng.random() < WEIGHT_BRANCH_PROBABILITY:
        weights = tuple(w + rng.gauss(0.0, WEIGHT_NOISE_SCALE) for w in current.weights)
        return NetControllerSpec(current.layer_sizes, weights, current.activation)

    sizes = list(current.layer_sizes)
    moves: list[tuple[str, int]] = []
    for index, size in enumerate(sizes):
        if size + 1 <= MAX_LAYER_SIZE:
            moves.append(("grow", index))
        if size - 1 >= 1:
            moves.append(("shrink", index))
    if len(sizes) + 1 <= MAX_LAYER_COUNT:
        moves.append(("add-layer", len(sizes)))
    if len(sizes) - 1 >= 1:
        moves.append(("drop-layer", len(sizes) - 1))
    kind, index = rng.choice(moves)
    if kind == "grow":
        sizes[index] += 1
    elif kind == "shrink":
        sizes[index] -= 1
    elif kind == "add-layer":
        sizes.insert(index, 1)
    else:
        sizes.pop(index)
    return zero_spec(sizes)


def spec_hash(spec: NetControllerSpec) -> str:
    payload = json.dumps(spec.to_dict(), sort_keys=True).encode()
    return hashlib.sha256(payload).hexdigest()


@dataclass(frozen=True)
class AssessmentSuite:
    """Embedded simulation scenarios probing a candidate controller."""

    scenarios: tuple[Scenario, ...]
    plant: PlantParams
    goal: AdaptationGoal

    def __post_init__(self) -> None:
        if not self.scenarios:
            raise ValidationError("assessment suite must not be empty")


def _run_assessment_scenario(
    candidate: NetControllerSpec,
    scenario: Scenario,
    plant: PlantParams,
    goal: AdaptationGoal,
) -> dict[str, Any]:
    """One embedded simulation: candidate controller, guard disabled."""
    tick = scenario.tick
    state = PlantState(tank_temp=scenario.initial_tank_temp)
    tracker = GoalTracker(goal)
    prev_temp = state.tank_temp
    for k in range(scenario.ticks()):
        t = k * tick
        setpoint = scenario.setpoint_at(t)
        inflow_temp = scenario.inflow_temp_trace.value_at(t)
        inflow_rate = scenario.inflow_rate_trace.value_at(t)
        temp_rate = (state.tank_temp - prev_temp) / tick
        power = net_compute(
            candidate,
            (setpoint, state.tank_temp, inflow_temp, inflow_rate, temp_rate),
            plant.max_power,
        )
        if not math.isfinite(power):
            return {"scenario": scenario.id, "ok": False, "fault": "non-finite output"}
        power = min(max(power, 0.0), plant.max_power)
        env = EnvironmentSample(t, inflow_temp, inflow_rate, setpoint, state.tank_temp)
        prev_temp = state.tank_temp
        state = plant_step(state, plant, env, power)
        state = hazard_update(state, plant)
        tracker.observe(t + tick, setpoint, state.tank_temp)
    ok = state.hazard_count == 0 and not tracker.any_violation
    return {
        "scenario": scenario.id,
        "ok": ok,
        "hazard_count": state.hazard_count,
        "rise_violation": tracker.any_violation,
    }


def assess_candidate(
    candidate: NetControllerSpec,
    suite: AssessmentSuite,
    now: float = 0.0,
) -> dict[str, Any]:
    """Decide whether a candidate controller is safe to apply.

    Pass requires zero hazards and the rise-time goal met in every
    suite scenario; non-finite controller output fails immediately.
    """
    results = [
        _run_assessment_scenario(candidate, scenario, suite.plant, suite.goal)
        for scenario in suite.scenarios
    ]
    verdict = "pass" if all(r["ok"] for r in results) else "fail"
    evidence = EvidenceItem(
        id=f"assess-{spec_hash(candidate)[:12]}-r{int(round(now * 10))}",
        kind="runtime-assessment",
        verdict=verdict,
        produced_at=now,
        freshness=DEFAULT_RUNTIME_FRESHNESS,
        payload_ref=spec_hash(candidate),
    )
    return {"verdict": verdict, "evidence": evidence, "results": results}


def plan_type3(
    models: Sequence[AdaptationModel],
    current: NetControllerSpec,
    suite: AssessmentSuite,
    seed: int,
    now: float = 0.0,
    trigger_kind: str = "goal-violation",
) -> AdaptationDecision:
    """Type III policy: propose, assess, and only apply on a pass verdict."""
    model = _single_model(models, "TIII")
    candidate = propose_candidate(current, seed)
    outcome = assess_candidate(candidate, suite, now)
    evidence: EvidenceItem = outcome["evidence"]
    candidate_id = f"candidate-{spec_hash(candidate)[:12]}"
    if outcome["verdict"] != "pass":
        return AdaptationDecision(
            trigger=trigger_kind,
            chosen_option=None,
            applied=False,
            reason=f"candidate {candidate_id} failed assessment (TIII.B4)",
            time=now,
            model_id=model.id,
            assessment_evidence=[evidence.id],
            evidence_items=[evidence],
        )
    return AdaptationDecision(
        trigger=trigger_kind,
        chosen_option=candidate_id,
        applied=True,
        reason="candidate passed assessment suite",
        time=now,
        model_id=model.id,
        assessment_evidence=[evidence.id],
        evidence_items=[evidence],
        candidate_net=candidate,
    )


# --- executor ---------------------------------------------------------------

def _solution_discharging(case, obligation: str):
    for node in nodes_discharging(case, obligation):
        if node.kind == "solution":
            return node
    return None


def execute_adaptation(
    decision: AdaptationDecision,
    repo: KnowledgeRepository,
    now: float = 0.0,
) -> KnowledgeRepository:
    """Apply a planned adaptation atomically between ticks.

    Case patches are attempted first; if any patch is rejected (static
    target) the whole adaptation rolls back, leaving configuration and
    case untouched and marking the decision unapplied.
    """
    if not decision.applied:
        return repo
    model = repo.model_by_id(decision.model_id)
    if model is None:
        raise ValidationError(f"unknown model {decision.model_id!r}")
    type_id = taxonomy.classify(model.descriptor)

    patches = []
    if type_id == "TII":
        option = model.option_by_id(decision.chosen_option or "")
        if option is None:
            raise ValidationError(f"unknown option {decision.chosen_option!r}")
        context_id = constraint_context_id(repo.safety_case)
        if context_id is not None and option.domain is not None:
            patches.append(ReplaceConstraintContext(context_id, option.domain))
        target = _solution_discharging(repo.safety_case, "TII.B4")
        if target is not None:
            patches.extend(AttachEvidence(target.id, item) for item in decision.evidence_items)
    elif type_id == "TIII":
        target = _solution_discharging(repo.safety_case, "TIII.B6")
        if target is not None:
            patches.extend(AttachEvidence(target.id, item) for item in decision.evidence_items)

    if patches:
        try:
            new_case = adapt_case(
                repo.safety_case, patches, now=now,
                cause=f"apply {decision.chosen_option}",
            )
        except StaticNodeError as exc:
            decision.applied = False
            decision.reason += f"; rolled back: {exc}"
            return repo
        repo.safety_case = new_case

    if type_id == "TIII":
        repo.active_net = decision.candidate_net
        repo.active_option_id = decision.chosen_option or ""
        for window in repo.spi_windows:
            spi_reset(window)
    else:
        option = model.option_by_id(decision.chosen_option or "")
        if option is None:
            raise ValidationError(f"unknown option {decision.chosen_option!r}")
        repo.current_config = repo.current_config.with_assignment(option.assignment)
        repo.active_option_id = option.id
    return repo


def fail_safe(repo: KnowledgeRepository, now: float = 0.0) -> KnowledgeRepository:
    """Revert to the designated baseline configuration after an SPI breach."""
    if repo.baseline_config is not None:
        repo.current_config = repo.baseline_config
    repo.active_net = repo.baseline_net
    repo.active_option_id = repo.baseline_option_id
    for window in repo.spi_windows:
        spi_reset(window)
    target = _solution_discharging(repo.safety_case, "TIII.B7")
    if target is not None and repo.safety_case.node(target.id).lifecycle == "dynamic":
        item = EvidenceItem(
            id=f"failsafe-r{int(round(now * 10))}",
            kind="runtime-observation",
            verdict="pass",
            produced_at=now,
            freshness=DEFAULT_RUNTIME_FRESHNESS,
            payload_ref="fail-safe engaged after SPI breach",
        )
        repo.safety_case = adapt_case(
            repo.safety_case, [AttachEvidence(target.id, item)],
            now=now, cause="fail-safe",
        )
    return repo
