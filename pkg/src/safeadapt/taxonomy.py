"""Executable adaptation taxonomy: classification, obligations, discharge checks.

Each adaptation model carries a descriptor of structural facts; the
classifier maps descriptors to Type 0/I/II/III, each type to its safety
case obligation set, and ``check_obligations`` verifies that a safety
case actually discharges those obligations.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, Any, Mapping

from .model import ValidationError

if TYPE_CHECKING:
    from .assurance import SafetyCase
    from .model import KnowledgeRepository

TYPES = ("T0", "TI", "TII", "TIII")

DESIGN_TIME_SAFETY = ("none", "unconditional", "domain-conditional")

#: Obligation identifiers per type.
OBLIGATIONS = {
    "T0": ("T0.B1", "T0.B2"),
    "TI": ("TI.B1", "TI.B2", "TI.B3", "TI.B4"),
    "TII": ("TII.B1", "TII.B2", "TII.B3", "TII.B4", "TII.B5"),
    "TIII": (
        "TIII.B1", "TIII.B2", "TIII.B3", "TIII.B4", "TIII.B5",
        "TIII.B6", "TIII.B7",
    ),
}

#: Obligations that must be argued on dynamic safety case nodes; all
#: others must sit on static nodes.
DYNAMIC_OBLIGATIONS = frozenset({"TII.B4", "TII.B5", "TIII.B6", "TIII.B7"})


class ClassificationError(ValueError):
    """No type's criteria are fully met by a descriptor."""

    def __init__(self, nearest_type: str, unmet_criterion: str):
        self.nearest_type = nearest_type
        self.unmet_criterion = unmet_criterion
        super().__init__(
            f"no type matched; nearest {nearest_type}, first unmet {unmet_criterion}"
        )


class LifecycleMismatchError(ValueError):
    """An obligation is carried by a node of the wrong lifecycle."""

    def __init__(self, obligation: str, node_id: str, lifecycle: str):
        self.obligation = obligation
        self.node_id = node_id
        super().__init__(
            f"obligation {obligation} requires a "
            f"{'dynamic' if obligation in DYNAMIC_OBLIGATIONS else 'static'} node "
            f"but {node_id!r} is {lifecycle}"
        )


@dataclass(frozen=True)
class AdaptationDescriptor:
    """Structural facts about one adaptation model used for classification."""

    affects_safety_critical: bool
    independence_argued: bool = False
    options_enumerated_at_design_time: bool = False
    design_time_safety: str = "none"
    domain_constraints_declared: bool = False
    runtime_assessment_declared: bool = False
    case_in_knowledge_repo: bool = False

    def __post_init__(self) -> None:
        if self.design_time_safety not in DESIGN_TIME_SAFETY:
            raise ValidationError(
                f"unknown design-time safety level {self.design_time_safety!r}"
            )
        if self.design_time_safety != "none" and not self.options_enumerated_at_design_time:
            raise ValidationError(
                "design-time safety requires options enumerated at design time"
            )

    def to_dict(self) -> dict[str, Any]:
        return {
            "affects_safety_critical": self.affects_safety_critical,
            "independence_argued": self.independence_argued,
            "options_enumerated_at_design_time": self.options_enumerated_at_design_time,
            "design_time_safety": self.design_time_safety,
            "domain_constraints_declared": self.domain_constraints_declared,
            "runtime_assessment_declared": self.runtime_assessment_declared,
            "case_in_knowledge_repo": self.case_in_knowledge_repo,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "AdaptationDescriptor":
        return cls(**{k: data[k] for k in (
            "affects_safety_critical",
            "independence_argued",
            "options_enumerated_at_design_time",
            "design_time_safety",
            "domain_constraints_declared",
            "runtime_assessment_declared",
            "case_in_knowledge_repo",
        ) if k in data})


@dataclass
class TaxonomyVerdict:
    """Classification result plus per-obligation discharge status."""

    model_id: str
    type: str
    matched_criteria: list[str]
    required_obligations: list[str]
    discharge: dict[str, str]

    def all_discharged(self) -> bool:
        return all(v == "discharged" for v in self.discharge.values())

    def to_dict(self) -> dict[str, Any]:
        return {
            "model_id": self.model_id,
            "type": self.type,
            "matched_criteria": list(self.matched_criteria),
            "required_obligations": list(self.required_obligations),
            "discharge": dict(self.discharge),
        }


def _criteria(descriptor: AdaptationDescriptor) -> dict[str, list[tuple[str, bool]]]:
    """Structural criteria checks per type, in criterion order.

    Behavioral criteria (e.g. run-time monotonicity of Type II domain
    constraints) cannot be decided from a descriptor; they are enforced
    by the planner and reported by the run harness.
    """
    d = descriptor
    return {
        "T0": [("T0.C1", not d.affects_safety_critical)],
        "TI": [
            ("TI.C1", d.affects_safety_critical),
            ("TI.C2", d.options_enumerated_at_design_time),
            ("TI.C3", d.design_time_safety == "unconditional"),
        ],
        "TII": [
            ("TII.C1", d.affects_safety_critical),
            ("TII.C2", d.options_enumerated_at_design_time),
            ("TII.C3", d.design_time_safety == "domain-conditional"),
            ("TII.C4", d.domain_constraints_declared),
        ],
        "TIII": [
            ("TIII.C1", d.affects_safety_critical),
            ("TIII.C2", not d.options_enumerated_at_design_time),
            ("TIII.C3", d.runtime_assessment_declared),
            ("TIII.C4", d.case_in_knowledge_repo),
        ],
    }


def classify(descriptor: AdaptationDescriptor) -> str:
    """Classify a descriptor into exactly one type.

    Raises ClassificationError, carrying the nearest type and its first
    unmet criterion, when no type's criteria are all satisfied.
    """
    table = _criteria(descriptor)
    best_type = ""
    best_matched = -1
    best_unmet = ""
    for type_id in TYPES:
        checks = table[type_id]
        matched = sum(1 for _, ok in checks if ok)
        if matched == len(checks):
            return type_id
        if matched > best_matched:
            best_matched = matched
            best_type = type_id
            best_unmet = next(cid for cid, ok in checks if not ok)
    raise ClassificationError(best_type, best_unmet)


def matched_criteria(descriptor: AdaptationDescriptor, type_id: str) -> list[str]:
    return [cid for cid, ok in _criteria(descriptor)[type_id] if ok]


def obligations_for(type_id: str) -> list[str]:
    """The exact obligation set imposed on the safety case for a type."""
    if type_id not in OBLIGATIONS:
        raise ValidationError(f"unknown type {type_id!r}")
    return list(OBLIGATIONS[type_id])


def check_obligations(
    verdict_type: str,
    case: "SafetyCase",
    now: float,
    knowledge: "KnowledgeRepository" = None,
) -> dict[str, str]:
    """Map each obligation of a type to its discharge status.

    An obligation is ``discharged`` when at least one supported node of
    the correct lifecycle carries it, ``missing`` when no node carries
    it, and ``unsupported-node`` when only unsupported nodes carry it.
    """
    from .assurance import support_map

    support = support_map(case, now, knowledge)
    result: dict[str, str] = {}
    for obligation in obligations_for(verdict_type):
        required = "dynamic" if obligation in DYNAMIC_OBLIGATIONS else "static"
        carriers = [n for n in case.nodes.values() if obligation in n.discharges]
        for node in carriers:
            if node.lifecycle != required:
                raise LifecycleMismatchError(obligation, node.id, node.lifecycle)
        if not carriers:
            result[obligation] = "missing"
        elif any(support[n.id] for n in carriers):
            result[obligation] = "discharged"
        else:
            result[obligation] = "unsupported-node"
    return result


def verdict_for(
    model,
    case: "SafetyCase",
    now: float,
    knowledge: "KnowledgeRepository" = None,
) -> TaxonomyVerdict:
    """Classify a model and check its obligations in one pass."""
    type_id = classify(model.descriptor)
    return TaxonomyVerdict(
        model_id=model.id,
        type=type_id,
        matched_criteria=matched_criteria(model.descriptor, type_id),
        required_obligations=obligations_for(type_id),
        discharge=check_obligations(type_id, case, now, knowledge),
    )
