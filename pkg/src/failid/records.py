"""Unified failure records shared by the potential and actual analysis paths.

Both the failure-network analysis and the complaint pipeline emit
:class:`FailureRecord` values with the same category schema: a general
description, a cause, an impact, a consequence, a failure type and a risk.
That shared schema is what makes the two sides comparable.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Mapping

from .errors import InputFormatError
from .knowledge_base import ElementKind


class FailureType(str, Enum):
    LOSS_OF_FUNCTION = "LossOfFunction"
    DEGRADED_FUNCTION = "DegradedFunction"
    INTERMITTENT_FUNCTION = "IntermittentFunction"
    UNINTENDED_FUNCTION = "UnintendedFunction"


class ConsequenceClass(str, Enum):
    TECHNICAL_PRODUCT = "TechnicalProduct"
    HUMAN = "Human"
    STAKEHOLDER = "Stakeholder"

    @property
    def label(self) -> str:
        return {"TechnicalProduct": "technical product", "Human": "human", "Stakeholder": "stakeholder"}[self.value]


class Provenance(str, Enum):
    POTENTIAL = "Potential"
    ACTUAL = "Actual"


# Element kind -> category label used in cause/impact fields.
CATEGORY_OF_KIND: dict[ElementKind, str] = {
    ElementKind.FUNCTION: "function",
    ElementKind.COMPONENT: "component",
    ElementKind.REQUIREMENT: "requirement",
    ElementKind.PROCESS: "process",
    ElementKind.ENVIRONMENTAL_FACTOR: "environment",
    ElementKind.EVENT: "event",
    ElementKind.EFFECT: "effect",
}
CAUSE_CATEGORIES = frozenset({"function", "component", "requirement", "process", "environment", "event"})
IMPACT_CATEGORIES = CAUSE_CATEGORIES | {"effect"}
CAUSE_KINDS = frozenset(k for k, c in CATEGORY_OF_KIND.items() if c in CAUSE_CATEGORIES)
IMPACT_KINDS = frozenset(CATEGORY_OF_KIND)


@dataclass(frozen=True)
class CategoryRef:
    kind: str
    element_id: str | None = None

    def to_dict(self) -> dict[str, Any]:
        return {"kind": self.kind, "element": self.element_id}

    @classmethod
    def from_dict(cls, raw: Mapping[str, Any]) -> CategoryRef:
        return cls(str(raw["kind"]), raw.get("element"))


@dataclass(frozen=True)
class ConsequenceRef:
    cls: ConsequenceClass
    element_id: str | None = None

    def to_dict(self) -> dict[str, Any]:
        return {"class": self.cls.value, "element": self.element_id}

    @classmethod
    def from_dict(cls, raw: Mapping[str, Any]) -> ConsequenceRef:
        return cls(ConsequenceClass(raw["class"]), raw.get("element"))


@dataclass(frozen=True)
class RiskScore:
    severity: int
    occurrence: int
    detection: int

    def __post_init__(self) -> None:
        for name in ("severity", "occurrence", "detection"):
            value = getattr(self, name)
            if not isinstance(value, int) or not 1 <= value <= 10:
                raise ValueError(f"{name} must be an integer in 1..10, got {value!r}")

    @property
    def rpn(self) -> int:
        return self.severity * self.occurrence * self.detection

    def to_dict(self) -> dict[str, int]:
        return {"severity": self.severity, "occurrence": self.occurrence, "detection": self.detection, "rpn": self.rpn}

    @classmethod
    def from_dict(cls, raw: Mapping[str, Any]) -> RiskScore:
        risk = cls(int(raw["severity"]), int(raw["occurrence"]), int(raw["detection"]))
        if "rpn" in raw and int(raw["rpn"]) != risk.rpn:
            raise InputFormatError(f"rpn {raw['rpn']} does not equal severity*occurrence*detection")
        return risk


@dataclass(frozen=True)
class FailureRecord:
    """One formalized failure, either predicted (Potential) or observed (Actual).

    ``source_id`` is the originating scenario for potential records and the
    complaint id for actual ones. ``placeholder`` marks an actual record that
    could not be mapped onto any known element; ``residual_terms`` keeps the
    complaint tokens no alias explained, for the improvement loop.
    """

    id: str
    general_description: str
    cause_category: CategoryRef
    impact_category: CategoryRef
    consequence_category: ConsequenceRef
    failure_type: FailureType
    risk: RiskScore
    provenance: Provenance
    source_id: str
    effects: tuple[str, ...] = ()
    placeholder: bool = False
    residual_terms: tuple[str, ...] = field(default=())

    def problems(self) -> list[str]:
        out = []
        if self.cause_category.kind not in CAUSE_CATEGORIES:
            out.append(f"cause kind {self.cause_category.kind!r} not allowed")
        if self.impact_category.kind not in IMPACT_CATEGORIES:
            out.append(f"impact kind {self.impact_category.kind!r} not allowed")
        return out

    def to_dict(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "general_description": self.general_description,
            "cause_category": self.cause_category.to_dict(),
            "impact_category": self.impact_category.to_dict(),
            "consequence_category": self.consequence_category.to_dict(),
            "failure_type": self.failure_type.value,
            "risk": self.risk.to_dict(),
            "provenance": self.provenance.value,
            "source_id": self.source_id,
            "effects": list(self.effects),
            "placeholder": self.placeholder,
            "residual_terms": list(self.residual_terms),
        }

    @classmethod
    def from_dict(cls, raw: Mapping[str, Any]) -> FailureRecord:
        try:
            record = cls(
                id=str(raw["id"]),
                general_description=str(raw["general_description"]),
                cause_category=CategoryRef.from_dict(raw["cause_category"]),
                impact_category=CategoryRef.from_dict(raw["impact_category"]),
                consequence_category=ConsequenceRef.from_dict(raw["consequence_category"]),
                failure_type=FailureType(raw["failure_type"]),
                risk=RiskScore.from_dict(raw["risk"]),
                provenance=Provenance(raw["provenance"]),
                source_id=str(raw["source_id"]),
                effects=tuple(raw.get("effects", ())),
                placeholder=bool(raw.get("placeholder", False)),
                residual_terms=tuple(raw.get("residual_terms", ())),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise InputFormatError(f"bad failure record: {exc}") from None
        if record.problems():
            raise InputFormatError(f"record {record.id}: " + "; ".join(record.problems()))
        return record


def records_to_dict(records: list[FailureRecord]) -> dict[str, Any]:
    return {"records": [r.to_dict() for r in sorted(records, key=lambda r: r.id)]}


def records_from_dict(raw: Mapping[str, Any]) -> list[FailureRecord]:
    if not isinstance(raw, Mapping) or not isinstance(raw.get("records"), list):
        raise InputFormatError("records file must be an object with a 'records' list")
    return [FailureRecord.from_dict(r) for r in raw["records"]]
