"""Degree of correspondence between potential and actual failure records.

Each actual record is paired with its best-scoring potential record (ties
go to the smallest potential id). The degree of correspondence is the mean
best score over all actual records; with no actual records it is 1.0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

from .config import CorrespondenceConfig
from .errors import InputFormatError, InvalidWeights
from .records import CategoryRef, FailureRecord
from .serialization import digest

FIELDS = ("cause", "impact", "consequence", "failure_type", "risk")
RPN_SPAN = 1000.0


def _ref_similarity(p: CategoryRef, a: CategoryRef) -> float:
    if p.kind != a.kind:
        return 0.0
    return 1.0 if p.element_id == a.element_id else 0.5


def field_similarity(name: str, p: FailureRecord, a: FailureRecord) -> float:
    if name == "cause":
        return _ref_similarity(p.cause_category, a.cause_category)
    if name == "impact":
        return _ref_similarity(p.impact_category, a.impact_category)
    if name == "consequence":
        return 1.0 if p.consequence_category.cls is a.consequence_category.cls else 0.0
    if name == "failure_type":
        return 1.0 if p.failure_type is a.failure_type else 0.0
    if name == "risk":
        return 1.0 - abs(p.risk.rpn - a.risk.rpn) / RPN_SPAN
    raise ValueError(f"unknown field {name!r}")


def check_weights(weights: Mapping[str, float]) -> tuple[float, ...]:
    if set(weights) != set(FIELDS):
        raise InvalidWeights(f"weights must name exactly {', '.join(FIELDS)}")
    values = tuple(float(weights[f]) for f in FIELDS)
    if any(v < 0 or not math.isfinite(v) for v in values):
        raise InvalidWeights("weights must be finite and non-negative")
    if abs(math.fsum(values) - 1.0) > 1e-9:
        raise InvalidWeights(f"weights sum to {math.fsum(values)}, not 1")
    return values


def _weighted_total(w: Sequence[float], f: Sequence[Any]) -> Any:
    # One fixed evaluation order, shared by the scalar and the array path so
    # both produce bit-identical totals. Dividing by the weight sum computed
    # the same way makes a perfect match exactly 1.0.
    num = w[0] * f[0] + w[1] * f[1] + w[2] * f[2] + w[3] * f[3] + w[4] * f[4]
    den = w[0] + w[1] + w[2] + w[3] + w[4]
    return num / den


@dataclass(frozen=True)
class MatchScore:
    potential_id: str
    actual_id: str
    fields: Mapping[str, float]
    total: float

    def to_dict(self) -> dict[str, Any]:
        return {
            "potential": self.potential_id,
            "actual": self.actual_id,
            "fields": dict(self.fields),
            "total": self.total,
        }


def score_pair(p: FailureRecord, a: FailureRecord, weights: Mapping[str, float] | None = None) -> MatchScore:
    w = check_weights(weights or CorrespondenceConfig().weights)
    sims = [field_similarity(name, p, a) for name in FIELDS]
    return MatchScore(p.id, a.id, dict(zip(FIELDS, sims)), float(_weighted_total(w, sims)))


@dataclass(frozen=True)
class BestMatch:
    actual_id: str
    potential_id: str | None
    total: float
    fields: Mapping[str, float] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return {
            "actual": self.actual_id,
            "potential": self.potential_id,
            "total": self.total,
            "fields": dict(self.fields),
        }


@dataclass(frozen=True)
class CorrespondenceReport:
    degree_of_correspondence: float
    best_matches: tuple[BestMatch, ...]
    unmatched_actuals: tuple[str, ...]
    coverage_of_potential: float
    threshold: float
    potential_count: int
    actual_digest: str

    def best_for(self, actual_id: str) -> BestMatch:
        for m in self.best_matches:
            if m.actual_id == actual_id:
                return m
        raise KeyError(actual_id)

    def to_dict(self) -> dict[str, Any]:
        return {
            "degree_of_correspondence": self.degree_of_correspondence,
            "best_matches": [m.to_dict() for m in self.best_matches],
            "unmatched_actuals": list(self.unmatched_actuals),
            "coverage_of_potential": self.coverage_of_potential,
            "threshold": self.threshold,
            "potential_count": self.potential_count,
            "actual_digest": self.actual_digest,
        }

    @classmethod
    def from_dict(cls, raw: Mapping[str, Any]) -> CorrespondenceReport:
        try:
            return cls(
                degree_of_correspondence=float(raw["degree_of_correspondence"]),
                best_matches=tuple(
                    BestMatch(m["actual"], m.get("potential"), float(m["total"]), dict(m.get("fields", {})))
                    for m in raw["best_matches"]
                ),
                unmatched_actuals=tuple(raw["unmatched_actuals"]),
                coverage_of_potential=float(raw["coverage_of_potential"]),
                threshold=float(raw["threshold"]),
                potential_count=int(raw["potential_count"]),
                actual_digest=str(raw["actual_digest"]),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise InputFormatError(f"bad correspondence report: {exc}") from None


def record_set_digest(records: Iterable[FailureRecord]) -> str:
    return digest([r.to_dict() for r in sorted(records, key=lambda r: r.id)])


def _unique_sorted(records: Iterable[FailureRecord], label: str) -> list[FailureRecord]:
    out = sorted(records, key=lambda r: r.id)
    for a, b in zip(out, out[1:]):
        if a.id == b.id:
            raise InputFormatError(f"duplicate {label} record id {a.id!r}")
    return out


class _Encoded:
    """Potential records as integer/float columns for vectorised scoring."""

    def __init__(self, records: Sequence[FailureRecord], codes: dict[Any, int]):
        def code(value: Any) -> int:
            return codes.setdefault(value, len(codes))

        self.cause_kind = np.array([code(r.cause_category.kind) for r in records], dtype=np.int64)
        self.cause_id = np.array([code(r.cause_category.element_id) for r in records], dtype=np.int64)
        self.impact_kind = np.array([code(r.impact_category.kind) for r in records], dtype=np.int64)
        self.impact_id = np.array([code(r.impact_category.element_id) for r in records], dtype=np.int64)
        self.consequence = np.array([code(r.consequence_category.cls) for r in records], dtype=np.int64)
        self.failure_type = np.array([code(r.failure_type) for r in records], dtype=np.int64)
        self.rpn = np.array([r.risk.rpn for r in records], dtype=np.float64)


def _ref_sim_array(kinds: np.ndarray, ids: np.ndarray, kind: int, eid: int) -> np.ndarray:
    same_kind = kinds == kind
    return np.where(same_kind & (ids == eid), 1.0, np.where(same_kind, 0.5, 0.0))


def degree_of_correspondence(
    potential: Iterable[FailureRecord],
    actual: Iterable[FailureRecord],
    config: CorrespondenceConfig | None = None,
) -> CorrespondenceReport:
    config = config or CorrespondenceConfig()
    w = check_weights(config.weights)
    pots = _unique_sorted(potential, "potential")
    acts = _unique_sorted(actual, "actual")
    codes: dict[Any, int] = {}
    enc = _Encoded(pots, codes)

    def code(value: Any) -> int:
        # values never seen among potentials cannot match anything
        return codes.get(value, -1)

    best: list[BestMatch] = []
    for a in acts:
        if not pots:
            best.append(BestMatch(a.id, None, 0.0, {f: 0.0 for f in FIELDS}))
            continue
        cols = [
            _ref_sim_array(enc.cause_kind, enc.cause_id, code(a.cause_category.kind), code(a.cause_category.element_id)),
            _ref_sim_array(enc.impact_kind, enc.impact_id, code(a.impact_category.kind), code(a.impact_category.element_id)),
            np.where(enc.consequence == code(a.consequence_category.cls), 1.0, 0.0),
            np.where(enc.failure_type == code(a.failure_type), 1.0, 0.0),
            1.0 - np.abs(enc.rpn - float(a.risk.rpn)) / RPN_SPAN,
        ]
        totals = _weighted_total(w, cols)
        i = int(np.argmax(totals))  # first maximum = smallest id, pots are sorted
        best.append(BestMatch(a.id, pots[i].id, float(totals[i]), {f: float(c[i]) for f, c in zip(FIELDS, cols)}))

    degree = math.fsum(m.total for m in best) / len(best) if best else 1.0
    unmatched = tuple(m.actual_id for m in best if m.total < config.threshold)
    hit = {m.potential_id for m in best if m.potential_id is not None}
    coverage = len(hit) / len(pots) if pots else 0.0
    return CorrespondenceReport(
        degree_of_correspondence=degree,
        best_matches=tuple(best),
        unmatched_actuals=unmatched,
        coverage_of_potential=coverage,
        threshold=config.threshold,
        potential_count=len(pots),
        actual_digest=record_set_digest(acts),
    )
