"""Closing the loop: unmatched actual failures become knowledge-base updates.

One round runs analyze -> ingest -> correspond -> propose -> apply ->
re-correspond. Proposals are content-addressed, so applying the same
proposal twice changes nothing the second time.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, Iterable, Mapping, Sequence

from .complaints import Complaint, ComplaintResult, ingest
from .config import Config
from .correspondence import CorrespondenceReport, degree_of_correspondence, record_set_digest
from .errors import DuplicateId, FailidError, InputFormatError, ReportMismatch, UnknownElement
from .failure_network import analyze_scenario
from .knowledge_base import AuditEntry, Element, ElementKind, KnowledgeBase, Link, LinkKind, normalize_alias
from .records import FailureRecord
from .scenario import Scenario
from .serialization import digest

log = logging.getLogger(__name__)

UNIDENTIFIED_EFFECT = "eff-unidentified"


class ProposalKind(str, Enum):
    NEW_ELEMENT = "NewElement"
    NEW_LINK = "NewLink"
    EXTEND_SCENARIO = "ExtendScenario"
    NEW_ALIAS = "NewAlias"


@dataclass(frozen=True)
class UpdateProposal:
    id: str
    kind: ProposalKind
    payload: Mapping[str, Any]
    source: str
    rationale: str

    @classmethod
    def make(cls, kind: ProposalKind, payload: Mapping[str, Any], source: str, rationale: str) -> UpdateProposal:
        pid = "prop-" + digest({"kind": kind.value, "payload": payload})[:16]
        return cls(pid, kind, payload, source, rationale)

    def to_dict(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "kind": self.kind.value,
            "payload": self.payload,
            "source": self.source,
            "rationale": self.rationale,
        }

    @classmethod
    def from_dict(cls, raw: Mapping[str, Any]) -> UpdateProposal:
        try:
            return cls(str(raw["id"]), ProposalKind(raw["kind"]), raw["payload"], str(raw["source"]), str(raw.get("rationale", "")))
        except (KeyError, ValueError, TypeError) as exc:
            raise InputFormatError(f"bad proposal: {exc}") from None


KIND_PREFIX = {
    ElementKind.EVENT: "evt",
    ElementKind.EFFECT: "eff",
    ElementKind.ENVIRONMENTAL_FACTOR: "env",
    ElementKind.COMPONENT: "cmp",
    ElementKind.FUNCTION: "fn",
    ElementKind.PROCESS: "proc",
    ElementKind.REQUIREMENT: "req",
}


def _pick_scenario(kb: KnowledgeBase, scenarios: Sequence[Scenario], record: FailureRecord) -> Scenario | None:
    """Scenario holding the record's impact; else one touching a neighbour of the cause; else the first."""
    ordered = sorted(scenarios, key=lambda s: s.id)
    impact = record.impact_category.element_id
    for s in ordered:
        if impact in s.elements:
            return s
    cause = record.cause_category.element_id
    near = {other.id for _, other in kb.neighbors(cause, direction="both")}
    for s in ordered:
        if near & s.elements:
            return s
    return ordered[0] if ordered else None


def _placeholder_proposals(
    kb: KnowledgeBase, scenarios: Sequence[Scenario], record: FailureRecord, config: Config
) -> list[UpdateProposal]:
    terms = record.residual_terms[: config.placeholder_terms]
    if not terms:
        return []
    kind = ElementKind(config.placeholder_kind)
    phrase = " ".join(terms)
    new_id = f"{KIND_PREFIX.get(kind, kind.value.lower())}-{'-'.join(terms)}"
    src = record.id
    out = []
    if new_id not in kb:
        element = Element(new_id, kind, phrase, (), {"origin": "complaint"})
        out.append(UpdateProposal.make(
            ProposalKind.NEW_ELEMENT, {"element": element.to_dict()}, src,
            f"no known element explains the complaint terms '{phrase}'",
        ))
    out.append(UpdateProposal.make(
        ProposalKind.NEW_ALIAS, {"element": new_id, "alias": normalize_alias(phrase)}, src,
        "make the new element recognisable in future complaints",
    ))
    if record.effects:
        effect = record.effects[0]
    else:
        effect = UNIDENTIFIED_EFFECT
        if effect not in kb:
            placeholder = Element(effect, ElementKind.EFFECT, "unidentified effect", (), {"origin": "complaint"})
            out.append(UpdateProposal.make(
                ProposalKind.NEW_ELEMENT, {"element": placeholder.to_dict()}, src,
                "complaint names no known effect",
            ))
    out.append(UpdateProposal.make(
        ProposalKind.NEW_LINK, {"link": Link(new_id, effect, LinkKind.CAUSES).to_dict()}, src,
        f"'{phrase}' is reported together with {effect}",
    ))
    for s in sorted(scenarios, key=lambda s: s.id):
        if effect in s.elements:
            out.append(UpdateProposal.make(
                ProposalKind.EXTEND_SCENARIO, {"scenario": s.id, "elements": [new_id]}, src,
                f"{effect} is already part of scenario {s.id}",
            ))
    return out


def _extend_proposal(kb: KnowledgeBase, scenarios: Sequence[Scenario], record: FailureRecord) -> list[UpdateProposal]:
    cause = record.cause_category.element_id
    target = _pick_scenario(kb, scenarios, record)
    if target is None:
        return []
    effects = sorted(l.target for l in kb.out_links(cause, LinkKind.CAUSES) if l.target not in target.elements)
    return [UpdateProposal.make(
        ProposalKind.EXTEND_SCENARIO, {"scenario": target.id, "elements": [cause, *effects]}, record.id,
        f"observed cause {cause} lies outside every analysed scenario",
    )]


def propose_updates(
    kb: KnowledgeBase,
    scenarios: Sequence[Scenario],
    report: CorrespondenceReport,
    actual: Iterable[FailureRecord],
    config: Config | None = None,
) -> list[UpdateProposal]:
    """Proposals for every unmatched actual record, ordered by record id, deduplicated."""
    config = config or Config()
    records = {r.id: r for r in actual}
    if report.actual_digest != record_set_digest(records.values()):
        raise ReportMismatch("report was not computed from the given actual records")
    proposals: dict[str, UpdateProposal] = {}
    for rid in sorted(report.unmatched_actuals):
        record = records[rid]
        cause = record.cause_category.element_id
        if record.placeholder:
            batch = _placeholder_proposals(kb, scenarios, record, config)
        elif cause is not None and cause in kb and not any(cause in s.elements for s in scenarios):
            batch = _extend_proposal(kb, scenarios, record)
        else:
            batch = []
        for p in batch:
            proposals.setdefault(p.id, p)
    return list(proposals.values())


class Status(str, Enum):
    APPLIED = "applied"
    NOOP = "noop"
    REJECTED = "rejected"
    FAILED = "failed"


@dataclass
class ApplyResult:
    kb: KnowledgeBase
    scenarios: list[Scenario]
    statuses: dict[str, Status] = field(default_factory=dict)
    errors: dict[str, str] = field(default_factory=dict)
    audit: list[AuditEntry] = field(default_factory=list)


AcceptFilter = Callable[[UpdateProposal], bool]


def accept_all(_: UpdateProposal) -> bool:
    return True


def _applied_ids(kb: KnowledgeBase) -> set[str]:
    return {e.context["proposal"] for e in kb.audit if "proposal" in e.context}


def apply_updates(
    kb: KnowledgeBase,
    scenarios: Sequence[Scenario],
    proposals: Sequence[UpdateProposal],
    accept: AcceptFilter | None = None,
    round_number: int = 0,
) -> ApplyResult:
    """Apply accepted proposals in order to copies of ``kb`` and ``scenarios``.

    Each proposal is one atomic mutation; a failing proposal is recorded in
    ``errors`` and the rest still run.
    """
    accept = accept or accept_all
    result = ApplyResult(kb.snapshot(), sorted(scenarios, key=lambda s: s.id))
    work = result.kb
    by_id = {s.id: i for i, s in enumerate(result.scenarios)}
    done = _applied_ids(work)

    for p in proposals:
        if not accept(p):
            result.statuses[p.id] = Status.REJECTED
            log.info("proposal %s rejected", p.id)
            continue
        if p.id in done:
            result.statuses[p.id] = Status.NOOP
            continue
        ctx = {"proposal": p.id, "round": str(round_number), "source": p.source}
        try:
            changed = _apply_one(work, result.scenarios, by_id, p, ctx)
        except FailidError as exc:
            result.statuses[p.id] = Status.FAILED
            result.errors[p.id] = f"{exc.category}: {exc}"
            continue
        if changed:
            result.statuses[p.id] = Status.APPLIED
            result.audit.append(AuditEntry(work.version, work.clock(), p.kind.value, digest(p.payload), ctx))
            done.add(p.id)
        else:
            result.statuses[p.id] = Status.NOOP
    return result


def _apply_one(
    kb: KnowledgeBase,
    scenarios: list[Scenario],
    by_id: dict[str, int],
    p: UpdateProposal,
    ctx: dict[str, str],
) -> bool:
    payload = p.payload
    try:
        if p.kind is ProposalKind.NEW_ELEMENT:
            element = Element.from_dict(payload["element"])
            if element.id in kb:
                if kb.get(element.id) == element:
                    return False
                raise DuplicateId(f"element id {element.id!r} already present with other content")
            kb.add_element(element, ctx)
        elif p.kind is ProposalKind.NEW_ALIAS:
            eid, alias = payload["element"], normalize_alias(payload["alias"])
            if alias in kb.get(eid).aliases:
                return False
            kb.add_alias(eid, alias, ctx)
        elif p.kind is ProposalKind.NEW_LINK:
            link = Link.from_dict(payload["link"])
            if kb.has_link(link.source, link.target, link.kind):
                return False
            kb.link_elements(link, ctx)
        elif p.kind is ProposalKind.EXTEND_SCENARIO:
            sid = payload["scenario"]
            if sid not in by_id:
                raise UnknownElement(f"no scenario {sid!r}")
            ids = [str(e) for e in payload["elements"]]
            for eid in ids:
                kb.get(eid)
            current = scenarios[by_id[sid]]
            if set(ids) <= current.elements:
                return False
            scenarios[by_id[sid]] = current.extended(kb, ids)
    except (KeyError, TypeError) as exc:
        raise InputFormatError(f"proposal {p.id}: malformed payload ({exc})") from None
    return True


@dataclass
class Analysis:
    potential: list[FailureRecord]
    results: list[ComplaintResult]
    report: CorrespondenceReport

    @property
    def actual(self) -> list[FailureRecord]:
        return [r.record for r in self.results]


@dataclass
class ImprovementRound:
    number: int
    report_before: CorrespondenceReport
    proposals: list[UpdateProposal]
    statuses: dict[str, Status]
    errors: dict[str, str]
    report_after: CorrespondenceReport
    kb: KnowledgeBase
    scenarios: list[Scenario]
    audit: list[AuditEntry]
    analysis_after: Analysis | None = None

    @property
    def degree_before(self) -> float:
        return self.report_before.degree_of_correspondence

    @property
    def degree_after(self) -> float:
        return self.report_after.degree_of_correspondence

    @property
    def applied(self) -> list[str]:
        return [pid for pid, s in self.statuses.items() if s is Status.APPLIED]

    def to_dict(self) -> dict[str, Any]:
        return {
            "round": self.number,
            "degree_before": self.degree_before,
            "degree_after": self.degree_after,
            "proposals": [
                {**p.to_dict(), "status": self.statuses.get(p.id, Status.REJECTED).value, "error": self.errors.get(p.id)}
                for p in self.proposals
            ],
            "unmatched_before": list(self.report_before.unmatched_actuals),
            "unmatched_after": list(self.report_after.unmatched_actuals),
            "kb_version": self.kb.version,
            "audit": [e.to_dict() for e in self.audit],
        }


def analyze_all(kb: KnowledgeBase, scenarios: Sequence[Scenario], config: Config) -> list[FailureRecord]:
    records: list[FailureRecord] = []
    for s in sorted(scenarios, key=lambda s: s.id):
        records += analyze_scenario(kb, s, config.max_effect_hops, config.risk)
    return records


def evaluate(kb: KnowledgeBase, scenarios: Sequence[Scenario], complaints: Sequence[Complaint], config: Config) -> Analysis:
    potential = analyze_all(kb, scenarios, config)
    results = ingest(kb, complaints, config)
    report = degree_of_correspondence(potential, [r.record for r in results], config.correspondence)
    return Analysis(potential, results, report)


def run_round(
    kb: KnowledgeBase,
    scenarios: Sequence[Scenario],
    complaints: Sequence[Complaint],
    config: Config | None = None,
    *,
    round_number: int = 1,
    accept: AcceptFilter | None = None,
    before: Analysis | None = None,
) -> ImprovementRound:
    config = config or Config()
    before = before or evaluate(kb, scenarios, complaints, config)
    proposals = propose_updates(kb, scenarios, before.report, before.actual, config)
    applied = apply_updates(kb, scenarios, proposals, accept, round_number)
    if proposals:
        after = evaluate(applied.kb, applied.scenarios, complaints, config)
    else:
        after = before
    return ImprovementRound(
        number=round_number,
        report_before=before.report,
        proposals=proposals,
        statuses=applied.statuses,
        errors=applied.errors,
        report_after=after.report,
        kb=applied.kb,
        scenarios=applied.scenarios,
        audit=applied.audit,
        analysis_after=after,
    )


@dataclass
class ImprovementRun:
    rounds: list[ImprovementRound]
    converged: bool

    @property
    def final(self) -> ImprovementRound:
        return self.rounds[-1]


def improve(
    kb: KnowledgeBase,
    scenarios: Sequence[Scenario],
    complaints: Sequence[Complaint],
    config: Config | None = None,
    *,
    max_rounds: int | None = None,
    accept: AcceptFilter | None = None,
) -> ImprovementRun:
    """Run rounds until one yields no proposals, nothing could be applied, or the cap is hit."""
    config = config or Config()
    cap = max_rounds if max_rounds is not None else config.max_rounds
    if cap < 1:
        raise ValueError("at least one round is required")
    rounds: list[ImprovementRound] = []
    before: Analysis | None = None
    for n in range(1, cap + 1):
        rnd = run_round(kb, scenarios, complaints, config, round_number=n, accept=accept, before=before)
        rounds.append(rnd)
        if not rnd.proposals:
            return ImprovementRun(rounds, True)
        if not rnd.applied:
            log.warning("round %d applied nothing; stopping", n)
            return ImprovementRun(rounds, False)
        kb, scenarios = rnd.kb, rnd.scenarios
        before = rnd.analysis_after
    return ImprovementRun(rounds, False)
