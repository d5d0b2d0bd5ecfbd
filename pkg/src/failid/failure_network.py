"""Failure chains inside a scenario and their formalized, risk-rated records.

A chain is a simple path

    cause --Causes--> effect (--Triggers--> effect)* --ResultsIn--> impact

whose nodes all lie in the scenario scope. Each chain gets a consequence
class, a failure type and a severity/occurrence/detection risk, and is then
written out as a potential :class:`~failid.records.FailureRecord`.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Collection, Sequence

from .config import RiskConfig
from .errors import InvalidScenario
from .knowledge_base import ElementKind, KnowledgeBase, LinkKind
from .records import (
    CATEGORY_OF_KIND,
    CAUSE_KINDS,
    IMPACT_KINDS,
    CategoryRef,
    ConsequenceClass,
    ConsequenceRef,
    FailureRecord,
    FailureType,
    Provenance,
    RiskScore,
)
from .scenario import Scenario, validate_scenario

CONSEQUENCE_LINKS = frozenset({LinkKind.CAUSES, LinkKind.RESULTS_IN, LinkKind.INFLUENCES})
CONSEQUENCE_HOPS = 2


@dataclass(frozen=True)
class FailureChain:
    scenario_id: str
    cause: str
    effects: tuple[str, ...]
    impact: str
    consequence: ConsequenceRef
    failure_type: FailureType

    @property
    def effect(self) -> str:
        return self.effects[0]

    @property
    def last_effect(self) -> str:
        return self.effects[-1]

    @property
    def path(self) -> tuple[str, ...]:
        return (self.cause, *self.effects, self.impact)

    def sort_key(self) -> tuple[str, tuple[str, ...], str]:
        return (self.cause, self.effects, self.impact)


def consequence_of(kb: KnowledgeBase, impact: str, scope: Collection[str] | None = None) -> ConsequenceRef:
    """Human if an Actor is within two outgoing Causes/ResultsIn/Influences hops
    of ``impact``, else Stakeholder if one is, else TechnicalProduct.

    The reached element closest to the impact (then smallest id) is recorded.
    """
    best: dict[ElementKind, tuple[int, str]] = {}
    seen = {impact}
    frontier = deque([(impact, 0)])
    while frontier:
        node, dist = frontier.popleft()
        if dist == CONSEQUENCE_HOPS:
            continue
        for link in kb.out_links(node):
            if link.kind not in CONSEQUENCE_LINKS or link.target in seen:
                continue
            if scope is not None and link.target not in scope:
                continue
            seen.add(link.target)
            kind = kb.get(link.target).kind
            if kind in (ElementKind.ACTOR, ElementKind.STAKEHOLDER):
                cand = (dist + 1, link.target)
                if kind not in best or cand < best[kind]:
                    best[kind] = cand
            frontier.append((link.target, dist + 1))
    if ElementKind.ACTOR in best:
        return ConsequenceRef(ConsequenceClass.HUMAN, best[ElementKind.ACTOR][1])
    if ElementKind.STAKEHOLDER in best:
        return ConsequenceRef(ConsequenceClass.STAKEHOLDER, best[ElementKind.STAKEHOLDER][1])
    return ConsequenceRef(ConsequenceClass.TECHNICAL_PRODUCT, None)


def classify_failure(
    cause_kind: ElementKind,
    impact_kind: ElementKind,
    cause_attributes: dict[str, str] | None = None,
) -> FailureType:
    """Failure-type rule table. Rules are tried in order; the first match wins."""
    attrs = cause_attributes or {}
    if cause_kind is ElementKind.EVENT and attrs.get("intermittent", "").strip().lower() == "true":
        return FailureType.INTERMITTENT_FUNCTION
    if impact_kind in (ElementKind.EVENT, ElementKind.EFFECT):
        return FailureType.UNINTENDED_FUNCTION
    if impact_kind is ElementKind.FUNCTION and cause_kind is ElementKind.COMPONENT:
        return FailureType.LOSS_OF_FUNCTION
    if impact_kind is ElementKind.FUNCTION and cause_kind is ElementKind.ENVIRONMENTAL_FACTOR:
        return FailureType.DEGRADED_FUNCTION
    return FailureType.LOSS_OF_FUNCTION


def assign_failure_type(chain: FailureChain, kb: KnowledgeBase) -> FailureType:
    cause = kb.get(chain.cause)
    return classify_failure(cause.kind, kb.get(chain.impact).kind, dict(cause.attributes))


def derive_failure_chains(
    kb: KnowledgeBase,
    scenario: Scenario,
    max_effect_hops: int = 3,
) -> list[FailureChain]:
    if max_effect_hops < 1:
        raise ValueError("max_effect_hops must be >= 1")
    report = validate_scenario(kb, scenario)
    if not report.ok:
        raise InvalidScenario(f"scenario {scenario.id}: " + "; ".join(report.codes()))
    scope = scenario.elements

    def in_scope_targets(node: str, kind: LinkKind, allowed: Collection[ElementKind]) -> list[str]:
        return [
            l.target
            for l in kb.out_links(node, kind)
            if l.target in scope and kb.get(l.target).kind in allowed
        ]

    found: list[tuple[str, tuple[str, ...], str]] = []
    effect_kind = (ElementKind.EFFECT,)

    def walk(cause: str, effects: list[str]) -> None:
        tip = effects[-1]
        for impact in in_scope_targets(tip, LinkKind.RESULTS_IN, IMPACT_KINDS):
            if impact != cause:
                found.append((cause, tuple(effects), impact))
        if len(effects) < max_effect_hops:
            for nxt in in_scope_targets(tip, LinkKind.TRIGGERS, effect_kind):
                if nxt not in effects:
                    effects.append(nxt)
                    walk(cause, effects)
                    effects.pop()

    for cause in sorted(scope):
        if kb.get(cause).kind not in CAUSE_KINDS:
            continue
        for first in in_scope_targets(cause, LinkKind.CAUSES, effect_kind):
            walk(cause, [first])

    chains = []
    consequences: dict[str, ConsequenceRef] = {}
    for cause, effects, impact in sorted(found):
        if impact not in consequences:
            consequences[impact] = consequence_of(kb, impact, scope)
        c = kb.get(cause)
        chains.append(
            FailureChain(
                scenario_id=scenario.id,
                cause=cause,
                effects=effects,
                impact=impact,
                consequence=consequences[impact],
                failure_type=classify_failure(c.kind, kb.get(impact).kind, dict(c.attributes)),
            )
        )
    return chains


def clamp_factor(value: int) -> int:
    return max(1, min(10, value))


def _attribute_factor(kb: KnowledgeBase, ids: Sequence[str], name: str) -> int | None:
    for eid in ids:
        raw = kb.get(eid).attributes.get(name)
        if raw is None:
            continue
        try:
            return clamp_factor(int(raw))
        except ValueError:
            continue
    return None


def compute_risk(
    chain: FailureChain,
    scenario: Scenario,
    kb: KnowledgeBase,
    config: RiskConfig | None = None,
) -> RiskScore:
    """Severity from the consequence class, occurrence from scenario criticality,
    detection from the configured default; any factor can be overridden by an
    integer attribute of the same name on a chain element, searched cause first.
    """
    config = config or RiskConfig()
    path = chain.path
    severity = _attribute_factor(kb, path, "severity")
    if severity is None:
        severity = clamp_factor(config.severity_base[chain.consequence.cls.value])
    occurrence = _attribute_factor(kb, path, "occurrence")
    if occurrence is None:
        occurrence = clamp_factor(scenario.criticality)
    detection = _attribute_factor(kb, path, "detection")
    if detection is None:
        detection = clamp_factor(config.default_detection)
    return RiskScore(severity, occurrence, detection)


def chain_record_id(chain: FailureChain) -> str:
    return f"{chain.scenario_id}:{chain.cause}>{'>'.join(chain.effects)}>{chain.impact}"


def formalize(chain: FailureChain, risk: RiskScore, kb: KnowledgeBase) -> FailureRecord:
    cause, effect, impact = kb.get(chain.cause), kb.get(chain.effect), kb.get(chain.impact)
    description = (
        f"{cause.name} causes {effect.name} leading to {impact.name} "
        f"affecting {chain.consequence.cls.label}"
    )
    return FailureRecord(
        id=chain_record_id(chain),
        general_description=description,
        cause_category=CategoryRef(CATEGORY_OF_KIND[cause.kind], cause.id),
        impact_category=CategoryRef(CATEGORY_OF_KIND[impact.kind], impact.id),
        consequence_category=chain.consequence,
        failure_type=chain.failure_type,
        risk=risk,
        provenance=Provenance.POTENTIAL,
        source_id=chain.scenario_id,
        effects=chain.effects,
    )


def analyze_scenario(
    kb: KnowledgeBase,
    scenario: Scenario,
    max_effect_hops: int = 3,
    risk_config: RiskConfig | None = None,
) -> list[FailureRecord]:
    """Chains of one scenario as formalized potential-failure records."""
    return [
        formalize(chain, compute_risk(chain, scenario, kb, risk_config), kb)
        for chain in derive_failure_chains(kb, scenario, max_effect_hops)
    ]
