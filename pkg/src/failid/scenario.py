"""Critical usage scenarios: function-centred slices of the knowledge base."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, replace
from typing import Any, Iterable, Mapping, Sequence

from .errors import InputFormatError, WrongKind
from .knowledge_base import (
    ElementKind,
    KnowledgeBase,
    LinkKind,
    ValidationReport,
    Violation,
    find_cycle,
)

DEFAULT_DEPTH = 3
DEFAULT_CRITICALITY = 5


@dataclass(frozen=True)
class Scenario:
    id: str
    name: str
    functions: tuple[str, ...]
    elements: frozenset[str]
    event_order: tuple[tuple[str, str], ...] = ()
    criticality: int = DEFAULT_CRITICALITY

    def __contains__(self, element_id: object) -> bool:
        return element_id in self.elements

    def extended(self, kb: KnowledgeBase, element_ids: Iterable[str]) -> Scenario:
        """Copy with extra elements in scope and Precedes pairs among in-scope events refreshed."""
        scope = self.elements | set(element_ids)
        return replace(self, elements=frozenset(scope), event_order=_merge_order(self.event_order, kb, scope))

    def to_dict(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "name": self.name,
            "functions": list(self.functions),
            "elements": sorted(self.elements),
            "event_order": [list(p) for p in self.event_order],
            "criticality": self.criticality,
        }

    @classmethod
    def from_dict(cls, raw: Mapping[str, Any]) -> Scenario:
        try:
            order = tuple(sorted((str(a), str(b)) for a, b in raw.get("event_order", [])))
            return cls(
                id=str(raw["id"]),
                name=str(raw.get("name", raw["id"])),
                functions=tuple(raw["functions"]),
                elements=frozenset(raw.get("elements", [])) | frozenset(raw["functions"]),
                event_order=order,
                criticality=int(raw.get("criticality", DEFAULT_CRITICALITY)),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise InputFormatError(f"bad scenario record: {exc}") from None


def _precedes_within(kb: KnowledgeBase, scope: frozenset[str] | set[str]) -> set[tuple[str, str]]:
    pairs = set()
    for eid in scope:
        if eid in kb and kb.get(eid).kind is ElementKind.EVENT:
            for link in kb.out_links(eid, LinkKind.PRECEDES):
                if link.target in scope:
                    pairs.add((link.source, link.target))
    return pairs


def _merge_order(existing: Iterable[tuple[str, str]], kb: KnowledgeBase, scope: set[str]) -> tuple[tuple[str, str], ...]:
    return tuple(sorted(set(existing) | _precedes_within(kb, scope)))


def reachable_within(kb: KnowledgeBase, starts: Iterable[str], depth: int) -> set[str]:
    """Element ids within ``depth`` hops of ``starts``, following links either way."""
    seen = set(starts)
    frontier = deque((s, 0) for s in sorted(seen))
    while frontier:
        node, dist = frontier.popleft()
        if dist == depth:
            continue
        for link in kb.out_links(node) + kb.in_links(node):
            other = link.target if link.source == node else link.source
            if other not in seen:
                seen.add(other)
                frontier.append((other, dist + 1))
    return seen


def build_scenario(
    kb: KnowledgeBase,
    function_ids: Sequence[str],
    depth: int = DEFAULT_DEPTH,
    *,
    scenario_id: str | None = None,
    name: str | None = None,
    criticality: int = DEFAULT_CRITICALITY,
) -> Scenario:
    if not function_ids:
        raise ValueError("a scenario needs at least one function")
    if depth < 1:
        raise ValueError("depth must be >= 1")
    if not 1 <= criticality <= 10:
        raise ValueError("criticality must lie in 1..10")
    functions = tuple(sorted(set(function_ids)))
    for fid in functions:
        element = kb.get(fid)
        if element.kind is not ElementKind.FUNCTION:
            raise WrongKind(f"{fid!r} is a {element.kind.value}, not a Function")
    scope = frozenset(reachable_within(kb, functions, depth))
    return Scenario(
        id=scenario_id or "scn-" + "+".join(functions),
        name=name or " / ".join(kb.get(f).name for f in functions),
        functions=functions,
        elements=scope,
        event_order=tuple(sorted(_precedes_within(kb, scope))),
        criticality=criticality,
    )


def validate_scenario(kb: KnowledgeBase, scenario: Scenario) -> ValidationReport:
    report = ValidationReport()
    add = report.violations.append
    if not scenario.functions:
        add(Violation("EmptyFunctions", scenario.id, "scenario has no functions"))
    if not 1 <= scenario.criticality <= 10:
        add(Violation("BadCriticality", scenario.id, str(scenario.criticality)))
    for fid in scenario.functions:
        if fid in kb and kb.get(fid).kind is not ElementKind.FUNCTION:
            add(Violation("WrongKind", fid, f"function slot holds a {kb.get(fid).kind.value}"))
    for eid in sorted(scenario.elements):
        if eid not in kb:
            add(Violation("DanglingReference", eid, f"scenario {scenario.id} references a missing element"))
    for a, b in scenario.event_order:
        for eid in (a, b):
            if eid not in scenario.elements:
                add(Violation("EventOutOfScope", eid, f"event_order pair {a}->{b}"))
            elif eid in kb and kb.get(eid).kind is not ElementKind.EVENT:
                add(Violation("WrongKind", eid, f"event_order relates a {kb.get(eid).kind.value}"))
    cycle = find_cycle([], scenario.event_order)
    if cycle:
        add(Violation("CycleIntroduced", scenario.id, " -> ".join(cycle)))
    return report

