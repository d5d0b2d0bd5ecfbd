from __future__ import annotations

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from builders import CLOCK, random_kb
from failid.errors import (
    CycleIntroduced,
    DuplicateId,
    DuplicateLink,
    InputFormatError,
    KindConstraintViolated,
    MalformedElement,
    UnknownElement,
    UnknownEndpoint,
    ValidationFailed,
)
from failid.knowledge_base import (
    LINK_RULES,
    Element,
    ElementKind,
    KnowledgeBase,
    Link,
    LinkKind,
    find_cycle,
    kind_allowed,
)

K = ElementKind
L = LinkKind


@pytest.fixture
def kb() -> KnowledgeBase:
    kb = KnowledgeBase(CLOCK)
    kb.add_element(Element("c1", K.COMPONENT, "camera", ("Camera",)))
    kb.add_element(Element("f1", K.FUNCTION, "object detection"))
    kb.add_element(Element("e1", K.EVENT, "start"))
    kb.add_element(Element("e2", K.EVENT, "stop"))
    return kb


def test_add_element_to_empty_store():
    kb = KnowledgeBase(CLOCK)
    kb.add_element(Element("c1", K.COMPONENT, "camera"))
    assert len(kb) == 1
    assert kb.version == 1
    assert kb.audit[0].operation == "add_element"
    assert kb.audit[0].timestamp == "2026-01-01T00:00:00Z"


def test_duplicate_id_rejected(kb):
    with pytest.raises(DuplicateId):
        kb.add_element(Element("c1", K.FUNCTION, "other"))


@pytest.mark.parametrize("bad", [Element("x", K.COMPONENT, ""), Element("x", K.COMPONENT, "n", ("  ",)), Element(" ", K.COMPONENT, "n")])
def test_malformed_element(kb, bad):
    with pytest.raises(MalformedElement):
        kb.add_element(bad)


def test_aliases_are_normalised():
    e = Element("c", K.COMPONENT, "cam", ("Front  Camera", "front camera", "CAM"))
    assert e.aliases == ("front camera", "cam")


def test_link_rules(kb):
    kb.link_elements(Link("c1", "f1", L.REALIZES))
    with pytest.raises(KindConstraintViolated):
        kb.link_elements(Link("f1", "c1", L.REALIZES))
    with pytest.raises(DuplicateLink):
        kb.link_elements(Link("c1", "f1", L.REALIZES))
    with pytest.raises(UnknownEndpoint):
        kb.link_elements(Link("c1", "nope", L.REALIZES))


def test_precedes_two_cycle(kb):
    kb.link_elements(Link("e1", "e2", L.PRECEDES))
    with pytest.raises(CycleIntroduced):
        kb.link_elements(Link("e2", "e1", L.PRECEDES))


def test_every_link_kind_has_a_rule():
    assert set(LINK_RULES) == set(LinkKind)
    assert kind_allowed(L.TRIGGERS, K.EFFECT, K.EFFECT)
    assert kind_allowed(L.TRIGGERS, K.EVENT, K.EVENT)
    assert not kind_allowed(L.CAUSES, K.EFFECT, K.EFFECT)


def test_failed_mutation_leaves_store_unchanged(kb):
    before = kb.to_dict()
    audit = list(kb.audit)
    for op in (
        lambda: kb.add_element(Element("c1", K.COMPONENT, "dup")),
        lambda: kb.link_elements(Link("f1", "c1", L.REALIZES)),
        lambda: kb.add_alias("missing", "x"),
        lambda: kb.remove_element("missing"),
        lambda: kb.unlink(Link("c1", "f1", L.REALIZES)),
    ):
        with pytest.raises(ValidationFailed):
            op()
    assert kb.to_dict() == before
    assert kb.audit == audit


def test_remove_element_drops_incident_links(kb):
    kb.link_elements(Link("c1", "f1", L.REALIZES))
    kb.remove_element("f1")
    assert kb.links == []
    assert kb.neighbors("c1") == []
    assert kb.validate().ok


def test_audit_entries_carry_digest_and_context(kb):
    entry = kb.add_alias("f1", "Obstacle Detection", {"proposal": "p1"})
    assert entry.version == kb.version == 5
    assert len(entry.digest) == 64
    assert entry.context == {"proposal": "p1"}
    assert "obstacle detection" in kb.get("f1").aliases


def test_validate_is_empty_for_valid_kb(kb):
    kb.link_elements(Link("c1", "f1", L.REALIZES))
    assert kb.validate().ok
    assert len(kb.validate()) == 0


def test_validate_reports_dangling_link_from_raw_import():
    raw = {
        "elements": [{"id": "c1", "kind": "Component", "name": "camera"}],
        "links": [{"from": "c1", "to": "ghost", "kind": "Realizes"}],
    }
    report = KnowledgeBase.from_dict(raw).validate()
    assert report.codes() == ["UnknownEndpoint"]
    assert "Realizes:c1->ghost" in report.violations[0].subject


def test_validate_reports_kind_violation_from_raw_import():
    raw = {
        "elements": [{"id": "c1", "kind": "Component", "name": "c"}, {"id": "f1", "kind": "Function", "name": "f"}],
        "links": [{"from": "f1", "to": "c1", "kind": "Realizes"}],
    }
    assert KnowledgeBase.from_dict(raw).validate().codes() == ["KindConstraintViolated"]


def test_validate_reports_partof_cycle_from_raw_import():
    raw = {
        "elements": [{"id": f"c{i}", "kind": "Component", "name": f"c{i}"} for i in range(3)],
        "links": [
            {"from": "c0", "to": "c1", "kind": "PartOf"},
            {"from": "c1", "to": "c2", "kind": "PartOf"},
            {"from": "c2", "to": "c0", "kind": "PartOf"},
        ],
    }
    report = KnowledgeBase.from_dict(raw).validate()
    assert report.codes() == ["CycleIntroduced"]
    assert oracles.has_cycle([("c0", "c1"), ("c1", "c2"), ("c2", "c0")])


def test_from_dict_rejects_duplicate_ids():
    raw = {"elements": [{"id": "a", "kind": "Component", "name": "a"}] * 2, "links": []}
    with pytest.raises(InputFormatError):
        KnowledgeBase.from_dict(raw)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 7), st.integers(0, 7)), max_size=20))
def test_find_cycle_agrees_with_closure_oracle(pairs):
    edges = [(f"n{a}", f"n{b}") for a, b in pairs]
    cycle = find_cycle([], edges)
    assert (cycle is not None) == oracles.has_cycle(edges)
    if cycle:
        # the reported cycle is a real closed walk over existing edges
        assert cycle[0] == cycle[-1]
        assert all(step in set(edges) for step in zip(cycle, cycle[1:]))


def test_neighbors_isolated_and_star():
    kb = KnowledgeBase(CLOCK)
    kb.add_element(Element("hub", K.ENVIRONMENTAL_FACTOR, "hub"))
    for eid, kind in (("c", K.COMPONENT), ("b", K.FUNCTION), ("a", K.EVENT)):
        kb.add_element(Element(eid, kind, eid))
        kb.link_elements(Link("hub", eid, L.INFLUENCES))
    kb.add_element(Element("lonely", K.ACTOR, "lonely"))
    assert kb.neighbors("lonely", direction="both") == []
    assert [e.id for _, e in kb.neighbors("hub")] == ["a", "b", "c"]
    with pytest.raises(UnknownElement):
        kb.neighbors("ghost")


@pytest.mark.parametrize("seed", range(40))
def test_neighbors_match_brute_force_scan(seed):
    rng = random.Random(seed)
    kb = random_kb(rng, max_elements=15, max_links=40)
    _, edges = oracles.raw_graph(kb)
    for element in kb.elements:
        for direction in ("in", "out", "both"):
            for kind in (None, rng.choice(list(LinkKind))):
                got = [
                    (e.id, l.kind.value, l.source, l.target)
                    for l, e in kb.neighbors(element.id, kind, direction)
                ]
                want = oracles.neighbors(edges, element.id, kind.value if kind else None, direction)
                assert got == want


@pytest.mark.parametrize("seed", range(20))
def test_serialized_round_trip_is_structurally_equal(seed):
    kb = random_kb(random.Random(seed))
    again = KnowledgeBase.from_dict(kb.to_dict())
    assert again.structurally_equal(kb)
    assert again.version == kb.version
    assert again.validate().ok


def test_snapshot_is_independent(kb):
    snap = kb.snapshot()
    snap.add_element(Element("new", K.ACTOR, "new"))
    assert "new" not in kb
    assert kb.version == 4 and snap.version == 5


@settings(max_examples=50, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 3), st.integers(0, 9), st.integers(0, 9), st.integers(0, 9)), max_size=60))
def test_version_strictly_increases_and_failures_change_nothing(ops):
    kb = KnowledgeBase(CLOCK)
    kinds = list(ElementKind)
    for op, a, b, c in ops:
        before, version = kb.to_dict(), kb.version
        try:
            if op == 0:
                kb.add_element(Element(f"n{a}", kinds[b % len(kinds)], "x"))
            elif op == 1:
                kb.link_elements(Link(f"n{a}", f"n{b}", list(LinkKind)[c]))
            elif op == 2:
                kb.remove_element(f"n{a}")
            else:
                kb.add_alias(f"n{a}", f"alias {b}")
        except ValidationFailed:
            assert kb.to_dict() == before
            assert kb.version == version
        else:
            assert kb.version == version + 1
        assert kb.validate().ok
