from __future__ import annotations

import random

import pytest

import oracles
from builders import CLOCK, element, random_kb, worked_example
from failid.errors import InvalidScenario
from failid.failure_network import (
    analyze_scenario,
    classify_failure,
    compute_risk,
    consequence_of,
    derive_failure_chains,
    formalize,
)
from failid.knowledge_base import ElementKind, KnowledgeBase, Link, LinkKind
from failid.records import ConsequenceClass, FailureType
from failid.scenario import Scenario, build_scenario

K = ElementKind
L = LinkKind


def whole(kb: KnowledgeBase, criticality: int = 5) -> Scenario:
    return Scenario("s", "s", tuple(kb.ids_of_kind(K.FUNCTION))[:1], frozenset(e.id for e in kb.elements), (), criticality)


def triple(cause_kind=K.ENVIRONMENTAL_FACTOR, impact_kind=K.FUNCTION, **cause_attrs) -> KnowledgeBase:
    kb = KnowledgeBase(CLOCK)
    kb.add_element(element("cause", cause_kind, **cause_attrs))
    kb.add_element(element("eff", K.EFFECT))
    kb.add_element(element("imp", impact_kind))
    if impact_kind is not K.FUNCTION:
        kb.add_element(element("fn", K.FUNCTION))
    kb.link_elements(Link("cause", "eff", L.CAUSES))
    kb.link_elements(Link("eff", "imp", L.RESULTS_IN))
    return kb


def test_minimal_triple_gives_one_chain():
    kb = triple()
    [chain] = derive_failure_chains(kb, whole(kb))
    assert (chain.cause, chain.effects, chain.impact) == ("cause", ("eff",), "imp")
    assert chain.failure_type is FailureType.DEGRADED_FUNCTION
    assert chain.consequence.cls is ConsequenceClass.TECHNICAL_PRODUCT


def test_no_effects_no_chains():
    kb = KnowledgeBase(CLOCK)
    kb.add_element(element("f", K.FUNCTION))
    kb.add_element(element("c", K.COMPONENT))
    kb.link_elements(Link("c", "f", L.REALIZES))
    assert derive_failure_chains(kb, whole(kb)) == []


def test_invalid_scenario_raises():
    kb = triple()
    bad = Scenario("s", "s", ("imp",), frozenset({"imp", "ghost"}))
    with pytest.raises(InvalidScenario):
        derive_failure_chains(kb, bad)


@pytest.mark.parametrize(
    "cause, impact, attrs, expected",
    [
        (K.ENVIRONMENTAL_FACTOR, K.FUNCTION, {}, FailureType.DEGRADED_FUNCTION),
        (K.COMPONENT, K.FUNCTION, {}, FailureType.LOSS_OF_FUNCTION),
        (K.COMPONENT, K.EVENT, {}, FailureType.UNINTENDED_FUNCTION),
        (K.EVENT, K.EFFECT, {}, FailureType.UNINTENDED_FUNCTION),
        (K.EVENT, K.FUNCTION, {"intermittent": "true"}, FailureType.INTERMITTENT_FUNCTION),
        (K.EVENT, K.EVENT, {"intermittent": "TRUE"}, FailureType.INTERMITTENT_FUNCTION),
        (K.COMPONENT, K.FUNCTION, {"intermittent": "true"}, FailureType.LOSS_OF_FUNCTION),
        (K.PROCESS, K.FUNCTION, {}, FailureType.LOSS_OF_FUNCTION),
        (K.REQUIREMENT, K.COMPONENT, {}, FailureType.LOSS_OF_FUNCTION),
    ],
)
def test_failure_type_rule_table(cause, impact, attrs, expected):
    assert classify_failure(cause, impact, attrs) is expected


def test_consequence_classes():
    kb = triple(impact_kind=K.FUNCTION)
    kb.add_element(element("harm", K.EFFECT))
    kb.add_element(element("owner", K.STAKEHOLDER))
    kb.link_elements(Link("imp", "harm", L.CAUSES))
    kb.link_elements(Link("harm", "owner", L.RESULTS_IN))
    assert consequence_of(kb, "imp").cls is ConsequenceClass.STAKEHOLDER
    kb.add_element(element("driver", K.ACTOR))
    kb.link_elements(Link("harm", "driver", L.RESULTS_IN))
    ref = consequence_of(kb, "imp")
    assert (ref.cls, ref.element_id) == (ConsequenceClass.HUMAN, "driver")
    # restricted to a scope without the actor
    assert consequence_of(kb, "imp", {"imp", "harm", "owner"}).cls is ConsequenceClass.STAKEHOLDER
    assert consequence_of(kb, "cause").cls is ConsequenceClass.TECHNICAL_PRODUCT


def test_risk_default_human_is_225():
    kb, scenarios, _ = worked_example()
    [chain] = derive_failure_chains(kb, scenarios[0])
    risk = compute_risk(chain, scenarios[0], kb)
    assert (risk.severity, risk.occurrence, risk.detection, risk.rpn) == (9, 5, 5, 225)


def test_risk_extremes_via_attributes():
    kb = triple(severity="1", occurrence="1", detection="1")
    [chain] = derive_failure_chains(kb, whole(kb))
    assert compute_risk(chain, whole(kb), kb).rpn == 1
    kb = triple(severity="10", occurrence="10", detection="10")
    [chain] = derive_failure_chains(kb, whole(kb))
    assert compute_risk(chain, whole(kb), kb).rpn == 1000
    kb = triple(severity="99", occurrence="-3", detection="junk")
    [chain] = derive_failure_chains(kb, whole(kb))
    r = compute_risk(chain, whole(kb), kb)
    assert (r.severity, r.occurrence, r.detection) == (10, 1, 5)


def test_occurrence_follows_criticality():
    kb = triple()
    s = whole(kb, criticality=8)
    [chain] = derive_failure_chains(kb, s)
    assert compute_risk(chain, s, kb).occurrence == 8


def test_formalize_worked_example():
    kb, scenarios, _ = worked_example()
    [record] = analyze_scenario(kb, scenarios[0])
    assert record.id == "scn-highway:env-bright-sky>eff-contrast-loss>f-object-detection"
    assert record.cause_category.kind == "environment"
    assert record.impact_category.kind == "function"
    assert record.consequence_category.cls is ConsequenceClass.HUMAN
    assert record.general_description == (
        "bright sky background causes contrast loss leading to object detection affecting human"
    )


def test_component_cause_maps_to_component_category():
    kb = triple(cause_kind=K.COMPONENT)
    [chain] = derive_failure_chains(kb, whole(kb))
    record = formalize(chain, compute_risk(chain, whole(kb), kb), kb)
    assert record.cause_category.kind == "component"
    assert record.failure_type is FailureType.LOSS_OF_FUNCTION


def test_effect_chain_through_triggers():
    kb = triple()
    kb.add_element(element("eff2", K.EFFECT))
    kb.link_elements(Link("eff", "eff2", L.TRIGGERS))
    kb.link_elements(Link("eff2", "imp", L.RESULTS_IN))
    got = [(c.cause, c.effects, c.impact) for c in derive_failure_chains(kb, whole(kb))]
    assert got == [("cause", ("eff",), "imp"), ("cause", ("eff", "eff2"), "imp")]
    assert len(derive_failure_chains(kb, whole(kb), max_effect_hops=1)) == 1


@pytest.mark.parametrize("seed", range(60))
def test_chains_equal_exhaustive_oracle(seed):
    rng = random.Random(seed)
    kb = random_kb(rng)
    ids = [e.id for e in kb.elements]
    scope = set(rng.sample(ids, k=rng.randint(1, len(ids)))) | {"e00"}
    scenario = Scenario("s", "s", ("e00",), frozenset(scope))
    kinds, edges = oracles.raw_graph(kb)
    for hops in (1, 2, 3):
        got = {(c.cause, c.effects, c.impact) for c in derive_failure_chains(kb, scenario, hops)}
        assert got == oracles.chains(kinds, edges, scope, hops)


@pytest.mark.parametrize("seed", range(15))
def test_chains_ignore_insertion_order_and_out_of_scope_parts(seed):
    rng = random.Random(seed)
    kb = random_kb(rng)
    scenario = build_scenario(kb, ["e00"], depth=2)
    base = analyze_scenario(kb, scenario)

    shuffled = KnowledgeBase(CLOCK)
    elements, links = kb.elements, kb.links
    rng.shuffle(elements)
    rng.shuffle(links)
    for e in elements:
        shuffled.add_element(e)
    for l in links:
        shuffled.link_elements(l)
    assert analyze_scenario(shuffled, scenario) == base

    shuffled.add_element(element("zz-outside", K.EFFECT))
    for target in scenario.elements:
        try:
            shuffled.link_elements(Link(target, "zz-outside", L.CAUSES))
        except Exception:
            pass
    assert analyze_scenario(shuffled, scenario) == base


def test_chains_are_sorted():
    for seed in range(20):
        kb = random_kb(random.Random(seed))
        chains = derive_failure_chains(kb, whole(kb))
        keys = [c.sort_key() for c in chains]
        assert keys == sorted(keys) and len(set(keys)) == len(keys)
