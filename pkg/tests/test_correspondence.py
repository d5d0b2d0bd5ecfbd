from __future__ import annotations

import math
import random

import pytest

import oracles
from builders import as_actual, random_record
from failid.config import CorrespondenceConfig
from failid.correspondence import (
    CorrespondenceReport,
    check_weights,
    degree_of_correspondence,
    field_similarity,
    score_pair,
)
from failid.errors import InvalidWeights
from failid.records import (
    CategoryRef,
    ConsequenceClass,
    ConsequenceRef,
    FailureRecord,
    FailureType,
    Provenance,
    RiskScore,
)

P, A = Provenance.POTENTIAL, Provenance.ACTUAL


def rec(rid, prov, cause=("environment", "env1"), impact=("function", "f1"), cls=ConsequenceClass.HUMAN,
        ftype=FailureType.DEGRADED_FUNCTION, risk=(9, 5, 5)):
    return FailureRecord(
        rid, rid, CategoryRef(*cause), CategoryRef(*impact), ConsequenceRef(cls, None), ftype, RiskScore(*risk), prov, "s"
    )


def test_field_similarities():
    p = rec("p", P)
    assert field_similarity("cause", p, rec("a", A)) == 1.0
    assert field_similarity("cause", p, rec("a", A, cause=("environment", "env2"))) == 0.5
    assert field_similarity("cause", p, rec("a", A, cause=("component", "env1"))) == 0.0
    assert field_similarity("risk", p, rec("a", A)) == 1.0
    lo, hi = rec("p", P, risk=(1, 1, 1)), rec("a", A, risk=(10, 10, 10))
    assert math.isclose(field_similarity("risk", lo, hi), 0.001, abs_tol=1e-9)
    assert field_similarity("consequence", p, rec("a", A, cls=ConsequenceClass.STAKEHOLDER)) == 0.0


def test_conventions():
    p = rec("p", P)
    empty = degree_of_correspondence([p], [])
    assert empty.degree_of_correspondence == 1.0 and empty.unmatched_actuals == ()
    none = degree_of_correspondence([], [rec("a", A), rec("b", A)])
    assert none.degree_of_correspondence == 0.0
    assert none.unmatched_actuals == ("a", "b")
    assert none.coverage_of_potential == 0.0
    same = degree_of_correspondence([p], [rec("a", A)])
    assert same.degree_of_correspondence == 1.0 and same.coverage_of_potential == 1.0


def test_three_by_two_hand_case_equals_all_pairs_oracle():
    pots = [
        rec("p1", P),
        rec("p2", P, cause=("component", "cam"), ftype=FailureType.LOSS_OF_FUNCTION, risk=(4, 5, 5)),
        rec("p3", P, cause=("environment", "env2"), impact=("function", "f2"), risk=(9, 8, 5)),
    ]
    acts = [
        rec("a1", A, cause=("environment", "env2"), risk=(9, 5, 5)),
        rec("a2", A, cause=("component", "cam"), impact=("component", "cam"), cls=ConsequenceClass.TECHNICAL_PRODUCT,
            ftype=FailureType.LOSS_OF_FUNCTION, risk=(4, 6, 5)),
    ]
    report = degree_of_correspondence(pots, acts)
    degree, best, unmatched = oracles.correspondence([p.to_dict() for p in pots], [a.to_dict() for a in acts])
    assert math.isclose(report.degree_of_correspondence, degree, abs_tol=1e-12)
    assert {m.actual_id: m.potential_id for m in report.best_matches} == {k: v[0] for k, v in best.items()}
    assert list(report.unmatched_actuals) == unmatched
    # a1 against p1: 0.3*0.5 + 0.25 + 0.2 + 0.1 + 0.15 = 0.85
    # a1 against p3: 0.3 + 0.25*0.5 + 0.2 + 0.1 + 0.15*(1 - 135/1000) = 0.85475
    assert score_pair(pots[0], acts[0]).total == pytest.approx(0.85)
    assert report.best_for("a1").total == pytest.approx(0.85475)
    assert report.best_for("a1").potential_id == "p3"
    # a2 against p2: 0.3 + 0 + 0 + 0.1 + 0.15*(1 - 20/1000)
    assert report.best_for("a2").total == pytest.approx(0.547)
    assert report.unmatched_actuals == ("a2",)
    assert report.coverage_of_potential == pytest.approx(2 / 3)


def test_ties_go_to_smallest_potential_id():
    report = degree_of_correspondence([rec("pb", P), rec("pa", P)], [rec("a", A)])
    assert report.best_for("a").potential_id == "pa"


def test_weights_validated():
    with pytest.raises(InvalidWeights):
        check_weights({"cause": 1.0})
    with pytest.raises(InvalidWeights):
        degree_of_correspondence([], [], CorrespondenceConfig({"cause": 0.5, "impact": 0.5, "consequence": 0.5,
                                                              "failure_type": 0, "risk": 0}))
    with pytest.raises(InvalidWeights):
        check_weights({"cause": -0.1, "impact": 0.35, "consequence": 0.5, "failure_type": 0.1, "risk": 0.15})


def test_scalar_and_vector_paths_agree_bitwise():
    rng = random.Random(7)
    pots = [random_record(rng, f"p{i}", P) for i in range(30)]
    acts = [random_record(rng, f"a{i}", A) for i in range(30)]
    report = degree_of_correspondence(pots, acts)
    for m in report.best_matches:
        a = next(x for x in acts if x.id == m.actual_id)
        scalar = max(score_pair(p, a).total for p in pots)
        assert scalar == m.total


@pytest.mark.parametrize("seed", range(200))
def test_random_sets_equal_all_pairs_oracle(seed):
    rng = random.Random(seed)
    pots = [random_record(rng, f"p{i}", P) for i in range(rng.randint(0, 6))]
    acts = [random_record(rng, f"a{i}", A) for i in range(rng.randint(0, 6))]
    report = degree_of_correspondence(pots, acts)
    degree, best, unmatched = oracles.correspondence([p.to_dict() for p in pots], [a.to_dict() for a in acts])
    assert math.isclose(report.degree_of_correspondence, degree, abs_tol=1e-9)
    assert list(report.unmatched_actuals) == unmatched
    for m in report.best_matches:
        assert math.isclose(m.total, best[m.actual_id][1], abs_tol=1e-9)


def test_report_round_trip():
    rng = random.Random(1)
    report = degree_of_correspondence([random_record(rng, "p", P)], [random_record(rng, "a", A)])
    assert CorrespondenceReport.from_dict(report.to_dict()) == report


def test_identity_copy_helper():
    rng = random.Random(3)
    p = random_record(rng, "p", P)
    assert degree_of_correspondence([p], [as_actual(p, "a")]).degree_of_correspondence == 1.0
