"""Complaint generalization: from raw customer text to unified actual-failure records.

Pipeline per complaint::

    tokenize -> generalize (alias longest match) -> compute_priority
             -> localize_failure_cause -> to_actual_record
             -> suggest_corrective_actions

Everything is deterministic and driven by the lexicons and catalog in
:class:`~failid.config.Config`.
"""

from __future__ import annotations

import math
import re
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping, NamedTuple, Sequence

from .config import CatalogEntry, Config
from .errors import EmptyText, InputFormatError, MissingCatalog
from .failure_network import classify_failure, clamp_factor, consequence_of
from .knowledge_base import ElementKind, KnowledgeBase
from .records import (
    CATEGORY_OF_KIND,
    CategoryRef,
    ConsequenceClass,
    ConsequenceRef,
    FailureRecord,
    Provenance,
    RiskScore,
)

WORD = re.compile(r"[^\W_]+")

PRIMARY_KINDS = {
    ElementKind.REQUIREMENT: "requirement",
    ElementKind.COMPONENT: "component",
    ElementKind.FUNCTION: "function",
    ElementKind.PROCESS: "process",
    ElementKind.ACTOR: "actor",
}
SECONDARY_KINDS = {
    ElementKind.ENVIRONMENTAL_FACTOR: "environment",
    ElementKind.EVENT: "event",
}


@dataclass(frozen=True)
class Complaint:
    id: str
    text: str
    received_at: str = ""
    product_ref: str | None = None
    duplicate_count: int = 1

    def __post_init__(self) -> None:
        if not self.text or not self.text.strip():
            raise EmptyText(f"complaint {self.id!r} has no text")
        if self.duplicate_count < 1:
            raise ValueError(f"complaint {self.id!r}: duplicate_count must be >= 1")

    def to_dict(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "text": self.text,
            "received_at": self.received_at,
            "product_ref": self.product_ref,
            "duplicate_count": self.duplicate_count,
        }

    @classmethod
    def from_dict(cls, raw: Mapping[str, Any]) -> Complaint:
        try:
            return cls(
                id=str(raw["id"]),
                text=str(raw["text"]),
                received_at=str(raw.get("received_at", "")),
                product_ref=raw.get("product_ref"),
                duplicate_count=int(raw.get("duplicate_count", 1)),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise InputFormatError(f"bad complaint record {raw!r}: {exc}") from None


class Token(NamedTuple):
    text: str
    start: int
    end: int


def tokenize(text: str, stopwords: Iterable[str] = frozenset()) -> list[Token]:
    """Lowercased word tokens with their character spans in ``text``.

    Words are maximal runs of Unicode letters and digits. Lowercasing can
    change a word's length or introduce combining marks, so each lowered
    word is segmented again; the pieces keep the original word's span.
    """
    if not text or not text.strip():
        raise EmptyText("text is empty")
    stop = stopwords if isinstance(stopwords, (set, frozenset)) else frozenset(stopwords)
    tokens = []
    for m in WORD.finditer(text):
        for piece in WORD.findall(m.group().lower()):
            if piece not in stop:
                tokens.append(Token(piece, m.start(), m.end()))
    return tokens


def words(text: str, stopwords: Iterable[str] = frozenset()) -> list[str]:
    return [t.text for t in tokenize(text, stopwords)]


@dataclass(frozen=True)
class MatchedTerm:
    start: int
    end: int
    element_id: str
    alias: str
    score: float

    def to_dict(self) -> dict[str, Any]:
        return {
            "span": [self.start, self.end],
            "element": self.element_id,
            "alias": self.alias,
            "score": self.score,
        }


@dataclass(frozen=True)
class GeneralizedComplaint:
    complaint_id: str
    tokens: tuple[str, ...]
    matched_terms: tuple[MatchedTerm, ...]

    def unmatched_positions(self) -> list[int]:
        covered = {i for m in self.matched_terms for i in range(m.start, m.end)}
        return [i for i in range(len(self.tokens)) if i not in covered]

    def to_dict(self) -> dict[str, Any]:
        return {
            "complaint_id": self.complaint_id,
            "tokens": list(self.tokens),
            "matched_terms": [m.to_dict() for m in self.matched_terms],
        }


class AliasIndex:
    """Alias token sequences of every element, indexed by token.

    Built once per knowledge-base state and reused across a batch.
    """

    def __init__(self, kb: KnowledgeBase, stopwords: Iterable[str] = frozenset()):
        self.aliases: list[tuple[str, str, tuple[str, ...]]] = []
        self.by_token: dict[str, list[tuple[int, int]]] = defaultdict(list)
        for element in kb.elements:
            for alias in element.aliases:
                try:
                    toks = tuple(words(alias, stopwords))
                except EmptyText:
                    continue
                if not toks:
                    continue
                idx = len(self.aliases)
                self.aliases.append((element.id, alias, toks))
                for j, tok in enumerate(toks):
                    self.by_token[tok].append((idx, j))

    def best_at(self, tokens: Sequence[str], i: int) -> MatchedTerm | None:
        """Longest alias sub-run starting at ``tokens[i]``.

        Ties go to the higher score (shorter alias), then smallest element id,
        then alphabetically first alias.
        """
        best: tuple[tuple[Any, ...], MatchedTerm] | None = None
        for idx, j in self.by_token.get(tokens[i], ()):
            element_id, alias, toks = self.aliases[idx]
            k = 1
            while i + k < len(tokens) and j + k < len(toks) and tokens[i + k] == toks[j + k]:
                k += 1
            score = k / len(toks)
            key = (-k, -score, element_id, alias)
            if best is None or key < best[0]:
                best = (key, MatchedTerm(i, i + k, element_id, alias, score))
        return best[1] if best else None


def generalize(
    kb: KnowledgeBase,
    tokens: Sequence[str] | Sequence[Token],
    complaint_id: str = "",
    *,
    stopwords: Iterable[str] = frozenset(),
    index: AliasIndex | None = None,
) -> GeneralizedComplaint:
    """Greedy left-to-right, longest-first, non-overlapping alias matching."""
    toks = tuple(t.text if isinstance(t, Token) else t for t in tokens)
    index = index or AliasIndex(kb, stopwords)
    matches = []
    i = 0
    while i < len(toks):
        match = index.best_at(toks, i)
        if match is None:
            i += 1
        else:
            matches.append(match)
            i = match.end
    return GeneralizedComplaint(complaint_id, toks, tuple(matches))


@dataclass(frozen=True)
class Priority:
    value: float
    safety_score: float
    severity_score: float
    frequency_score: float

    def to_dict(self) -> dict[str, float]:
        return {
            "value": self.value,
            "safety_score": self.safety_score,
            "severity_score": self.severity_score,
            "frequency_score": self.frequency_score,
        }


def _phrase_hits(tokens: Sequence[str], phrase: Sequence[str]) -> int:
    n = len(phrase)
    if not n:
        return 0
    return sum(1 for i in range(len(tokens) - n + 1) if tuple(tokens[i : i + n]) == tuple(phrase))


def _lexicon_phrases(lexicon: Mapping[str, float], stopwords: Iterable[str]) -> list[tuple[tuple[str, ...], float]]:
    out = []
    for term, weight in sorted(lexicon.items()):
        try:
            toks = tuple(words(term, stopwords))
        except EmptyText:
            continue
        if toks:
            out.append((toks, weight))
    return out


def compute_priority(complaint: Complaint, generalized: GeneralizedComplaint, config: Config | None = None) -> Priority:
    config = config or Config()
    pc = config.priority
    tokens = generalized.tokens
    safety_hits = sum(
        _phrase_hits(tokens, phrase)
        for phrase, weight in _lexicon_phrases(config.safety_lexicon, config.stopwords)
        if weight > 0
    )
    severity_weights = [
        weight
        for phrase, weight in _lexicon_phrases(config.severity_lexicon, config.stopwords)
        if _phrase_hits(tokens, phrase)
    ]
    safety = min(1.0, safety_hits / pc.safety_saturation)
    severity = max(severity_weights, default=0.0)
    frequency = min(1.0, complaint.duplicate_count / pc.duplicate_saturation)
    value = pc.safety_weight * safety + pc.severity_weight * severity + pc.frequency_weight * frequency
    return Priority(min(1.0, max(0.0, value)), safety, severity, frequency)


@dataclass(frozen=True)
class LocalizationHit:
    element_id: str
    kind: str
    score: float

    def to_dict(self) -> dict[str, Any]:
        return {"element": self.element_id, "kind": self.kind, "score": self.score}


@dataclass(frozen=True)
class LocalizationResult:
    primary: tuple[LocalizationHit, ...] = ()
    secondary: tuple[LocalizationHit, ...] = ()
    effects: tuple[LocalizationHit, ...] = ()

    @property
    def empty(self) -> bool:
        return not self.primary and not self.secondary

    def to_dict(self) -> dict[str, Any]:
        return {
            "primary": [h.to_dict() for h in self.primary],
            "secondary": [h.to_dict() for h in self.secondary],
            "effects": [h.to_dict() for h in self.effects],
        }


def _ranked(sums: Mapping[str, float], kinds: Mapping[str, str], top: float) -> tuple[LocalizationHit, ...]:
    hits = [LocalizationHit(eid, kinds[eid], s / top) for eid, s in sums.items()]
    hits.sort(key=lambda h: (-h.score, h.element_id))
    return tuple(hits)


def localize_failure_cause(kb: KnowledgeBase, generalized: GeneralizedComplaint) -> LocalizationResult:
    """Per-element sums of match scores, scaled so the top listed element is 1.0.

    Requirements, components, functions, processes and actors form the
    primary list; environmental factors and events the secondary list.
    Effect hits are kept apart, scaled among themselves.
    """
    sums: dict[str, list[float]] = defaultdict(list)
    for m in generalized.matched_terms:
        sums[m.element_id].append(m.score)
    primary: dict[str, float] = {}
    secondary: dict[str, float] = {}
    effects: dict[str, float] = {}
    kinds: dict[str, str] = {}
    for eid, scores in sums.items():
        kind = kb.get(eid).kind
        total = math.fsum(scores)
        if kind in PRIMARY_KINDS:
            primary[eid], kinds[eid] = total, PRIMARY_KINDS[kind]
        elif kind in SECONDARY_KINDS:
            secondary[eid], kinds[eid] = total, SECONDARY_KINDS[kind]
        elif kind is ElementKind.EFFECT:
            effects[eid], kinds[eid] = total, "effect"
    top = max([*primary.values(), *secondary.values()], default=0.0)
    top_effect = max(effects.values(), default=0.0)
    return LocalizationResult(
        primary=_ranked(primary, kinds, top) if top else (),
        secondary=_ranked(secondary, kinds, top) if top else (),
        effects=_ranked(effects, kinds, top_effect) if top_effect else (),
    )


def occurrence_from_priority(value: float) -> int:
    # half-up rounding of 1 + 9 * priority
    return clamp_factor(math.floor(1 + 9 * value + 0.5))


def _residual_terms(generalized: GeneralizedComplaint, config: Config) -> tuple[str, ...]:
    lexicon_words = {w for term in (*config.safety_lexicon, *config.severity_lexicon) for w in words_or_empty(term)}
    out: list[str] = []
    for i in generalized.unmatched_positions():
        tok = generalized.tokens[i]
        if tok not in lexicon_words and tok not in out:
            out.append(tok)
    return tuple(out)


def words_or_empty(text: str) -> list[str]:
    try:
        return words(text)
    except EmptyText:
        return []


def to_actual_record(
    kb: KnowledgeBase,
    complaint: Complaint,
    generalized: GeneralizedComplaint,
    localization: LocalizationResult,
    priority: Priority,
    config: Config | None = None,
) -> FailureRecord:
    """Unify a localized complaint into the shared failure-record schema.

    Cause: the top environment/event hit when it scores at least as high as
    the top primary hit, otherwise the top primary hit other than the chosen
    impact. Impact: the top function hit, else the top primary hit, else the
    cause itself. Actors cannot be causes or impacts and are skipped.
    A complaint with no usable hit becomes a placeholder record.
    """
    config = config or Config()
    eligible = [h for h in localization.primary if h.kind != "actor"]
    impact = next((h for h in eligible if h.kind == "function"), eligible[0] if eligible else None)
    top_secondary = localization.secondary[0] if localization.secondary else None
    if top_secondary and (not eligible or top_secondary.score >= eligible[0].score):
        cause = top_secondary
    else:
        cause = next((h for h in eligible if impact is None or h.element_id != impact.element_id), impact)
    if impact is None:
        impact = cause

    occurrence = occurrence_from_priority(priority.value)
    detection = clamp_factor(config.risk.default_detection)
    effects = tuple(h.element_id for h in localization.effects[:1])
    description = " ".join(complaint.text.split())

    if cause is None or impact is None:
        consequence = ConsequenceRef(ConsequenceClass.TECHNICAL_PRODUCT, None)
        severity = clamp_factor(config.risk.severity_base[consequence.cls.value])
        return FailureRecord(
            id=f"actual:{complaint.id}",
            general_description=description,
            cause_category=CategoryRef("event", None),
            impact_category=CategoryRef("event", None),
            consequence_category=consequence,
            failure_type=classify_failure(ElementKind.EVENT, ElementKind.EVENT),
            risk=RiskScore(severity, occurrence, detection),
            provenance=Provenance.ACTUAL,
            source_id=complaint.id,
            effects=effects,
            placeholder=True,
            residual_terms=_residual_terms(generalized, config),
        )

    cause_el, impact_el = kb.get(cause.element_id), kb.get(impact.element_id)
    consequence = consequence_of(kb, impact_el.id)
    return FailureRecord(
        id=f"actual:{complaint.id}",
        general_description=description,
        cause_category=CategoryRef(CATEGORY_OF_KIND[cause_el.kind], cause_el.id),
        impact_category=CategoryRef(CATEGORY_OF_KIND[impact_el.kind], impact_el.id),
        consequence_category=consequence,
        failure_type=classify_failure(cause_el.kind, impact_el.kind, dict(cause_el.attributes)),
        risk=RiskScore(clamp_factor(config.risk.severity_base[consequence.cls.value]), occurrence, detection),
        provenance=Provenance.ACTUAL,
        source_id=complaint.id,
        effects=effects,
        residual_terms=_residual_terms(generalized, config),
    )


@dataclass(frozen=True)
class CorrectiveAction:
    category: str
    action_text: str
    catalog_key: str

    def to_dict(self) -> dict[str, str]:
        return {"category": self.category, "action_text": self.action_text, "catalog_key": self.catalog_key}


class _TemplateVars(dict):
    def __missing__(self, key: str) -> str:
        return "{" + key + "}"


def suggest_corrective_actions(
    record: FailureRecord,
    catalog: Sequence[CatalogEntry] | None,
    kb: KnowledgeBase | None = None,
) -> list[CorrectiveAction]:
    """Catalog entries for the record's cause category, in catalog order.

    ``{element}`` expands to the cause element's name and ``{effect}`` to the
    first effect's name; without a knowledge base the ids are used.
    """
    if catalog is None:
        raise MissingCatalog("no corrective-action catalog configured")

    def name_of(eid: str | None, fallback: str) -> str:
        if eid is None:
            return fallback
        if kb is not None and eid in kb:
            return kb.get(eid).name
        return eid

    values = _TemplateVars(
        element=name_of(record.cause_category.element_id, "unknown " + record.cause_category.kind),
        effect=name_of(record.effects[0] if record.effects else None, "the observed effect"),
    )
    return [
        CorrectiveAction(entry.category, entry.template.format_map(values), entry.key)
        for entry in catalog
        if entry.category == record.cause_category.kind
    ]


@dataclass(frozen=True)
class ComplaintResult:
    complaint: Complaint
    generalized: GeneralizedComplaint
    priority: Priority
    localization: LocalizationResult
    record: FailureRecord
    actions: tuple[CorrectiveAction, ...] = field(default=())

    def details(self) -> dict[str, Any]:
        return {
            "complaint_id": self.complaint.id,
            "generalized": self.generalized.to_dict(),
            "priority": self.priority.to_dict(),
            "localization": self.localization.to_dict(),
            "corrective_actions": [a.to_dict() for a in self.actions],
            "record_id": self.record.id,
        }


def process_complaint(
    kb: KnowledgeBase,
    complaint: Complaint,
    config: Config | None = None,
    index: AliasIndex | None = None,
) -> ComplaintResult:
    config = config or Config()
    index = index or AliasIndex(kb, config.stopwords)
    tokens = tokenize(complaint.text, config.stopwords)
    generalized = generalize(kb, tokens, complaint.id, index=index)
    priority = compute_priority(complaint, generalized, config)
    localization = localize_failure_cause(kb, generalized)
    record = to_actual_record(kb, complaint, generalized, localization, priority, config)
    actions = suggest_corrective_actions(record, config.action_catalog, kb)
    return ComplaintResult(complaint, generalized, priority, localization, record, tuple(actions))


def ingest(kb: KnowledgeBase, complaints: Iterable[Complaint], config: Config | None = None) -> list[ComplaintResult]:
    """Process a batch; results are ordered by complaint id."""
    config = config or Config()
    index = AliasIndex(kb, config.stopwords)
    batch = sorted(complaints, key=lambda c: c.id)
    seen: set[str] = set()
    for c in batch:
        if c.id in seen:
            raise InputFormatError(f"duplicate complaint id {c.id!r}")
        seen.add(c.id)
    return [process_complaint(kb, c, config, index) for c in batch]
