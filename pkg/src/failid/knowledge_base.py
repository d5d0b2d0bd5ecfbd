"""Typed, versioned knowledge graph of a product system and its environment.

Elements are the nodes of the four linked views (product, environment,
events, effects) plus actors, processes, requirements and stakeholders.
Links are typed edges whose (source kind, target kind) pairs are fixed by
:data:`LINK_RULES`. Every successful mutation bumps ``version`` by one and
appends an audit entry; a rejected mutation leaves the store untouched.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Iterable, Iterator, Mapping

from .errors import (
    CycleIntroduced,
    DuplicateId,
    DuplicateLink,
    InputFormatError,
    KindConstraintViolated,
    MalformedElement,
    UnknownElement,
    UnknownEndpoint,
)
from .serialization import Clock, digest, wall_clock


class ElementKind(str, Enum):
    COMPONENT = "Component"
    FUNCTION = "Function"
    EVENT = "Event"
    EFFECT = "Effect"
    ENVIRONMENTAL_FACTOR = "EnvironmentalFactor"
    ACTOR = "Actor"
    PROCESS = "Process"
    REQUIREMENT = "Requirement"
    STAKEHOLDER = "Stakeholder"


class LinkKind(str, Enum):
    REALIZES = "Realizes"
    CAUSES = "Causes"
    RESULTS_IN = "ResultsIn"
    TRIGGERS = "Triggers"
    INFLUENCES = "Influences"
    PRECEDES = "Precedes"
    REQUIRES = "Requires"
    PERFORMS = "Performs"
    USES = "Uses"
    PART_OF = "PartOf"


K = ElementKind
_ALL = frozenset(ElementKind)
_NON_EFFECT = _ALL - {K.EFFECT}

# Allowed (source kinds, target kinds) per link kind. Triggers takes several
# alternative pairs, so every rule is a list of alternatives.
LINK_RULES: dict[LinkKind, list[tuple[frozenset[ElementKind], frozenset[ElementKind]]]] = {
    LinkKind.REALIZES: [(frozenset({K.COMPONENT}), frozenset({K.FUNCTION}))],
    LinkKind.CAUSES: [(_NON_EFFECT, frozenset({K.EFFECT}))],
    LinkKind.RESULTS_IN: [(frozenset({K.EFFECT}), _NON_EFFECT)],
    LinkKind.TRIGGERS: [
        (frozenset({K.EVENT}), frozenset({K.EFFECT, K.EVENT})),
        (frozenset({K.EFFECT}), frozenset({K.EFFECT})),
    ],
    LinkKind.INFLUENCES: [
        (frozenset({K.ENVIRONMENTAL_FACTOR}), frozenset({K.COMPONENT, K.FUNCTION, K.EVENT, K.EFFECT}))
    ],
    LinkKind.PRECEDES: [(frozenset({K.EVENT}), frozenset({K.EVENT}))],
    LinkKind.REQUIRES: [(frozenset({K.FUNCTION}), frozenset({K.REQUIREMENT}))],
    LinkKind.PERFORMS: [(frozenset({K.ACTOR}), frozenset({K.PROCESS}))],
    LinkKind.USES: [(frozenset({K.PROCESS}), frozenset({K.FUNCTION}))],
    LinkKind.PART_OF: [(frozenset({K.COMPONENT}), frozenset({K.COMPONENT}))],
}

ACYCLIC_KINDS = frozenset({LinkKind.PART_OF, LinkKind.PRECEDES})


def kind_allowed(kind: LinkKind, source: ElementKind, target: ElementKind) -> bool:
    return any(source in src and target in dst for src, dst in LINK_RULES[kind])


def normalize_alias(alias: str) -> str:
    return " ".join(alias.lower().split())


@dataclass(frozen=True)
class Element:
    id: str
    kind: ElementKind
    name: str
    aliases: tuple[str, ...] = ()
    attributes: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", ElementKind(self.kind))
        seen: list[str] = []
        for alias in self.aliases:
            norm = normalize_alias(alias)
            if norm not in seen:
                seen.append(norm)
        object.__setattr__(self, "aliases", tuple(seen))
        object.__setattr__(self, "attributes", {str(k): str(v) for k, v in dict(self.attributes).items()})

    def problems(self) -> list[str]:
        out = []
        if not isinstance(self.id, str) or not self.id.strip():
            out.append("empty id")
        if not self.name.strip():
            out.append("empty name")
        if any(not a for a in self.aliases):
            out.append("empty alias")
        return out

    def with_alias(self, alias: str) -> Element:
        return Element(self.id, self.kind, self.name, self.aliases + (alias,), self.attributes)

    def to_dict(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "kind": self.kind.value,
            "name": self.name,
            "aliases": list(self.aliases),
            "attributes": dict(sorted(self.attributes.items())),
        }

    @classmethod
    def from_dict(cls, raw: Mapping[str, Any]) -> Element:
        try:
            return cls(
                id=raw["id"],
                kind=ElementKind(raw["kind"]),
                name=raw["name"],
                aliases=tuple(raw.get("aliases", ())),
                attributes=raw.get("attributes", {}),
            )
        except (KeyError, ValueError, TypeError, AttributeError) as exc:
            raise InputFormatError(f"bad element record {raw!r}: {exc}") from None


@dataclass(frozen=True, order=True)
class Link:
    source: str
    target: str
    kind: LinkKind

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", LinkKind(self.kind))

    def sort_key(self) -> tuple[str, str, str]:
        return (self.source, self.target, self.kind.value)

    def to_dict(self) -> dict[str, str]:
        return {"from": self.source, "to": self.target, "kind": self.kind.value}

    @classmethod
    def from_dict(cls, raw: Mapping[str, Any]) -> Link:
        try:
            return cls(raw["from"], raw["to"], LinkKind(raw["kind"]))
        except (KeyError, ValueError, TypeError) as exc:
            raise InputFormatError(f"bad link record {raw!r}: {exc}") from None


@dataclass(frozen=True)
class Violation:
    code: str
    subject: str
    detail: str = ""

    def to_dict(self) -> dict[str, str]:
        return {"code": self.code, "subject": self.subject, "detail": self.detail}


@dataclass
class ValidationReport:
    violations: list[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __len__(self) -> int:
        return len(self.violations)

    def codes(self) -> list[str]:
        return [v.code for v in self.violations]

    def to_dict(self) -> dict[str, Any]:
        return {"violations": [v.to_dict() for v in self.violations]}


@dataclass(frozen=True)
class AuditEntry:
    version: int
    timestamp: str
    operation: str
    digest: str
    context: Mapping[str, str] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return {
            "version": self.version,
            "timestamp": self.timestamp,
            "operation": self.operation,
            "digest": self.digest,
            "context": dict(self.context),
        }


def find_cycle(nodes: Iterable[str], edges: Iterable[tuple[str, str]]) -> list[str] | None:
    """Return one directed cycle as a node list (first node repeated last), or None."""
    adj: dict[str, list[str]] = defaultdict(list)
    for a, b in edges:
        adj[a].append(b)
    for targets in adj.values():
        targets.sort()
    done: set[str] = set()
    for root in sorted(set(nodes) | set(adj)):
        if root in done:
            continue
        path = [root]
        on_path = {root}
        iters = [iter(adj.get(root, ()))]
        while iters:
            nxt = next(iters[-1], None)
            if nxt is None:
                iters.pop()
                node = path.pop()
                on_path.discard(node)
                done.add(node)
            elif nxt in on_path:
                return path[path.index(nxt):] + [nxt]
            elif nxt not in done:
                path.append(nxt)
                on_path.add(nxt)
                iters.append(iter(adj.get(nxt, ())))
    return None


class KnowledgeBase:
    """Element and link store with referential integrity and an audit trail.

    Single writer: callers serialize mutations. Readers that need isolation
    take a :meth:`snapshot`.
    """

    def __init__(self, clock: Clock | None = None):
        self.clock: Clock = clock or wall_clock
        self.version = 0
        self.audit: list[AuditEntry] = []
        self._elements: dict[str, Element] = {}
        self._links: set[Link] = set()
        self._out: dict[str, set[Link]] = defaultdict(set)
        self._in: dict[str, set[Link]] = defaultdict(set)

    # -- queries -----------------------------------------------------------

    def __contains__(self, element_id: object) -> bool:
        return element_id in self._elements

    def __len__(self) -> int:
        return len(self._elements)

    def get(self, element_id: str) -> Element:
        try:
            return self._elements[element_id]
        except KeyError:
            raise UnknownElement(f"no element {element_id!r}") from None

    @property
    def elements(self) -> list[Element]:
        return [self._elements[k] for k in sorted(self._elements)]

    @property
    def links(self) -> list[Link]:
        return sorted(self._links, key=Link.sort_key)

    def ids_of_kind(self, kind: ElementKind) -> list[str]:
        return sorted(i for i, e in self._elements.items() if e.kind is kind)

    def has_link(self, source: str, target: str, kind: LinkKind) -> bool:
        return Link(source, target, kind) in self._links

    def out_links(self, element_id: str, kind: LinkKind | None = None) -> list[Link]:
        links = self._out.get(element_id, ())
        return sorted((l for l in links if kind is None or l.kind is kind), key=Link.sort_key)

    def in_links(self, element_id: str, kind: LinkKind | None = None) -> list[Link]:
        links = self._in.get(element_id, ())
        return sorted((l for l in links if kind is None or l.kind is kind), key=Link.sort_key)

    def neighbors(
        self,
        element_id: str,
        kind_filter: LinkKind | None = None,
        direction: str = "out",
    ) -> list[tuple[Link, Element]]:
        """Links touching ``element_id`` paired with the element on the other end.

        Sorted by the other element's id, then link kind name.
        """
        if element_id not in self._elements:
            raise UnknownElement(f"no element {element_id!r}")
        if direction not in ("in", "out", "both"):
            raise ValueError(f"direction must be in, out or both, not {direction!r}")
        found: list[tuple[str, Link]] = []
        if direction in ("out", "both"):
            found += [(l.target, l) for l in self._out.get(element_id, ())]
        if direction in ("in", "both"):
            # a self-loop is already listed once from the out side
            found += [
                (l.source, l)
                for l in self._in.get(element_id, ())
                if direction == "in" or l.source != element_id
            ]
        found = [(other, l) for other, l in found if kind_filter is None or l.kind is kind_filter]
        found.sort(key=lambda p: (p[0], p[1].kind.value, p[1].source, p[1].target))
        return [(l, self._elements[other]) for other, l in found]

    # -- mutations ---------------------------------------------------------

    def _record(self, operation: str, payload: Any, context: Mapping[str, str] | None = None) -> AuditEntry:
        self.version += 1
        entry = AuditEntry(self.version, self.clock(), operation, digest(payload), dict(context or {}))
        self.audit.append(entry)
        return entry

    def add_element(self, element: Element, context: Mapping[str, str] | None = None) -> AuditEntry:
        problems = element.problems()
        if problems:
            raise MalformedElement(f"element {element.id!r}: {', '.join(problems)}")
        if element.id in self._elements:
            raise DuplicateId(f"element id {element.id!r} already present")
        self._elements[element.id] = element
        return self._record("add_element", element.to_dict(), context)

    def add_alias(self, element_id: str, alias: str, context: Mapping[str, str] | None = None) -> AuditEntry:
        current = self.get(element_id)
        if not normalize_alias(alias):
            raise MalformedElement(f"element {element_id!r}: empty alias")
        updated = current.with_alias(alias)
        self._elements[element_id] = updated
        return self._record("add_alias", {"id": element_id, "alias": normalize_alias(alias)}, context)

    def remove_element(self, element_id: str, context: Mapping[str, str] | None = None) -> AuditEntry:
        element = self.get(element_id)
        for link in list(self._out.get(element_id, ())) + list(self._in.get(element_id, ())):
            self._drop_link(link)
        del self._elements[element_id]
        self._out.pop(element_id, None)
        self._in.pop(element_id, None)
        return self._record("remove_element", element.to_dict(), context)

    def check_link(self, link: Link) -> None:
        """Raise the error :meth:`link_elements` would raise, without mutating."""
        missing = [e for e in (link.source, link.target) if e not in self._elements]
        if missing:
            raise UnknownEndpoint(f"{link.kind.value} {link.source}->{link.target}: unknown {', '.join(missing)}")
        src, dst = self._elements[link.source].kind, self._elements[link.target].kind
        if not kind_allowed(link.kind, src, dst):
            raise KindConstraintViolated(f"{link.kind.value} does not allow {src.value} -> {dst.value}")
        if link in self._links:
            raise DuplicateLink(f"{link.kind.value} {link.source}->{link.target} already present")
        if link.kind in ACYCLIC_KINDS and self._reaches(link.target, link.source, link.kind):
            raise CycleIntroduced(f"{link.kind.value} {link.source}->{link.target} closes a cycle")

    def link_elements(self, link: Link, context: Mapping[str, str] | None = None) -> AuditEntry:
        self.check_link(link)
        self._links.add(link)
        self._out[link.source].add(link)
        self._in[link.target].add(link)
        return self._record("link_elements", link.to_dict(), context)

    def unlink(self, link: Link, context: Mapping[str, str] | None = None) -> AuditEntry:
        if link not in self._links:
            raise UnknownEndpoint(f"no link {link.kind.value} {link.source}->{link.target}")
        self._drop_link(link)
        return self._record("unlink", link.to_dict(), context)

    def _drop_link(self, link: Link) -> None:
        self._links.discard(link)
        self._out[link.source].discard(link)
        self._in[link.target].discard(link)

    def _reaches(self, start: str, goal: str, kind: LinkKind) -> bool:
        seen = {start}
        stack = [start]
        while stack:
            node = stack.pop()
            if node == goal:
                return True
            for l in self._out.get(node, ()):
                if l.kind is kind and l.target not in seen:
                    seen.add(l.target)
                    stack.append(l.target)
        return False

    # -- whole-store operations -------------------------------------------

    def validate(self) -> ValidationReport:
        """Collect every invariant violation; never raises."""
        report = ValidationReport()
        for element in self.elements:
            probs = element.problems()
            if probs:
                report.violations.append(Violation("MalformedElement", element.id, ", ".join(probs)))
        for link in self.links:
            subject = f"{link.kind.value}:{link.source}->{link.target}"
            missing = [e for e in (link.source, link.target) if e not in self._elements]
            if missing:
                report.violations.append(Violation("UnknownEndpoint", subject, "unknown " + ", ".join(missing)))
                continue
            src, dst = self._elements[link.source].kind, self._elements[link.target].kind
            if not kind_allowed(link.kind, src, dst):
                report.violations.append(Violation("KindConstraintViolated", subject, f"{src.value} -> {dst.value}"))
        for kind in sorted(ACYCLIC_KINDS, key=lambda k: k.value):
            edges = [(l.source, l.target) for l in self._links if l.kind is kind]
            cycle = find_cycle([], edges)
            if cycle:
                report.violations.append(Violation("CycleIntroduced", kind.value, " -> ".join(cycle)))
        return report

    def snapshot(self) -> KnowledgeBase:
        """Independent copy; elements and links are immutable so only containers are copied."""
        other = KnowledgeBase(self.clock)
        other.version = self.version
        other.audit = list(self.audit)
        other._elements = dict(self._elements)
        other._links = set(self._links)
        other._out = defaultdict(set, {k: set(v) for k, v in self._out.items()})
        other._in = defaultdict(set, {k: set(v) for k, v in self._in.items()})
        return other

    def structurally_equal(self, other: KnowledgeBase) -> bool:
        return self.to_dict() == other.to_dict()

    def to_dict(self) -> dict[str, Any]:
        return {
            "elements": [e.to_dict() for e in self.elements],
            "links": [l.to_dict() for l in self.links],
            "version": self.version,
        }

    @classmethod
    def from_dict(cls, raw: Mapping[str, Any], clock: Clock | None = None) -> KnowledgeBase:
        """Load a stored state verbatim, without enforcing invariants.

        Dangling links, kind violations and cycles survive loading so that
        :meth:`validate` can report them. Duplicate ids are a format error.
        """
        if not isinstance(raw, Mapping):
            raise InputFormatError("knowledge base document must be an object")
        kb = cls(clock)
        for item in raw.get("elements", []):
            element = Element.from_dict(item)
            if element.id in kb._elements:
                raise InputFormatError(f"duplicate element id {element.id!r}")
            kb._elements[element.id] = element
        for item in raw.get("links", []):
            link = Link.from_dict(item)
            kb._links.add(link)
            kb._out[link.source].add(link)
            kb._in[link.target].add(link)
        version = raw.get("version")
        if version is None:
            version = len(kb._elements) + len(kb._links)
        if not isinstance(version, int) or version < 0:
            raise InputFormatError(f"bad version {version!r}")
        kb.version = version
        return kb

    def __iter__(self) -> Iterator[Element]:
        return iter(self.elements)

    def __deepcopy__(self, memo: dict[int, Any]) -> KnowledgeBase:
        return self.snapshot()
