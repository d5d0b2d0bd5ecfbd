"""Report documents and their plain-text rendering.

Every output file is a JSON document with a ``kind`` field; :func:`render_text`
turns any of them into a human-readable summary.
"""

from __future__ import annotations

from typing import Any, Callable, Mapping

from .errors import InputFormatError
from .serialization import canonical_json


def document(kind: str, generated_at: str, **body: Any) -> dict[str, Any]:
    return {"kind": kind, "generated_at": generated_at, **body}


def _records_text(doc: Mapping[str, Any]) -> list[str]:
    lines = [f"{doc['kind']}: {len(doc['records'])} record(s)"]
    for r in doc["records"]:
        risk = r["risk"]
        lines.append(f"- {r['id']}")
        lines.append(f"    {r['general_description']}")
        lines.append(
            f"    cause {r['cause_category']['kind']}:{r['cause_category']['element']}"
            f"  impact {r['impact_category']['kind']}:{r['impact_category']['element']}"
            f"  consequence {r['consequence_category']['class']}"
        )
        flag = "  [placeholder]" if r.get("placeholder") else ""
        lines.append(
            f"    {r['failure_type']}  S{risk['severity']} O{risk['occurrence']} D{risk['detection']}"
            f"  RPN {risk['rpn']}{flag}"
        )
    return lines


def _correspondence_text(doc: Mapping[str, Any]) -> list[str]:
    rep = doc["report"]
    lines = [
        f"degree of correspondence: {rep['degree_of_correspondence']:.4f}",
        f"coverage of potential failures: {rep['coverage_of_potential']:.4f} of {rep['potential_count']}",
        f"threshold: {rep['threshold']}",
        "best matches:",
    ]
    for m in rep["best_matches"]:
        mark = "  UNMATCHED" if m["actual"] in rep["unmatched_actuals"] else ""
        lines.append(f"  {m['actual']} -> {m['potential'] or '-'}  {m['total']:.4f}{mark}")
    return lines


def _improvement_text(doc: Mapping[str, Any]) -> list[str]:
    lines = [f"improvement run: {len(doc['rounds'])} round(s), converged: {doc['converged']}"]
    for rnd in doc["rounds"]:
        lines.append(
            f"round {rnd['round']}: degree {rnd['degree_before']:.4f} -> {rnd['degree_after']:.4f}, "
            f"{len(rnd['proposals'])} proposal(s)"
        )
        for p in rnd["proposals"]:
            lines.append(f"  [{p['status']}] {p['kind']} {p['id']} from {p['source']}: {p['rationale']}")
            if p.get("error"):
                lines.append(f"      error: {p['error']}")
    return lines


def _validation_text(doc: Mapping[str, Any]) -> list[str]:
    violations = doc["report"]["violations"]
    if not violations:
        return [f"{doc.get('subject', 'project')}: valid"]
    lines = [f"{doc.get('subject', 'project')}: {len(violations)} violation(s)"]
    lines += [f"  {v['code']} {v['subject']} {v['detail']}".rstrip() for v in violations]
    return lines


def _details_text(doc: Mapping[str, Any]) -> list[str]:
    lines = [f"complaint details: {len(doc['complaints'])} complaint(s)"]
    for d in doc["complaints"]:
        pr = d["priority"]
        lines.append(f"- {d['complaint_id']}: priority {pr['value']:.3f}")
        for hit in d["localization"]["primary"] + d["localization"]["secondary"]:
            lines.append(f"    {hit['kind']:<12} {hit['element']}  {hit['score']:.3f}")
        for a in d["corrective_actions"]:
            lines.append(f"    action: {a['action_text']}")
    return lines


RENDERERS: dict[str, Callable[[Mapping[str, Any]], list[str]]] = {
    "potential-records": _records_text,
    "actual-records": _records_text,
    "correspondence": _correspondence_text,
    "improvement": _improvement_text,
    "validation": _validation_text,
    "complaint-details": _details_text,
}


def render_text(doc: Mapping[str, Any]) -> str:
    kind = doc.get("kind") if isinstance(doc, Mapping) else None
    if kind not in RENDERERS:
        raise InputFormatError(f"not a report document (kind={kind!r})")
    try:
        return "\n".join(RENDERERS[kind](doc)) + "\n"
    except (KeyError, TypeError) as exc:
        raise InputFormatError(f"malformed {kind} document: {exc}") from None


def render(doc: Mapping[str, Any], fmt: str = "text") -> str:
    if fmt == "structured":
        return canonical_json(doc)
    if fmt == "text":
        return render_text(doc)
    raise ValueError(f"unknown format {fmt!r}")
