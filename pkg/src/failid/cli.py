"""Command-line front end.

Exit status: 0 success, 1 validation failure, 2 input-format error,
3 internal error. On failure one JSON line ``{"error": <category>,
"message": ...}`` goes to stderr.
"""

from __future__ import annotations

import argparse
import json
import shutil
import sys
import uuid
from importlib import resources
from pathlib import Path
from typing import Any, Callable, Sequence

from .complaints import ingest
from .config import Config
from .correspondence import degree_of_correspondence
from .errors import DuplicateId, FailidError, InputFormatError, UnknownElement, ValidationFailed
from .failure_network import analyze_scenario
from .improvement import AcceptFilter, UpdateProposal, improve
from .knowledge_base import Element, ElementKind, KnowledgeBase, Link, LinkKind
from .project import ProjectLayout, load_complaints, load_scenarios_file, scenarios_to_dict
from .records import Provenance, records_from_dict
from .report import document, render
from .scenario import build_scenario, validate_scenario
from .serialization import Clock, fixed_clock, read_json, wall_clock, write_json


class Context:
    def __init__(self, args: argparse.Namespace):
        self.args = args
        self.project = ProjectLayout(Path(args.project).resolve(), args.lock_timeout)
        self.clock: Clock = fixed_clock(args.fixed_time) if args.fixed_time else wall_clock

    def now(self) -> str:
        return self.clock()

    def config(self) -> Config:
        return self.project.load_config()

    def kb(self) -> KnowledgeBase:
        return self.project.load_kb(self.clock)

    def out(self, text: str) -> None:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


class ProjectExists(ValidationFailed):
    category = "ProjectExists"


# -- kb --------------------------------------------------------------------


def cmd_kb_init(ctx: Context) -> int:
    p = ctx.project
    if p.kb_file.exists() and not ctx.args.force:
        raise ProjectExists(f"{p.kb_file} already exists (use --force to overwrite)")
    with p.locked():
        p.root.mkdir(parents=True, exist_ok=True)
        p.audit_file.unlink(missing_ok=True)
        if ctx.args.example:
            src = resources.files("failid") / "data" / "worked_example"
            for name in ("kb.json", "scenarios.json", "complaints.jsonl"):
                with resources.as_file(src / name) as path:
                    shutil.copyfile(path, p.root / name)
        else:
            write_json(p.kb_file, KnowledgeBase().to_dict())
            p.save_scenarios([])
        if not p.config_file.exists():
            write_json(p.config_file, Config().to_dict())
    ctx.out(f"initialised project at {p.root}")
    return 0


def _validation_doc(ctx: Context, subject: str, report: Any) -> dict[str, Any]:
    return document("validation", ctx.now(), subject=subject, report=report.to_dict())


def cmd_kb_import(ctx: Context) -> int:
    """Load verbatim into an empty kb (or with --replace); otherwise merge through the checked API."""
    p = ctx.project
    incoming = KnowledgeBase.from_dict(read_json(ctx.project.resolve(ctx.args.file)), ctx.clock)
    with p.locked():
        current = ctx.kb() if p.kb_file.exists() else KnowledgeBase(ctx.clock)
        start = len(current.audit)
        if ctx.args.replace or (current.version == 0 and len(current) == 0):
            report = incoming.validate()
            if not report.ok:
                ctx.out(render(_validation_doc(ctx, str(ctx.args.file), report), ctx.args.format))
                raise ValidationFailed(f"{ctx.args.file}: {len(report)} violation(s); nothing imported")
            incoming.audit = list(current.audit)
            p.save_kb(incoming, start)
            ctx.out(f"imported {len(incoming)} element(s), {len(incoming.links)} link(s); version {incoming.version}")
            return 0
        work = current.snapshot()
        context = {"import": str(ctx.args.file)}
        for element in incoming.elements:
            if element.id in work and work.get(element.id) == element:
                continue
            work.add_element(element, context)
        for link in incoming.links:
            if not work.has_link(link.source, link.target, link.kind):
                work.link_elements(link, context)
        p.save_kb(work, start)
    ctx.out(f"merged {ctx.args.file}; version {work.version}")
    return 0


def cmd_kb_export(ctx: Context) -> int:
    kb = ctx.kb()
    write_json(ctx.project.resolve(ctx.args.file), kb.to_dict())
    ctx.out(f"exported version {kb.version} to {ctx.args.file}")
    return 0


def cmd_kb_validate(ctx: Context) -> int:
    report = ctx.kb().validate()
    ctx.out(render(_validation_doc(ctx, "kb", report), ctx.args.format))
    return 0 if report.ok else 1


def _parse_attrs(pairs: Sequence[str]) -> dict[str, str]:
    attrs = {}
    for pair in pairs:
        key, sep, value = pair.partition("=")
        if not sep or not key:
            raise InputFormatError(f"attribute {pair!r} is not key=value")
        attrs[key] = value
    return attrs


def cmd_kb_add_element(ctx: Context) -> int:
    a = ctx.args
    element = Element(
        id=a.id or f"el-{uuid.uuid4().hex[:12]}",
        kind=ElementKind(a.kind),
        name=a.name,
        aliases=tuple(a.alias or ()),
        attributes=_parse_attrs(a.attr or ()),
    )
    with ctx.project.locked():
        kb = ctx.kb()
        start = len(kb.audit)
        kb.add_element(element)
        ctx.project.save_kb(kb, start)
    ctx.out(f"added {element.id}; version {kb.version}")
    return 0


def cmd_kb_link(ctx: Context) -> int:
    link = Link(ctx.args.source, ctx.args.target, LinkKind(ctx.args.kind))
    with ctx.project.locked():
        kb = ctx.kb()
        start = len(kb.audit)
        kb.link_elements(link)
        ctx.project.save_kb(kb, start)
    ctx.out(f"linked {link.source} -{link.kind.value}-> {link.target}; version {kb.version}")
    return 0


# -- scenario ----------------------------------------------------------------


def cmd_scenario_build(ctx: Context) -> int:
    a = ctx.args
    config = ctx.config()
    with ctx.project.locked():
        kb = ctx.kb()
        scenarios = {s.id: s for s in ctx.project.load_scenarios()}
        scenario = build_scenario(
            kb,
            a.function,
            a.depth or config.scenario_depth,
            scenario_id=a.id,
            name=a.name,
            criticality=a.criticality,
        )
        if scenario.id in scenarios and not a.replace:
            raise DuplicateId(f"scenario {scenario.id!r} exists (use --replace)")
        scenarios[scenario.id] = scenario
        ctx.project.save_scenarios(scenarios.values())
    ctx.out(f"scenario {scenario.id}: {len(scenario.elements)} element(s), {len(scenario.event_order)} ordered event pair(s)")
    return 0


def _selected_scenarios(ctx: Context, wanted: Sequence[str] | None) -> list[Any]:
    scenarios = ctx.project.load_scenarios()
    if not wanted:
        return scenarios
    by_id = {s.id: s for s in scenarios}
    missing = [w for w in wanted if w not in by_id]
    if missing:
        raise UnknownElement(f"no scenario {', '.join(missing)}")
    return [by_id[w] for w in wanted]


def cmd_scenario_validate(ctx: Context) -> int:
    kb = ctx.kb()
    status = 0
    for scenario in _selected_scenarios(ctx, ctx.args.scenario):
        report = validate_scenario(kb, scenario)
        ctx.out(render(_validation_doc(ctx, f"scenario {scenario.id}", report), ctx.args.format))
        status = status or (0 if report.ok else 1)
    return status


def cmd_scenario_export(ctx: Context) -> int:
    scenarios = ctx.project.load_scenarios()
    write_json(ctx.project.resolve(ctx.args.file), scenarios_to_dict(scenarios))
    ctx.out(f"exported {len(scenarios)} scenario(s) to {ctx.args.file}")
    return 0


def cmd_scenario_import(ctx: Context) -> int:
    incoming = load_scenarios_file(ctx.project.resolve(ctx.args.file))
    kb = ctx.kb()
    for s in incoming:
        report = validate_scenario(kb, s)
        if not report.ok:
            ctx.out(render(_validation_doc(ctx, f"scenario {s.id}", report), ctx.args.format))
            raise ValidationFailed(f"scenario {s.id} is invalid; nothing imported")
    with ctx.project.locked():
        current = {} if ctx.args.replace else {s.id: s for s in ctx.project.load_scenarios()}
        current.update({s.id: s for s in incoming})
        ctx.project.save_scenarios(current.values())
    ctx.out(f"imported {len(incoming)} scenario(s)")
    return 0


# -- analysis ------------------------------------------------------------------


def cmd_analyze(ctx: Context) -> int:
    a = ctx.args
    config = ctx.config()
    kb = ctx.kb()
    chosen = _selected_scenarios(ctx, a.scenario)
    hops = a.max_effect_hops or config.max_effect_hops
    records = []
    for s in sorted(chosen, key=lambda s: s.id):
        records += analyze_scenario(kb, s, hops, config.risk)
    out = ctx.project.resolve(a.out) if a.out else ctx.project.reports_dir / (
        f"potential-{chosen[0].id}.json" if a.scenario and len(chosen) == 1 else "potential.json"
    )
    doc = document(
        "potential-records",
        ctx.now(),
        scenarios=sorted(s.id for s in chosen),
        max_effect_hops=hops,
        kb_version=kb.version,
        records=[r.to_dict() for r in sorted(records, key=lambda r: r.id)],
    )
    write_json(out, doc)
    ctx.out(f"{len(records)} potential failure record(s) -> {out}")
    return 0


def cmd_complaints_ingest(ctx: Context) -> int:
    a = ctx.args
    config = ctx.config()
    kb = ctx.kb()
    results = ingest(kb, load_complaints(ctx.project.resolve(a.corpus)), config)
    out = ctx.project.resolve(a.out) if a.out else ctx.project.reports_dir / "actual.json"
    details = ctx.project.resolve(a.details) if a.details else out.with_name(out.stem + "-details.json")
    records_doc = document(
        "actual-records", ctx.now(), kb_version=kb.version, records=[r.record.to_dict() for r in results]
    )
    details_doc = document("complaint-details", ctx.now(), complaints=[r.details() for r in results])
    write_json(details, details_doc)
    write_json(out, records_doc)
    placeholders = sum(r.record.placeholder for r in results)
    ctx.out(f"{len(results)} actual failure record(s) ({placeholders} unlocalizable) -> {out}")
    return 0


def _load_records(ctx: Context, path: str, provenance: Provenance) -> list[Any]:
    resolved = ctx.project.resolve(path)
    if resolved.exists() and resolved.stat().st_size == 0:
        return []
    raw = read_json(resolved)
    records = records_from_dict(raw)
    wrong = [r.id for r in records if r.provenance is not provenance]
    if wrong:
        raise InputFormatError(f"{path}: expected {provenance.value} records, found others: {', '.join(wrong[:3])}")
    return records


def cmd_correspond(ctx: Context) -> int:
    a = ctx.args
    config = ctx.config()
    potential = _load_records(ctx, a.potential, Provenance.POTENTIAL)
    actual = _load_records(ctx, a.actual, Provenance.ACTUAL)
    if a.scenario:
        potential = [r for r in potential if r.source_id == a.scenario]
    report = degree_of_correspondence(potential, actual, config.correspondence)
    per_scenario = {}
    if not a.scenario:
        for sid in sorted({r.source_id for r in potential}):
            subset = [r for r in potential if r.source_id == sid]
            per_scenario[sid] = degree_of_correspondence(subset, actual, config.correspondence).to_dict()
    out = ctx.project.resolve(a.out) if a.out else ctx.project.reports_dir / "correspondence.json"
    write_json(
        out,
        document("correspondence", ctx.now(), scenario=a.scenario, report=report.to_dict(), per_scenario=per_scenario),
    )
    ctx.out(f"degree of correspondence {report.degree_of_correspondence:.4f}; "
            f"{len(report.unmatched_actuals)} unmatched -> {out}")
    return 0


def _accept_filter(ctx: Context) -> AcceptFilter | None:
    a = ctx.args
    allowed: set[str] | None = None
    if a.allow_list:
        path = ctx.project.resolve(a.allow_list)
        try:
            allowed = {line.strip() for line in path.read_text(encoding="utf-8").splitlines() if line.strip()}
        except FileNotFoundError:
            raise InputFormatError(f"{path}: no such file") from None

    def accept(p: UpdateProposal) -> bool:
        if allowed is not None and p.id not in allowed and p.kind.value not in allowed:
            return False
        if a.interactive:
            sys.stdout.write(f"{p.kind.value} {json.dumps(p.payload, sort_keys=True)}\n  {p.rationale}\napply? [y/N] ")
            sys.stdout.flush()
            return sys.stdin.readline().strip().lower() in ("y", "yes")
        return True

    return accept if (allowed is not None or a.interactive) else None


def cmd_improve(ctx: Context) -> int:
    a = ctx.args
    p = ctx.project
    config = ctx.config()
    corpus = p.resolve(a.complaints) if a.complaints else p.complaints_file
    p.require(p.kb_file, corpus)
    with p.locked():
        kb = ctx.kb()
        start = len(kb.audit)
        scenarios = p.load_scenarios()
        run = improve(kb, scenarios, load_complaints(corpus), config, max_rounds=a.rounds, accept=_accept_filter(ctx))
        final = run.final
        scenario_entries = [e for rnd in run.rounds for e in rnd.audit if e.operation == "ExtendScenario"]
        out = p.resolve(a.out) if a.out else p.reports_dir / "improvement.json"
        write_json(
            out,
            document("improvement", ctx.now(), converged=run.converged, rounds=[r.to_dict() for r in run.rounds]),
        )
        p.save_scenarios(final.scenarios)
        p.save_kb(final.kb, start)
        if scenario_entries:
            p.append_audit(scenario_entries)
    ctx.out(
        f"{len(run.rounds)} round(s), converged: {run.converged}; degree "
        f"{run.rounds[0].degree_before:.4f} -> {final.degree_after:.4f} -> {out}"
    )
    return 0


def cmd_report(ctx: Context) -> int:
    ctx.out(render(read_json(ctx.project.resolve(ctx.args.file)), ctx.args.format).rstrip("\n"))
    return 0


# -- parser ----------------------------------------------------------------------


def _common(defaults: bool) -> argparse.ArgumentParser:
    parent = argparse.ArgumentParser(add_help=False)
    kw: dict[str, Any] = {} if defaults else {"default": argparse.SUPPRESS}
    parent.add_argument("-C", "--project", help="project root directory (default: .)", **({"default": "."} if defaults else kw))
    parent.add_argument("--fixed-time", help="use this timestamp instead of the wall clock", **({"default": None} if defaults else kw))
    parent.add_argument("--lock-timeout", type=float, metavar="SECONDS", help="wait this long for the project lock (default: 10)",
                        **({"default": 10.0} if defaults else kw))
    return parent


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="failid", description=__doc__.splitlines()[0], parents=[_common(True)])
    common = _common(False)
    sub = parser.add_subparsers(dest="command", required=True)

    def leaf(group: Any, name: str, func: Callable[[Context], int], help: str) -> argparse.ArgumentParser:
        p = group.add_parser(name, help=help, parents=[common])
        p.set_defaults(func=func)
        return p

    def fmt(p: argparse.ArgumentParser) -> None:
        p.add_argument("--format", choices=("text", "structured"), default="text")

    kb = sub.add_parser("kb", help="manage the knowledge base").add_subparsers(dest="kb_command", required=True)
    p = leaf(kb, "init", cmd_kb_init, "create an empty project")
    p.add_argument("--force", action="store_true")
    p.add_argument("--example", action="store_true", help="start from the bundled worked example")
    p = leaf(kb, "import", cmd_kb_import, "fill the knowledge base from a structured file")
    p.add_argument("file")
    p.add_argument("--replace", action="store_true", help="replace instead of merge")
    fmt(p)
    p = leaf(kb, "export", cmd_kb_export, "write the knowledge base to a file")
    p.add_argument("file")
    p = leaf(kb, "validate", cmd_kb_validate, "check all invariants")
    fmt(p)
    p = leaf(kb, "add-element", cmd_kb_add_element, "add one element")
    p.add_argument("--id")
    p.add_argument("--kind", required=True, choices=[k.value for k in ElementKind])
    p.add_argument("--name", required=True)
    p.add_argument("--alias", action="append")
    p.add_argument("--attr", action="append", metavar="KEY=VALUE")
    p = leaf(kb, "link", cmd_kb_link, "add one link")
    p.add_argument("--from", dest="source", required=True)
    p.add_argument("--to", dest="target", required=True)
    p.add_argument("--kind", required=True, choices=[k.value for k in LinkKind])

    sc = sub.add_parser("scenario", help="manage usage scenarios").add_subparsers(dest="scenario_command", required=True)
    p = leaf(sc, "build", cmd_scenario_build, "build a scenario around functions")
    p.add_argument("--function", action="append", required=True)
    p.add_argument("--depth", type=int)
    p.add_argument("--id")
    p.add_argument("--name")
    p.add_argument("--criticality", type=int, default=5)
    p.add_argument("--replace", action="store_true")
    p = leaf(sc, "validate", cmd_scenario_validate, "check scenarios against the knowledge base")
    p.add_argument("--scenario", action="append")
    fmt(p)
    p = leaf(sc, "export", cmd_scenario_export, "write scenarios to a file")
    p.add_argument("file")
    p = leaf(sc, "import", cmd_scenario_import, "read scenarios from a file")
    p.add_argument("file")
    p.add_argument("--replace", action="store_true")
    fmt(p)

    p = leaf(sub, "analyze", cmd_analyze, "derive potential failures")
    p.add_argument("--scenario", action="append")
    p.add_argument("--max-effect-hops", type=int)
    p.add_argument("--out")

    cp = sub.add_parser("complaints", help="process complaint corpora").add_subparsers(dest="complaints_command", required=True)
    p = leaf(cp, "ingest", cmd_complaints_ingest, "turn complaints into actual failure records")
    p.add_argument("corpus")
    p.add_argument("--out")
    p.add_argument("--details")

    p = leaf(sub, "correspond", cmd_correspond, "score potential against actual failures")
    p.add_argument("--potential", required=True)
    p.add_argument("--actual", required=True)
    p.add_argument("--scenario")
    p.add_argument("--out")

    p = leaf(sub, "improve", cmd_improve, "run the continuous-improvement loop")
    p.add_argument("--complaints")
    p.add_argument("--rounds", type=int)
    p.add_argument("--interactive", action="store_true")
    p.add_argument("--allow-list", help="file of proposal ids or kinds to accept, one per line")
    p.add_argument("--out")

    p = leaf(sub, "report", cmd_report, "render a report file")
    p.add_argument("file")
    fmt(p)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(Context(args))
    except FailidError as exc:
        sys.stderr.write(json.dumps({"error": exc.category, "message": str(exc)}) + "\n")
        return exc.exit_code
    except Exception as exc:  # noqa: BLE001
        sys.stderr.write(json.dumps({"error": "InternalError", "message": f"{type(exc).__name__}: {exc}"}) + "\n")
        return 3


if __name__ == "__main__":
    sys.exit(main())
