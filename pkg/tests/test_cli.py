from __future__ import annotations

import json
import shutil
import subprocess
import sys
from pathlib import Path

import pytest

from builders import example_dir
from failid.cli import main

T = "2026-01-01T00:00:00Z"


def run(project: Path, *args: str) -> int:
    return main(["--project", str(project), "--fixed-time", T, *args])


@pytest.fixture
def project(tmp_path: Path) -> Path:
    assert run(tmp_path, "kb", "init", "--example") == 0
    return tmp_path


def error_of(capsys) -> dict:
    return json.loads(capsys.readouterr().err.strip().splitlines()[-1])


def test_kb_validate_ok(project, capsys):
    assert run(project, "kb", "validate") == 0
    assert "valid" in capsys.readouterr().out


def test_kb_validate_reports_violations(tmp_path, capsys):
    (tmp_path / "kb.json").write_text(json.dumps({
        "elements": [{"id": "c", "kind": "Component", "name": "c"}],
        "links": [{"from": "c", "to": "x", "kind": "Realizes"}],
    }))
    assert run(tmp_path, "kb", "validate", "--format", "structured") == 1
    doc = json.loads(capsys.readouterr().out)
    assert doc["kind"] == "validation"
    assert [v["code"] for v in doc["report"]["violations"]] == ["UnknownEndpoint"]


def test_missing_kb_is_input_error(tmp_path, capsys):
    assert run(tmp_path, "kb", "validate") == 2
    assert error_of(capsys)["error"] == "MissingFiles"


def test_add_element_and_link(tmp_path, capsys):
    assert run(tmp_path, "kb", "init") == 0
    assert run(tmp_path, "kb", "add-element", "--id", "c1", "--kind", "Component", "--name", "camera", "--alias", "Cam") == 0
    assert run(tmp_path, "kb", "add-element", "--kind", "Function", "--name", "detect", "--id", "f1", "--attr", "occurrence=3") == 0
    assert run(tmp_path, "kb", "link", "--from", "c1", "--to", "f1", "--kind", "Realizes") == 0
    assert run(tmp_path, "kb", "link", "--from", "f1", "--to", "c1", "--kind", "Realizes") == 1
    assert error_of(capsys)["error"] == "KindConstraintViolated"
    kb = json.loads((tmp_path / "kb.json").read_text())
    assert kb["version"] == 3
    assert kb["elements"][0]["aliases"] == ["cam"]
    audit = (tmp_path / "audit.log").read_text().splitlines()
    assert [json.loads(a)["operation"] for a in audit] == ["add_element", "add_element", "link_elements"]
    assert run(tmp_path, "kb", "add-element", "--kind", "Actor", "--name", "anon") == 0
    assert any(e["id"].startswith("el-") for e in json.loads((tmp_path / "kb.json").read_text())["elements"])


def test_bad_json_is_input_error(project, capsys):
    (project / "broken.json").write_text("{nope")
    assert run(project, "kb", "import", "broken.json") == 2
    assert error_of(capsys)["error"] == "InputFormatError"


def test_import_with_violations_writes_nothing(project, capsys):
    before = (project / "kb.json").read_bytes()
    (project / "cyc.json").write_text(json.dumps({
        "elements": [{"id": "a", "kind": "Component", "name": "a"}, {"id": "b", "kind": "Component", "name": "b"}],
        "links": [{"from": "a", "to": "b", "kind": "PartOf"}, {"from": "b", "to": "a", "kind": "PartOf"}],
    }))
    assert run(project, "kb", "import", "cyc.json", "--replace") == 1
    assert "CycleIntroduced" in capsys.readouterr().out
    assert (project / "kb.json").read_bytes() == before


def test_import_merges_into_existing(project):
    (project / "extra.json").write_text(json.dumps({
        "elements": [{"id": "env-rain", "kind": "EnvironmentalFactor", "name": "rain", "aliases": ["rain"]}],
        "links": [{"from": "env-rain", "to": "eff-contrast-loss", "kind": "Causes"}],
    }))
    version = json.loads((project / "kb.json").read_text())["version"]
    assert run(project, "kb", "import", "extra.json") == 0
    kb = json.loads((project / "kb.json").read_text())
    assert kb["version"] == version + 2
    assert len(kb["elements"]) == 13


def test_correspond_empty_actual_file(project, capsys):
    assert run(project, "analyze") == 0
    (project / "empty.json").write_text(json.dumps({"records": []}))
    assert run(project, "correspond", "--potential", "reports/potential.json", "--actual", "empty.json") == 0
    doc = json.loads((project / "reports" / "correspondence.json").read_text())
    assert doc["report"]["degree_of_correspondence"] == 1.0
    (project / "zero.json").write_text("")
    assert run(project, "correspond", "--potential", "reports/potential.json", "--actual", "zero.json", "--out", "z.json") == 0
    assert json.loads((project / "z.json").read_text())["report"]["degree_of_correspondence"] == 1.0


def test_correspond_rejects_swapped_files(project, capsys):
    assert run(project, "analyze") == 0
    assert run(project, "complaints", "ingest", "complaints.jsonl") == 0
    code = run(project, "correspond", "--potential", "reports/actual.json", "--actual", "reports/potential.json")
    assert code == 2


def test_full_pipeline_and_improve(project, capsys):
    assert run(project, "analyze", "--scenario", "scn-highway") == 0
    pot = json.loads((project / "reports" / "potential-scn-highway.json").read_text())
    assert [r["risk"]["rpn"] for r in pot["records"]] == [225]
    assert run(project, "complaints", "ingest", "complaints.jsonl") == 0
    details = json.loads((project / "reports" / "actual-details.json").read_text())
    assert [d["complaint_id"] for d in details["complaints"]] == ["c001", "c002", "c003"]
    assert run(project, "correspond", "--potential", "reports/potential-scn-highway.json",
               "--actual", "reports/actual.json", "--scenario", "scn-highway") == 0
    assert run(project, "improve") == 0
    doc = json.loads((project / "reports" / "improvement.json").read_text())
    assert doc["converged"] is True and len(doc["rounds"]) <= 2
    assert doc["rounds"][-1]["degree_after"] == 1.0
    scn = json.loads((project / "scenarios.json").read_text())["scenarios"][0]
    assert "env-freezing" in scn["elements"]
    assert any(json.loads(l)["operation"] == "ExtendScenario" for l in (project / "audit.log").read_text().splitlines())
    capsys.readouterr()
    assert run(project, "report", "reports/improvement.json") == 0
    assert "converged: True" in capsys.readouterr().out


def test_improve_allow_list_blocks_everything(project):
    (project / "allow.txt").write_text("NewAlias\n")
    assert run(project, "improve", "--allow-list", "allow.txt") == 0
    doc = json.loads((project / "reports" / "improvement.json").read_text())
    assert doc["converged"] is False
    assert [p["status"] for p in doc["rounds"][0]["proposals"]] == ["rejected"]


def test_improve_interactive(project, monkeypatch):
    import io

    monkeypatch.setattr(sys, "stdin", io.StringIO("y\n"))
    assert run(project, "improve", "--interactive") == 0
    doc = json.loads((project / "reports" / "improvement.json").read_text())
    assert doc["rounds"][0]["proposals"][0]["status"] == "applied"


def _pipeline(project: Path) -> dict[str, bytes]:
    assert run(project, "analyze") == 0
    assert run(project, "complaints", "ingest", "complaints.jsonl") == 0
    assert run(project, "correspond", "--potential", "reports/potential.json", "--actual", "reports/actual.json") == 0
    assert run(project, "improve") == 0
    files = ["kb.json", "scenarios.json", "audit.log", *(f"reports/{p.name}" for p in (project / "reports").iterdir())]
    return {f: (project / f).read_bytes() for f in sorted(files)}


def test_byte_determinism(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for p in (a, b):
        assert run(p, "kb", "init", "--example") == 0
    assert _pipeline(a) == _pipeline(b)


def test_export_import_export_round_trip(project, tmp_path):
    assert run(project, "kb", "export", "one.json") == 0
    assert run(project, "scenario", "export", "s1.json") == 0
    other = tmp_path / "other"
    assert run(other, "kb", "init") == 0
    shutil.copy(project / "one.json", other / "one.json")
    shutil.copy(project / "s1.json", other / "s1.json")
    assert run(other, "kb", "import", "one.json") == 0
    assert run(other, "scenario", "import", "s1.json") == 0
    assert run(other, "kb", "export", "two.json") == 0
    assert run(other, "scenario", "export", "s2.json") == 0
    assert (project / "one.json").read_bytes() == (other / "two.json").read_bytes()
    assert (project / "s1.json").read_bytes() == (other / "s2.json").read_bytes()


def test_scenario_build_and_validate(project, capsys):
    assert run(project, "scenario", "build", "--function", "f-emergency-braking", "--depth", "2", "--criticality", "7") == 0
    scns = json.loads((project / "scenarios.json").read_text())["scenarios"]
    assert [s["id"] for s in scns] == ["scn-f-emergency-braking", "scn-highway"]
    assert run(project, "scenario", "build", "--function", "f-emergency-braking") == 1
    assert error_of(capsys)["error"] == "DuplicateId"
    assert run(project, "scenario", "validate") == 0
    assert run(project, "scenario", "build", "--function", "c-radar") == 1
    assert error_of(capsys)["error"] == "WrongKind"


def test_report_rejects_unknown_documents(project, capsys):
    (project / "x.json").write_text(json.dumps({"kind": "mystery"}))
    assert run(project, "report", "x.json") == 2


def test_lock_held_elsewhere(project, capsys):
    from filelock import FileLock

    from failid.project import ProjectLayout

    layout = ProjectLayout(project)
    with FileLock(str(layout.lock_file)):
        code = subprocess.run(
            [sys.executable, "-m", "failid", "--project", str(project), "--lock-timeout", "0.2",
             "kb", "add-element", "--id", "z", "--kind", "Actor", "--name", "z"],
            capture_output=True, text=True, timeout=60,
        )
    assert code.returncode == 3
    assert json.loads(code.stderr.strip())["error"] == "ProjectLocked"


def test_module_entry_point_runs():
    out = subprocess.run([sys.executable, "-m", "failid", "--help"], capture_output=True, text=True, timeout=60)
    assert out.returncode == 0 and "improve" in out.stdout


def test_example_data_is_packaged():
    assert {p.name for p in example_dir().iterdir()} >= {"kb.json", "scenarios.json", "complaints.jsonl"}
