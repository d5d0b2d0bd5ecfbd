"""On-disk project layout: where each artifact lives and how it is loaded and saved."""

from __future__ import annotations

from contextlib import contextmanager
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterable, Iterator, Sequence

from filelock import FileLock, Timeout

from .complaints import Complaint
from .config import Config
from .errors import FailidError, InputFormatError, MissingFiles
from .knowledge_base import AuditEntry, KnowledgeBase
from .scenario import Scenario
from .serialization import (
    Clock,
    atomic_write_text,
    compact_json,
    read_json,
    read_json_lines,
    write_json,
)


class ProjectLocked(FailidError):
    category = "ProjectLocked"
    exit_code = 3


@dataclass(frozen=True)
class ProjectLayout:
    root: Path
    lock_timeout: float = 10.0

    @property
    def kb_file(self) -> Path:
        return self.root / "kb.json"

    @property
    def scenarios_file(self) -> Path:
        return self.root / "scenarios.json"

    @property
    def complaints_file(self) -> Path:
        return self.root / "complaints.jsonl"

    @property
    def config_file(self) -> Path:
        return self.root / "config.json"

    @property
    def reports_dir(self) -> Path:
        return self.root / "reports"

    @property
    def audit_file(self) -> Path:
        return self.root / "audit.log"

    @property
    def lock_file(self) -> Path:
        return self.root / ".failid.lock"

    def resolve(self, path: str | Path) -> Path:
        p = Path(path)
        return p if p.is_absolute() else self.root / p

    def require(self, *paths: Path) -> None:
        missing = [str(p) for p in paths if not p.exists()]
        if missing:
            raise MissingFiles(missing)

    @contextmanager
    def locked(self) -> Iterator[None]:
        self.root.mkdir(parents=True, exist_ok=True)
        lock = FileLock(str(self.lock_file), timeout=self.lock_timeout)
        try:
            with lock:
                yield
        except Timeout:
            raise ProjectLocked(f"{self.lock_file} is held by another process") from None

    # -- loading -----------------------------------------------------------

    def load_config(self) -> Config:
        if not self.config_file.exists():
            return Config()
        return Config.from_dict(read_json(self.config_file))

    def load_kb(self, clock: Clock | None = None) -> KnowledgeBase:
        self.require(self.kb_file)
        kb = KnowledgeBase.from_dict(read_json(self.kb_file), clock)
        if self.audit_file.exists():
            for row in read_json_lines(self.audit_file):
                kb.audit.append(
                    AuditEntry(row["version"], row["timestamp"], row["operation"], row["digest"], row.get("context", {}))
                )
        return kb

    def load_scenarios(self) -> list[Scenario]:
        if not self.scenarios_file.exists():
            return []
        return load_scenarios_file(self.scenarios_file)

    # -- saving ------------------------------------------------------------

    def save_kb(self, kb: KnowledgeBase, audit_from: int = 0) -> None:
        """Write kb.json and append the audit entries ``kb.audit[audit_from:]``."""
        new_entries = kb.audit[audit_from:]
        if new_entries:
            self.append_audit(new_entries)
        write_json(self.kb_file, kb.to_dict())

    def save_scenarios(self, scenarios: Iterable[Scenario]) -> None:
        write_json(self.scenarios_file, scenarios_to_dict(scenarios))

    def append_audit(self, entries: Sequence[AuditEntry]) -> None:
        existing = self.audit_file.read_text(encoding="utf-8") if self.audit_file.exists() else ""
        atomic_write_text(self.audit_file, existing + "".join(compact_json(e.to_dict()) + "\n" for e in entries))


def scenarios_to_dict(scenarios: Iterable[Scenario]) -> dict[str, Any]:
    return {"scenarios": [s.to_dict() for s in sorted(scenarios, key=lambda s: s.id)]}


def load_scenarios_file(path: Path) -> list[Scenario]:
    raw = read_json(path)
    if not isinstance(raw, dict) or not isinstance(raw.get("scenarios"), list):
        raise InputFormatError(f"{path}: expected an object with a 'scenarios' list")
    scenarios = [Scenario.from_dict(s) for s in raw["scenarios"]]
    ids = [s.id for s in scenarios]
    if len(set(ids)) != len(ids):
        raise InputFormatError(f"{path}: duplicate scenario ids")
    return scenarios


def load_complaints(path: Path) -> list[Complaint]:
    return [Complaint.from_dict(row) for row in read_json_lines(path)]
