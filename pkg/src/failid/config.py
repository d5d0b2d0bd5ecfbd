"""Analysis configuration and shipped defaults.

Everything tunable lives here: stopwords, lexicons, the corrective-action
catalog, priority and correspondence weights, risk bases and traversal
limits. A project config file only needs the keys it overrides.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields
from typing import Any, Mapping

from .errors import InputFormatError

DEFAULT_STOPWORDS = frozenset(
    """
    a an the and or but if then of to in on at by for with from into onto as is
    are was were be been being am it its this that these those there here i me
    my we our you your he him his she her they them their what which who whom
    when where why how all any both each few more most other some such no nor
    not only own same so than too very can will just should would could do does
    did doing have has had having after again against before during while up
    down out off over under about also because until
    """.split()
)

DEFAULT_SAFETY_LEXICON: dict[str, float] = {
    "accident": 1.0,
    "burn": 1.0,
    "danger": 1.0,
    "dangerous": 1.0,
    "death": 1.0,
    "fire": 1.0,
    "hazard": 1.0,
    "injured": 1.0,
    "injury": 1.0,
    "unsafe": 1.0,
    "smoke": 1.0,
    "explosion": 1.0,
}

DEFAULT_SEVERITY_LEXICON: dict[str, float] = {
    "destroyed": 1.0,
    "dead": 0.9,
    "unusable": 0.8,
    "broken": 0.7,
    "failed": 0.6,
    "failure": 0.6,
    "malfunction": 0.6,
    "not working": 0.6,
    "stopped": 0.5,
    "intermittent": 0.4,
    "noisy": 0.3,
    "sometimes": 0.2,
}


@dataclass(frozen=True)
class CatalogEntry:
    key: str
    category: str
    template: str

    def to_dict(self) -> dict[str, str]:
        return {"key": self.key, "category": self.category, "template": self.template}


DEFAULT_ACTION_CATALOG: tuple[CatalogEntry, ...] = (
    CatalogEntry("cmp-review-design", "component", "Review design of {element}"),
    CatalogEntry("cmp-supplier-audit", "component", "Audit supplier quality for {element}"),
    CatalogEntry("fn-robustness", "function", "Add robustness measures to {element} against {effect}"),
    CatalogEntry("req-revise", "requirement", "Revise requirement {element}"),
    CatalogEntry("proc-instruction", "process", "Update work instruction for {element}"),
    CatalogEntry("env-shield", "environment", "Shield the product from {element}"),
    CatalogEntry("env-test", "environment", "Extend validation tests to cover {element} and {effect}"),
    CatalogEntry("evt-scenario", "event", "Add {element} to the usage scenario catalogue"),
)


@dataclass
class PriorityConfig:
    safety_weight: float = 0.5
    severity_weight: float = 0.3
    frequency_weight: float = 0.2
    safety_saturation: int = 3
    duplicate_saturation: int = 5


@dataclass
class RiskConfig:
    severity_base: dict[str, int] = field(
        default_factory=lambda: {"Human": 9, "Stakeholder": 6, "TechnicalProduct": 4}
    )
    default_detection: int = 5


@dataclass
class CorrespondenceConfig:
    weights: dict[str, float] = field(
        default_factory=lambda: {
            "cause": 0.30,
            "impact": 0.25,
            "consequence": 0.20,
            "failure_type": 0.10,
            "risk": 0.15,
        }
    )
    threshold: float = 0.7


@dataclass
class Config:
    stopwords: frozenset[str] = DEFAULT_STOPWORDS
    safety_lexicon: dict[str, float] = field(default_factory=lambda: dict(DEFAULT_SAFETY_LEXICON))
    severity_lexicon: dict[str, float] = field(default_factory=lambda: dict(DEFAULT_SEVERITY_LEXICON))
    action_catalog: tuple[CatalogEntry, ...] = DEFAULT_ACTION_CATALOG
    priority: PriorityConfig = field(default_factory=PriorityConfig)
    risk: RiskConfig = field(default_factory=RiskConfig)
    correspondence: CorrespondenceConfig = field(default_factory=CorrespondenceConfig)
    scenario_depth: int = 3
    max_effect_hops: int = 3
    max_rounds: int = 10
    placeholder_kind: str = "Event"
    placeholder_terms: int = 3

    def to_dict(self) -> dict[str, Any]:
        return {
            "stopwords": sorted(self.stopwords),
            "safety_lexicon": dict(sorted(self.safety_lexicon.items())),
            "severity_lexicon": dict(sorted(self.severity_lexicon.items())),
            "action_catalog": [e.to_dict() for e in self.action_catalog],
            "priority": vars(self.priority).copy(),
            "risk": {
                "severity_base": dict(sorted(self.risk.severity_base.items())),
                "default_detection": self.risk.default_detection,
            },
            "correspondence": {
                "weights": dict(sorted(self.correspondence.weights.items())),
                "threshold": self.correspondence.threshold,
            },
            "scenario_depth": self.scenario_depth,
            "max_effect_hops": self.max_effect_hops,
            "max_rounds": self.max_rounds,
            "placeholder_kind": self.placeholder_kind,
            "placeholder_terms": self.placeholder_terms,
        }

    @classmethod
    def from_dict(cls, raw: Mapping[str, Any]) -> Config:
        """Overlay ``raw`` on the defaults. Unknown keys are a format error."""
        if not isinstance(raw, Mapping):
            raise InputFormatError("config must be an object")
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(raw) - known)
        if unknown:
            raise InputFormatError(f"unknown config keys: {', '.join(unknown)}")
        cfg = cls()
        try:
            if "stopwords" in raw:
                cfg.stopwords = frozenset(str(w).lower() for w in raw["stopwords"])
            if "safety_lexicon" in raw:
                cfg.safety_lexicon = {str(k): float(v) for k, v in raw["safety_lexicon"].items()}
            if "severity_lexicon" in raw:
                cfg.severity_lexicon = {str(k): float(v) for k, v in raw["severity_lexicon"].items()}
            if "action_catalog" in raw:
                cfg.action_catalog = tuple(
                    CatalogEntry(str(e["key"]), str(e["category"]), str(e["template"])) for e in raw["action_catalog"]
                )
            if "priority" in raw:
                cfg.priority = PriorityConfig(**{**vars(cfg.priority), **raw["priority"]})
            if "risk" in raw:
                base = {**cfg.risk.severity_base, **raw["risk"].get("severity_base", {})}
                cfg.risk = RiskConfig(
                    severity_base={k: int(v) for k, v in base.items()},
                    default_detection=int(raw["risk"].get("default_detection", cfg.risk.default_detection)),
                )
            if "correspondence" in raw:
                c = raw["correspondence"]
                cfg.correspondence = CorrespondenceConfig(
                    weights={k: float(v) for k, v in c.get("weights", cfg.correspondence.weights).items()},
                    threshold=float(c.get("threshold", cfg.correspondence.threshold)),
                )
            for name in ("scenario_depth", "max_effect_hops", "max_rounds", "placeholder_terms"):
                if name in raw:
                    setattr(cfg, name, int(raw[name]))
            if "placeholder_kind" in raw:
                cfg.placeholder_kind = str(raw["placeholder_kind"])
        except (TypeError, ValueError, KeyError, AttributeError) as exc:
            raise InputFormatError(f"bad config value: {exc}") from None
        return cfg
