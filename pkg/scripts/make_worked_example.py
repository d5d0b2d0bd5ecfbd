"""Regenerate the bundled worked-example project under src/failid/data/worked_example."""

from __future__ import annotations

from pathlib import Path

from failid.complaints import Complaint
from failid.knowledge_base import Element, ElementKind as K, KnowledgeBase, Link, LinkKind as L
from failid.scenario import build_scenario
from failid.serialization import fixed_clock, json_lines, write_json, atomic_write_text

OUT = Path(__file__).resolve().parents[1] / "src" / "failid" / "data" / "worked_example"

ELEMENTS = [
    Element("f-object-detection", K.FUNCTION, "object detection", ("object detection", "obstacle detection")),
    Element("f-emergency-braking", K.FUNCTION, "emergency braking", ("emergency braking", "automatic braking")),
    Element("c-front-camera", K.COMPONENT, "front camera", ("front camera", "camera")),
    Element("c-radar", K.COMPONENT, "radar sensor", ("radar sensor", "radar")),
    Element("env-bright-sky", K.ENVIRONMENTAL_FACTOR, "bright sky background", ("bright sky background", "bright sky")),
    Element("env-white-trailer", K.ENVIRONMENTAL_FACTOR, "white side of the truck", ("white truck", "white trailer")),
    Element("env-freezing", K.ENVIRONMENTAL_FACTOR, "freezing temperatures", ("freezing temperatures", "freezing", "ice")),
    Element("eff-contrast-loss", K.EFFECT, "contrast loss", ("contrast loss", "low contrast")),
    Element("eff-collision", K.EFFECT, "collision", ("collision", "crash")),
    Element("eff-sensor-icing", K.EFFECT, "sensor icing", ("sensor icing", "iced up")),
    Element("act-driver", K.ACTOR, "driver", ("driver",)),
    Element("proc-highway-driving", K.PROCESS, "highway driving", ("highway driving", "autopilot")),
]

LINKS = [
    Link("c-front-camera", "f-object-detection", L.REALIZES),
    Link("c-radar", "f-emergency-braking", L.REALIZES),
    Link("env-bright-sky", "eff-contrast-loss", L.CAUSES),
    Link("env-white-trailer", "c-front-camera", L.INFLUENCES),
    Link("eff-contrast-loss", "f-object-detection", L.RESULTS_IN),
    Link("f-object-detection", "eff-collision", L.CAUSES),
    Link("eff-collision", "act-driver", L.RESULTS_IN),
    Link("act-driver", "proc-highway-driving", L.PERFORMS),
    Link("proc-highway-driving", "f-object-detection", L.USES),
    Link("proc-highway-driving", "f-emergency-braking", L.USES),
    Link("env-freezing", "eff-sensor-icing", L.CAUSES),
    Link("eff-sensor-icing", "c-radar", L.RESULTS_IN),
]

COMPLAINTS = [
    Complaint(
        "c001",
        "Autopilot did not see the white truck against the bright sky, object detection failed and it was dangerous.",
        "2024-03-02T10:00:00+00:00", "model-s", 2,
    ),
    Complaint(
        "c002",
        "The radar sensor iced up in freezing weather and stopped. Dangerous!",
        "2024-03-05T08:30:00+00:00", "model-s", 2,
    ),
    Complaint(
        "c003",
        "The front camera could not handle the bright sky background, object detection failed, unsafe.",
        "2024-03-09T17:45:00+00:00", "model-s", 2,
    ),
]


def build_kb() -> KnowledgeBase:
    kb = KnowledgeBase(fixed_clock("2024-01-01T00:00:00+00:00"))
    for e in ELEMENTS:
        kb.add_element(e)
    for l in LINKS:
        kb.link_elements(l)
    return kb


def main() -> None:
    kb = build_kb()
    scenario = build_scenario(kb, ["f-object-detection"], 3, scenario_id="scn-highway", name="Highway autopilot")
    write_json(OUT / "kb.json", kb.to_dict())
    write_json(OUT / "scenarios.json", {"scenarios": [scenario.to_dict()]})
    atomic_write_text(OUT / "complaints.jsonl", json_lines(c.to_dict() for c in COMPLAINTS))


if __name__ == "__main__":
    main()
