"""Scenario-based failure identification.

A typed knowledge base of product elements feeds usage scenarios, from which
cause/effect/impact chains become potential failure records. Customer
complaints are mapped onto the same vocabulary as actual failure records, the
two sets are scored against each other, and the gaps drive proposals that
grow the knowledge base and scenarios round by round.
"""

from .complaints import Complaint, ingest, process_complaint
from .config import Config
from .correspondence import CorrespondenceReport, degree_of_correspondence
from .errors import FailidError, InputFormatError, ValidationFailed
from .failure_network import FailureChain, analyze_scenario, derive_failure_chains
from .improvement import UpdateProposal, apply_updates, improve, propose_updates, run_round
from .knowledge_base import Element, ElementKind, KnowledgeBase, Link, LinkKind
from .records import ConsequenceClass, FailureRecord, FailureType, RiskScore
from .scenario import Scenario, build_scenario, validate_scenario

__version__ = "0.1.0"

__all__ = [
    "Complaint",
    "Config",
    "ConsequenceClass",
    "CorrespondenceReport",
    "Element",
    "ElementKind",
    "FailidError",
    "FailureChain",
    "FailureRecord",
    "FailureType",
    "InputFormatError",
    "KnowledgeBase",
    "Link",
    "LinkKind",
    "RiskScore",
    "Scenario",
    "UpdateProposal",
    "ValidationFailed",
    "analyze_scenario",
    "apply_updates",
    "build_scenario",
    "degree_of_correspondence",
    "derive_failure_chains",
    "improve",
    "ingest",
    "process_complaint",
    "propose_updates",
    "run_round",
    "validate_scenario",
]
