"""Goal-perspective agents and their backends."""

from .agent import Backend, Perspective
from .external import ExternalBackend
from .models import (
    MIN_JUSTIFICATION,
    Attack,
    BackendError,
    EncodingResult,
    FixtureGapError,
    InvocationCounter,
    PerspectiveConfig,
    Proposal,
    QueryContext,
    RelevanceDecision,
    TaskTrace,
)
from .rules import CritiqueRule, EncodingRule, ProposalRule, RuleBackend, RuleSet, tokens
from .scripted import ScriptedBackend, ScriptedEncoding, ScriptedFixture, ScriptedProposal, ScriptedRound

__all__ = [
    "MIN_JUSTIFICATION",
    "Attack",
    "Backend",
    "BackendError",
    "CritiqueRule",
    "EncodingResult",
    "EncodingRule",
    "ExternalBackend",
    "FixtureGapError",
    "InvocationCounter",
    "Perspective",
    "PerspectiveConfig",
    "Proposal",
    "ProposalRule",
    "QueryContext",
    "RelevanceDecision",
    "RuleBackend",
    "RuleSet",
    "ScriptedBackend",
    "ScriptedEncoding",
    "ScriptedFixture",
    "ScriptedProposal",
    "ScriptedRound",
    "TaskTrace",
    "tokens",
]
