"""Role-played participants: chief planner, sub-community planners, residents."""

from .backends import (
    AgentBackend,
    BackendError,
    LLMBackend,
    RevisionRejected,
    ScriptedBackend,
    validate_revision,
)
from .ops import (
    apply_revision,
    cp_feedback_revise,
    cp_propose,
    proposal_to_plan,
    resident_opine,
    solicit_opinions,
    sp_discuss_and_revise,
    stratified_sample,
)
from .payloads import (
    ActionPayload,
    DiscussionSummary,
    IncompleteAssignment,
    MalformedPayload,
    NeedDeclaration,
    NoPayloadBlock,
    NotAssignableUse,
    Opinion,
    PayloadError,
    PlanProposal,
    PlanRevision,
    RevisionChange,
    UnknownLandUse,
    UnknownPayloadType,
    UnknownPlotId,
    check_proposal_total,
    parse_payload,
    render_payload,
)
from .transcript import Transcript, TranscriptEntry

__all__ = [
    "ActionPayload",
    "AgentBackend",
    "BackendError",
    "DiscussionSummary",
    "IncompleteAssignment",
    "LLMBackend",
    "MalformedPayload",
    "NeedDeclaration",
    "NoPayloadBlock",
    "NotAssignableUse",
    "Opinion",
    "PayloadError",
    "PlanProposal",
    "PlanRevision",
    "RevisionChange",
    "ScriptedBackend",
    "Transcript",
    "TranscriptEntry",
    "UnknownLandUse",
    "UnknownPayloadType",
    "UnknownPlotId",
    "apply_revision",
    "check_proposal_total",
    "cp_feedback_revise",
    "cp_propose",
    "parse_payload",
    "proposal_to_plan",
    "render_payload",
    "resident_opine",
    "RevisionRejected",
    "solicit_opinions",
    "sp_discuss_and_revise",
    "stratified_sample",
    "validate_revision",
]
