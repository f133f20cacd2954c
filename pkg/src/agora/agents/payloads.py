"""Structured message payloads exchanged by planner and resident agents.

Every payload renders to (and parses from) a single fenced JSON block
embedded in a natural-language message; the last block in a message wins.
Parsing validates referenced plot ids and land uses so malformed model output
turns into typed errors that drive corrective retries.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from typing import Mapping, Optional, Union

from ..domain import ASSIGNABLE_USES, LandUse, Scenario
from ..errors import AgoraError


class PayloadError(AgoraError):
    """Base for structured-message parse and validation failures."""


class NoPayloadBlock(PayloadError):
    pass


class MalformedPayload(PayloadError):
    pass


class UnknownPayloadType(PayloadError):
    pass


class UnknownPlotId(PayloadError):
    def __init__(self, plot_id):
        self.plot_id = plot_id
        super().__init__(f"payload references unknown plot id {plot_id}")


class UnknownLandUse(PayloadError):
    def __init__(self, name):
        self.name = name
        super().__init__(f"payload references unknown land use {name!r}")


class NotAssignableUse(PayloadError):
    def __init__(self, use: LandUse):
        self.use = use
        super().__init__(f"land use {use.value} cannot be assigned to a vacant plot")


class IncompleteAssignment(PayloadError):
    def __init__(self, missing: list[int]):
        self.missing = missing
        super().__init__(f"assignment is missing vacant plots {missing}")


@dataclass(frozen=True)
class NeedDeclaration:
    needs: tuple[LandUse, ...]
    rationales: Mapping[str, str] = field(default_factory=dict)

    payload_type = "need_declaration"

    def to_payload_dict(self) -> dict:
        return {
            "type": self.payload_type,
            "needs": [u.value for u in self.needs],
            "rationales": dict(self.rationales),
        }


@dataclass(frozen=True)
class Opinion:
    unmet: tuple[LandUse, ...]
    comment: str = ""
    plots: tuple[int, ...] = ()
    agent_id: Optional[int] = None

    payload_type = "opinion"

    def to_payload_dict(self) -> dict:
        doc = {
            "type": self.payload_type,
            "unmet": [u.value for u in self.unmet],
            "comment": self.comment,
            "plots": list(self.plots),
        }
        if self.agent_id is not None:
            doc["agent_id"] = self.agent_id
        return doc


@dataclass(frozen=True)
class PlanProposal:
    assignment: Mapping[int, LandUse]
    reasons: Mapping[int, str] = field(default_factory=dict)

    payload_type = "plan_proposal"

    def to_payload_dict(self) -> dict:
        return {
            "type": self.payload_type,
            "assignment": {str(k): self.assignment[k].value for k in sorted(self.assignment)},
            "reasons": {str(k): self.reasons[k] for k in sorted(self.reasons)},
        }


@dataclass(frozen=True)
class RevisionChange:
    plot_id: int
    land_use: LandUse
    reason: str = ""


@dataclass(frozen=True)
class PlanRevision:
    changes: tuple[RevisionChange, ...]

    payload_type = "plan_revision"

    def to_payload_dict(self) -> dict:
        return {
            "type": self.payload_type,
            "changes": [
                {"plot_id": c.plot_id, "land_use": c.land_use.value, "reason": c.reason}
                for c in self.changes
            ],
        }


@dataclass(frozen=True)
class DiscussionSummary:
    summary: str
    demands: Mapping[str, int] = field(default_factory=dict)

    payload_type = "discussion_summary"

    def to_payload_dict(self) -> dict:
        return {
            "type": self.payload_type,
            "summary": self.summary,
            "demands": dict(self.demands),
        }


ActionPayload = Union[NeedDeclaration, Opinion, PlanProposal, PlanRevision, DiscussionSummary]

_FENCE_RE = re.compile(r"```(?:json)?\s*\n(.*?)```", re.DOTALL)


def render_payload(payload: ActionPayload, prose: str = "") -> str:
    """Embed a payload as a fenced JSON block after optional prose."""
    block = json.dumps(payload.to_payload_dict(), indent=2)
    prefix = prose.rstrip() + "\n\n" if prose.strip() else ""
    return f"{prefix}```json\n{block}\n```\n"


def _parse_use(name, assignable_only: bool = True) -> LandUse:
    try:
        use = LandUse(name)
    except ValueError:
        raise UnknownLandUse(name) from None
    if assignable_only and use not in ASSIGNABLE_USES:
        raise NotAssignableUse(use)
    return use


def _check_plot(plot_id, scenario: Optional[Scenario]) -> int:
    try:
        pid = int(plot_id)
    except (TypeError, ValueError):
        raise UnknownPlotId(plot_id) from None
    if scenario is not None and not 0 <= pid < len(scenario.plots):
        raise UnknownPlotId(pid)
    return pid


def parse_payload(text: str, scenario: Optional[Scenario] = None) -> ActionPayload:
    """Extract and validate the last fenced JSON block of a message."""
    blocks = _FENCE_RE.findall(text)
    if not blocks:
        raise NoPayloadBlock("message contains no fenced JSON block")
    try:
        data = json.loads(blocks[-1])
    except json.JSONDecodeError as exc:
        raise MalformedPayload(f"fenced block is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise MalformedPayload("fenced block must hold a JSON object")
    kind = data.get("type")

    try:
        if kind == "need_declaration":
            needs = tuple(_parse_use(u) for u in data["needs"])
            if len(set(needs)) != len(needs):
                raise MalformedPayload("duplicate land uses in needs")
            return NeedDeclaration(needs=needs, rationales=dict(data.get("rationales", {})))
        if kind == "opinion":
            return Opinion(
                unmet=tuple(_parse_use(u) for u in data.get("unmet", [])),
                comment=str(data.get("comment", "")),
                plots=tuple(_check_plot(p, scenario) for p in data.get("plots", [])),
                agent_id=int(data["agent_id"]) if "agent_id" in data else None,
            )
        if kind == "plan_proposal":
            assignment = {
                _check_plot(k, scenario): _parse_use(v) for k, v in data["assignment"].items()
            }
            reasons = {
                _check_plot(k, scenario): str(v) for k, v in data.get("reasons", {}).items()
            }
            return PlanProposal(assignment=assignment, reasons=reasons)
        if kind == "plan_revision":
            changes = tuple(
                RevisionChange(
                    plot_id=_check_plot(c["plot_id"], scenario),
                    land_use=_parse_use(c["land_use"]),
                    reason=str(c.get("reason", "")),
                )
                for c in data.get("changes", [])
            )
            return PlanRevision(changes=changes)
        if kind == "discussion_summary":
            return DiscussionSummary(
                summary=str(data.get("summary", "")),
                demands={str(k): int(v) for k, v in data.get("demands", {}).items()},
            )
    except PayloadError:
        raise
    except (KeyError, TypeError, ValueError, AttributeError) as exc:
        raise MalformedPayload(f"payload fields malformed: {exc}") from exc
    raise UnknownPayloadType(f"unknown payload type {kind!r}")


def check_proposal_total(scenario: Scenario, proposal: PlanProposal) -> None:
    """A proposal must assign every vacant plot and nothing else."""
    vacant = set(scenario.vacant_ids)
    keys = set(proposal.assignment)
    extra = sorted(keys - vacant)
    if extra:
        raise UnknownPlotId(extra[0])
    missing = sorted(vacant - keys)
    if missing:
        raise IncompleteAssignment(missing)
