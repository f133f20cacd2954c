"""Agent backends: a deterministic scripted implementation and an LLM twin.

The scripted backend is a pure function of its inputs; it makes the whole
pipeline runnable and testable offline. The LLM backend renders prompt
templates, calls the chat client, parses the fenced payload and retries with
corrective messages when the reply is malformed (up to 3 times) or
semantically invalid (once).
"""

from __future__ import annotations

import time
from abc import ABC, abstractmethod
from collections import Counter
from importlib import resources
from pathlib import Path
from string import Template
from typing import Mapping, Optional, Sequence

from ..domain import (
    ASSIGNABLE_USES,
    LandUse,
    Plan,
    Scenario,
    Violation,
    total_deficit,
)
from ..errors import AgoraError
from ..geometry import polygon_area
from ..planners import PlannerConfig, coverage_radius, plan_gsca
from ..population import NeedSet, Population, ResidentProfile, check_need_count, scripted_needs, NeedRules, DEFAULT_NEED_RULES
from .payloads import (
    ActionPayload,
    MalformedPayload,
    NeedDeclaration,
    Opinion,
    PayloadError,
    PlanProposal,
    PlanRevision,
    RevisionChange,
    UnknownPayloadType,
    check_proposal_total,
    parse_payload,
    render_payload,
)
from .transcript import Transcript


class BackendError(AgoraError):
    """The backend could not produce a valid payload after its retries."""


class RevisionRejected(PayloadError):
    """A plan revision broke the rules it must honor."""


def validate_revision(
    scenario: Scenario,
    revision: PlanRevision,
    sub_community: Optional[int] = None,
    max_changes: Optional[int] = None,
) -> None:
    if max_changes is not None and len(revision.changes) > max_changes:
        raise RevisionRejected(
            f"revision proposes {len(revision.changes)} changes, limit is {max_changes}"
        )
    seen: set[int] = set()
    for change in revision.changes:
        plot = scenario.plot(change.plot_id)  # raises on unknown id
        if not plot.vacant:
            raise RevisionRejected(f"plot {plot.id} is fixed ({plot.fixed_use.value}); cannot reassign")
        if sub_community is not None and plot.sub_community != sub_community:
            raise RevisionRejected(
                f"plot {plot.id} belongs to sub-community {plot.sub_community}, "
                f"not {sub_community}"
            )
        if change.plot_id in seen:
            raise RevisionRejected(f"plot {plot.id} reassigned twice in one revision")
        seen.add(change.plot_id)


# --- shared prompt/table helpers ------------------------------------------------


def profile_text(profile: ResidentProfile) -> str:
    bits = [
        f"{profile.age} years old",
        profile.gender,
        f"household of {profile.family_size}",
        profile.education,
        "employed" if profile.employed else "not employed",
    ]
    if profile.vulnerable:
        bits.append("; ".join(sorted(profile.vulnerable)).replace("_", " "))
    return ", ".join(bits)


def plot_table(scenario: Scenario) -> str:
    rows = []
    for p in scenario.plots:
        status = "vacant" if p.vacant else f"fixed:{p.fixed_use.value}"
        rows.append(
            f"{p.id} | {status} | sc {p.sub_community} | {polygon_area(p.polygon):.0f} | {p.description}"
        )
    return "\n".join(rows)


def constraint_list(scenario: Scenario, plan: Optional[Plan] = None) -> str:
    cons = scenario.constraints
    counts = _counts(scenario, dict(plan.assignment)) if plan is not None else None
    lines = []
    for use in ASSIGNABLE_USES:
        if cons.park_green_joint and use is LandUse.GreenSpace:
            continue
        if cons.park_green_joint and use is LandUse.Park:
            need = cons.minimum(LandUse.Park) + cons.minimum(LandUse.GreenSpace)
            label = "Park+GreenSpace (combined)"
            have = None if counts is None else counts[LandUse.Park] + counts[LandUse.GreenSpace]
        else:
            need = cons.minimum(use)
            label = use.value
            have = None if counts is None else counts[use]
        if need == 0 and have is None:
            continue
        line = f"{label}: at least {need}"
        if have is not None:
            line += f" (currently {have})"
        lines.append(line)
    return "\n".join(lines)


def plan_table(scenario: Scenario, plan: Plan, sub_community: Optional[int] = None) -> str:
    rows = []
    for p in scenario.plots:
        if not p.vacant:
            continue
        if sub_community is not None and p.sub_community != sub_community:
            continue
        use = plan.assignment.get(p.id)
        rows.append(f"{p.id} | {use.value if use else 'unassigned'} | {p.description}")
    return "\n".join(rows)


def _counts(scenario: Scenario, assignment: Mapping[int, LandUse]) -> dict[LandUse, int]:
    counts = {use: 0 for use in ASSIGNABLE_USES}
    for use in assignment.values():
        if use in counts:
            counts[use] += 1
    if scenario.constraints.count_fixed:
        for p in scenario.fixed_plots:
            if p.fixed_use is LandUse.RetainedGreen:
                counts[LandUse.GreenSpace] += 1
    return counts


def _surplus(scenario: Scenario, assignment: Mapping[int, LandUse], use: LandUse) -> int:
    """How many plots of a use could be given away before hitting its minimum."""
    cons = scenario.constraints
    counts = _counts(scenario, assignment)
    if cons.park_green_joint and use in (LandUse.Park, LandUse.GreenSpace):
        have = counts[LandUse.Park] + counts[LandUse.GreenSpace]
        need = cons.minimum(LandUse.Park) + cons.minimum(LandUse.GreenSpace)
    else:
        have = counts[use]
        need = cons.minimum(use)
    return have - need


def surplus_table(scenario: Scenario, plan: Plan) -> str:
    assignment = dict(plan.assignment)
    lines = []
    for use in ASSIGNABLE_USES:
        s = _surplus(scenario, assignment, use)
        if s > 0:
            lines.append(f"{use.value}: {s} above minimum")
    return "\n".join(lines) or "(none)"


def _pick_donor(
    scenario: Scenario,
    working: Mapping[int, LandUse],
    target: LandUse,
    candidate_ids: Sequence[int],
) -> Optional[int]:
    """Assigned plot whose current use has the largest surplus (> 0), ties by
    lowest plot id. Never proposes a plot already of the target use."""
    best_id, best_surplus = None, 0
    for pid in sorted(candidate_ids):
        use = working.get(pid)
        if use is None or use is target:
            continue
        s = _surplus(scenario, working, use)
        if s > best_surplus:
            best_id, best_surplus = pid, s
    return best_id


# --- backend contract -------------------------------------------------------------


class AgentBackend(ABC):
    """Produces structured payloads for each role-played action."""

    kind: str
    # A single optional rebuttal round (residents see peer opinions once and
    # may revise their comment). Free-form multi-turn debate stays out of
    # scope; the scripted backend keeps opinions fully independent.
    supports_rebuttal = False

    @abstractmethod
    def resident_needs(self, profile: ResidentProfile) -> NeedSet: ...

    @abstractmethod
    def propose_plan(self, scenario: Scenario) -> PlanProposal: ...

    @abstractmethod
    def opine(
        self,
        profile: ResidentProfile,
        needs: NeedSet,
        need_dists: Mapping[LandUse, float],
        plan: Plan,
        scenario: Scenario,
    ) -> Opinion: ...

    @abstractmethod
    def discuss(
        self,
        sub_community: int,
        plan: Plan,
        opinions: Sequence[Opinion],
        scenario: Scenario,
        max_changes: int,
    ) -> PlanRevision: ...

    @abstractmethod
    def feedback(
        self, plan: Plan, violations: Sequence[Violation], scenario: Scenario
    ) -> PlanRevision: ...


def unmet_of(needs: NeedSet, need_dists: Mapping[LandUse, float]) -> tuple[LandUse, ...]:
    """Needed uses not strictly within the 500 m service radius, in need order."""
    return tuple(u for u in needs.needs if not need_dists[u] < 500.0)


class ScriptedBackend(AgentBackend):
    """Rule-table behavior; same inputs produce the same payload everywhere."""

    kind = "scripted"

    def __init__(
        self,
        population: Optional[Population] = None,
        seed: int = 0,
        need_rules: NeedRules = DEFAULT_NEED_RULES,
        transcript: Optional[Transcript] = None,
    ):
        self.population = population
        self.seed = seed
        self.need_rules = need_rules
        self.transcript = transcript

    def _log(self, role: str, agent_id, payload: ActionPayload, prose: str) -> None:
        if self.transcript is not None:
            self.transcript.append(
                role=role,
                direction="response",
                text=render_payload(payload, prose),
                agent_id=agent_id,
                payload=payload.to_payload_dict(),
            )

    def resident_needs(self, profile: ResidentProfile) -> NeedSet:
        needs = scripted_needs(profile, self.need_rules)
        decl = NeedDeclaration(needs=needs.needs, rationales=needs.rationales)
        self._log("resident", profile.id, decl, "Here is what I need most.")
        return needs

    def propose_plan(self, scenario: Scenario) -> PlanProposal:
        if self.population is None:
            raise BackendError("scripted proposals need the population (coverage-driven)")
        plan = plan_gsca(scenario, self.population, PlannerConfig(method="gsca", seed=self.seed))
        reasons = {
            pid: (
                f"{use.value} here maximizes the residents gaining one within "
                f"{coverage_radius(use):.0f} m"
            )
            for pid, use in plan.assignment.items()
        }
        proposal = PlanProposal(assignment=dict(plan.assignment), reasons=reasons)
        self._log(
            "cp",
            "cp",
            proposal,
            "Initial proposal: each vacant plot assigned to extend facility coverage.",
        )
        return proposal

    def opine(
        self,
        profile: ResidentProfile,
        needs: NeedSet,
        need_dists: Mapping[LandUse, float],
        plan: Plan,
        scenario: Scenario,
    ) -> Opinion:
        unmet = unmet_of(needs, need_dists)
        sub = scenario.plot(profile.home_plot).sub_community
        if unmet:
            names = ", ".join(u.value for u in unmet)
            comment = (
                f"I live in sub-community {sub} and the plan leaves me without "
                f"{names} within a 500 m walk."
            )
        else:
            names = ", ".join(u.value for u in needs.needs)
            comment = f"All my needs ({names}) are within walking distance; the plan works for me."
        opinion = Opinion(unmet=unmet, comment=comment, plots=(), agent_id=profile.id)
        self._log("resident", profile.id, opinion, "")
        return opinion

    def discuss(
        self,
        sub_community: int,
        plan: Plan,
        opinions: Sequence[Opinion],
        scenario: Scenario,
        max_changes: int,
    ) -> PlanRevision:
        freq: Counter[LandUse] = Counter()
        for op in opinions:
            freq.update(op.unmet)
        targets = sorted(freq, key=lambda u: (-freq[u], u.order))
        working = dict(plan.assignment)
        sub_vacant = [p.id for p in scenario.plots_in(sub_community) if p.vacant]
        changes: list[RevisionChange] = []
        for use in targets:
            if len(changes) >= max_changes:
                break
            untouched = [pid for pid in sub_vacant if pid not in {c.plot_id for c in changes}]
            donor = _pick_donor(scenario, working, use, untouched)
            if donor is None:
                continue  # no surplus to take from
            old = working[donor]
            changes.append(
                RevisionChange(
                    plot_id=donor,
                    land_use=use,
                    reason=(
                        f"{freq[use]} residents here lack a {use.value} within reach; "
                        f"plot {donor} switches from {old.value}, which stays above its minimum"
                    ),
                )
            )
            working[donor] = use
        revision = PlanRevision(changes=tuple(changes))
        self._log(
            "sp",
            f"sp-{sub_community}",
            revision,
            f"Sub-community {sub_community} discussion outcome ({len(opinions)} opinions heard).",
        )
        return revision

    def feedback(
        self, plan: Plan, violations: Sequence[Violation], scenario: Scenario
    ) -> PlanRevision:
        working = dict(plan.assignment)
        changes: list[RevisionChange] = []
        min_violations = sorted(
            (v for v in violations if v.kind == "min_count"),
            key=lambda v: v.land_use.order,
        )
        for violation in min_violations:
            target = violation.land_use
            for _ in range(violation.deficit):
                untouched = [pid for pid in working if pid not in {c.plot_id for c in changes}]
                donor = _pick_donor(scenario, working, target, untouched)
                if donor is None:
                    break
                old = working[donor]
                changes.append(
                    RevisionChange(
                        plot_id=donor,
                        land_use=target,
                        reason=(
                            f"requirement check: {violation.describe()}; plot {donor} "
                            f"switches from {old.value}, which has surplus"
                        ),
                    )
                )
                working[donor] = target
        revision = PlanRevision(changes=tuple(changes))
        self._log("cp", "cp", revision, "Revisions addressing the requirement violations.")
        return revision


# --- LLM backend -------------------------------------------------------------------

_SCHEMAS = {
    "proposal_schema": (
        '```json\n{"type": "plan_proposal",\n'
        ' "assignment": {"<plot id>": "<land use>", ...},\n'
        ' "reasons": {"<plot id>": "<one sentence>", ...}}\n```'
    ),
    "needs_schema": (
        '```json\n{"type": "need_declaration",\n'
        ' "needs": ["<land use>", ...],\n'
        ' "rationales": {"<land use>": "<one sentence>", ...}}\n```'
    ),
    "opinion_schema": (
        '```json\n{"type": "opinion", "unmet": ["<land use>", ...],'
        ' "comment": "<short text>", "plots": [<plot id>, ...]}\n```'
    ),
    "revision_schema": (
        '```json\n{"type": "plan_revision", "changes": [\n'
        '  {"plot_id": <id>, "land_use": "<land use>", "reason": "<one sentence>"}]}\n```'
    ),
}

_PAYLOAD_KINDS = {
    PlanProposal: "plan_proposal",
    NeedDeclaration: "need_declaration",
    Opinion: "opinion",
    PlanRevision: "plan_revision",
}


def load_template(name: str, prompts_dir: Optional[Path] = None) -> Template:
    if prompts_dir is not None:
        text = (Path(prompts_dir) / f"{name}.txt").read_text(encoding="utf-8")
    else:
        text = resources.files("agora.agents").joinpath(f"prompts/{name}.txt").read_text(
            encoding="utf-8"
        )
    return Template(text)


class LLMBackend(AgentBackend):
    """Renders role prompts, calls the chat client, parses fenced payloads."""

    kind = "llm"
    supports_rebuttal = True

    def __init__(
        self,
        client,
        prompts_dir: Optional[Path] = None,
        transcript: Optional[Transcript] = None,
        max_parse_retries: int = 3,
        max_semantic_retries: int = 1,
    ):
        self.client = client
        self.prompts_dir = prompts_dir
        self.transcript = transcript
        self.max_parse_retries = max_parse_retries
        self.max_semantic_retries = max_semantic_retries

    def _render(self, name: str, **fields: str) -> str:
        return load_template(name, self.prompts_dir).safe_substitute(**_SCHEMAS, **fields)

    def _converse(
        self,
        role: str,
        agent_id,
        prompt: str,
        scenario: Scenario,
        expected: type,
        semantic_check=None,
    ) -> ActionPayload:
        messages = [{"role": "user", "content": prompt}]
        parse_left = self.max_parse_retries
        semantic_left = self.max_semantic_retries
        while True:
            if self.transcript is not None:
                self.transcript.append(
                    role=role,
                    direction="prompt",
                    text=messages[-1]["content"],
                    agent_id=agent_id,
                    timestamp=time.time(),
                )
            text, usage = self.client.complete_messages(messages)
            if self.transcript is not None:
                self.transcript.append(
                    role=role,
                    direction="response",
                    text=text,
                    agent_id=agent_id,
                    usage=usage,
                    timestamp=time.time(),
                )
            try:
                payload = parse_payload(text, scenario)
                if not isinstance(payload, expected):
                    raise UnknownPayloadType(
                        f"expected a {_PAYLOAD_KINDS[expected]} payload, got "
                        f"{type(payload).__name__}"
                    )
            except PayloadError as exc:
                if parse_left <= 0:
                    raise BackendError(f"{role}: unusable reply after retries: {exc}") from exc
                parse_left -= 1
                messages = messages + [
                    {"role": "assistant", "content": text},
                    {"role": "user", "content": _corrective(exc, _PAYLOAD_KINDS[expected])},
                ]
                continue
            if semantic_check is not None:
                try:
                    semantic_check(payload)
                except PayloadError as exc:
                    if semantic_left <= 0:
                        raise BackendError(f"{role}: invalid payload after retry: {exc}") from exc
                    semantic_left -= 1
                    messages = messages + [
                        {"role": "assistant", "content": text},
                        {"role": "user", "content": _corrective(exc, _PAYLOAD_KINDS[expected])},
                    ]
                    continue
            return payload

    def resident_needs(self, profile: ResidentProfile) -> NeedSet:
        prompt = self._render(
            "resident_needs",
            community="the community",
            profile=profile_text(profile),
            land_uses=", ".join(u.value for u in ASSIGNABLE_USES),
        )

        def check(decl: NeedDeclaration) -> None:
            try:
                check_need_count(decl.needs)
            except Exception as exc:
                raise MalformedPayload(str(exc)) from exc

        decl = self._converse(
            "resident", profile.id, prompt, None, NeedDeclaration, semantic_check=check
        )
        return NeedSet(needs=decl.needs, source="llm", rationales=dict(decl.rationales))

    def propose_plan(self, scenario: Scenario) -> PlanProposal:
        prompt = self._render(
            "cp_propose",
            community=scenario.name,
            constraint_list=constraint_list(scenario),
            plot_table=plot_table(scenario),
            land_uses=", ".join(u.value for u in ASSIGNABLE_USES),
        )
        return self._converse(
            "cp",
            "cp",
            prompt,
            scenario,
            PlanProposal,
            semantic_check=lambda p: check_proposal_total(scenario, p),
        )

    def opine(self, profile, needs, need_dists, plan, scenario) -> Opinion:
        unmet = unmet_of(needs, need_dists)
        dist_lines = "\n".join(
            f"{u.value}: "
            + ("no plot of this type" if need_dists[u] == float("inf") else f"{need_dists[u]:.0f} m")
            for u in needs.needs
        )
        prompt = self._render(
            "resident_opine",
            community=scenario.name,
            profile=profile_text(profile),
            needs=", ".join(u.value for u in needs.needs),
            distance_table=dist_lines,
            unmet=", ".join(u.value for u in unmet) or "(none)",
        )

        def check(op: Opinion) -> None:
            if set(op.unmet) != set(unmet):
                raise MalformedPayload(
                    "the unmet list must match the unmet needs stated in the request: "
                    + (", ".join(u.value for u in unmet) or "(none)")
                )

        opinion = self._converse(
            "resident", profile.id, prompt, scenario, Opinion, semantic_check=check
        )
        return self._with_agent_id(opinion, profile.id)

    @staticmethod
    def _with_agent_id(opinion: Opinion, agent_id: int) -> Opinion:
        if opinion.agent_id is not None:
            return opinion
        return Opinion(
            unmet=opinion.unmet, comment=opinion.comment, plots=opinion.plots,
            agent_id=agent_id,
        )

    def rebut(self, profile, needs, need_dists, own_opinion: Opinion,
              peer_digest: str, plan, scenario) -> Opinion:
        """One optional rebuttal: the resident sees peer opinions and may
        revise the comment; the unmet list is factual and stays fixed."""
        unmet = unmet_of(needs, need_dists)
        prompt = (
            f"You are role-playing a resident of {scenario.name} with this background:\n"
            f"{profile_text(profile)}\n\n"
            f"Earlier you told the sub-community planner: \"{own_opinion.comment}\"\n\n"
            "Your neighbors said:\n"
            f"{peer_digest}\n\n"
            "You may revise your comment once in reaction to your neighbors, or "
            "restate it. Your unmet needs are facts and must stay exactly: "
            f"{', '.join(u.value for u in unmet) or '(none)'}.\n\n"
            "End your reply with exactly one fenced JSON block of this shape:\n\n"
            f"{_SCHEMAS['opinion_schema']}"
        )

        def check(op: Opinion) -> None:
            if set(op.unmet) != set(unmet):
                raise MalformedPayload(
                    "the unmet list must stay exactly: "
                    + (", ".join(u.value for u in unmet) or "(none)")
                )

        opinion = self._converse(
            "resident", profile.id, prompt, scenario, Opinion, semantic_check=check
        )
        return self._with_agent_id(opinion, profile.id)

    def discuss(self, sub_community, plan, opinions, scenario, max_changes) -> PlanRevision:
        freq: Counter[LandUse] = Counter()
        for op in opinions:
            freq.update(op.unmet)
        digest = "\n".join(
            f"- resident {op.agent_id if op.agent_id is not None else '?'}: {op.comment}"
            for op in opinions
        )
        summary = ", ".join(f"{u.value} x{freq[u]}" for u in sorted(freq, key=lambda u: (-freq[u], u.order)))
        prompt = self._render(
            "sp_discuss",
            community=scenario.name,
            sub_community=str(sub_community),
            plan_table=plan_table(scenario, plan, sub_community),
            constraint_list=constraint_list(scenario, plan),
            opinion_digest=digest or "(no residents in this sub-community)",
            unmet_summary=summary or "(none)",
            max_changes=str(max_changes),
        )
        return self._converse(
            "sp",
            f"sp-{sub_community}",
            prompt,
            scenario,
            PlanRevision,
            semantic_check=lambda r: validate_revision(
                scenario, r, sub_community=sub_community, max_changes=max_changes
            ),
        )

    def feedback(self, plan, violations, scenario) -> PlanRevision:
        before = total_deficit(scenario, plan)

        def check(revision: PlanRevision) -> None:
            validate_revision(scenario, revision)
            after = total_deficit(
                scenario, plan.with_changes((c.plot_id, c.land_use) for c in revision.changes)
            )
            if after >= before:
                raise RevisionRejected(
                    f"revision leaves the total requirement deficit at {after} (was {before}); "
                    "it must strictly decrease"
                )

        prompt = self._render(
            "cp_feedback",
            community=scenario.name,
            violation_list="\n".join(f"- {v.describe()}" for v in violations),
            plan_table="\n".join(
                f"{pid} | {use.value} | sc {scenario.plot(pid).sub_community}"
                for pid, use in sorted(plan.assignment.items())
            ),
            surplus_table=surplus_table(scenario, plan),
        )
        return self._converse("cp", "cp", prompt, scenario, PlanRevision, semantic_check=check)


def _corrective(error: PayloadError, expected_kind: str) -> str:
    return (
        f"Your previous reply could not be used: {error}. "
        f"Reply again with exactly one fenced JSON block of type \"{expected_kind}\", "
        "correcting that problem. Do not include any other fenced block."
    )
