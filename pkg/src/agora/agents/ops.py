"""Role-played operations: proposals, opinions, discussions, feedback.

These wrap the backend calls with the validation every caller relies on:
proposals must be total, sub-community revisions must stay inside their
sub-community, feedback revisions must strictly shrink the requirement
deficit. The backend (scripted or LLM) decides the content; the ops enforce
the contract.
"""

from __future__ import annotations

import dataclasses
from typing import Optional, Sequence

from ..domain import Constraints, Plan, Scenario, Violation, total_deficit
from ..errors import AgoraError
from ..metrics import DistanceEngine, per_type_dists
from ..population import Agent, NeedSet, Population, ResidentProfile, VULNERABLE_GROUPS
from .backends import AgentBackend, RevisionRejected, validate_revision
from .payloads import Opinion, PlanProposal, PlanRevision, check_proposal_total


def cp_propose(
    scenario: Scenario,
    constraints: Optional[Constraints],
    backend: AgentBackend,
) -> PlanProposal:
    """Chief-planner proposal: a total assignment of all vacant plots."""
    if constraints is not None and constraints != scenario.constraints:
        scenario = dataclasses.replace(scenario, constraints=constraints)
    proposal = backend.propose_plan(scenario)
    check_proposal_total(scenario, proposal)
    return proposal


def proposal_to_plan(
    proposal: PlanProposal, provenance: str = "pipeline-initial", revision_step: int = 0
) -> Plan:
    return Plan(
        assignment=dict(proposal.assignment),
        provenance=provenance,
        revision_step=revision_step,
    )


def resident_opine(
    profile: ResidentProfile,
    needs: NeedSet,
    plan: Plan,
    scenario: Scenario,
    backend: AgentBackend,
    need_dists=None,
) -> Opinion:
    """One resident's view of the current plan (unmet needs plus free text)."""
    if need_dists is None:
        from ..metrics import min_distance

        need_dists = {use: min_distance(profile, use, scenario, plan) for use in needs.needs}
    return backend.opine(profile, needs, need_dists, plan, scenario)


def stratified_sample(members: Sequence[Agent], sample_size: int) -> list[Agent]:
    """Deterministic opinion sample: at least one member of each vulnerable
    group present, the rest filled in ascending agent id."""
    if len(members) <= sample_size:
        return list(members)
    chosen: dict[int, Agent] = {}
    for group in VULNERABLE_GROUPS:
        for agent in members:
            if group in agent.profile.vulnerable:
                chosen[agent.profile.id] = agent
                break
    for agent in members:
        if len(chosen) >= sample_size:
            break
        chosen.setdefault(agent.profile.id, agent)
    return [chosen[k] for k in sorted(chosen)][:sample_size]


def solicit_opinions(
    scenario: Scenario,
    population: Population,
    sub_community: int,
    plan: Plan,
    backend: AgentBackend,
    engine: Optional[DistanceEngine] = None,
    sample_size: Optional[int] = None,
    rebuttal: bool = False,
) -> list[Opinion]:
    """Opinions from this sub-community's residents, ascending agent id.

    The scripted backend hears everyone; passing sample_size bounds cost for
    the llm backend. With rebuttal enabled (and a backend that supports it),
    each resident sees the other opinions once and may revise their comment.
    """
    members = population.in_sub_community(scenario, sub_community)
    if sample_size is not None:
        members = stratified_sample(members, sample_size)
    engine = engine or DistanceEngine(scenario, population)
    index_of = {a.profile.id: i for i, a in enumerate(population.agents)}
    type_dists = per_type_dists(engine, plan)

    def dists_for(agent: Agent) -> dict:
        idx = index_of[agent.profile.id]
        return {use: float(type_dists[use][idx]) for use in agent.needs.needs}

    opinions = []
    for agent in members:
        if agent.needs is None:
            raise AgoraError(f"agent {agent.profile.id} has no frozen need set")
        opinions.append(
            backend.opine(agent.profile, agent.needs, dists_for(agent), plan, scenario)
        )

    if rebuttal and getattr(backend, "supports_rebuttal", False) and len(opinions) > 1:
        revised = []
        for agent, own in zip(members, opinions):
            peer_digest = "\n".join(
                f"- resident {o.agent_id if o.agent_id is not None else '?'}: {o.comment}"
                for o in opinions
                if o is not own
            )
            revised.append(
                backend.rebut(
                    agent.profile, agent.needs, dists_for(agent), own, peer_digest,
                    plan, scenario,
                )
            )
        opinions = revised
    return opinions


def sp_discuss_and_revise(
    sub_community: int,
    plan: Plan,
    opinions: Sequence[Opinion],
    scenario: Scenario,
    backend: AgentBackend,
    max_changes: int = 3,
) -> PlanRevision:
    """Sub-community planner revision; every change stays in-sub-community."""
    revision = backend.discuss(sub_community, plan, opinions, scenario, max_changes)
    validate_revision(scenario, revision, sub_community=sub_community, max_changes=max_changes)
    return revision


def cp_feedback_revise(
    plan: Plan,
    violations: Sequence[Violation],
    scenario: Scenario,
    backend: AgentBackend,
) -> PlanRevision:
    """Constraint-repair revision; must strictly reduce the total deficit."""
    if not violations:
        raise AgoraError("cp_feedback_revise requires a non-empty violation list")
    revision = backend.feedback(plan, violations, scenario)
    validate_revision(scenario, revision)
    before = total_deficit(scenario, plan)
    after = total_deficit(
        scenario, plan.with_changes((c.plot_id, c.land_use) for c in revision.changes)
    )
    if after >= before:
        raise RevisionRejected(
            f"feedback revision leaves total deficit at {after} (was {before})"
        )
    return revision


def apply_revision(
    scenario: Scenario,
    plan: Plan,
    revision: PlanRevision,
    revision_step: Optional[int] = None,
    provenance: Optional[str] = None,
) -> Plan:
    """Apply an accepted revision, never touching fixed plots."""
    validate_revision(scenario, revision)
    return plan.with_changes(
        ((c.plot_id, c.land_use) for c in revision.changes),
        provenance=provenance,
        revision_step=revision_step,
    )
