import json

import pytest

from agora.agents import (
    BackendError,
    LLMBackend,
    Opinion,
    PlanRevision,
    RevisionChange,
    RevisionRejected,
    ScriptedBackend,
    Transcript,
    apply_revision,
    cp_feedback_revise,
    cp_propose,
    proposal_to_plan,
    resident_opine,
    solicit_opinions,
    sp_discuss_and_revise,
    stratified_sample,
)
from agora.domain import LandUse, Plan, total_deficit, validate_plan
from agora.errors import AgoraError
from agora.planners import PlannerConfig, plan_gsca
from test_domain import build_scenario, total_plan
from test_metrics import lineup_plan, lineup_scenario, one_agent_population


class TestScriptedProposal:
    def test_equals_gsca_plan(self, hlg_scenario, small_population):
        backend = ScriptedBackend(population=small_population, seed=3)
        proposal = cp_propose(hlg_scenario, None, backend)
        gsca = plan_gsca(hlg_scenario, small_population, PlannerConfig(seed=3))
        assert proposal.assignment == dict(gsca.assignment)
        assert set(proposal.reasons) == set(proposal.assignment)
        plan = proposal_to_plan(proposal)
        assert validate_plan(hlg_scenario, plan) == []

    def test_needs_population(self, hlg_scenario):
        with pytest.raises(BackendError):
            cp_propose(hlg_scenario, None, ScriptedBackend())


class TestResidentOpine:
    def test_all_needs_met_gives_empty_unmet(self):
        scenario, plan = lineup_scenario(), lineup_plan()
        agent = one_agent_population((LandUse.School, LandUse.Hospital, LandUse.Clinic)).agents[0]
        backend = ScriptedBackend()
        opinion = resident_opine(agent.profile, agent.needs, plan, scenario, backend)
        assert opinion.unmet == ()
        assert opinion.agent_id == 0

    def test_distant_clinic_is_unmet(self):
        scenario = lineup_scenario()
        # Clinic on the 800 m plot only
        plan = Plan(assignment={7: LandUse.Clinic})
        agent = one_agent_population((LandUse.School, LandUse.Clinic, LandUse.Park)).agents[0]
        opinion = resident_opine(agent.profile, agent.needs, plan, scenario, ScriptedBackend())
        assert LandUse.Clinic in opinion.unmet
        assert LandUse.School in opinion.unmet  # no school anywhere

    def test_scripted_purity(self):
        scenario, plan = lineup_scenario(), lineup_plan()
        agent = one_agent_population((LandUse.School, LandUse.Clinic, LandUse.Park)).agents[0]
        a = resident_opine(agent.profile, agent.needs, plan, scenario, ScriptedBackend())
        b = resident_opine(agent.profile, agent.needs, plan, scenario, ScriptedBackend())
        assert a == b


class TestSpDiscussion:
    def test_majority_unmet_takes_surplus_donor(self):
        # minimums: School 1 (have 1). Surplus sits in Office (three plots).
        scenario = build_scenario(min_count={LandUse.School: 1})
        plan = total_plan(LandUse.School, LandUse.Office, LandUse.Office, LandUse.Office)
        opinions = [Opinion(unmet=(LandUse.Clinic,), agent_id=i) for i in range(7)]
        opinions += [Opinion(unmet=(LandUse.Park,), agent_id=7 + i) for i in range(2)]
        backend = ScriptedBackend()
        revision = sp_discuss_and_revise(2, plan, opinions, scenario, backend, max_changes=2)
        assert len(revision.changes) == 2
        first, second = revision.changes
        # most frequent unmet first; donor is the lowest-id surplus Office
        # plot inside sub-community 2 (plots 3..5)
        assert first.land_use is LandUse.Clinic
        assert first.plot_id == 3
        assert second.land_use is LandUse.Park
        assert second.plot_id == 4

    def test_no_unmet_needs_is_a_noop(self):
        scenario = build_scenario()
        plan = total_plan(LandUse.School, LandUse.Office, LandUse.Clinic, LandUse.Park)
        revision = sp_discuss_and_revise(
            2, plan, [Opinion(unmet=())], scenario, ScriptedBackend(), max_changes=3
        )
        assert revision.changes == ()

    def test_respects_minimums_no_surplus_skip(self):
        # every assigned use sits exactly at its minimum: nothing to donate
        scenario = build_scenario(
            min_count={LandUse.School: 1, LandUse.Office: 1, LandUse.Clinic: 1,
                       LandUse.Business: 1}
        )
        plan = total_plan(LandUse.School, LandUse.Office, LandUse.Clinic, LandUse.Business)
        revision = sp_discuss_and_revise(
            2, plan, [Opinion(unmet=(LandUse.Hospital,))], scenario, ScriptedBackend(), 3
        )
        assert revision.changes == ()

    def test_revision_must_stay_in_sub_community(self):
        scenario = build_scenario()
        plan = total_plan(LandUse.School, LandUse.Office, LandUse.Office, LandUse.Office)
        # plot 2 is in sub-community 1, not 2
        revision = PlanRevision(changes=(RevisionChange(plot_id=2, land_use=LandUse.Park),))
        with pytest.raises(RevisionRejected):
            apply_and_check = sp_discuss_and_revise  # noqa: F841
            from agora.agents import validate_revision

            validate_revision(scenario, revision, sub_community=2)

    def test_revision_on_fixed_plot_rejected(self):
        scenario = build_scenario()
        revision = PlanRevision(changes=(RevisionChange(plot_id=0, land_use=LandUse.Park),))
        with pytest.raises(RevisionRejected):
            from agora.agents import validate_revision

            validate_revision(scenario, revision)


class TestCpFeedback:
    def test_single_deficit_from_surplus(self):
        scenario = build_scenario(min_count={LandUse.School: 2})
        plan = total_plan(LandUse.School, LandUse.Office, LandUse.Office, LandUse.Office)
        violations = validate_plan(scenario, plan)
        assert [v.deficit for v in violations] == [1]
        revision = cp_feedback_revise(plan, violations, scenario, ScriptedBackend())
        assert len(revision.changes) == 1
        change = revision.changes[0]
        assert change.land_use is LandUse.School
        assert change.plot_id == 3  # lowest-id Office plot
        fixed = apply_revision(scenario, plan, revision)
        assert validate_plan(scenario, fixed) == []

    def test_two_deficits_fixed_in_one_call(self):
        scenario = build_scenario(min_count={LandUse.School: 1, LandUse.Clinic: 1})
        plan = total_plan(LandUse.Office, LandUse.Office, LandUse.Office, LandUse.Office)
        violations = validate_plan(scenario, plan)
        revision = cp_feedback_revise(plan, violations, scenario, ScriptedBackend())
        fixed = apply_revision(scenario, plan, revision)
        assert total_deficit(scenario, fixed) == 0

    def test_empty_violations_is_a_precondition_error(self):
        scenario = build_scenario()
        plan = total_plan(LandUse.School, LandUse.Office, LandUse.Clinic, LandUse.Park)
        with pytest.raises(AgoraError):
            cp_feedback_revise(plan, [], scenario, ScriptedBackend())

    def test_strictly_decreasing_deficit(self):
        scenario = build_scenario(min_count={LandUse.School: 2, LandUse.Clinic: 1})
        plan = total_plan(LandUse.Office, LandUse.Office, LandUse.Office, LandUse.Office)
        before = total_deficit(scenario, plan)
        revision = cp_feedback_revise(
            plan, validate_plan(scenario, plan), scenario, ScriptedBackend()
        )
        after = total_deficit(scenario, apply_revision(scenario, plan, revision))
        assert after < before


class TestSolicitOpinions:
    def test_ascending_agent_id_order(self, hlg_scenario, small_population):
        backend = ScriptedBackend(population=small_population)
        plan = plan_gsca(hlg_scenario, small_population, PlannerConfig())
        opinions = solicit_opinions(hlg_scenario, small_population, 1, plan, backend)
        ids = [o.agent_id for o in opinions]
        assert ids == sorted(ids)
        members = small_population.in_sub_community(hlg_scenario, 1)
        assert len(opinions) == len(members)

    def test_stratified_sample_includes_vulnerable_groups(self, hlg_scenario, hlg_population):
        members = hlg_population.in_sub_community(hlg_scenario, 1)
        sample = stratified_sample(members, 10)
        assert len(sample) == 10
        groups_present = {g for a in members for g in a.profile.vulnerable}
        groups_sampled = {g for a in sample for g in a.profile.vulnerable}
        assert groups_present == groups_sampled
        ids = [a.profile.id for a in sample]
        assert ids == sorted(ids)


class FakeClient:
    """Queue of canned responses standing in for the chat service."""

    def __init__(self, responses):
        self.responses = list(responses)
        self.requests = []
        self.model = "fake-model"

    def complete_messages(self, messages):
        self.requests.append([dict(m) for m in messages])
        if not self.responses:
            raise AssertionError("fake client ran out of responses")
        return self.responses.pop(0), {"prompt_tokens": 10, "completion_tokens": 5}


def proposal_block(scenario, use=LandUse.School):
    assignment = {str(pid): use.value for pid in scenario.vacant_ids}
    return "Proposal follows.\n```json\n" + json.dumps(
        {"type": "plan_proposal", "assignment": assignment, "reasons": {}}
    ) + "\n```"


class TestLLMBackend:
    def test_corrective_retry_on_missing_plots(self):
        scenario = build_scenario()
        incomplete = (
            'Here.\n```json\n{"type": "plan_proposal", "assignment": {"2": "School"}}\n```'
        )
        client = FakeClient([incomplete, proposal_block(scenario)])
        backend = LLMBackend(client=client, transcript=Transcript())
        proposal = cp_propose(scenario, None, backend)
        assert set(proposal.assignment) == set(scenario.vacant_ids)
        assert len(client.requests) == 2
        corrective = client.requests[1][-1]["content"]
        assert "missing" in corrective and "3" in corrective

    def test_parse_retries_then_error(self):
        scenario = build_scenario()
        client = FakeClient(["no block here"] * 4)
        backend = LLMBackend(client=client, transcript=Transcript())
        with pytest.raises(BackendError):
            cp_propose(scenario, None, backend)
        assert len(client.requests) == 4  # initial + 3 corrective retries

    def test_semantic_retry_limited_to_one(self):
        scenario = build_scenario(min_count={LandUse.School: 2})
        plan = total_plan(LandUse.School, LandUse.Office, LandUse.Office, LandUse.Office)
        violations = validate_plan(scenario, plan)
        useless = (
            'OK.\n```json\n{"type": "plan_revision", "changes": '
            '[{"plot_id": 4, "land_use": "Office", "reason": "keep"}]}\n```'
        )
        client = FakeClient([useless, useless])
        backend = LLMBackend(client=client, transcript=Transcript())
        with pytest.raises(BackendError):
            cp_feedback_revise(plan, violations, scenario, backend)
        assert len(client.requests) == 2  # initial + one semantic retry

    def test_feedback_accepts_deficit_reducing_revision(self):
        scenario = build_scenario(min_count={LandUse.School: 2})
        plan = total_plan(LandUse.School, LandUse.Office, LandUse.Office, LandUse.Office)
        violations = validate_plan(scenario, plan)
        good = (
            'Fixing.\n```json\n{"type": "plan_revision", "changes": '
            '[{"plot_id": 3, "land_use": "School", "reason": "deficit"}]}\n```'
        )
        backend = LLMBackend(client=FakeClient([good]), transcript=Transcript())
        revision = cp_feedback_revise(plan, violations, scenario, backend)
        assert revision.changes[0].plot_id == 3

    def test_opinion_unmet_must_match_computed(self):
        scenario = lineup_scenario()
        plan = Plan(assignment={7: LandUse.Clinic})  # clinic at 800 m
        agent = one_agent_population((LandUse.School, LandUse.Clinic, LandUse.Park)).agents[0]
        wrong = '```json\n{"type": "opinion", "unmet": [], "comment": "fine", "plots": []}\n```'
        right = (
            '```json\n{"type": "opinion", "unmet": ["School", "Clinic", "Park"], '
            '"comment": "far away", "plots": []}\n```'
        )
        client = FakeClient([wrong, right])
        backend = LLMBackend(client=client, transcript=Transcript())
        opinion = resident_opine(agent.profile, agent.needs, plan, scenario, backend)
        assert set(opinion.unmet) == {LandUse.School, LandUse.Clinic, LandUse.Park}
        assert len(client.requests) == 2

    def test_transcript_records_prompts_and_responses(self):
        scenario = build_scenario()
        transcript = Transcript()
        backend = LLMBackend(client=FakeClient([proposal_block(scenario)]), transcript=transcript)
        cp_propose(scenario, None, backend)
        directions = [e.direction for e in transcript.entries()]
        assert directions == ["prompt", "response"]
        seqs = [e.seq for e in transcript.entries()]
        assert seqs == [0, 1]


class TestTranscript:
    def test_append_only_and_replayable(self, tmp_path):
        transcript = Transcript()
        transcript.append(role="cp", direction="response", text="hello", agent_id="cp")
        transcript.append(role="resident", direction="response", text="hi", agent_id=4,
                          payload={"type": "opinion"})
        path = tmp_path / "t.jsonl"
        transcript.save_jsonl(path)
        again = Transcript.load_jsonl(path)
        assert [e.to_dict() for e in again.entries()] == [
            e.to_dict() for e in transcript.entries()
        ]
        assert [e.seq for e in again.entries()] == [0, 1]

    def test_after_cursor(self):
        transcript = Transcript()
        for i in range(5):
            transcript.append(role="cp", direction="response", text=str(i))
        assert [e.seq for e in transcript.after(2)] == [3, 4]
        assert transcript.after(10) == []


class TestRebuttalRound:
    def opinion_block(self, unmet, comment):
        payload = {"type": "opinion", "unmet": unmet, "comment": comment, "plots": []}
        return "In character.\n```json\n" + json.dumps(payload) + "\n```"

    def test_llm_rebuttal_revises_comments_once(self, hlg_scenario, small_population):
        from agora.agents import solicit_opinions
        from agora.metrics import DistanceEngine, per_type_dists, SERVICE_RADIUS_M
        from agora.planners import PlannerConfig, plan_gsca

        plan = plan_gsca(hlg_scenario, small_population, PlannerConfig())
        engine = DistanceEngine(hlg_scenario, small_population)
        members = small_population.in_sub_community(hlg_scenario, 1)[:2]
        sample_size = len(members)

        # canned replies need the factually correct unmet lists, in call order
        type_dists = per_type_dists(engine, plan)
        index_of = {a.profile.id: i for i, a in enumerate(small_population.agents)}

        def unmet_for(agent):
            idx = index_of[agent.profile.id]
            return [u.value for u in agent.needs.needs
                    if not type_dists[u][idx] < SERVICE_RADIUS_M]

        responses = [self.opinion_block(unmet_for(a), "first thoughts") for a in members]
        responses += [self.opinion_block(unmet_for(a), "after hearing neighbors")
                      for a in members]
        client = FakeClient(responses)
        backend = LLMBackend(client=client, transcript=Transcript())
        opinions = solicit_opinions(
            hlg_scenario, small_population, 1, plan, backend,
            engine=engine, sample_size=sample_size, rebuttal=True,
        )
        assert len(client.requests) == 2 * len(members)
        assert all(o.comment == "after hearing neighbors" for o in opinions)
        # the rebuttal prompt carries the peers' first-round comments
        rebuttal_prompt = client.requests[len(members)][0]["content"]
        assert "first thoughts" in rebuttal_prompt

    def test_scripted_backend_ignores_rebuttal(self, hlg_scenario, small_population):
        from agora.agents import solicit_opinions

        backend = ScriptedBackend(population=small_population)
        plan = plan_gsca(hlg_scenario, small_population, PlannerConfig())
        a = solicit_opinions(hlg_scenario, small_population, 1, plan, backend,
                             rebuttal=True)
        b = solicit_opinions(hlg_scenario, small_population, 1, plan, backend,
                             rebuttal=False)
        assert a == b
