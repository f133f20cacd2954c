import dataclasses
import json

import pytest

from agora.agents import ScriptedBackend
from agora.domain import LandUse, validate_plan
from agora.errors import ConfigError
from agora.pipeline import (
    DEFAULT_COMPARE_METHODS,
    FeasibilityNotReached,
    RunConfig,
    compare_methods,
    run,
)
from agora.population import DemographicStats, elicit_needs, synthesize
from agora.scenario_gen import generate, grid_template

from test_metrics import lineup_scenario, one_agent_population


class TestRun:
    def test_scripted_run_structure(self, hlg_scenario, small_population, tmp_path):
        config = RunConfig(backend="scripted", seed=42, out_dir=str(tmp_path / "run"))
        result = run(config, scenario=hlg_scenario, population=small_population)
        assert [r.revision_step for r in result.trajectory][:5] == [0, 1, 2, 3, 4]
        assert validate_plan(hlg_scenario, result.final_plan) == []
        assert result.final_plan.provenance == "pipeline-final"
        # artifacts
        out = tmp_path / "run"
        for name in ("plan_initial.json", "plan_step_1.json", "plan_step_4.json",
                     "plan_final.json", "trajectory.csv", "transcript.jsonl",
                     "report.json", "map_final.svg"):
            assert (out / name).exists(), name
        report = json.loads((out / "report.json").read_text())
        assert report["backend"] == "scripted"
        assert report["seed"] == 42
        assert "wall_clock" not in json.dumps(report)

    def test_intermediate_plans_total_and_fixed_plots_untouched(
        self, hlg_scenario, small_population
    ):
        result = run(
            RunConfig(backend="scripted", seed=1),
            scenario=hlg_scenario,
            population=small_population,
        )
        vacant = set(hlg_scenario.vacant_ids)
        plans = [result.initial_plan] + [p for _, p in result.step_plans] + [result.final_plan]
        for plan in plans:
            assert set(plan.assignment) == vacant

    def test_unfrozen_population_rejected(self, hlg_scenario):
        pop = synthesize(hlg_scenario, DemographicStats(0.2, 0.5), n=5, seed=0)
        with pytest.raises(ConfigError):
            run(RunConfig(), scenario=hlg_scenario, population=pop)

    def test_empty_sub_community_is_noop_step(self):
        # all homes land in one quadrant: other sub-communities hear nobody
        scenario = generate(grid_template(n=2, residential=1), seed=3)
        stats = DemographicStats(0.2, 0.5)
        population = elicit_needs(
            synthesize(scenario, stats, n=6, n_vulnerable_each=1, seed=1), ScriptedBackend()
        )
        result = run(RunConfig(backend="scripted", seed=0), scenario=scenario,
                     population=population)
        res_sc = scenario.plot(population.agents[0].profile.home_plot).sub_community
        for sub_community, plan in result.step_plans:
            if sub_community != res_sc:
                prev_step = sub_community - 1
                prev = result.initial_plan if prev_step == 0 else result.step_plans[prev_step - 1][1]
                assert plan.assignment == prev.assignment

    def test_fixed_point_when_plan_already_serves_everyone(self):
        # single resident whose needs are all met by the initial proposal and
        # no constraint violations: the pipeline must not change anything
        scenario = lineup_scenario()
        population = one_agent_population(
            (LandUse.School, LandUse.Hospital, LandUse.Clinic)
        )
        result = run(
            RunConfig(backend="scripted", seed=0),
            scenario=scenario,
            population=population,
        )
        assert result.final_plan.assignment == result.initial_plan.assignment
        assert result.feedback_iterations == 0

    def test_feedback_budget_exhaustion_raises(self, hlg_scenario, small_population):
        class StubbornBackend(ScriptedBackend):
            """Proposes an infeasible plan and refuses to fix enough of it."""

            def propose_plan(self, scenario):
                proposal = super().propose_plan(scenario)
                # overwrite everything to Office: many minimums unmet
                assignment = {pid: LandUse.Office for pid in proposal.assignment}
                return dataclasses.replace(proposal, assignment=assignment)

            def feedback(self, plan, violations, scenario):
                revision = super().feedback(plan, violations, scenario)
                return dataclasses.replace(revision, changes=revision.changes[:1])

        backend = StubbornBackend(population=small_population, seed=0)
        with pytest.raises(FeasibilityNotReached) as err:
            run(
                RunConfig(backend="scripted", seed=0, max_feedback_iterations=2,
                          skip_discussion=True),
                scenario=hlg_scenario,
                population=small_population,
                backend=backend,
            )
        assert err.value.violations
        assert err.value.iterations == 2

    def test_feedback_phase_records_extra_trajectory_entry(
        self, hlg_scenario, small_population
    ):
        class MessyBackend(ScriptedBackend):
            """Valid discussions, but the proposal violates minimums."""

            def propose_plan(self, scenario):
                proposal = super().propose_plan(scenario)
                assignment = dict(proposal.assignment)
                school_ids = [pid for pid, use in assignment.items()
                              if use is LandUse.School]
                for pid in school_ids:
                    assignment[pid] = LandUse.Office
                return dataclasses.replace(proposal, assignment=assignment)

        backend = MessyBackend(population=small_population, seed=0)
        result = run(
            RunConfig(backend="scripted", seed=0, skip_discussion=True),
            scenario=hlg_scenario,
            population=small_population,
            backend=backend,
        )
        assert result.feedback_iterations >= 1
        assert len(result.trajectory) == 2  # step 0 plus the post-feedback entry
        assert validate_plan(hlg_scenario, result.final_plan) == []

    def test_byte_identical_artifacts_across_reruns(
        self, hlg_scenario, small_population, tmp_path
    ):
        outs = []
        for name in ("a", "b"):
            out = tmp_path / name
            run(
                RunConfig(backend="scripted", seed=42, out_dir=str(out)),
                scenario=hlg_scenario,
                population=small_population,
            )
            outs.append(out)
        files_a = sorted(p.name for p in outs[0].iterdir())
        files_b = sorted(p.name for p in outs[1].iterdir())
        assert files_a == files_b
        for name in files_a:
            assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes(), name


class TestCompare:
    def test_six_method_table(self, hlg_scenario, small_population, tmp_path):
        rows = compare_methods(
            hlg_scenario, small_population, seed=3, out_dir=str(tmp_path / "cmp")
        )
        assert [r["method"] for r in rows] == list(DEFAULT_COMPARE_METHODS)
        for row in rows:
            assert "error" not in row, row
            for key in ("service", "ecology", "satisfaction", "inclusion"):
                assert 0.0 <= row[key] <= 1.0
        csv_text = (tmp_path / "cmp" / "comparison.csv").read_text()
        assert csv_text.startswith("method,service,ecology,satisfaction,inclusion")
        assert len(csv_text.strip().splitlines()) == 7

    def test_single_method(self, hlg_scenario, small_population):
        rows = compare_methods(hlg_scenario, small_population, methods=["gsca"], seed=1)
        assert len(rows) == 1 and rows[0]["method"] == "gsca"

    def test_rerun_same_seed_identical(self, hlg_scenario, small_population):
        a = compare_methods(hlg_scenario, small_population, seed=9)
        b = compare_methods(hlg_scenario, small_population, seed=9)
        assert a == b

    def test_unknown_method_becomes_row_error(self, hlg_scenario, small_population):
        rows = compare_methods(hlg_scenario, small_population, methods=["gsca", "dreaming"])
        assert "error" in rows[1]
        assert rows[0]["method"] == "gsca" and "error" not in rows[0]


class TestInitialFeasibilityCheck:
    def test_initial_repair_before_discussions(self, hlg_scenario, small_population):
        class LopsidedBackend(ScriptedBackend):
            def propose_plan(self, scenario):
                proposal = super().propose_plan(scenario)
                assignment = {pid: LandUse.Office for pid in proposal.assignment}
                return dataclasses.replace(proposal, assignment=assignment)

        backend = LopsidedBackend(population=small_population, seed=0)
        result = run(
            RunConfig(backend="scripted", seed=0, check_initial_feasibility=True),
            scenario=hlg_scenario,
            population=small_population,
            backend=backend,
        )
        # the recorded initial plan is the repaired, feasible one
        assert validate_plan(hlg_scenario, result.initial_plan) == []
        assert [r.revision_step for r in result.trajectory][:5] == [0, 1, 2, 3, 4]
