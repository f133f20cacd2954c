"""End-to-end orchestration: proposal, sub-community discussions, feedback.

One run executes the three phases in order and records the metric trajectory:
step 0 scores the chief planner's proposal, step k the plan after revising
sub-community k, plus one final entry if the constraint-feedback phase
changed anything. Runs are deterministic under the scripted backend, and
under the llm backend when replayed against a warmed response cache.
"""

from __future__ import annotations

import platform
import time
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .agents import (
    ScriptedBackend,
    LLMBackend,
    Transcript,
    apply_revision,
    cp_feedback_revise,
    cp_propose,
    proposal_to_plan,
    solicit_opinions,
    sp_discuss_and_revise,
)
from .domain import (
    Plan,
    Scenario,
    Violation,
    load_scenario,
    save_json,
    save_plan,
    validate_plan,
)
from .errors import AgoraError, ConfigError
from .metrics import DistanceEngine, MetricsReport, evaluate, save_trajectory_csv
from .planners import PlannerConfig, make_plan, METHODS
from .population import Population, load_population
from .scenario_gen import render_map


class FeasibilityNotReached(AgoraError):
    """Feedback budget exhausted with violations remaining."""

    def __init__(self, plan: Plan, violations: Sequence[Violation], iterations: int):
        self.plan = plan
        self.violations = list(violations)
        self.iterations = iterations
        super().__init__(
            f"still {len(self.violations)} violations after {iterations} feedback iterations"
        )


@dataclass
class RunConfig:
    scenario_path: Optional[str] = None
    population_path: Optional[str] = None
    backend: str = "scripted"  # "scripted" | "llm"
    seed: int = 0
    max_feedback_iterations: int = 5
    sp_max_changes: int = 3
    opinion_sample: int = 20  # llm backend only; scripted hears everyone
    out_dir: Optional[str] = None
    discussion_passes: int = 1
    skip_discussion: bool = False
    check_initial_feasibility: bool = False  # repair the proposal before any discussion
    rebuttal_round: bool = False  # llm backend: one peer-rebuttal pass per sub-community
    llm_cache: Optional[str] = None
    llm_endpoint: Optional[str] = None
    llm_model: Optional[str] = None

    def __post_init__(self) -> None:
        if self.backend not in ("scripted", "llm"):
            raise ConfigError(f"backend must be scripted or llm, got {self.backend!r}")
        if self.max_feedback_iterations < 1:
            raise ConfigError("max_feedback_iterations must be >= 1")
        if self.discussion_passes < 0:
            raise ConfigError("discussion_passes must be >= 0")


@dataclass
class RunResult:
    initial_plan: Plan
    step_plans: list[tuple[int, Plan]]
    final_plan: Plan
    trajectory: list[MetricsReport]
    transcript: Transcript
    usage: dict
    feedback_iterations: int
    wall_clock_s: float  # in-memory only; persisted artifacts stay reproducible
    out_dir: Optional[str] = None


def _build_backend(config: RunConfig, population: Population, transcript: Transcript):
    if config.backend == "scripted":
        return ScriptedBackend(population=population, seed=config.seed, transcript=transcript)
    from .llm_client import LLMClient

    client = LLMClient(
        endpoint=config.llm_endpoint,
        model=config.llm_model,
        cache_dir=config.llm_cache,
    )
    return LLMBackend(client=client, transcript=transcript)


def _feedback_repair(
    scenario: Scenario, plan: Plan, backend, budget: int, step: int
) -> tuple[Plan, int]:
    """Constraint-feedback loop: repair until feasible or the budget runs out."""
    iterations = 0
    for _ in range(budget):
        violations = validate_plan(scenario, plan)
        if not violations:
            break
        revision = cp_feedback_revise(plan, violations, scenario, backend)
        iterations += 1
        plan = apply_revision(
            scenario, plan, revision, revision_step=step, provenance="pipeline-feedback"
        )
    return plan, iterations


def run(
    config: RunConfig,
    scenario: Optional[Scenario] = None,
    population: Optional[Population] = None,
    backend=None,
) -> RunResult:
    """Execute one full pipeline run (optionally with injected objects)."""
    t0 = time.perf_counter()
    if scenario is None:
        if not config.scenario_path:
            raise ConfigError("no scenario given")
        scenario = load_scenario(config.scenario_path)
    if population is None:
        if not config.population_path:
            raise ConfigError("no population given")
        population = load_population(config.population_path)
    if not population.needs_frozen:
        raise ConfigError("population needs are not frozen; run need elicitation first")

    transcript = Transcript()
    if backend is None:
        backend = _build_backend(config, population, transcript)
    engine = DistanceEngine(scenario, population)

    proposal = cp_propose(scenario, None, backend)
    plan = proposal_to_plan(proposal, provenance="pipeline-initial", revision_step=0)
    if config.check_initial_feasibility:
        plan, used = _feedback_repair(
            scenario, plan, backend, config.max_feedback_iterations, step=0
        )
        leftover = validate_plan(scenario, plan)
        if leftover:
            raise FeasibilityNotReached(plan, leftover, used)
    initial_plan = plan
    trajectory = [
        evaluate(scenario, plan, population, engine=engine, revision_step=0)
    ]

    step = 0
    step_plans: list[tuple[int, Plan]] = []
    if not config.skip_discussion:
        sample = config.opinion_sample if backend.kind == "llm" else None
        for _ in range(config.discussion_passes):
            for sub_community in range(1, scenario.n_sub_communities + 1):
                step += 1
                opinions = solicit_opinions(
                    scenario,
                    population,
                    sub_community,
                    plan,
                    backend,
                    engine=engine,
                    sample_size=sample,
                    rebuttal=config.rebuttal_round,
                )
                revision = sp_discuss_and_revise(
                    sub_community, plan, opinions, scenario, backend, config.sp_max_changes
                )
                plan = apply_revision(
                    scenario, plan, revision, revision_step=step, provenance=f"pipeline-sc{sub_community}"
                )
                step_plans.append((sub_community, plan))
                trajectory.append(
                    evaluate(scenario, plan, population, engine=engine, revision_step=step)
                )

    plan, feedback_iterations = _feedback_repair(
        scenario, plan, backend, config.max_feedback_iterations, step=step + 1
    )
    violations = validate_plan(scenario, plan)
    if violations:
        raise FeasibilityNotReached(plan, violations, feedback_iterations)
    if feedback_iterations:
        step += 1
        trajectory.append(
            evaluate(scenario, plan, population, engine=engine, revision_step=step)
        )

    final_plan = Plan(
        assignment=dict(plan.assignment), provenance="pipeline-final", revision_step=step
    )
    usage = {"backend": backend.kind}
    client = getattr(backend, "client", None)
    if client is not None and hasattr(client, "usage_summary"):
        usage.update(client.usage_summary())
        usage["model"] = getattr(client, "model", None)

    result = RunResult(
        initial_plan=initial_plan,
        step_plans=step_plans,
        final_plan=final_plan,
        trajectory=trajectory,
        transcript=transcript,
        usage=usage,
        feedback_iterations=feedback_iterations,
        wall_clock_s=time.perf_counter() - t0,
    )
    if config.out_dir:
        result.out_dir = str(config.out_dir)
        _write_run_artifacts(config, scenario, population, result)
    return result


def _write_run_artifacts(
    config: RunConfig, scenario: Scenario, population: Population, result: RunResult
) -> None:
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    save_plan(result.initial_plan, out / "plan_initial.json")
    for step_index, (_, plan) in enumerate(result.step_plans, start=1):
        save_plan(plan, out / f"plan_step_{step_index}.json")
    save_plan(result.final_plan, out / "plan_final.json")
    save_trajectory_csv(result.trajectory, out / "trajectory.csv")
    result.transcript.save_jsonl(out / "transcript.jsonl")
    changed = [
        pid
        for pid in sorted(result.final_plan.assignment)
        if result.final_plan.assignment[pid] is not result.initial_plan.assignment.get(pid)
    ]
    with open(out / "map_final.svg", "w", encoding="utf-8") as fh:
        fh.write(render_map(scenario, result.final_plan, changed_plot_ids=changed,
                            title=f"{scenario.name}: final plan"))
    report = run_report(config, scenario, population, result)
    save_json(report, out / "report.json")


def run_report(
    config: RunConfig, scenario: Scenario, population: Population, result: RunResult
) -> dict:
    """Reproducibility record. Deliberately excludes wall-clock time so two
    identical runs produce byte-identical artifacts."""
    first, last = result.trajectory[0], result.trajectory[-1]
    config_echo = asdict(config)
    config_echo.pop("out_dir", None)  # the directory is where this report lives
    return {
        "config": config_echo,
        "scenario": {"name": scenario.name, "plots": len(scenario.plots)},
        "population": {"size": len(population), "seed": population.seed},
        "backend": config.backend,
        "model": result.usage.get("model"),
        "seed": config.seed,
        "versions": {
            "agora": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
        },
        "feedback_iterations": result.feedback_iterations,
        "metrics_initial": {
            "service": first.service,
            "ecology": first.ecology,
            "satisfaction": first.satisfaction,
            "inclusion": first.inclusion,
        },
        "metrics_final": {
            "service": last.service,
            "ecology": last.ecology,
            "satisfaction": last.satisfaction,
            "inclusion": last.inclusion,
        },
        "usage": {k: v for k, v in result.usage.items() if k != "model"},
    }


DEFAULT_COMPARE_METHODS = (
    "random",
    "centralized",
    "decentralized",
    "gsca",
    "pipeline",
    "pipeline-no-discussion",
)


def compare_methods(
    scenario: Scenario,
    population: Population,
    methods: Sequence[str] = DEFAULT_COMPARE_METHODS,
    seed: int = 0,
    out_dir: Optional[str] = None,
    backend: str = "scripted",
    llm_cache: Optional[str] = None,
) -> list[dict]:
    """One metrics row per method over the same frozen population.

    Row errors are recorded as data so a partial table still comes back.
    """
    engine = DistanceEngine(scenario, population)
    rows: list[dict] = []
    for method in methods:
        try:
            if method in METHODS:
                plan = make_plan(
                    method, scenario, population, PlannerConfig(method=method, seed=seed), engine
                )
                report = evaluate(
                    scenario, plan, population, engine=engine, include_per_agent=False
                )
            elif method in ("pipeline", "pipeline-no-discussion"):
                run_config = RunConfig(
                    backend=backend,
                    seed=seed,
                    skip_discussion=(method == "pipeline-no-discussion"),
                    out_dir=str(Path(out_dir) / method) if out_dir else None,
                    llm_cache=llm_cache,
                )
                result = run(run_config, scenario=scenario, population=population)
                report = result.trajectory[-1]
            else:
                raise ConfigError(f"unknown method {method!r}")
        except AgoraError as exc:
            rows.append({"method": method, "error": str(exc)})
            continue
        rows.append(
            {
                "method": method,
                "service": report.service,
                "ecology": report.ecology,
                "satisfaction": report.satisfaction,
                "inclusion": report.inclusion,
            }
        )
    if out_dir:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        lines = ["method,service,ecology,satisfaction,inclusion"]
        for row in rows:
            if "error" in row:
                lines.append(f"{row['method']},error:{row['error']},,,")
            else:
                lines.append(
                    f"{row['method']},{row['service']!r},{row['ecology']!r},"
                    f"{row['satisfaction']!r},{row['inclusion']!r}"
                )
        (out / "comparison.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
        save_json(
            {
                "seed": seed,
                "methods": list(methods),
                "scenario": scenario.name,
                "population_size": len(population),
                "rows": rows,
            },
            out / "report.json",
        )
    return rows
