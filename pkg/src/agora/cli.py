"""Operator command line: scenario generation, population synthesis, baseline
and pipeline runs, evaluation, method comparison, and the sandbox server.

Exit codes: 0 success, 1 domain errors (infeasible scenarios, parse failures),
2 usage errors. Diagnostics go to stderr; data artifacts are files. Every
subcommand records a report.json (inside the output directory, or as a
`<out-stem>.report.json` sidecar for single-file outputs) with the effective
config, seeds, versions and model identity.
"""

from __future__ import annotations

import json
import platform
import sys
from pathlib import Path

import click
import numpy as np

from . import __version__
from .domain import (
    load_plan,
    load_scenario,
    save_json,
    save_plan,
    save_scenario,
    validate_plan,
)
from .errors import AgoraError, ConfigError
from .metrics import evaluate
from .planners import METHODS, PlannerConfig, make_plan
from .population import (
    DemographicStats,
    elicit_needs,
    load_population,
    save_population,
    synthesize,
)
from .scenario_gen import TEMPLATES, generate, grid_template

KNOWN_COMMANDS = ("gen-scenario", "synth-pop", "baseline", "run", "eval", "compare", "serve")


def parse_config_file(path: str) -> dict:
    """Minimal key = value config format: JSON-parsed values, full-line #
    comments, optional [subcommand] sections scoping keys to one command."""
    flat: dict = {}
    sections: dict[str, dict] = {}
    current = flat
    for raw in Path(path).read_text(encoding="utf-8").splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("[") and line.endswith("]"):
            name = line[1:-1].strip()
            if name not in KNOWN_COMMANDS:
                raise ConfigError(f"unknown config section [{name}]")
            current = sections.setdefault(name, {})
            continue
        if "=" not in line:
            raise ConfigError(f"config line is not key = value: {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip().replace("-", "_")
        value = value.strip()
        try:
            current[key] = json.loads(value)
        except json.JSONDecodeError:
            current[key] = value
    return {cmd: {**flat, **sections.get(cmd, {})} for cmd in KNOWN_COMMANDS}


def _apply_config(ctx: click.Context, _param: click.Parameter, value):
    if value:
        ctx.default_map = parse_config_file(value)
        ctx.obj = {"config_path": value}
    return value


def _versions() -> dict:
    return {"agora": __version__, "python": platform.python_version(), "numpy": np.__version__}


def _sidecar_report(out_path: Path, command: str, config: dict) -> None:
    report = {"command": command, "config": config, "versions": _versions()}
    save_json(report, out_path.parent / f"{out_path.stem}.report.json")


def _echo_err(message: str) -> None:
    click.echo(message, err=True)


@click.group(context_settings={"help_option_names": ["-h", "--help"]})
@click.version_option(__version__)
@click.option(
    "--config",
    type=click.Path(exists=True, dir_okay=False),
    callback=_apply_config,
    is_eager=True,
    expose_value=False,
    help="key = value config file; explicit flags override it.",
)
def cli() -> None:
    """Participatory land-use planning simulator."""


@cli.command("gen-scenario")
@click.option("--template", type=click.Choice(["hlg", "dhm", "grid"]), required=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
@click.option("--grid-n", type=int, default=3, show_default=True, help="grid template: plots per side")
@click.option("--grid-pitch", type=float, default=250.0, show_default=True, help="grid template: meters per cell")
@click.option("--grid-residential", type=int, default=0, show_default=True)
@click.option("--grid-green", type=int, default=0, show_default=True)
def gen_scenario(template, seed, out, grid_n, grid_pitch, grid_residential, grid_green):
    """Generate a scenario file from a community template."""
    if template == "grid":
        tpl = grid_template(
            n=grid_n,
            pitch_m=grid_pitch,
            residential=grid_residential,
            retained_green=grid_green,
        )
    else:
        tpl = TEMPLATES[template]
    scenario = generate(tpl, seed=seed)
    out_path = Path(out)
    save_scenario(scenario, out_path)
    _sidecar_report(out_path, "gen-scenario", {"template": template, "seed": seed, "out": out})
    _echo_err(
        f"wrote {out}: {len(scenario.plots)} plots, {len(scenario.vacant_ids)} vacant, "
        f"{scenario.n_sub_communities} sub-communities"
    )


@cli.command("synth-pop")
@click.option("--scenario", "scenario_path", type=click.Path(exists=True), required=True)
@click.option("--n", type=int, default=1000, show_default=True)
@click.option("--vulnerable-each", type=int, default=25, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
@click.option("--backend", type=click.Choice(["scripted", "llm"]), default="scripted", show_default=True)
@click.option("--elderly-share", type=float, default=None, help="override the scenario's statistic")
@click.option("--bachelor-share", type=float, default=None, help="override the scenario's statistic")
@click.option("--llm-cache", type=click.Path(file_okay=False), default=None)
@click.option("--llm-endpoint", default=None)
@click.option("--llm-model", default=None)
def synth_pop(scenario_path, n, vulnerable_each, seed, out, backend,
              elderly_share, bachelor_share, llm_cache, llm_endpoint, llm_model):
    """Synthesize residents and freeze their need sets."""
    scenario = load_scenario(scenario_path)
    meta_stats = scenario.metadata.get("stats")
    if meta_stats:
        stats = DemographicStats.from_dict(meta_stats)
    else:
        stats = DemographicStats(elderly_share=0.1638, bachelor_share=0.4888)
        _echo_err("scenario has no demographic stats; using hlg defaults")
    if elderly_share is not None or bachelor_share is not None:
        stats = DemographicStats(
            elderly_share=elderly_share if elderly_share is not None else stats.elderly_share,
            bachelor_share=bachelor_share if bachelor_share is not None else stats.bachelor_share,
            female_share=stats.female_share,
            employment_rate=stats.employment_rate,
            family_size_weights=stats.family_size_weights,
        )
    population = synthesize(scenario, stats, n=n, n_vulnerable_each=vulnerable_each, seed=seed)
    population = elicit_needs(population, _make_elicitation_backend(backend, llm_cache, llm_endpoint, llm_model))
    out_path = Path(out)
    save_population(population, out_path)
    _sidecar_report(
        out_path,
        "synth-pop",
        {
            "scenario": scenario_path,
            "n": n,
            "vulnerable_each": vulnerable_each,
            "seed": seed,
            "backend": backend,
            "stats": stats.to_dict(),
        },
    )
    _echo_err(f"wrote {out}: {len(population)} agents, needs frozen")


def _make_elicitation_backend(backend, llm_cache, llm_endpoint, llm_model):
    if backend == "scripted":
        from .agents import ScriptedBackend

        return ScriptedBackend()
    from .agents import LLMBackend
    from .llm_client import LLMClient

    return LLMBackend(LLMClient(endpoint=llm_endpoint, model=llm_model, cache_dir=llm_cache))


@cli.command("baseline")
@click.option("--method", type=click.Choice(list(METHODS)), required=True)
@click.option("--scenario", "scenario_path", type=click.Path(exists=True), required=True)
@click.option("--pop", "population_path", type=click.Path(exists=True), default=None,
              help="required for gsca")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
def baseline(method, scenario_path, population_path, seed, out):
    """Produce one baseline plan."""
    scenario = load_scenario(scenario_path)
    population = load_population(population_path) if population_path else None
    plan = make_plan(method, scenario, population, PlannerConfig(method=method, seed=seed))
    out_path = Path(out)
    save_plan(plan, out_path)
    _sidecar_report(
        out_path,
        "baseline",
        {"method": method, "scenario": scenario_path, "pop": population_path, "seed": seed},
    )
    violations = validate_plan(scenario, plan)
    _echo_err(f"wrote {out}: {method} plan, {len(violations)} violations")


@cli.command("eval")
@click.option("--scenario", "scenario_path", type=click.Path(exists=True), required=True)
@click.option("--pop", "population_path", type=click.Path(exists=True), required=True)
@click.option("--plan", "plan_path", type=click.Path(exists=True), required=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
@click.option("--per-agent/--no-per-agent", default=True, show_default=True)
def eval_cmd(scenario_path, population_path, plan_path, out, per_agent):
    """Score a plan with the four metrics."""
    scenario = load_scenario(scenario_path)
    population = load_population(population_path)
    plan = load_plan(plan_path)
    report = evaluate(scenario, plan, population, include_per_agent=per_agent)
    out_path = Path(out)
    save_json(report.to_dict(include_per_agent=per_agent), out_path)
    _sidecar_report(
        out_path,
        "eval",
        {"scenario": scenario_path, "pop": population_path, "plan": plan_path},
    )
    _echo_err(
        f"service={report.service:.4f} ecology={report.ecology:.4f} "
        f"satisfaction={report.satisfaction:.4f} inclusion={report.inclusion:.4f}"
    )


@cli.command("run")
@click.option("--scenario", "scenario_path", type=click.Path(exists=True), required=True)
@click.option("--pop", "population_path", type=click.Path(exists=True), required=True)
@click.option("--backend", type=click.Choice(["scripted", "llm"]), default="scripted", show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", "out_dir", type=click.Path(file_okay=False), required=True)
@click.option("--max-feedback-iterations", type=int, default=5, show_default=True)
@click.option("--sp-max-changes", type=int, default=3, show_default=True)
@click.option("--opinion-sample", type=int, default=20, show_default=True,
              help="residents consulted per sub-community (llm backend)")
@click.option("--discussion-passes", type=int, default=1, show_default=True)
@click.option("--skip-discussion", is_flag=True, default=False,
              help="phases 1+3 only (the 'no discussion' variant)")
@click.option("--check-initial-feasibility", is_flag=True, default=False,
              help="repair the proposal before any discussion starts")
@click.option("--rebuttal-round", is_flag=True, default=False,
              help="llm backend: residents see peer opinions once and may revise")
@click.option("--llm-cache", type=click.Path(file_okay=False), default=None)
@click.option("--llm-endpoint", default=None)
@click.option("--llm-model", default=None)
def run_cmd(scenario_path, population_path, backend, seed, out_dir, max_feedback_iterations,
            sp_max_changes, opinion_sample, discussion_passes, skip_discussion,
            check_initial_feasibility, rebuttal_round, llm_cache, llm_endpoint, llm_model):
    """Run the three-phase pipeline and write the run directory."""
    from .pipeline import RunConfig, run

    config = RunConfig(
        scenario_path=scenario_path,
        population_path=population_path,
        backend=backend,
        seed=seed,
        max_feedback_iterations=max_feedback_iterations,
        sp_max_changes=sp_max_changes,
        opinion_sample=opinion_sample,
        out_dir=out_dir,
        discussion_passes=discussion_passes,
        skip_discussion=skip_discussion,
        check_initial_feasibility=check_initial_feasibility,
        rebuttal_round=rebuttal_round,
        llm_cache=llm_cache,
        llm_endpoint=llm_endpoint,
        llm_model=llm_model,
    )
    result = run(config)
    last = result.trajectory[-1]
    _echo_err(
        f"run finished in {result.wall_clock_s:.2f}s: {len(result.trajectory)} trajectory steps, "
        f"{result.feedback_iterations} feedback iterations, final satisfaction "
        f"{last.satisfaction:.4f}"
    )


@cli.command("compare")
@click.option("--scenario", "scenario_path", type=click.Path(exists=True), required=True)
@click.option("--pop", "population_path", type=click.Path(exists=True), required=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", "out_dir", type=click.Path(file_okay=False), required=True)
@click.option("--methods", default=None,
              help="comma-separated subset of random,centralized,decentralized,gsca,"
                   "pipeline,pipeline-no-discussion")
@click.option("--backend", type=click.Choice(["scripted", "llm"]), default="scripted", show_default=True)
@click.option("--llm-cache", type=click.Path(file_okay=False), default=None)
def compare_cmd(scenario_path, population_path, seed, out_dir, methods, backend, llm_cache):
    """Score every method on one shared frozen population."""
    from .pipeline import DEFAULT_COMPARE_METHODS, compare_methods

    scenario = load_scenario(scenario_path)
    population = load_population(population_path)
    method_list = (
        [m.strip() for m in methods.split(",") if m.strip()] if methods else DEFAULT_COMPARE_METHODS
    )
    rows = compare_methods(
        scenario,
        population,
        methods=method_list,
        seed=seed,
        out_dir=out_dir,
        backend=backend,
        llm_cache=llm_cache,
    )
    for row in rows:
        if "error" in row:
            _echo_err(f"{row['method']:>24}: error: {row['error']}")
        else:
            _echo_err(
                f"{row['method']:>24}: service={row['service']:.4f} ecology={row['ecology']:.4f} "
                f"satisfaction={row['satisfaction']:.4f} inclusion={row['inclusion']:.4f}"
            )


@cli.command("serve")
@click.option("--scenario", "scenario_path", type=click.Path(exists=True), required=True)
@click.option("--pop", "population_path", type=click.Path(exists=True), required=True)
@click.option("--backend", type=click.Choice(["scripted", "llm"]), default="scripted", show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--port", type=int, default=8787, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--initial-plan", "initial_plan_path", type=click.Path(exists=True), default=None,
              help="plan file to start from (default: a fresh gsca plan)")
@click.option("--ui-dir", type=click.Path(file_okay=False), default=None,
              help="static frontend bundle to serve at /")
@click.option("--llm-cache", type=click.Path(file_okay=False), default=None)
@click.option("--llm-endpoint", default=None)
@click.option("--llm-model", default=None)
def serve(scenario_path, population_path, backend, seed, port, host, initial_plan_path,
          ui_dir, llm_cache, llm_endpoint, llm_model):
    """Serve the sandbox HTTP API (and the UI, if a bundle is given)."""
    import uvicorn

    from .api import create_app

    scenario = load_scenario(scenario_path)
    population = load_population(population_path)
    initial_plan = load_plan(initial_plan_path) if initial_plan_path else None
    app = create_app(
        scenario,
        population,
        backend_kind=backend,
        seed=seed,
        initial_plan=initial_plan,
        ui_dir=ui_dir,
        llm_cache=llm_cache,
        llm_endpoint=llm_endpoint,
        llm_model=llm_model,
    )
    _echo_err(f"sandbox API on http://{host}:{port} (backend: {backend})")
    uvicorn.run(app, host=host, port=port, log_level="warning")


def main(argv=None) -> int:
    try:
        cli.main(args=argv, standalone_mode=False)
        return 0
    except click.UsageError as exc:
        exc.show()
        return 2
    except click.Abort:
        return 2
    except click.ClickException as exc:
        exc.show()
        return 1
    except AgoraError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
