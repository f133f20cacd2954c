"""Sandbox HTTP API: one live planning session for the web UI.

The human at the browser plays the chief planner: edit plot assignments,
solicit sub-community discussions or single-resident opinions, watch metrics,
violations and the transcript respond. Single session per process; mutations
are serialized behind one lock and every successful mutation returns the same
MetricsReport the metrics module would compute offline on the resulting plan.
"""

from __future__ import annotations

import secrets
import threading
from collections import deque
from typing import Optional

from fastapi import Body, FastAPI, HTTPException, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from .agents import (
    LLMBackend,
    ScriptedBackend,
    Transcript,
    apply_revision,
    resident_opine,
    solicit_opinions,
    sp_discuss_and_revise,
)
from .domain import (
    ASSIGNABLE_USES,
    LandUse,
    Plan,
    Scenario,
    plan_to_dict,
    validate_plan,
)
from .errors import AgoraError
from .metrics import DistanceEngine, MetricsReport, evaluate, per_type_dists
from .planners import PlannerConfig, plan_gsca
from .population import Population
from .scenario_gen import scenario_to_geojson

UNDO_DEPTH = 50


def _error(status: int, kind: str, message: str) -> HTTPException:
    return HTTPException(status_code=status, detail={"type": kind, "message": message})


class Session:
    """All mutable sandbox state; one writer at a time."""

    def __init__(
        self,
        scenario: Scenario,
        population: Population,
        backend,
        initial_plan: Optional[Plan] = None,
        seed: int = 0,
    ):
        self.token = secrets.token_hex(8)
        self.scenario = scenario
        self.population = population
        self.backend = backend
        self.engine = DistanceEngine(scenario, population)
        backend_transcript = getattr(backend, "transcript", None)
        self.transcript: Transcript = (
            backend_transcript if backend_transcript is not None else Transcript()
        )
        if initial_plan is None:
            initial_plan = plan_gsca(
                scenario, population, PlannerConfig(method="gsca", seed=seed), engine=self.engine
            )
        self.plan = initial_plan
        self.version = 0
        self.undo_stack: deque[Plan] = deque(maxlen=UNDO_DEPTH)
        self.lock = threading.RLock()
        self.trajectory: list[MetricsReport] = [self._score()]

    def _score(self) -> MetricsReport:
        return evaluate(
            self.scenario,
            self.plan,
            self.population,
            engine=self.engine,
            revision_step=self.version,
            include_per_agent=False,
        )

    def check_write(self, expected_version: Optional[int], token: Optional[str]) -> None:
        if token is not None and token != self.token:
            raise _error(409, "token_mismatch", "session token does not match")
        if expected_version is not None and expected_version != self.version:
            raise _error(
                409,
                "version_conflict",
                f"plan is at version {self.version}, request expected {expected_version}",
            )

    def commit(self, new_plan: Plan) -> MetricsReport:
        """Push undo state, install the new plan, score it."""
        self.undo_stack.append(self.plan)
        self.version += 1
        self.plan = Plan(
            assignment=dict(new_plan.assignment),
            provenance=new_plan.provenance,
            revision_step=self.version,
        )
        report = self._score()
        self.trajectory.append(report)
        return report

    def state_payload(self, report: Optional[MetricsReport] = None) -> dict:
        report = report or self.trajectory[-1]
        return {
            "version": self.version,
            "plan": plan_to_dict(self.plan),
            "metrics": report.to_dict(include_per_agent=False),
            "violations": [v.to_dict() for v in validate_plan(self.scenario, self.plan)],
        }


def create_app(
    scenario: Scenario,
    population: Population,
    backend_kind: str = "scripted",
    seed: int = 0,
    initial_plan: Optional[Plan] = None,
    ui_dir: Optional[str] = None,
    llm_cache: Optional[str] = None,
    llm_endpoint: Optional[str] = None,
    llm_model: Optional[str] = None,
    opinion_sample: Optional[int] = None,
    sp_max_changes: int = 3,
) -> FastAPI:
    if not population.needs_frozen:
        raise AgoraError("population needs are not frozen; elicit needs before serving")
    transcript = Transcript()
    if backend_kind == "scripted":
        backend = ScriptedBackend(population=population, seed=seed, transcript=transcript)
    else:
        from .llm_client import LLMClient

        backend = LLMBackend(
            client=LLMClient(endpoint=llm_endpoint, model=llm_model, cache_dir=llm_cache),
            transcript=transcript,
        )
    session = Session(scenario, population, backend, initial_plan=initial_plan, seed=seed)
    if opinion_sample is None and backend_kind == "llm":
        opinion_sample = 20

    app = FastAPI(title="agora sandbox", version="0.1.0")
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )

    @app.exception_handler(AgoraError)
    async def _agora_error(_request: Request, exc: AgoraError):
        return JSONResponse(
            status_code=400, content={"detail": {"type": type(exc).__name__, "message": str(exc)}}
        )

    @app.get("/session")
    def get_session():
        with session.lock:
            return {
                "token": session.token,
                "scenario": scenario.name,
                "backend": backend_kind,
                "version": session.version,
                "n_sub_communities": scenario.n_sub_communities,
                "population": len(population),
            }

    @app.get("/scenario")
    def get_scenario():
        return scenario_to_geojson(scenario)

    @app.get("/plan")
    def get_plan():
        with session.lock:
            return {"version": session.version, "plan": plan_to_dict(session.plan)}

    @app.get("/metrics")
    def get_metrics():
        with session.lock:
            return session.trajectory[-1].to_dict(include_per_agent=False)

    @app.get("/trajectory")
    def get_trajectory():
        with session.lock:
            return {"steps": [r.to_dict(include_per_agent=False) for r in session.trajectory]}

    @app.get("/violations")
    def get_violations():
        with session.lock:
            return {"violations": [v.to_dict() for v in validate_plan(scenario, session.plan)]}

    @app.get("/transcript")
    def get_transcript(after: int = -1):
        entries = session.transcript.after(after)
        return {
            "entries": [e.to_dict() for e in entries],
            "last_seq": entries[-1].seq if entries else after,
        }

    @app.get("/residents")
    def list_residents(sub_community: Optional[int] = None):
        out = []
        for agent in population.agents:
            sc = scenario.plot(agent.profile.home_plot).sub_community
            if sub_community is not None and sc != sub_community:
                continue
            out.append(
                {
                    "id": agent.profile.id,
                    "sub_community": sc,
                    "age": agent.profile.age,
                    "vulnerable": sorted(agent.profile.vulnerable),
                    "needs": [u.value for u in agent.needs.needs] if agent.needs else [],
                }
            )
        return {"residents": out}

    @app.post("/plan/edits")
    def post_edits(body: dict = Body(...)):
        edits = body.get("edits")
        if not isinstance(edits, list) or not edits:
            raise _error(400, "bad_request", "body must carry a non-empty 'edits' list")
        with session.lock:
            session.check_write(body.get("expected_version"), body.get("token"))
            changes: list[tuple[int, LandUse]] = []
            for edit in edits:
                try:
                    plot_id = int(edit["plot_id"])
                    use_name = edit["land_use"]
                except (KeyError, TypeError, ValueError):
                    raise _error(400, "bad_request", f"malformed edit {edit!r}")
                if not 0 <= plot_id < len(scenario.plots):
                    raise _error(400, "unknown_plot", f"plot {plot_id} does not exist")
                plot = scenario.plot(plot_id)
                if not plot.vacant:
                    raise _error(
                        400, "fixed_plot", f"plot {plot_id} is fixed ({plot.fixed_use.value})"
                    )
                try:
                    use = LandUse(use_name)
                except ValueError:
                    raise _error(400, "unknown_land_use", f"unknown land use {use_name!r}")
                if use not in ASSIGNABLE_USES:
                    raise _error(400, "not_assignable", f"{use.value} is not assignable")
                changes.append((plot_id, use))
            # all edits validated; apply atomically
            new_plan = session.plan.with_changes(changes, provenance="sandbox-edit")
            report = session.commit(new_plan)
            session.transcript.append(
                role="cp",
                direction="response",
                text="Edited plots: "
                + ", ".join(f"{pid} -> {use.value}" for pid, use in changes),
                agent_id="human",
            )
            return session.state_payload(report)

    @app.post("/plan/undo")
    def post_undo(body: dict = Body(default={})):
        with session.lock:
            session.check_write(body.get("expected_version"), body.get("token"))
            if not session.undo_stack:
                raise _error(400, "nothing_to_undo", "undo stack is empty")
            prior = session.undo_stack.pop()
            session.version += 1
            session.plan = prior
            report = session._score()
            session.trajectory.append(report)
            session.transcript.append(
                role="cp", direction="response", text="Undid the last plan change.",
                agent_id="human",
            )
            return session.state_payload(report)

    @app.post("/discuss/{sub_community}")
    def post_discuss(sub_community: int, body: dict = Body(default={})):
        if not 1 <= sub_community <= scenario.n_sub_communities:
            raise _error(404, "unknown_sub_community", f"no sub-community {sub_community}")
        with session.lock:
            session.check_write(body.get("expected_version"), body.get("token"))
            opinions = solicit_opinions(
                scenario,
                population,
                sub_community,
                session.plan,
                backend,
                engine=session.engine,
                sample_size=opinion_sample,
            )
            revision = sp_discuss_and_revise(
                sub_community, session.plan, opinions, scenario, backend, sp_max_changes
            )
            new_plan = apply_revision(scenario, session.plan, revision,
                                      provenance=f"sandbox-discuss-{sub_community}")
            report = session.commit(new_plan)
            payload = session.state_payload(report)
            payload["revision"] = revision.to_payload_dict()
            payload["opinions"] = [o.to_payload_dict() for o in opinions]
            payload["changed"] = [c.plot_id for c in revision.changes]
            return payload

    @app.post("/residents/{resident_id}/ask")
    def post_ask(resident_id: int, body: dict = Body(default={})):
        agent = next(
            (a for a in population.agents if a.profile.id == resident_id), None
        )
        if agent is None:
            raise _error(404, "unknown_resident", f"no resident {resident_id}")
        with session.lock:
            index = next(
                i for i, a in enumerate(population.agents) if a.profile.id == resident_id
            )
            type_dists = per_type_dists(session.engine, session.plan)
            need_dists = {
                use: float(type_dists[use][index]) for use in agent.needs.needs
            }
            opinion = resident_opine(
                agent.profile, agent.needs, session.plan, scenario, backend,
                need_dists=need_dists,
            )
            return {"opinion": opinion.to_payload_dict(), "version": session.version}

    @app.get("/export")
    def get_export():
        with session.lock:
            return {
                "scenario": scenario.name,
                "version": session.version,
                "plan": plan_to_dict(session.plan),
                "trajectory": [r.to_dict(include_per_agent=False) for r in session.trajectory],
                "violations": [v.to_dict() for v in validate_plan(scenario, session.plan)],
                "transcript": [e.to_dict() for e in session.transcript.entries()],
            }

    if ui_dir:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app
