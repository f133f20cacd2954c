"""The four plan-quality metrics and their per-agent breakdowns.

Service and Ecology are need-agnostic coverage measures; Satisfaction and
Inclusion average how much of each agent's frozen need set is reachable.
Thresholds follow the definitions exactly: the 500 m service indicator is
strict (<), the 300 m ecological buffer is inclusive (<=).

A DistanceEngine caches the home-to-plot distance matrix for one
(scenario, population) pair; plans only re-select matrix columns, so
re-scoring a revised plan is cheap. Final reductions (means over agents) are
computed in plain sequential Python over ascending agent order so results are
reproducible bit-for-bit and comparable against a naive evaluator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

import numpy as np

from .domain import ASSIGNABLE_USES, GREEN_USES, LandUse, Plan, Scenario
from .errors import MetricsError
from .geometry import as_polygon_array, dist_point_polygon, dists_to_polygon
from .population import Agent, Population, ResidentProfile

SERVICE_RADIUS_M = 500.0  # strict: covered iff distance < 500
ECOLOGY_RADIUS_M = 300.0  # inclusive: covered iff distance <= 300
N_SERVICE_TYPES = len(ASSIGNABLE_USES)  # 8


@dataclass(frozen=True)
class AgentScore:
    agent_id: int
    dists: Mapping[str, float]  # land-use value -> min distance (inf if absent)
    satisfaction: float

    def to_dict(self) -> dict:
        return {
            "agent_id": self.agent_id,
            "dists": {k: (None if math.isinf(v) else v) for k, v in self.dists.items()},
            "satisfaction": self.satisfaction,
        }


@dataclass(frozen=True)
class MetricsReport:
    service: float
    ecology: float
    satisfaction: float
    inclusion: float
    revision_step: int = 0
    per_agent: tuple[AgentScore, ...] = ()

    def values(self) -> tuple[float, float, float, float]:
        return (self.service, self.ecology, self.satisfaction, self.inclusion)

    def to_dict(self, include_per_agent: bool = True) -> dict:
        doc = {
            "service": self.service,
            "ecology": self.ecology,
            "satisfaction": self.satisfaction,
            "inclusion": self.inclusion,
            "revision_step": self.revision_step,
        }
        if include_per_agent:
            doc["per_agent"] = [a.to_dict() for a in self.per_agent]
        return doc

    @classmethod
    def from_dict(cls, data: Mapping) -> "MetricsReport":
        per_agent = tuple(
            AgentScore(
                agent_id=int(a["agent_id"]),
                dists={k: (math.inf if v is None else float(v)) for k, v in a["dists"].items()},
                satisfaction=float(a["satisfaction"]),
            )
            for a in data.get("per_agent", [])
        )
        return cls(
            service=float(data["service"]),
            ecology=float(data["ecology"]),
            satisfaction=float(data["satisfaction"]),
            inclusion=float(data["inclusion"]),
            revision_step=int(data.get("revision_step", 0)),
            per_agent=per_agent,
        )


class DistanceEngine:
    """Home-to-plot distance matrix for one scenario + population."""

    def __init__(self, scenario: Scenario, population: Population):
        if len(population) == 0:
            raise MetricsError("population is empty")
        self.scenario = scenario
        self.population = population
        homes = np.array(
            [[a.profile.home.x, a.profile.home.y] for a in population.agents], dtype=np.float64
        )
        n_agents, n_plots = len(population), len(scenario.plots)
        self.dist_matrix = np.empty((n_agents, n_plots), dtype=np.float64)
        for plot in scenario.plots:
            poly = as_polygon_array(plot.polygon)
            self.dist_matrix[:, plot.id] = dists_to_polygon(homes, poly)
        self._fixed_cols: dict[LandUse, list[int]] = {}
        for plot in scenario.fixed_plots:
            self._fixed_cols.setdefault(plot.fixed_use, []).append(plot.id)

    def columns_for(self, plan: Plan, use: LandUse) -> list[int]:
        """Plot columns of a land use: assigned vacant plots plus fixed plots
        of exactly that use."""
        cols = [pid for pid, assigned in plan.assignment.items() if assigned is use]
        cols.extend(self._fixed_cols.get(use, []))
        return sorted(cols)

    def green_columns(self, plan: Plan) -> list[int]:
        """Plots emitting the ecological buffer: assigned Park/GreenSpace and
        fixed RetainedGreen."""
        cols = [pid for pid, assigned in plan.assignment.items() if assigned in GREEN_USES]
        cols.extend(self._fixed_cols.get(LandUse.RetainedGreen, []))
        return sorted(cols)

    def min_dists(self, cols: Sequence[int]) -> np.ndarray:
        if not cols:
            return np.full(self.dist_matrix.shape[0], np.inf)
        return self.dist_matrix[:, list(cols)].min(axis=1)


def min_distance(
    agent: ResidentProfile, land_use: LandUse, scenario: Scenario, plan: Plan
) -> float:
    """Minimum distance from the agent's home to any plot of a land use;
    infinity when no such plot exists."""
    best = math.inf
    for plot in scenario.plots:
        use = plot.fixed_use if plot.fixed_use is not None else plan.assignment.get(plot.id)
        if use is land_use:
            d = dist_point_polygon(agent.home, plot.polygon)
            if d < best:
                best = d
    return best


def per_type_dists(engine: DistanceEngine, plan: Plan) -> dict[LandUse, np.ndarray]:
    """Per-agent minimum distance to each assignable land use under a plan."""
    return {use: engine.min_dists(engine.columns_for(plan, use)) for use in ASSIGNABLE_USES}


_per_type_dists = per_type_dists


def _satisfaction_scores(
    population: Population, type_dists: Mapping[LandUse, np.ndarray]
) -> list[float]:
    scores: list[float] = []
    for idx, agent in enumerate(population.agents):
        if agent.needs is None:
            raise MetricsError(f"agent {agent.profile.id} has no frozen need set")
        met = 0
        for use in agent.needs.needs:
            if type_dists[use][idx] < SERVICE_RADIUS_M:
                met += 1
        scores.append(met / len(agent.needs.needs))
    return scores


def service(
    scenario: Scenario, plan: Plan, population: Population, engine: Optional[DistanceEngine] = None
) -> float:
    """Mean fraction of the 8 land-use types within 500 m of each home."""
    engine = engine or DistanceEngine(scenario, population)
    type_dists = _per_type_dists(engine, plan)
    covered = 0
    for use in ASSIGNABLE_USES:
        covered += int((type_dists[use] < SERVICE_RADIUS_M).sum())
    return covered / (len(population) * N_SERVICE_TYPES)


def ecology(
    scenario: Scenario, plan: Plan, population: Population, engine: Optional[DistanceEngine] = None
) -> float:
    """Fraction of homes within 300 m of any park, green space or retained
    green plot (the ecological service range, evaluated pointwise)."""
    engine = engine or DistanceEngine(scenario, population)
    green = engine.min_dists(engine.green_columns(plan))
    return int((green <= ECOLOGY_RADIUS_M).sum()) / len(population)


def satisfaction(
    scenario: Scenario, plan: Plan, population: Population, engine: Optional[DistanceEngine] = None
) -> tuple[float, list[tuple[int, float]]]:
    """Mean fraction of each agent's needed types within 500 m, with the
    per-agent scores."""
    engine = engine or DistanceEngine(scenario, population)
    scores = _satisfaction_scores(population, _per_type_dists(engine, plan))
    per_agent = [(a.profile.id, s) for a, s in zip(population.agents, scores)]
    return sum(scores) / len(scores), per_agent


def inclusion(
    scenario: Scenario, plan: Plan, population: Population, engine: Optional[DistanceEngine] = None
) -> float:
    """Satisfaction averaged over vulnerable agents only."""
    engine = engine or DistanceEngine(scenario, population)
    scores = _satisfaction_scores(population, _per_type_dists(engine, plan))
    vuln = [s for a, s in zip(population.agents, scores) if a.profile.is_vulnerable]
    if not vuln:
        raise MetricsError("population has no vulnerable agents")
    return sum(vuln) / len(vuln)


def evaluate(
    scenario: Scenario,
    plan: Plan,
    population: Population,
    engine: Optional[DistanceEngine] = None,
    revision_step: Optional[int] = None,
    include_per_agent: bool = True,
) -> MetricsReport:
    """All four metrics in one pass over a shared distance computation."""
    engine = engine or DistanceEngine(scenario, population)
    type_dists = _per_type_dists(engine, plan)

    covered = 0
    for use in ASSIGNABLE_USES:
        covered += int((type_dists[use] < SERVICE_RADIUS_M).sum())
    service_value = covered / (len(population) * N_SERVICE_TYPES)

    green = engine.min_dists(engine.green_columns(plan))
    ecology_value = int((green <= ECOLOGY_RADIUS_M).sum()) / len(population)

    scores = _satisfaction_scores(population, type_dists)
    satisfaction_value = sum(scores) / len(scores)

    vuln = [s for a, s in zip(population.agents, scores) if a.profile.is_vulnerable]
    if not vuln:
        raise MetricsError("population has no vulnerable agents")
    inclusion_value = sum(vuln) / len(vuln)

    per_agent: tuple[AgentScore, ...] = ()
    if include_per_agent:
        per_agent = tuple(
            AgentScore(
                agent_id=a.profile.id,
                dists={use.value: float(type_dists[use][i]) for use in ASSIGNABLE_USES},
                satisfaction=scores[i],
            )
            for i, a in enumerate(population.agents)
        )
    return MetricsReport(
        service=service_value,
        ecology=ecology_value,
        satisfaction=satisfaction_value,
        inclusion=inclusion_value,
        revision_step=revision_step if revision_step is not None else plan.revision_step,
        per_agent=per_agent,
    )


def unmet_needs(
    agent: Agent, agent_index: int, type_dists: Mapping[LandUse, np.ndarray]
) -> list[LandUse]:
    """Needed types not strictly within the 500 m service radius."""
    if agent.needs is None:
        raise MetricsError(f"agent {agent.profile.id} has no frozen need set")
    unmet = []
    for use in agent.needs.needs:
        if not type_dists[use][agent_index] < SERVICE_RADIUS_M:
            unmet.append(use)
    return unmet


# --- trajectory export ---------------------------------------------------------


def trajectory_csv(reports: Sequence[MetricsReport]) -> str:
    lines = ["step,service,ecology,satisfaction,inclusion"]
    for r in reports:
        lines.append(
            f"{r.revision_step},{r.service!r},{r.ecology!r},{r.satisfaction!r},{r.inclusion!r}"
        )
    return "\n".join(lines) + "\n"


def save_trajectory_csv(reports: Sequence[MetricsReport], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(trajectory_csv(reports))
