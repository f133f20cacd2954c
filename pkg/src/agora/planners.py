"""Rule-based baseline planners.

Four methods, all deterministic under their seed (GSCA uses no randomness at
all): random assignment, center-seeking (pick probability inversely
proportional to distance from the community center), dispersing (pick
probability proportional to distance from the nearest same-type plot), and
GSCA, a greedy maximum-coverage pass per facility type.

Every planner first satisfies each type's minimum count in the fixed land-use
order, then assigns the leftover vacant plots, so outputs are always total
and feasible.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .domain import ASSIGNABLE_USES, LandUse, Plan, Scenario
from .errors import PlannerError
from .geometry import Point, polygon_centroid
from .metrics import DistanceEngine, ECOLOGY_RADIUS_M, SERVICE_RADIUS_M
from .population import Population

METHODS = ("random", "centralized", "decentralized", "gsca")

# Coverage radius per facility type, aligned with the metrics: green types use
# the inclusive 300 m ecology buffer, everything else the strict 500 m radius.
_GREEN_TYPES = (LandUse.Park, LandUse.GreenSpace)


@dataclass(frozen=True)
class PlannerConfig:
    method: str = "random"
    seed: int = 0
    epsilon_m: float = 50.0  # smoothing for inverse-distance weights
    type_order: tuple[LandUse, ...] = ASSIGNABLE_USES

    def __post_init__(self) -> None:
        if self.epsilon_m <= 0:
            raise PlannerError(f"epsilon_m must be > 0, got {self.epsilon_m}")


def _required_uses(scenario: Scenario, type_order: Sequence[LandUse]) -> list[LandUse]:
    cons = scenario.constraints
    required = [use for use in type_order for _ in range(cons.minimum(use))]
    if len(required) > len(scenario.vacant_ids):
        raise PlannerError(
            f"infeasible constraints: {len(required)} required plots > "
            f"{len(scenario.vacant_ids)} vacant"
        )
    return required


def _centroids(scenario: Scenario) -> dict[int, Point]:
    return {p.id: polygon_centroid(p.polygon) for p in scenario.plots}


def _weighted_pick(rng: random.Random, candidates: list[int], weights: list[float]) -> int:
    total = sum(weights)
    if total <= 0:
        return candidates[rng.randrange(len(candidates))]
    r = rng.random() * total
    acc = 0.0
    for cand, w in zip(candidates, weights):
        acc += w
        if r < acc:
            return cand
    return candidates[-1]


def plan_random(scenario: Scenario, config: PlannerConfig) -> Plan:
    """Seeded shuffle; minimums first, leftovers get a uniform random type."""
    required = _required_uses(scenario, config.type_order)
    rng = random.Random(config.seed)
    order = list(scenario.vacant_ids)
    rng.shuffle(order)
    assignment: dict[int, LandUse] = {}
    for plot_id, use in zip(order, required):
        assignment[plot_id] = use
    for plot_id in order[len(required) :]:
        assignment[plot_id] = config.type_order[rng.randrange(len(config.type_order))]
    return Plan(assignment=assignment, provenance="random")


def plan_centralized(scenario: Scenario, config: PlannerConfig) -> Plan:
    """Minimum counts sampled without replacement, weight 1/(d_center + eps)."""
    required = _required_uses(scenario, config.type_order)
    rng = random.Random(config.seed)
    centroids = _centroids(scenario)
    d_center = {
        pid: math.dist(centroids[pid], scenario.center) for pid in scenario.vacant_ids
    }
    remaining = list(scenario.vacant_ids)
    assignment: dict[int, LandUse] = {}
    for use in required:
        weights = [1.0 / (d_center[pid] + config.epsilon_m) for pid in remaining]
        pick = _weighted_pick(rng, remaining, weights)
        assignment[pick] = use
        remaining.remove(pick)
    for plot_id in remaining:
        assignment[plot_id] = config.type_order[rng.randrange(len(config.type_order))]
    return Plan(assignment=assignment, provenance="centralized")


def plan_decentralized(scenario: Scenario, config: PlannerConfig) -> Plan:
    """Each type spreads out: picks weighted by distance to the nearest
    already-chosen plot of the same type (fixed plots of the type, if any,
    seed the reference set; the first pick is uniform otherwise)."""
    rng = random.Random(config.seed)
    centroids = _centroids(scenario)
    remaining = list(scenario.vacant_ids)
    assignment: dict[int, LandUse] = {}
    cons = scenario.constraints
    for use in config.type_order:
        refs = [
            centroids[p.id] for p in scenario.fixed_plots if p.fixed_use is use
        ]
        for _ in range(cons.minimum(use)):
            if not remaining:
                raise PlannerError("ran out of vacant plots while filling minimums")
            if not refs:
                pick = remaining[rng.randrange(len(remaining))]
            else:
                weights = [
                    min(math.dist(centroids[pid], ref) for ref in refs) for pid in remaining
                ]
                pick = _weighted_pick(rng, remaining, weights)
            assignment[pick] = use
            refs.append(centroids[pick])
            remaining.remove(pick)
    for plot_id in remaining:
        assignment[plot_id] = config.type_order[rng.randrange(len(config.type_order))]
    return Plan(assignment=assignment, provenance="decentralized")


def coverage_radius(use: LandUse) -> float:
    return ECOLOGY_RADIUS_M if use in _GREEN_TYPES else SERVICE_RADIUS_M


def _covers(dist_col: np.ndarray, use: LandUse) -> np.ndarray:
    if use in _GREEN_TYPES:
        return dist_col <= ECOLOGY_RADIUS_M
    return dist_col < SERVICE_RADIUS_M


def greedy_max_coverage(
    cover_sets: dict[int, np.ndarray],
    k: int,
    covered: Optional[np.ndarray] = None,
) -> tuple[list[int], list[int], np.ndarray]:
    """Greedy maximum coverage: k picks from candidate boolean cover vectors.

    Each step takes the candidate covering the most not-yet-covered agents,
    ties broken by lowest candidate id. Returns (picks, marginal gains, final
    covered mask). Picks continue even at zero gain so callers can always fill
    mandated counts.
    """
    if not cover_sets:
        raise PlannerError("greedy coverage needs at least one candidate")
    n = len(next(iter(cover_sets.values())))
    state = np.zeros(n, dtype=bool) if covered is None else covered.copy()
    picks: list[int] = []
    gains: list[int] = []
    available = sorted(cover_sets)
    for _ in range(k):
        if not available:
            break
        best_id, best_gain = -1, -1
        for cand in available:
            gain = int((cover_sets[cand] & ~state).sum())
            if gain > best_gain:
                best_id, best_gain = cand, gain
        picks.append(best_id)
        gains.append(best_gain)
        state |= cover_sets[best_id]
        available.remove(best_id)
    return picks, gains, state


def plan_gsca(
    scenario: Scenario,
    population: Population,
    config: PlannerConfig,
    engine: Optional[DistanceEngine] = None,
) -> Plan:
    """Greedy set-coverage planner: per type, pick the plots that cover the
    most residents within that type's radius; leftovers continue round-robin.
    Deterministic, no RNG."""
    required_total = _required_uses(scenario, config.type_order)  # feasibility check
    del required_total
    engine = engine or DistanceEngine(scenario, population)
    cons = scenario.constraints

    remaining = sorted(scenario.vacant_ids)
    cover_by_use: dict[LandUse, dict[int, np.ndarray]] = {}
    for use in config.type_order:
        cover_by_use[use] = {
            pid: _covers(engine.dist_matrix[:, pid], use) for pid in scenario.vacant_ids
        }
    covered_state: dict[LandUse, np.ndarray] = {
        use: np.zeros(len(population), dtype=bool) for use in config.type_order
    }

    assignment: dict[int, LandUse] = {}

    def take(use: LandUse, count: int) -> None:
        candidates = {pid: cover_by_use[use][pid] for pid in remaining}
        picks, _, state = greedy_max_coverage(candidates, count, covered_state[use])
        covered_state[use] = state
        for pid in picks:
            assignment[pid] = use
            remaining.remove(pid)

    for use in config.type_order:
        need = cons.minimum(use)
        if need:
            take(use, need)

    while remaining:
        for use in config.type_order:
            if not remaining:
                break
            take(use, 1)

    return Plan(assignment=assignment, provenance="gsca")


def make_plan(
    method: str,
    scenario: Scenario,
    population: Optional[Population],
    config: Optional[PlannerConfig] = None,
    engine: Optional[DistanceEngine] = None,
) -> Plan:
    config = config or PlannerConfig(method=method)
    if method == "random":
        return plan_random(scenario, config)
    if method == "centralized":
        return plan_centralized(scenario, config)
    if method == "decentralized":
        return plan_decentralized(scenario, config)
    if method == "gsca":
        if population is None:
            raise PlannerError("gsca requires a population")
        return plan_gsca(scenario, population, config, engine=engine)
    raise PlannerError(f"unknown planner method {method!r}")
