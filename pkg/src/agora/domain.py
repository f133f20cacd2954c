"""World model: land uses, plots, constraints, scenarios, plans, validation.

Scenario and Plan are immutable values; every mutation produces a new Plan.
Land uses carry a fixed total order (declaration order below) that is used
for all deterministic iteration and tie-breaking across the package.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional

from .errors import PlanStructureError, ScenarioError
from .geometry import Point, polygon_area, polygon_is_simple


class LandUse(enum.Enum):
    """The eight assignable functionalities plus the two fixed-only statuses."""

    School = "School"
    Hospital = "Hospital"
    Clinic = "Clinic"
    Business = "Business"
    Office = "Office"
    Recreation = "Recreation"
    Park = "Park"
    GreenSpace = "GreenSpace"
    # Fixed-only statuses; never assignable to vacant plots.
    Residential = "Residential"
    RetainedGreen = "RetainedGreen"

    @property
    def assignable(self) -> bool:
        return self in ASSIGNABLE_USES

    @property
    def order(self) -> int:
        return _ORDER[self]

    def __str__(self) -> str:  # pragma: no cover - cosmetic
        return self.value

    @classmethod
    def parse(cls, name: str) -> "LandUse":
        try:
            return cls(name)
        except ValueError:
            raise PlanStructureError(f"unknown land use {name!r}") from None


ASSIGNABLE_USES: tuple[LandUse, ...] = (
    LandUse.School,
    LandUse.Hospital,
    LandUse.Clinic,
    LandUse.Business,
    LandUse.Office,
    LandUse.Recreation,
    LandUse.Park,
    LandUse.GreenSpace,
)

FIXED_USES: tuple[LandUse, ...] = (LandUse.Residential, LandUse.RetainedGreen)

ALL_USES: tuple[LandUse, ...] = ASSIGNABLE_USES + FIXED_USES

_ORDER = {use: i for i, use in enumerate(ALL_USES)}

# Land uses whose plots emit the 300 m ecological buffer.
GREEN_USES: tuple[LandUse, ...] = (LandUse.Park, LandUse.GreenSpace, LandUse.RetainedGreen)


@dataclass(frozen=True)
class Plot:
    """One land parcel. fixed_use None means the plot is vacant (assignable)."""

    id: int
    polygon: tuple[Point, ...]
    sub_community: int
    fixed_use: Optional[LandUse] = None
    description: str = ""

    @property
    def vacant(self) -> bool:
        return self.fixed_use is None

    def __post_init__(self) -> None:
        if self.fixed_use is not None and self.fixed_use not in FIXED_USES:
            raise ScenarioError(
                f"plot {self.id}: fixed use must be Residential or RetainedGreen, got {self.fixed_use}"
            )


@dataclass(frozen=True)
class Constraints:
    """Minimum plot counts per land use.

    When park_green_joint is set, the Park and GreenSpace minimums are summed
    and enforced on their combined count. count_fixed lets fixed plots credit
    the minimums; in practice that means RetainedGreen plots count toward the
    joint green pool.
    """

    min_count: Mapping[LandUse, int] = field(default_factory=dict)
    park_green_joint: bool = True
    count_fixed: bool = True

    def minimum(self, use: LandUse) -> int:
        return int(self.min_count.get(use, 0))

    def total_minimum(self) -> int:
        return sum(self.minimum(u) for u in ASSIGNABLE_USES)


@dataclass(frozen=True)
class Scenario:
    """Immutable world description: plots, constraints, community center."""

    name: str
    plots: tuple[Plot, ...]
    constraints: Constraints
    center: Point
    n_sub_communities: int
    metadata: Mapping[str, object] = field(default_factory=dict)

    @property
    def vacant_ids(self) -> tuple[int, ...]:
        return tuple(p.id for p in self.plots if p.vacant)

    @property
    def fixed_plots(self) -> tuple[Plot, ...]:
        return tuple(p for p in self.plots if not p.vacant)

    def plot(self, plot_id: int) -> Plot:
        if 0 <= plot_id < len(self.plots) and self.plots[plot_id].id == plot_id:
            return self.plots[plot_id]
        raise PlanStructureError(f"unknown plot id {plot_id}")

    def plots_in(self, sub_community: int) -> tuple[Plot, ...]:
        return tuple(p for p in self.plots if p.sub_community == sub_community)


def check_scenario(scenario: Scenario, require_residential: bool = True) -> None:
    """Raise ScenarioError on any violated scenario invariant."""
    ids = [p.id for p in scenario.plots]
    if ids != list(range(len(ids))):
        raise ScenarioError("plot ids must be unique and contiguous from 0")
    if scenario.n_sub_communities < 1:
        raise ScenarioError("n_sub_communities must be >= 1")
    seen = set()
    for p in scenario.plots:
        if not 1 <= p.sub_community <= scenario.n_sub_communities:
            raise ScenarioError(
                f"plot {p.id}: sub_community {p.sub_community} outside [1, {scenario.n_sub_communities}]"
            )
        seen.add(p.sub_community)
        if len(p.polygon) < 3 or polygon_area(p.polygon) <= 0.0:
            raise ScenarioError(f"plot {p.id}: degenerate polygon")
        if not polygon_is_simple(p.polygon):
            raise ScenarioError(f"plot {p.id}: polygon is self-intersecting")
    if seen != set(range(1, scenario.n_sub_communities + 1)):
        raise ScenarioError("every sub-community must contain at least one plot")
    if require_residential and not any(
        p.fixed_use is LandUse.Residential for p in scenario.plots
    ):
        raise ScenarioError("scenario has no fixed Residential plot (homes not placeable)")
    n_vacant = len(scenario.vacant_ids)
    if scenario.constraints.total_minimum() > n_vacant:
        raise ScenarioError(
            f"infeasible constraints: {scenario.constraints.total_minimum()} required plots "
            f"> {n_vacant} vacant"
        )


@dataclass(frozen=True)
class Plan:
    """Assignment of an assignable land use to vacant plots.

    A feasible plan is total on the scenario's vacant plot ids; partial
    assignments are evaluable by the metrics engine but flagged by
    validate_plan.
    """

    assignment: Mapping[int, LandUse]
    provenance: str = "unknown"
    revision_step: int = 0

    def with_changes(
        self,
        changes: Iterable[tuple[int, LandUse]],
        provenance: Optional[str] = None,
        revision_step: Optional[int] = None,
    ) -> "Plan":
        new_assignment = dict(self.assignment)
        for plot_id, use in changes:
            new_assignment[plot_id] = use
        return Plan(
            assignment=new_assignment,
            provenance=provenance if provenance is not None else self.provenance,
            revision_step=revision_step if revision_step is not None else self.revision_step,
        )


@dataclass(frozen=True)
class Violation:
    """One reason a plan is not acceptable. Violations are data, not errors."""

    kind: str  # "min_count" | "unassigned" | "unknown_plot" | "not_assignable"
    land_use: Optional[LandUse] = None
    have: Optional[int] = None
    need: Optional[int] = None
    plot_id: Optional[int] = None
    joint: bool = False

    @property
    def deficit(self) -> int:
        if self.kind != "min_count" or self.have is None or self.need is None:
            return 0
        return max(0, self.need - self.have)

    def describe(self) -> str:
        if self.kind == "min_count":
            label = self.land_use.value if self.land_use else "?"
            if self.joint:
                label = "Park and GreenSpace (combined)"
            return (
                f"the plan allocates {self.have} plots for {label} "
                f"but the requirement is at least {self.need}"
            )
        if self.kind == "unassigned":
            return f"vacant plot {self.plot_id} has no assigned land use"
        if self.kind == "unknown_plot":
            return f"plot {self.plot_id} does not exist or is not vacant"
        if self.kind == "not_assignable":
            return f"plot {self.plot_id} is assigned the non-assignable use {self.land_use}"
        return self.kind

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "land_use": self.land_use.value if self.land_use else None,
            "have": self.have,
            "need": self.need,
            "plot_id": self.plot_id,
            "joint": self.joint,
        }


def plot_counts(scenario: Scenario, plan: Plan) -> dict[LandUse, int]:
    """Plot counts per land use, fixed statuses included.

    Raises PlanStructureError if the plan references an unknown or fixed plot.
    """
    counts = {use: 0 for use in ALL_USES}
    vacant = set(scenario.vacant_ids)
    for plot_id, use in plan.assignment.items():
        if plot_id not in vacant:
            raise PlanStructureError(f"plan references unknown or fixed plot {plot_id}")
        counts[use] += 1
    for plot in scenario.fixed_plots:
        counts[plot.fixed_use] += 1
    return counts


def effective_counts(scenario: Scenario, plan: Plan) -> dict[LandUse, int]:
    """Counts used for constraint checking: assigned plots, plus fixed plots
    credited to their assignable equivalent when count_fixed is set
    (RetainedGreen credits GreenSpace)."""
    counts = {use: 0 for use in ASSIGNABLE_USES}
    vacant = set(scenario.vacant_ids)
    for plot_id, use in plan.assignment.items():
        if plot_id in vacant and use in counts:
            counts[use] += 1
    if scenario.constraints.count_fixed:
        for plot in scenario.fixed_plots:
            if plot.fixed_use is LandUse.RetainedGreen:
                counts[LandUse.GreenSpace] += 1
    return counts


def validate_plan(scenario: Scenario, plan: Plan) -> list[Violation]:
    """All violations of the plan against the scenario; empty means feasible."""
    violations: list[Violation] = []
    vacant = set(scenario.vacant_ids)
    for plot_id in sorted(plan.assignment):
        use = plan.assignment[plot_id]
        if plot_id not in vacant:
            violations.append(Violation(kind="unknown_plot", plot_id=plot_id))
        elif use not in ASSIGNABLE_USES:
            violations.append(Violation(kind="not_assignable", plot_id=plot_id, land_use=use))
    for plot_id in sorted(vacant - set(plan.assignment)):
        violations.append(Violation(kind="unassigned", plot_id=plot_id))

    counts = effective_counts(scenario, plan)
    cons = scenario.constraints
    joint_pair = (LandUse.Park, LandUse.GreenSpace)
    for use in ASSIGNABLE_USES:
        if cons.park_green_joint and use in joint_pair:
            continue
        need = cons.minimum(use)
        if counts[use] < need:
            violations.append(
                Violation(kind="min_count", land_use=use, have=counts[use], need=need)
            )
    if cons.park_green_joint:
        need = cons.minimum(LandUse.Park) + cons.minimum(LandUse.GreenSpace)
        have = counts[LandUse.Park] + counts[LandUse.GreenSpace]
        if have < need:
            violations.append(
                Violation(kind="min_count", land_use=LandUse.Park, have=have, need=need, joint=True)
            )
    return violations


def total_deficit(scenario: Scenario, plan: Plan) -> int:
    """Sum of max(0, need - have) over all minimum-count violations."""
    return sum(v.deficit for v in validate_plan(scenario, plan))


# --- JSON codecs ------------------------------------------------------------
#
# scenario: {name, center:[x,y], n_sub_communities,
#            constraints:{min_count:{...}, park_green_joint, count_fixed},
#            plots:[{id, polygon:[[x,y]...], status, fixed_use?, sub_community,
#                    description}], metadata:{...}}
# plan:     {provenance, revision_step, assignment:{"<id>":"<land_use>"}}


def scenario_to_dict(scenario: Scenario) -> dict:
    return {
        "name": scenario.name,
        "center": [scenario.center.x, scenario.center.y],
        "n_sub_communities": scenario.n_sub_communities,
        "constraints": {
            "min_count": {
                use.value: scenario.constraints.minimum(use)
                for use in ASSIGNABLE_USES
                if scenario.constraints.minimum(use) > 0
            },
            "park_green_joint": scenario.constraints.park_green_joint,
            "count_fixed": scenario.constraints.count_fixed,
        },
        "plots": [
            {
                "id": p.id,
                "polygon": [[pt.x, pt.y] for pt in p.polygon],
                "status": "vacant" if p.vacant else "fixed",
                **({"fixed_use": p.fixed_use.value} if p.fixed_use else {}),
                "sub_community": p.sub_community,
                "description": p.description,
            }
            for p in scenario.plots
        ],
        "metadata": dict(scenario.metadata),
    }


def scenario_from_dict(data: Mapping, validate: bool = True) -> Scenario:
    try:
        cons_data = data.get("constraints", {})
        constraints = Constraints(
            min_count={
                LandUse.parse(k): int(v) for k, v in cons_data.get("min_count", {}).items()
            },
            park_green_joint=bool(cons_data.get("park_green_joint", True)),
            count_fixed=bool(cons_data.get("count_fixed", True)),
        )
        plots = []
        for pd in data["plots"]:
            fixed_use = None
            if pd.get("status") == "fixed":
                fixed_use = LandUse.parse(pd["fixed_use"])
            plots.append(
                Plot(
                    id=int(pd["id"]),
                    polygon=tuple(Point(float(x), float(y)) for x, y in pd["polygon"]),
                    sub_community=int(pd["sub_community"]),
                    fixed_use=fixed_use,
                    description=str(pd.get("description", "")),
                )
            )
        cx, cy = data["center"]
        scenario = Scenario(
            name=str(data["name"]),
            plots=tuple(plots),
            constraints=constraints,
            center=Point(float(cx), float(cy)),
            n_sub_communities=int(data["n_sub_communities"]),
            metadata=dict(data.get("metadata", {})),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ScenarioError(f"malformed scenario document: {exc}") from exc
    if validate:
        check_scenario(scenario, require_residential=False)
    return scenario


def plan_to_dict(plan: Plan) -> dict:
    return {
        "provenance": plan.provenance,
        "revision_step": plan.revision_step,
        "assignment": {str(pid): plan.assignment[pid].value for pid in sorted(plan.assignment)},
    }


def plan_from_dict(data: Mapping) -> Plan:
    try:
        return Plan(
            assignment={int(k): LandUse.parse(v) for k, v in data["assignment"].items()},
            provenance=str(data.get("provenance", "unknown")),
            revision_step=int(data.get("revision_step", 0)),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise PlanStructureError(f"malformed plan document: {exc}") from exc


def save_json(obj: dict, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2)
        fh.write("\n")


def load_json(path) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def load_scenario(path, validate: bool = True) -> Scenario:
    return scenario_from_dict(load_json(path), validate=validate)


def save_scenario(scenario: Scenario, path) -> None:
    save_json(scenario_to_dict(scenario), path)


def load_plan(path) -> Plan:
    return plan_from_dict(load_json(path))


def save_plan(plan: Plan, path) -> None:
    save_json(plan_to_dict(plan), path)
