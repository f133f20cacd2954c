"""Synthetic residents: profile sampling, home placement, need elicitation.

Need sets are frozen once per experiment and shared by every planning method,
so Satisfaction/Inclusion comparisons are apples to apples. The scripted
elicitation rules are a pure function of the profile.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Optional, Sequence

from .domain import ASSIGNABLE_USES, LandUse, Scenario
from .errors import PopulationError
from .geometry import Point, point_in_polygon, polygon_area, random_point_in_polygon

VULNERABLE_GROUPS: tuple[str, ...] = (
    "family_with_children",
    "family_with_patient",
    "elderly_alone",
    "rental_migrant",
)


@dataclass(frozen=True)
class DemographicStats:
    """Published community statistics that drive profile sampling."""

    elderly_share: float  # share of residents aged 60+
    bachelor_share: float  # share with a bachelor's degree or higher
    female_share: float = 0.5
    employment_rate: float = 0.9  # applied to working-age adults
    family_size_weights: Mapping[int, float] = field(
        default_factory=lambda: {1: 0.25, 2: 0.30, 3: 0.30, 4: 0.10, 5: 0.05}
    )

    def to_dict(self) -> dict:
        return {
            "elderly_share": self.elderly_share,
            "bachelor_share": self.bachelor_share,
            "female_share": self.female_share,
            "employment_rate": self.employment_rate,
            "family_size_weights": {str(k): v for k, v in self.family_size_weights.items()},
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "DemographicStats":
        kwargs = dict(
            elderly_share=float(data["elderly_share"]),
            bachelor_share=float(data["bachelor_share"]),
        )
        if "female_share" in data:
            kwargs["female_share"] = float(data["female_share"])
        if "employment_rate" in data:
            kwargs["employment_rate"] = float(data["employment_rate"])
        if "family_size_weights" in data:
            kwargs["family_size_weights"] = {
                int(k): float(v) for k, v in data["family_size_weights"].items()
            }
        return cls(**kwargs)


HLG_STATS = DemographicStats(elderly_share=0.1638, bachelor_share=0.4888)
DHM_STATS = DemographicStats(elderly_share=0.2423, bachelor_share=0.3154)


@dataclass(frozen=True)
class ResidentProfile:
    id: int
    gender: str  # "female" | "male"
    age: int
    family_size: int
    education: str  # "below-bachelor" | "bachelor-plus"
    employed: bool
    vulnerable: frozenset[str]
    home: Point
    home_plot: int

    def __post_init__(self) -> None:
        unknown = set(self.vulnerable) - set(VULNERABLE_GROUPS)
        if unknown:
            raise PopulationError(f"agent {self.id}: unknown vulnerable groups {sorted(unknown)}")
        if "elderly_alone" in self.vulnerable and not (self.age >= 60 and self.family_size == 1):
            raise PopulationError(
                f"agent {self.id}: elderly_alone requires age >= 60 and family_size == 1"
            )

    @property
    def is_vulnerable(self) -> bool:
        return bool(self.vulnerable)


@dataclass(frozen=True)
class NeedSet:
    """An agent's frozen most-needed land uses, with one rationale per need."""

    needs: tuple[LandUse, ...]
    source: str = "scripted"  # "scripted" | "llm"
    rationales: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if len(self.needs) == 0 or len(set(self.needs)) != len(self.needs):
            raise PopulationError("need set must be non-empty without duplicates")
        bad = [u for u in self.needs if u not in ASSIGNABLE_USES]
        if bad:
            raise PopulationError(f"need set contains non-assignable uses: {bad}")


# 3..5 needs is the elicitation contract; the dataclass itself tolerates any
# non-empty assignable subset so identity tests can build all-8 need sets.
NEEDS_MIN, NEEDS_MAX = 3, 5


def check_need_count(needs: Sequence[LandUse]) -> None:
    if not NEEDS_MIN <= len(needs) <= NEEDS_MAX:
        raise PopulationError(f"expected {NEEDS_MIN}-{NEEDS_MAX} needs, got {len(needs)}")


@dataclass(frozen=True)
class Agent:
    profile: ResidentProfile
    needs: Optional[NeedSet] = None


@dataclass(frozen=True)
class Population:
    agents: tuple[Agent, ...]
    seed: int
    demographic_summary: Mapping[str, float] = field(default_factory=dict)
    stats: Optional[DemographicStats] = None

    def __len__(self) -> int:
        return len(self.agents)

    @property
    def needs_frozen(self) -> bool:
        return all(a.needs is not None for a in self.agents)

    def vulnerable_agents(self) -> tuple[Agent, ...]:
        return tuple(a for a in self.agents if a.profile.is_vulnerable)

    def in_sub_community(self, scenario: Scenario, sub_community: int) -> tuple[Agent, ...]:
        return tuple(
            a
            for a in self.agents
            if scenario.plot(a.profile.home_plot).sub_community == sub_community
        )


def synthesize(
    scenario: Scenario,
    stats: DemographicStats,
    n: int,
    n_vulnerable_each: int = 25,
    seed: int = 0,
) -> Population:
    """Sample n base agents plus 4 * n_vulnerable_each vulnerable extras.

    Homes are placed by picking a Residential plot with probability
    proportional to its area, then rejection-sampling a uniform point inside
    it. Fully deterministic under the seed.
    """
    if n < 1:
        raise PopulationError("population size must be >= 1")
    residential = [p for p in scenario.plots if p.fixed_use is LandUse.Residential]
    if not residential:
        raise PopulationError(f"scenario {scenario.name!r} has no Residential plot")
    rng = random.Random(seed)
    areas = [polygon_area(p.polygon) for p in residential]

    def sample_home() -> tuple[Point, int]:
        plot = rng.choices(residential, weights=areas, k=1)[0]
        return random_point_in_polygon(plot.polygon, rng), plot.id

    def sample_base(agent_id: int) -> ResidentProfile:
        gender = "female" if rng.random() < stats.female_share else "male"
        if rng.random() < stats.elderly_share:
            age = rng.randint(60, 90)
        else:
            age = rng.randint(18, 59)
        sizes = sorted(stats.family_size_weights)
        family_size = rng.choices(sizes, weights=[stats.family_size_weights[s] for s in sizes])[0]
        education = "bachelor-plus" if rng.random() < stats.bachelor_share else "below-bachelor"
        employed = rng.random() < (stats.employment_rate if age < 60 else 0.05)
        home, home_plot = sample_home()
        return ResidentProfile(
            id=agent_id,
            gender=gender,
            age=age,
            family_size=family_size,
            education=education,
            employed=employed,
            vulnerable=frozenset(),
            home=home,
            home_plot=home_plot,
        )

    profiles = [sample_base(i) for i in range(n)]

    next_id = n
    for group in VULNERABLE_GROUPS:
        for _ in range(n_vulnerable_each):
            base = sample_base(next_id)
            if group == "family_with_children":
                base = replace(base, age=rng.randint(25, 45), family_size=max(3, base.family_size))
            elif group == "elderly_alone":
                base = replace(base, age=rng.randint(60, 90), family_size=1, employed=False)
            elif group == "rental_migrant":
                base = replace(base, age=rng.randint(20, 40), employed=True)
            profiles.append(replace(base, vulnerable=frozenset({group})))
            next_id += 1

    total = len(profiles)
    summary = {
        "age_60_plus": sum(1 for p in profiles if p.age >= 60) / total,
        "bachelor_plus": sum(1 for p in profiles if p.education == "bachelor-plus") / total,
        "vulnerable": sum(1 for p in profiles if p.is_vulnerable) / total,
    }
    return Population(
        agents=tuple(Agent(profile=p) for p in profiles),
        seed=seed,
        demographic_summary=summary,
        stats=stats,
    )


# --- scripted need rules ------------------------------------------------------


@dataclass(frozen=True)
class NeedRules:
    """Deterministic profile-to-needs table; every entry is configurable."""

    elderly: tuple[LandUse, ...] = (LandUse.Clinic, LandUse.Hospital, LandUse.Park)
    family_with_children: tuple[LandUse, ...] = (LandUse.School, LandUse.Park, LandUse.Clinic)
    family_with_patient: tuple[LandUse, ...] = (LandUse.Hospital, LandUse.Clinic, LandUse.Park)
    rental_migrant: tuple[LandUse, ...] = (LandUse.Business, LandUse.Recreation, LandUse.Clinic)
    employed_adds: tuple[LandUse, ...] = (LandUse.Office, LandUse.Business)
    padding: tuple[LandUse, ...] = (LandUse.Park, LandUse.Recreation, LandUse.Business)


DEFAULT_NEED_RULES = NeedRules()

_RATIONALES: dict[str, str] = {
    "elderly": "at my age I want {use} within easy walking distance",
    "family_with_children": "with children at home, a nearby {use} matters most to us",
    "family_with_patient": "caring for a patient means we depend on a close {use}",
    "rental_migrant": "as a renter new to the area I rely on an accessible {use}",
    "employed": "working full time, I would value a {use} close to home",
    "padding": "day to day, having a {use} nearby would improve the neighborhood",
}


def scripted_needs(profile: ResidentProfile, rules: NeedRules = DEFAULT_NEED_RULES) -> NeedSet:
    """Pure rule-table elicitation: same profile, same needs, every time."""
    picked: dict[LandUse, str] = {}

    def add(uses: Iterable[LandUse], reason_key: str) -> None:
        for use in uses:
            if use not in picked:
                picked[use] = _RATIONALES[reason_key].format(use=use.value)

    if profile.age >= 60:
        add(rules.elderly, "elderly")
    if "family_with_children" in profile.vulnerable:
        add(rules.family_with_children, "family_with_children")
    if "family_with_patient" in profile.vulnerable:
        add(rules.family_with_patient, "family_with_patient")
    if "rental_migrant" in profile.vulnerable:
        add(rules.rental_migrant, "rental_migrant")
    if profile.employed and profile.age < 60:
        add(rules.employed_adds, "employed")
    if len(picked) < NEEDS_MIN:
        add(rules.padding, "padding")

    needs = tuple(picked)[:NEEDS_MAX]
    return NeedSet(
        needs=needs,
        source="scripted",
        rationales={use.value: picked[use] for use in needs},
    )


def elicit_needs(population: Population, backend) -> Population:
    """Freeze a NeedSet on every agent that lacks one.

    The backend is anything with resident_needs(profile) -> NeedSet (see
    agora.agents). Idempotent once all needs are frozen. Backend failures are
    collected and re-raised as one PartialElicitationError naming the agents.
    """
    if population.needs_frozen:
        return population
    new_agents: list[Agent] = []
    failed: list[int] = []
    for agent in population.agents:
        if agent.needs is not None:
            new_agents.append(agent)
            continue
        try:
            needs = backend.resident_needs(agent.profile)
            check_need_count(needs.needs)
            new_agents.append(Agent(profile=agent.profile, needs=needs))
        except Exception:
            failed.append(agent.profile.id)
            new_agents.append(agent)
    if failed:
        raise PartialElicitationError(failed)
    return replace(population, agents=tuple(new_agents))


class PartialElicitationError(PopulationError):
    def __init__(self, failed_ids: list[int]):
        self.failed_ids = failed_ids
        super().__init__(f"need elicitation failed for agents {failed_ids}")


# --- JSON codec ----------------------------------------------------------------
#
# {seed, demographic_summary, stats, agents:[{id, profile:{...}, home:[x,y],
#  home_plot, needs:[...], rationales:{...}}]}


def population_to_dict(population: Population) -> dict:
    agents = []
    for agent in population.agents:
        p = agent.profile
        record = {
            "id": p.id,
            "profile": {
                "gender": p.gender,
                "age": p.age,
                "family_size": p.family_size,
                "education": p.education,
                "employed": p.employed,
                "vulnerable": sorted(p.vulnerable),
            },
            "home": [p.home.x, p.home.y],
            "home_plot": p.home_plot,
        }
        if agent.needs is not None:
            record["needs"] = [u.value for u in agent.needs.needs]
            record["needs_source"] = agent.needs.source
            record["rationales"] = dict(agent.needs.rationales)
        agents.append(record)
    doc = {
        "seed": population.seed,
        "demographic_summary": dict(population.demographic_summary),
        "agents": agents,
    }
    if population.stats is not None:
        doc["stats"] = population.stats.to_dict()
    return doc


def population_from_dict(data: Mapping) -> Population:
    try:
        agents = []
        for record in data["agents"]:
            prof = record["profile"]
            profile = ResidentProfile(
                id=int(record["id"]),
                gender=str(prof["gender"]),
                age=int(prof["age"]),
                family_size=int(prof["family_size"]),
                education=str(prof["education"]),
                employed=bool(prof["employed"]),
                vulnerable=frozenset(prof.get("vulnerable", [])),
                home=Point(float(record["home"][0]), float(record["home"][1])),
                home_plot=int(record["home_plot"]),
            )
            needs = None
            if "needs" in record:
                needs = NeedSet(
                    needs=tuple(LandUse.parse(u) for u in record["needs"]),
                    source=str(record.get("needs_source", "scripted")),
                    rationales=dict(record.get("rationales", {})),
                )
            agents.append(Agent(profile=profile, needs=needs))
        stats = DemographicStats.from_dict(data["stats"]) if "stats" in data else None
        return Population(
            agents=tuple(agents),
            seed=int(data.get("seed", 0)),
            demographic_summary=dict(data.get("demographic_summary", {})),
            stats=stats,
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise PopulationError(f"malformed population document: {exc}") from exc


def save_population(population: Population, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(population_to_dict(population), fh, indent=2)
        fh.write("\n")


def load_population(path) -> Population:
    with open(path, "r", encoding="utf-8") as fh:
        return population_from_dict(json.load(fh))


def check_homes(scenario: Scenario, population: Population) -> None:
    """Verify every home lies inside its declared residential plot."""
    for agent in population.agents:
        plot = scenario.plot(agent.profile.home_plot)
        if plot.fixed_use is not LandUse.Residential:
            raise PopulationError(f"agent {agent.profile.id}: home plot {plot.id} not Residential")
        if not point_in_polygon(agent.profile.home, plot.polygon):
            raise PopulationError(f"agent {agent.profile.id}: home outside plot {plot.id}")
