"""Synthetic community scenarios and plan map rendering.

Real parcel geometry for the studied communities is not published, so the
hlg/dhm templates reproduce the published statistics (area, plot counts,
vacant counts, constraint profiles, demographics) on a jittered grid: plots
tile a rectangle, minor roads separate cells, two wider arterial axes split
the community into four sub-communities. Comparisons against the published
numbers are therefore qualitative; the structure (counts, constraints,
demographics) is faithful.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

from .domain import (
    ASSIGNABLE_USES,
    Constraints,
    LandUse,
    Plan,
    Plot,
    Scenario,
    check_scenario,
)
from .errors import ScenarioError
from .geometry import Point, polygon_centroid
from .population import DemographicStats, DHM_STATS, HLG_STATS


@dataclass(frozen=True)
class ScenarioTemplate:
    name: str
    area_km2: float
    rows: int
    cols: int
    vacant: int
    residential: int
    retained_green: int
    min_count: Mapping[LandUse, int] = field(default_factory=dict)
    n_sub_communities: int = 4
    road_m: float = 12.0
    arterial_m: float = 30.0
    jitter: float = 0.25
    stats: Optional[DemographicStats] = None

    @property
    def total(self) -> int:
        return self.rows * self.cols

    def check(self) -> None:
        if self.vacant + self.residential + self.retained_green != self.total:
            raise ScenarioError(
                f"template {self.name}: vacant+fixed = "
                f"{self.vacant + self.residential + self.retained_green} != {self.total} plots"
            )
        if sum(self.min_count.values()) > self.vacant:
            raise ScenarioError(f"template {self.name}: constraint profile infeasible")
        if not 0.0 <= self.jitter < 0.9:
            raise ScenarioError("jitter must be in [0, 0.9)")


HLG_TEMPLATE = ScenarioTemplate(
    name="hlg",
    area_km2=3.74,
    rows=7,
    cols=9,  # 63 plots
    vacant=42,
    residential=16,
    retained_green=5,
    min_count={
        LandUse.School: 6,
        LandUse.Recreation: 6,
        LandUse.Business: 4,
        LandUse.Clinic: 4,
        LandUse.Office: 6,
        LandUse.Hospital: 2,
        LandUse.Park: 1,
    },
    stats=HLG_STATS,
)

DHM_TEMPLATE = ScenarioTemplate(
    name="dhm",
    area_km2=5.17,
    rows=7,
    cols=10,  # 70 plots
    vacant=42,
    residential=22,
    retained_green=6,
    min_count={
        LandUse.School: 6,
        LandUse.Recreation: 6,
        LandUse.Business: 4,
        LandUse.Clinic: 4,
        LandUse.Office: 2,
        LandUse.Hospital: 1,
        LandUse.Park: 1,
    },
    stats=DHM_STATS,
)

TEMPLATES = {"hlg": HLG_TEMPLATE, "dhm": DHM_TEMPLATE}


def grid_template(
    n: int = 3,
    pitch_m: float = 250.0,
    residential: int = 0,
    retained_green: int = 0,
    min_count: Optional[Mapping[LandUse, int]] = None,
) -> ScenarioTemplate:
    """Small n-by-n scenario; all plots vacant and no minimums by default."""
    area_km2 = (n * pitch_m) ** 2 / 1e6
    return ScenarioTemplate(
        name="grid",
        area_km2=area_km2,
        rows=n,
        cols=n,
        vacant=n * n - residential - retained_green,
        residential=residential,
        retained_green=retained_green,
        min_count=dict(min_count or {}),
        n_sub_communities=4 if n >= 2 else 1,
        jitter=0.0,
    )


def _axis_cuts(rng: random.Random, total: float, parts: int, jitter: float) -> list[float]:
    base = total / parts
    widths = [base * (1.0 + jitter * (2.0 * rng.random() - 1.0)) for _ in range(parts)]
    scale = total / sum(widths)
    cuts = [0.0]
    for w in widths:
        cuts.append(cuts[-1] + w * scale)
    cuts[-1] = total
    return cuts


def generate(template: ScenarioTemplate, seed: int = 0) -> Scenario:
    """Deterministically build a Scenario from a template and seed."""
    template.check()
    rng = random.Random(seed)
    rows, cols = template.rows, template.cols
    area_m2 = template.area_km2 * 1e6
    width = math.sqrt(area_m2 * cols / rows)
    height = area_m2 / width

    xcuts = _axis_cuts(rng, width, cols, template.jitter)
    ycuts = _axis_cuts(rng, height, rows, template.jitter)
    split_col = (cols + 1) // 2  # vertical arterial sits before this column
    split_row = (rows + 1) // 2
    center = Point(xcuts[split_col] if cols > 1 else width / 2,
                   ycuts[split_row] if rows > 1 else height / 2)

    multi_sc = template.n_sub_communities == 4

    def sub_community(r: int, c: int) -> int:
        if not multi_sc:
            return 1
        east = c >= split_col
        north = r >= split_row
        return 1 + (1 if east else 0) + (2 if north else 0)

    def margins(r: int, c: int) -> tuple[float, float, float, float]:
        # west, south, east, north margins: half a road, or half an arterial
        # when the edge faces one of the two central axes.
        half, ahalf = template.road_m / 2.0, template.arterial_m / 2.0
        west = ahalf if (cols > 1 and c == split_col) else half
        east = ahalf if (cols > 1 and c == split_col - 1) else half
        south = ahalf if (rows > 1 and r == split_row) else half
        north = ahalf if (rows > 1 and r == split_row - 1) else half
        return west, south, east, north

    plots: list[Plot] = []
    quadrant_name = {1: "south-west", 2: "south-east", 3: "north-west", 4: "north-east"}
    for r in range(rows):
        for c in range(cols):
            w, s, e, n = margins(r, c)
            x0, x1 = xcuts[c] + w, xcuts[c + 1] - e
            y0, y1 = ycuts[r] + s, ycuts[r + 1] - n
            polygon = (Point(x0, y0), Point(x1, y0), Point(x1, y1), Point(x0, y1))
            sc = sub_community(r, c)
            plot_id = r * cols + c
            centroid = polygon_centroid(polygon)
            d_center = math.dist(centroid, center)
            parts = []
            if multi_sc:
                parts.append(f"{quadrant_name[sc]} quadrant")
            parts.append(f"{d_center:.0f} m from the community center")
            if rows > 1 and r in (split_row - 1, split_row):
                parts.append("fronts the east-west arterial")
            if cols > 1 and c in (split_col - 1, split_col):
                parts.append("fronts the north-south arterial")
            plots.append(
                Plot(
                    id=plot_id,
                    polygon=polygon,
                    sub_community=sc,
                    description=", ".join(parts),
                )
            )

    # Fixed statuses: residential picks are spread round-robin across
    # sub-communities so every quadrant houses residents; retained green is
    # sampled from whatever remains.
    by_sc: dict[int, list[int]] = {}
    for p in plots:
        by_sc.setdefault(p.sub_community, []).append(p.id)
    for ids in by_sc.values():
        rng.shuffle(ids)
    residential_ids: set[int] = set()
    sc_cycle = sorted(by_sc)
    i = 0
    while len(residential_ids) < template.residential:
        sc = sc_cycle[i % len(sc_cycle)]
        if by_sc[sc]:
            residential_ids.add(by_sc[sc].pop())
        i += 1
        if i > template.total * 4:
            raise ScenarioError("could not place residential plots")
    remaining = sorted(set(range(template.total)) - residential_ids)
    green_ids = set(rng.sample(remaining, template.retained_green))

    final_plots = []
    for p in plots:
        fixed_use = None
        desc = p.description
        if p.id in residential_ids:
            fixed_use = LandUse.Residential
            desc += ", established residential blocks"
        elif p.id in green_ids:
            fixed_use = LandUse.RetainedGreen
            desc += ", retained green land"
        final_plots.append(
            Plot(
                id=p.id,
                polygon=p.polygon,
                sub_community=p.sub_community,
                fixed_use=fixed_use,
                description=desc,
            )
        )

    scenario = Scenario(
        name=template.name,
        plots=tuple(final_plots),
        constraints=Constraints(min_count=dict(template.min_count)),
        center=center,
        n_sub_communities=template.n_sub_communities,
        metadata={
            "template": template.name,
            "seed": seed,
            "area_km2": template.area_km2,
            "rows": rows,
            "cols": cols,
            "total_plots": template.total,
            "vacant_plots": template.vacant,
            **({"stats": template.stats.to_dict()} if template.stats else {}),
        },
    )
    check_scenario(scenario, require_residential=template.residential > 0)
    return scenario


# --- rendering -----------------------------------------------------------------

PALETTE: dict[str, str] = {
    "School": "#f2a33c",
    "Hospital": "#e05c5c",
    "Clinic": "#f0868f",
    "Business": "#c98bd9",
    "Office": "#8d9be0",
    "Recreation": "#69c5c9",
    "Park": "#6fbf73",
    "GreenSpace": "#a8d08d",
    "Residential": "#d8d0c5",
    "RetainedGreen": "#3e8948",
    "unassigned": "#e8e8e8",
}


def render_map(
    scenario: Scenario,
    plan: Optional[Plan] = None,
    changed_plot_ids: Sequence[int] = (),
    title: Optional[str] = None,
) -> str:
    """SVG document: one filled polygon per plot, id labels, legend; changed
    plots get a bold outline."""
    xs = [pt.x for p in scenario.plots for pt in p.polygon]
    ys = [pt.y for p in scenario.plots for pt in p.polygon]
    width, height = max(xs), max(ys)
    legend_w = width * 0.22
    changed = set(changed_plot_ids)

    def flip(y: float) -> float:
        return height - y

    used: list[str] = []
    shapes = []
    for p in scenario.plots:
        if p.fixed_use is not None:
            key = p.fixed_use.value
        elif plan is not None and p.id in plan.assignment:
            key = plan.assignment[p.id].value
        else:
            key = "unassigned"
        if key not in used:
            used.append(key)
        points = " ".join(f"{pt.x:.2f},{flip(pt.y):.2f}" for pt in p.polygon)
        if p.id in changed:
            stroke = 'stroke="#111111" stroke-width="8" class="changed"'
        else:
            stroke = 'stroke="#555555" stroke-width="1.5"'
        shapes.append(f'<polygon points="{points}" fill="{PALETTE[key]}" {stroke} data-plot="{p.id}" />')
        cx, cy = polygon_centroid(p.polygon)
        shapes.append(
            f'<text x="{cx:.2f}" y="{flip(cy):.2f}" font-size="{max(12.0, width / 90):.1f}" '
            f'text-anchor="middle" dominant-baseline="middle" fill="#222222">{p.id}</text>'
        )

    legend = []
    box = max(14.0, width / 70)
    for i, key in enumerate(used):
        ly = 30 + i * box * 1.6
        legend.append(
            f'<rect x="{width + 20:.2f}" y="{ly:.2f}" width="{box:.2f}" height="{box:.2f}" '
            f'fill="{PALETTE[key]}" stroke="#555555" />'
            f'<text x="{width + 26 + box:.2f}" y="{ly + box * 0.8:.2f}" '
            f'font-size="{box:.1f}" fill="#222222">{key}</text>'
        )
    title_el = (
        f'<text x="10" y="{box * 1.2:.1f}" font-size="{box * 1.2:.1f}" fill="#111111">{title}</text>'
        if title
        else ""
    )
    return (
        f'<svg xmlns="http://www.w3.org/2000/svg" '
        f'viewBox="0 0 {width + legend_w:.2f} {height:.2f}" '
        f'font-family="sans-serif">\n'
        f'<rect x="0" y="0" width="{width + legend_w:.2f}" height="{height:.2f}" fill="#fafafa" />\n'
        + title_el
        + "\n".join(shapes)
        + "\n"
        + "\n".join(legend)
        + "\n</svg>\n"
    )


def scenario_to_geojson(scenario: Scenario, plan: Optional[Plan] = None) -> dict:
    """FeatureCollection of plot polygons for the sandbox UI."""
    features = []
    for p in scenario.plots:
        ring = [[pt.x, pt.y] for pt in p.polygon]
        ring.append(ring[0])
        properties = {
            "id": p.id,
            "status": "vacant" if p.vacant else "fixed",
            "sub_community": p.sub_community,
            "description": p.description,
        }
        if p.fixed_use is not None:
            properties["fixed_use"] = p.fixed_use.value
        if plan is not None and p.id in plan.assignment:
            properties["land_use"] = plan.assignment[p.id].value
        features.append(
            {"type": "Feature", "geometry": {"type": "Polygon", "coordinates": [ring]},
             "properties": properties}
        )
    return {
        "type": "FeatureCollection",
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
        },
        "features": features,
    }
