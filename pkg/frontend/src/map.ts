// SVG plot map: colored polygons, hatched fixed plots, selection and flash.

import { featureBounds, plotFill, ringCentroid, ringToPoints, viewBox } from "./geometry.js";
import type { PlotFeature, ScenarioDoc } from "./types.js";

const SVG_NS = "http://www.w3.org/2000/svg";

export interface MapCallbacks {
  onSelect(plotId: number, vacant: boolean): void;
}

export class PlotMap {
  private svg: SVGSVGElement;
  private features: PlotFeature[];
  private maxY: number;
  private polygons = new Map<number, SVGPolygonElement>();
  private callbacks: MapCallbacks;

  constructor(container: HTMLElement, scenario: ScenarioDoc, callbacks: MapCallbacks) {
    this.features = scenario.features;
    this.callbacks = callbacks;
    const bounds = featureBounds(this.features);
    this.maxY = bounds.maxY;
    this.svg = document.createElementNS(SVG_NS, "svg");
    this.svg.setAttribute("viewBox", viewBox(bounds));
    this.svg.setAttribute("preserveAspectRatio", "xMidYMid meet");
    this.svg.appendChild(this.hatchDefs());
    for (const feature of this.features) {
      this.svg.appendChild(this.plotGroup(feature));
    }
    container.appendChild(this.svg);
  }

  private hatchDefs(): SVGDefsElement {
    const defs = document.createElementNS(SVG_NS, "defs");
    defs.innerHTML =
      `<pattern id="hatch" width="14" height="14" patternTransform="rotate(45)" ` +
      `patternUnits="userSpaceOnUse">` +
      `<rect width="14" height="14" fill="rgba(255,255,255,0)"/>` +
      `<line x1="0" y1="0" x2="0" y2="14" stroke="rgba(60,60,60,0.35)" stroke-width="4"/>` +
      `</pattern>`;
    return defs;
  }

  private plotGroup(feature: PlotFeature): SVGGElement {
    const group = document.createElementNS(SVG_NS, "g");
    const ring = feature.geometry.coordinates[0];
    const polygon = document.createElementNS(SVG_NS, "polygon");
    polygon.setAttribute("points", ringToPoints(ring, this.maxY));
    polygon.classList.add("plot");
    polygon.dataset.plot = String(feature.properties.id);
    group.appendChild(polygon);
    this.polygons.set(feature.properties.id, polygon);

    if (feature.properties.status === "fixed") {
      const hatch = document.createElementNS(SVG_NS, "polygon");
      hatch.setAttribute("points", ringToPoints(ring, this.maxY));
      hatch.setAttribute("fill", "url(#hatch)");
      hatch.setAttribute("pointer-events", "none");
      group.appendChild(hatch);
    }

    const [cx, cy] = ringCentroid(ring);
    const label = document.createElementNS(SVG_NS, "text");
    label.setAttribute("x", String(cx));
    label.setAttribute("y", String(this.maxY - cy));
    label.setAttribute("text-anchor", "middle");
    label.setAttribute("dominant-baseline", "middle");
    label.classList.add("plot-label");
    label.textContent = String(feature.properties.id);
    group.appendChild(label);

    const title = document.createElementNS(SVG_NS, "title");
    title.textContent =
      `plot ${feature.properties.id} (sc ${feature.properties.sub_community}): ` +
      feature.properties.description;
    group.appendChild(title);

    group.addEventListener("click", () => {
      this.callbacks.onSelect(
        feature.properties.id,
        feature.properties.status === "vacant",
      );
    });
    return group;
  }

  /** Repaint fills, selection ring and flash outlines from the view state. */
  update(
    assignment: Record<string, string>,
    selected: number | null,
    flash: number[],
  ): void {
    const flashSet = new Set(flash);
    for (const feature of this.features) {
      const polygon = this.polygons.get(feature.properties.id);
      if (!polygon) continue;
      polygon.setAttribute("fill", plotFill(feature.properties, assignment));
      polygon.classList.toggle("selected", selected === feature.properties.id);
      polygon.classList.toggle("flash", flashSet.has(feature.properties.id));
    }
  }
}
