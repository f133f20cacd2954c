// GeoJSON-to-SVG helpers. World coordinates are planar meters with y north;
// SVG y grows downward, so rings are flipped against the scenario's max y.

import type { PlotFeature, PlotProperties } from "./types.js";
import { PALETTE } from "./types.js";

export interface Bounds {
  minX: number;
  minY: number;
  maxX: number;
  maxY: number;
}

export function featureBounds(features: PlotFeature[]): Bounds {
  let minX = Infinity;
  let minY = Infinity;
  let maxX = -Infinity;
  let maxY = -Infinity;
  for (const feature of features) {
    for (const [x, y] of feature.geometry.coordinates[0]) {
      if (x < minX) minX = x;
      if (y < minY) minY = y;
      if (x > maxX) maxX = x;
      if (y > maxY) maxY = y;
    }
  }
  return { minX, minY, maxX, maxY };
}

/** SVG polygon points attribute for a GeoJSON ring (closing vertex dropped). */
export function ringToPoints(ring: number[][], maxY: number): string {
  const n = ring.length;
  const open =
    n > 1 &&
    ring[0][0] === ring[n - 1][0] &&
    ring[0][1] === ring[n - 1][1]
      ? ring.slice(0, n - 1)
      : ring;
  return open.map(([x, y]) => `${x},${maxY - y}`).join(" ");
}

export function viewBox(bounds: Bounds): string {
  return `${bounds.minX} 0 ${bounds.maxX - bounds.minX} ${bounds.maxY - bounds.minY}`;
}

/** Fill color: fixed plots by their fixed use, vacant by the live assignment. */
export function plotFill(
  props: PlotProperties,
  assignment: Record<string, string>,
): string {
  if (props.status === "fixed" && props.fixed_use) {
    return PALETTE[props.fixed_use] ?? PALETTE.unassigned;
  }
  const use = assignment[String(props.id)];
  return use ? (PALETTE[use] ?? PALETTE.unassigned) : PALETTE.unassigned;
}

export function ringCentroid(ring: number[][]): [number, number] {
  const open =
    ring.length > 1 &&
    ring[0][0] === ring[ring.length - 1][0] &&
    ring[0][1] === ring[ring.length - 1][1]
      ? ring.slice(0, ring.length - 1)
      : ring;
  let sx = 0;
  let sy = 0;
  for (const [x, y] of open) {
    sx += x;
    sy += y;
  }
  return [sx / open.length, sy / open.length];
}
