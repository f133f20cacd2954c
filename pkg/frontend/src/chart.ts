// Trajectory chart: the four metrics against revision step, as inline SVG.

import type { MetricsReport } from "./types.js";

export const SERIES: ReadonlyArray<{ key: keyof MetricsReport; color: string }> = [
  { key: "service", color: "#8d9be0" },
  { key: "ecology", color: "#6fbf73" },
  { key: "satisfaction", color: "#f2a33c" },
  { key: "inclusion", color: "#e05c5c" },
];

/** Polyline points for values in [0, 1] spread evenly across the width. */
export function polylinePoints(
  values: number[],
  width: number,
  height: number,
  pad = 6,
): string {
  if (values.length === 0) return "";
  const innerW = width - 2 * pad;
  const innerH = height - 2 * pad;
  const step = values.length > 1 ? innerW / (values.length - 1) : 0;
  return values
    .map((v, i) => {
      const x = pad + (values.length > 1 ? i * step : innerW / 2);
      const y = pad + (1 - v) * innerH;
      return `${round2(x)},${round2(y)}`;
    })
    .join(" ");
}

function round2(x: number): number {
  return Math.round(x * 100) / 100;
}

export function chartSvg(
  trajectory: MetricsReport[],
  width = 320,
  height = 140,
): string {
  const lines = SERIES.map(({ key, color }) => {
    const points = polylinePoints(
      trajectory.map((r) => r[key] as number),
      width,
      height,
    );
    return (
      `<polyline fill="none" stroke="${color}" stroke-width="2" points="${points}" />` +
      trajectory
        .map((r, i) => {
          const [x, y] = pointAt(trajectory.length, i, r[key] as number, width, height);
          return `<circle cx="${x}" cy="${y}" r="2.5" fill="${color}" />`;
        })
        .join("")
    );
  });
  const legend = SERIES.map(
    ({ key, color }, i) =>
      `<circle cx="${10 + i * 78}" cy="${height - 4}" r="3" fill="${color}" />` +
      `<text x="${16 + i * 78}" y="${height - 1}" font-size="9" fill="#444">${key}</text>`,
  );
  return (
    `<svg viewBox="0 0 ${width} ${height}" xmlns="http://www.w3.org/2000/svg">` +
    `<rect x="0" y="0" width="${width}" height="${height}" fill="#ffffff" />` +
    lines.join("") +
    legend.join("") +
    `</svg>`
  );
}

function pointAt(
  count: number,
  index: number,
  value: number,
  width: number,
  height: number,
  pad = 6,
): [number, number] {
  const innerW = width - 2 * pad;
  const innerH = height - 2 * pad;
  const step = count > 1 ? innerW / (count - 1) : 0;
  const x = pad + (count > 1 ? index * step : innerW / 2);
  const y = pad + (1 - value) * innerH;
  return [round2(x), round2(y)];
}
