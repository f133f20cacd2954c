// Wire types mirroring the sandbox HTTP API.

export interface MetricsReport {
  service: number;
  ecology: number;
  satisfaction: number;
  inclusion: number;
  revision_step: number;
}

export interface Violation {
  kind: string;
  land_use: string | null;
  have: number | null;
  need: number | null;
  plot_id: number | null;
  joint: boolean;
}

export interface PlanDoc {
  provenance: string;
  revision_step: number;
  assignment: Record<string, string>;
}

export interface PlotProperties {
  id: number;
  status: "vacant" | "fixed";
  sub_community: number;
  description: string;
  fixed_use?: string;
  land_use?: string;
}

export interface PlotFeature {
  type: "Feature";
  geometry: { type: "Polygon"; coordinates: number[][][] };
  properties: PlotProperties;
}

export interface ScenarioDoc {
  type: "FeatureCollection";
  name: string;
  center: [number, number];
  n_sub_communities: number;
  constraints: {
    min_count: Record<string, number>;
    park_green_joint: boolean;
  };
  features: PlotFeature[];
}

export interface RevisionChange {
  plot_id: number;
  land_use: string;
  reason: string;
}

export interface RevisionPayload {
  type: "plan_revision";
  changes: RevisionChange[];
}

export interface OpinionPayload {
  type: "opinion";
  unmet: string[];
  comment: string;
  plots: number[];
  agent_id?: number;
}

export interface MutationResponse {
  version: number;
  plan: PlanDoc;
  metrics: MetricsReport;
  violations: Violation[];
  revision?: RevisionPayload;
  opinions?: OpinionPayload[];
  changed?: number[];
}

export interface TranscriptEntry {
  seq: number;
  role: string;
  agent_id: number | string | null;
  direction: string;
  text: string;
  payload: unknown;
}

export interface TranscriptPage {
  entries: TranscriptEntry[];
  last_seq: number;
}

export interface ResidentSummary {
  id: number;
  sub_community: number;
  age: number;
  vulnerable: string[];
  needs: string[];
}

export interface SessionInfo {
  token: string;
  scenario: string;
  backend: string;
  version: number;
  n_sub_communities: number;
  population: number;
}

export const ASSIGNABLE_USES = [
  "School",
  "Hospital",
  "Clinic",
  "Business",
  "Office",
  "Recreation",
  "Park",
  "GreenSpace",
] as const;

export type AssignableUse = (typeof ASSIGNABLE_USES)[number];

// One palette for the whole app; matches the server's SVG renderer.
export const PALETTE: Record<string, string> = {
  School: "#f2a33c",
  Hospital: "#e05c5c",
  Clinic: "#f0868f",
  Business: "#c98bd9",
  Office: "#8d9be0",
  Recreation: "#69c5c9",
  Park: "#6fbf73",
  GreenSpace: "#a8d08d",
  Residential: "#d8d0c5",
  RetainedGreen: "#3e8948",
  unassigned: "#e8e8e8",
};
