// Pure view-state transitions. The rendered plan always equals the last
// server-confirmed plan: mutations replace state wholesale from the server
// response, never optimistically.

import type { MetricsReport, MutationResponse, Violation } from "./types.js";

export interface ViewState {
  version: number;
  assignment: Record<string, string>;
  metrics: MetricsReport | null;
  trajectory: MetricsReport[];
  violations: Violation[];
  selectedPlot: number | null;
  palette: string | null;
  busy: boolean;
  transcriptCursor: number;
  flash: number[]; // plot ids to outline bold after the latest change
}

export function initialState(): ViewState {
  return {
    version: 0,
    assignment: {},
    metrics: null,
    trajectory: [],
    violations: [],
    selectedPlot: null,
    palette: null,
    busy: false,
    transcriptCursor: -1,
    flash: [],
  };
}

/** Start a mutation; returns null when one is already in flight. */
export function beginMutation(state: ViewState): ViewState | null {
  if (state.busy) return null;
  return { ...state, busy: true };
}

export function failMutation(state: ViewState): ViewState {
  return { ...state, busy: false };
}

/** Install a server-confirmed mutation result. */
export function applyMutation(
  state: ViewState,
  response: MutationResponse,
  editedPlots: number[] = [],
): ViewState {
  const flash = response.changed ?? editedPlots;
  return {
    ...state,
    busy: false,
    version: response.version,
    assignment: response.plan.assignment,
    metrics: response.metrics,
    trajectory: [...state.trajectory, response.metrics],
    violations: response.violations,
    flash,
    selectedPlot: null,
  };
}

export function selectPlot(
  state: ViewState,
  plotId: number,
  vacant: boolean,
): ViewState {
  if (!vacant) return { ...state, selectedPlot: null };
  const selectedPlot = state.selectedPlot === plotId ? null : plotId;
  return { ...state, selectedPlot };
}

export function choosePalette(state: ViewState, use: string): ViewState {
  return { ...state, palette: state.palette === use ? null : use };
}

export function advanceCursor(state: ViewState, lastSeq: number): ViewState {
  if (lastSeq <= state.transcriptCursor) return state;
  return { ...state, transcriptCursor: lastSeq };
}

export interface Badge {
  label: string;
  detail: string;
}

/** Violation badges exactly mirror the server's violation list. */
export function violationBadges(violations: Violation[]): Badge[] {
  return violations.map((v) => {
    if (v.kind === "min_count") {
      const name = v.joint ? "Park+GreenSpace" : (v.land_use ?? "?");
      return {
        label: `${name} ${v.have}/${v.need}`,
        detail: `${name}: have ${v.have}, need at least ${v.need}`,
      };
    }
    if (v.kind === "unassigned") {
      return { label: `plot ${v.plot_id} unassigned`, detail: "vacant plot has no land use" };
    }
    return { label: `${v.kind} (plot ${v.plot_id})`, detail: v.kind };
  });
}
