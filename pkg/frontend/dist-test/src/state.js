// Pure view-state transitions. The rendered plan always equals the last
// server-confirmed plan: mutations replace state wholesale from the server
// response, never optimistically.
export function initialState() {
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
export function beginMutation(state) {
    if (state.busy)
        return null;
    return { ...state, busy: true };
}
export function failMutation(state) {
    return { ...state, busy: false };
}
/** Install a server-confirmed mutation result. */
export function applyMutation(state, response, editedPlots = []) {
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
export function selectPlot(state, plotId, vacant) {
    if (!vacant)
        return { ...state, selectedPlot: null };
    const selectedPlot = state.selectedPlot === plotId ? null : plotId;
    return { ...state, selectedPlot };
}
export function choosePalette(state, use) {
    return { ...state, palette: state.palette === use ? null : use };
}
export function advanceCursor(state, lastSeq) {
    if (lastSeq <= state.transcriptCursor)
        return state;
    return { ...state, transcriptCursor: lastSeq };
}
/** Violation badges exactly mirror the server's violation list. */
export function violationBadges(violations) {
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
