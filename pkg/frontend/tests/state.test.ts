import assert from "node:assert/strict";
import { test } from "node:test";

import {
  applyMutation,
  beginMutation,
  choosePalette,
  failMutation,
  initialState,
  selectPlot,
  advanceCursor,
  violationBadges,
} from "../src/state.js";
import type { MutationResponse, Violation } from "../src/types.js";

const response: MutationResponse = {
  version: 3,
  plan: { provenance: "sandbox-edit", revision_step: 3, assignment: { "2": "Park" } },
  metrics: { service: 0.5, ecology: 0.25, satisfaction: 0.75, inclusion: 1, revision_step: 3 },
  violations: [],
};

test("applyMutation installs the server-confirmed state", () => {
  let state = initialState();
  state = beginMutation(state)!;
  const next = applyMutation(state, response, [2]);
  assert.equal(next.version, 3);
  assert.deepEqual(next.assignment, { "2": "Park" });
  assert.equal(next.metrics, response.metrics);
  assert.deepEqual(next.trajectory, [response.metrics]);
  assert.equal(next.busy, false);
  assert.deepEqual(next.flash, [2]);
  assert.equal(next.selectedPlot, null);
});

test("applyMutation prefers server-reported changed plots", () => {
  const state = initialState();
  const withChanged = { ...response, changed: [7, 9] };
  assert.deepEqual(applyMutation(state, withChanged, [2]).flash, [7, 9]);
});

test("beginMutation enforces a single writer", () => {
  const state = initialState();
  const started = beginMutation(state);
  assert.ok(started);
  assert.equal(started!.busy, true);
  assert.equal(beginMutation(started!), null);
  assert.equal(failMutation(started!).busy, false);
});

test("selectPlot toggles and ignores fixed plots", () => {
  let state = initialState();
  state = selectPlot(state, 4, true);
  assert.equal(state.selectedPlot, 4);
  state = selectPlot(state, 4, true);
  assert.equal(state.selectedPlot, null);
  state = selectPlot(state, 4, true);
  state = selectPlot(state, 1, false); // fixed plot clears selection
  assert.equal(state.selectedPlot, null);
});

test("choosePalette toggles the active land use", () => {
  let state = initialState();
  state = choosePalette(state, "Park");
  assert.equal(state.palette, "Park");
  state = choosePalette(state, "Park");
  assert.equal(state.palette, null);
});

test("advanceCursor is monotone", () => {
  let state = initialState();
  state = advanceCursor(state, 10);
  assert.equal(state.transcriptCursor, 10);
  assert.equal(advanceCursor(state, 4).transcriptCursor, 10);
});

test("violationBadges mirror the server list", () => {
  const violations: Violation[] = [
    { kind: "min_count", land_use: "School", have: 5, need: 6, plot_id: null, joint: false },
    { kind: "min_count", land_use: "Park", have: 0, need: 1, plot_id: null, joint: true },
    { kind: "unassigned", land_use: null, have: null, need: null, plot_id: 9, joint: false },
  ];
  const badges = violationBadges(violations);
  assert.equal(badges.length, 3);
  assert.equal(badges[0].label, "School 5/6");
  assert.equal(badges[1].label, "Park+GreenSpace 0/1");
  assert.match(badges[2].label, /plot 9 unassigned/);
  assert.deepEqual(violationBadges([]), []);
});
