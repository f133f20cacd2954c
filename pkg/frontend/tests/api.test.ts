import assert from "node:assert/strict";
import { test } from "node:test";

import { ApiClient, ApiError } from "../src/api.js";

interface Call {
  url: string;
  init?: RequestInit;
}

function mockFetch(
  handler: (url: string, init?: RequestInit) => { status?: number; body: unknown },
): Call[] {
  const calls: Call[] = [];
  globalThis.fetch = (async (input: RequestInfo | URL, init?: RequestInit) => {
    const url = String(input);
    calls.push({ url, init });
    const result = handler(url, init);
    const status = result.status ?? 200;
    return new Response(JSON.stringify(result.body), {
      status,
      headers: { "Content-Type": "application/json" },
    });
  }) as typeof fetch;
  return calls;
}

test("edit posts the edits with the expected version", async () => {
  const calls = mockFetch(() => ({
    body: {
      version: 1,
      plan: { provenance: "x", revision_step: 1, assignment: {} },
      metrics: { service: 0, ecology: 0, satisfaction: 0, inclusion: 0, revision_step: 1 },
      violations: [],
    },
  }));
  const api = new ApiClient("http://host");
  const response = await api.edit([{ plot_id: 4, land_use: "School" }], 0);
  assert.equal(response.version, 1);
  assert.equal(calls.length, 1);
  assert.equal(calls[0].url, "http://host/plan/edits");
  assert.equal(calls[0].init?.method, "POST");
  const sent = JSON.parse(String(calls[0].init?.body));
  assert.deepEqual(sent, {
    edits: [{ plot_id: 4, land_use: "School" }],
    expected_version: 0,
  });
});

test("typed errors surface the server detail", async () => {
  mockFetch(() => ({
    status: 400,
    body: { detail: { type: "fixed_plot", message: "plot 0 is fixed" } },
  }));
  const api = new ApiClient();
  await assert.rejects(
    api.edit([{ plot_id: 0, land_use: "Park" }]),
    (error: unknown) => {
      assert.ok(error instanceof ApiError);
      assert.equal(error.status, 400);
      assert.equal(error.kind, "fixed_plot");
      assert.match(error.message, /fixed/);
      return true;
    },
  );
});

test("transcript and residents build query strings", async () => {
  const calls = mockFetch((url) => {
    if (url.includes("/transcript")) return { body: { entries: [], last_seq: 5 } };
    return { body: { residents: [] } };
  });
  const api = new ApiClient();
  await api.transcript(7);
  await api.residents(2);
  await api.residents();
  assert.equal(calls[0].url, "/transcript?after=7");
  assert.equal(calls[1].url, "/residents?sub_community=2");
  assert.equal(calls[2].url, "/residents");
});

test("discuss and undo hit their endpoints", async () => {
  const calls = mockFetch(() => ({
    body: {
      version: 2,
      plan: { provenance: "x", revision_step: 2, assignment: {} },
      metrics: { service: 0, ecology: 0, satisfaction: 0, inclusion: 0, revision_step: 2 },
      violations: [],
    },
  }));
  const api = new ApiClient();
  await api.discuss(3);
  await api.undo();
  assert.equal(calls[0].url, "/discuss/3");
  assert.equal(calls[1].url, "/plan/undo");
});

test("base url trailing slash is normalized", async () => {
  const calls = mockFetch(() => ({ body: { steps: [] } }));
  const api = new ApiClient("http://x:1/");
  await api.trajectory();
  assert.equal(calls[0].url, "http://x:1/trajectory");
});
