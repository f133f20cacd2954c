// Typed client for the sandbox HTTP API.
export class ApiError extends Error {
    constructor(status, kind, message) {
        super(message);
        this.status = status;
        this.kind = kind;
    }
}
async function parseError(response) {
    let kind = "http_error";
    let message = `HTTP ${response.status}`;
    try {
        const body = await response.json();
        if (body && body.detail) {
            kind = body.detail.type ?? kind;
            message = body.detail.message ?? message;
        }
    }
    catch {
        // non-JSON error body; keep defaults
    }
    return new ApiError(response.status, kind, message);
}
export class ApiClient {
    constructor(base = "") {
        this.base = base.replace(/\/$/, "");
    }
    async request(path, init) {
        const response = await fetch(this.base + path, init);
        if (!response.ok) {
            throw await parseError(response);
        }
        return (await response.json());
    }
    post(path, body) {
        return this.request(path, {
            method: "POST",
            headers: { "Content-Type": "application/json" },
            body: JSON.stringify(body),
        });
    }
    session() {
        return this.request("/session");
    }
    scenario() {
        return this.request("/scenario");
    }
    plan() {
        return this.request("/plan");
    }
    metrics() {
        return this.request("/metrics");
    }
    trajectory() {
        return this.request("/trajectory");
    }
    violations() {
        return this.request("/violations");
    }
    transcript(after) {
        return this.request(`/transcript?after=${after}`);
    }
    residents(subCommunity) {
        const query = subCommunity === undefined ? "" : `?sub_community=${subCommunity}`;
        return this.request(`/residents${query}`);
    }
    edit(edits, expectedVersion) {
        const body = { edits };
        if (expectedVersion !== undefined)
            body.expected_version = expectedVersion;
        return this.post("/plan/edits", body);
    }
    undo() {
        return this.post("/plan/undo", {});
    }
    discuss(subCommunity) {
        return this.post(`/discuss/${subCommunity}`, {});
    }
    ask(residentId) {
        return this.post(`/residents/${residentId}/ask`, {});
    }
    export() {
        return this.request("/export");
    }
}
