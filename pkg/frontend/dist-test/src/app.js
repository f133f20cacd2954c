// Sandbox bootstrap: wiring between the API client, view state and DOM.
// One mutation in flight at a time; the rendered plan is always the last
// server-confirmed one (errors trigger a re-sync via GET /plan).
import { ApiClient, ApiError } from "./api.js";
import { chartSvg } from "./chart.js";
import { PlotMap } from "./map.js";
import { applyMutation, beginMutation, choosePalette, failMutation, initialState, selectPlot, advanceCursor, violationBadges, } from "./state.js";
import { appendEntries } from "./transcript.js";
import { ASSIGNABLE_USES, PALETTE } from "./types.js";
const api = new ApiClient();
let state = initialState();
let map;
let scenario;
function el(id) {
    const node = document.getElementById(id);
    if (!node)
        throw new Error(`missing element #${id}`);
    return node;
}
function setState(next) {
    state = next;
    render();
}
function render() {
    map.update(state.assignment, state.selectedPlot, state.flash);
    renderMetrics();
    renderViolations();
    el("chart").innerHTML = chartSvg(state.trajectory);
    el("busy").classList.toggle("visible", state.busy);
    document
        .querySelectorAll("button[data-mutating]")
        .forEach((b) => (b.disabled = state.busy));
    document.querySelectorAll("#palette button").forEach((b) => {
        b.classList.toggle("active", b.dataset.use === state.palette);
    });
    const hint = el("selection-hint");
    if (state.selectedPlot === null) {
        hint.textContent = "Select a vacant plot, then a land use.";
    }
    else {
        const current = state.assignment[String(state.selectedPlot)] ?? "unassigned";
        hint.textContent = `Plot ${state.selectedPlot} (${current}): pick a new land use.`;
    }
}
function renderMetrics() {
    const panel = el("metrics");
    panel.innerHTML = "";
    if (!state.metrics)
        return;
    const entries = [
        ["Service", state.metrics.service],
        ["Ecology", state.metrics.ecology],
        ["Satisfaction", state.metrics.satisfaction],
        ["Inclusion", state.metrics.inclusion],
    ];
    for (const [name, value] of entries) {
        const row = document.createElement("div");
        row.className = "metric-row";
        const label = document.createElement("span");
        label.textContent = name;
        const bar = document.createElement("div");
        bar.className = "metric-bar";
        const fill = document.createElement("div");
        fill.style.width = `${value * 100}%`;
        bar.appendChild(fill);
        const num = document.createElement("code");
        // server value verbatim: the UI never recomputes metrics
        num.textContent = String(value);
        num.title = String(value);
        row.append(label, bar, num);
        panel.appendChild(row);
    }
}
function renderViolations() {
    const box = el("violations");
    box.innerHTML = "";
    const badges = violationBadges(state.violations);
    if (!badges.length) {
        const ok = document.createElement("span");
        ok.className = "badge ok";
        ok.textContent = "all requirements met";
        box.appendChild(ok);
        return;
    }
    for (const badge of badges) {
        const chip = document.createElement("span");
        chip.className = "badge violation";
        chip.textContent = badge.label;
        chip.title = badge.detail;
        box.appendChild(chip);
    }
}
function toast(message) {
    const host = el("toasts");
    const note = document.createElement("div");
    note.className = "toast";
    note.textContent = message;
    host.appendChild(note);
    setTimeout(() => note.remove(), 5000);
}
async function resyncPlan() {
    try {
        const [planDoc, metrics, violations] = await Promise.all([
            api.plan(),
            api.metrics(),
            api.violations(),
        ]);
        setState({
            ...state,
            busy: false,
            version: planDoc.version,
            assignment: planDoc.plan.assignment,
            metrics,
            violations: violations.violations,
        });
    }
    catch {
        toast("lost contact with the server");
    }
}
async function mutate(action, editedPlots = []) {
    const started = beginMutation(state);
    if (!started)
        return;
    setState(started);
    try {
        const response = await action();
        setState(applyMutation(state, response, editedPlots));
    }
    catch (error) {
        const message = error instanceof ApiError ? `${error.kind}: ${error.message}` : String(error);
        toast(message);
        setState(failMutation(state));
        await resyncPlan();
    }
}
function onSelectPlot(plotId, vacant) {
    if (!vacant) {
        toast(`plot ${plotId} is fixed and cannot be edited`);
        setState(selectPlot(state, plotId, false));
        return;
    }
    const next = selectPlot(state, plotId, true);
    setState(next);
    if (next.selectedPlot !== null && next.palette) {
        void applySelectedEdit(next.selectedPlot, next.palette);
    }
}
function onChoosePalette(use) {
    const next = choosePalette(state, use);
    setState(next);
    if (next.palette && next.selectedPlot !== null) {
        void applySelectedEdit(next.selectedPlot, next.palette);
    }
}
async function applySelectedEdit(plotId, use) {
    await mutate(() => api.edit([{ plot_id: plotId, land_use: use }], state.version), [plotId]);
}
function buildPalette() {
    const host = el("palette");
    for (const use of ASSIGNABLE_USES) {
        const button = document.createElement("button");
        button.dataset.use = use;
        button.dataset.mutating = "true";
        button.innerHTML = `<span class="swatch" style="background:${PALETTE[use]}"></span>${use}`;
        button.addEventListener("click", () => onChoosePalette(use));
        host.appendChild(button);
    }
}
function buildDiscussButtons() {
    const host = el("discuss-buttons");
    for (let k = 1; k <= scenario.n_sub_communities; k++) {
        const button = document.createElement("button");
        button.dataset.mutating = "true";
        button.textContent = `Discuss sub-community ${k}`;
        button.addEventListener("click", () => {
            void mutate(() => api.discuss(k));
        });
        host.appendChild(button);
    }
}
function residentCard(resident) {
    const card = document.createElement("div");
    card.className = "resident-card";
    const head = document.createElement("div");
    head.className = "resident-head";
    const tags = resident.vulnerable.length
        ? ` [${resident.vulnerable.join(", ").replace(/_/g, " ")}]`
        : "";
    head.textContent = `#${resident.id} · sc ${resident.sub_community} · age ${resident.age}${tags}`;
    const needs = document.createElement("div");
    needs.className = "resident-needs";
    needs.textContent = `needs: ${resident.needs.join(", ")}`;
    const reply = document.createElement("div");
    reply.className = "resident-reply";
    const ask = document.createElement("button");
    ask.textContent = "Ask about the plan";
    ask.addEventListener("click", async () => {
        ask.disabled = true;
        try {
            const { opinion } = await api.ask(resident.id);
            reply.textContent = opinion.comment;
            reply.classList.toggle("unhappy", opinion.unmet.length > 0);
        }
        catch (error) {
            toast(String(error));
        }
        finally {
            ask.disabled = false;
        }
    });
    card.append(head, needs, ask, reply);
    return card;
}
async function buildResidentCards() {
    const { residents } = await api.residents();
    const host = el("residents");
    // one card per sub-community from the front of the list, then vulnerable
    // extras, capped to keep the sidebar small
    const chosen = [];
    const seenSc = new Set();
    for (const resident of residents) {
        if (!seenSc.has(resident.sub_community)) {
            seenSc.add(resident.sub_community);
            chosen.push(resident);
        }
    }
    for (const resident of residents) {
        if (chosen.length >= 8)
            break;
        if (resident.vulnerable.length && !chosen.includes(resident)) {
            chosen.push(resident);
        }
    }
    for (const resident of chosen) {
        host.appendChild(residentCard(resident));
    }
}
async function pollTranscript() {
    try {
        const page = await api.transcript(state.transcriptCursor);
        if (page.entries.length) {
            appendEntries(el("transcript"), page.entries);
            setState(advanceCursor(state, page.last_seq));
        }
    }
    catch {
        // transient; next tick retries
    }
}
async function exportSession() {
    const bundle = await api.export();
    const blob = new Blob([JSON.stringify(bundle, null, 2)], {
        type: "application/json",
    });
    const url = URL.createObjectURL(blob);
    const link = document.createElement("a");
    link.href = url;
    link.download = `${scenario.name}-session.json`;
    link.click();
    URL.revokeObjectURL(url);
}
async function bootstrap() {
    const session = await api.session();
    scenario = await api.scenario();
    el("title").textContent = `${session.scenario} sandbox (${session.backend})`;
    map = new PlotMap(el("map"), scenario, { onSelect: onSelectPlot });
    buildPalette();
    buildDiscussButtons();
    void buildResidentCards();
    const [planDoc, trajectory, violations] = await Promise.all([
        api.plan(),
        api.trajectory(),
        api.violations(),
    ]);
    setState({
        ...state,
        version: planDoc.version,
        assignment: planDoc.plan.assignment,
        trajectory: trajectory.steps,
        metrics: trajectory.steps[trajectory.steps.length - 1] ?? null,
        violations: violations.violations,
    });
    el("undo").addEventListener("click", () => {
        void mutate(() => api.undo());
    });
    el("export").addEventListener("click", () => {
        void exportSession();
    });
    await pollTranscript();
    setInterval(() => void pollTranscript(), 1000);
}
void bootstrap().catch((error) => {
    document.body.innerHTML = `<pre class="fatal">failed to start: ${String(error)}</pre>`;
});
