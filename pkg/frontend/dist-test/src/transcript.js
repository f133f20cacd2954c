// Transcript pane: appends polled entries under a cursor, newest at bottom.
export function renderEntry(entry) {
    const item = document.createElement("div");
    item.className = `transcript-entry role-${entry.role} dir-${entry.direction}`;
    const who = document.createElement("span");
    who.className = "who";
    who.textContent =
        entry.agent_id === null || entry.agent_id === undefined
            ? entry.role
            : `${entry.role} ${entry.agent_id}`;
    const text = document.createElement("span");
    text.className = "what";
    text.textContent = compact(entry.text);
    item.append(who, text);
    return item;
}
function compact(text, limit = 400) {
    const flat = text.replace(/```[\s\S]*?```/g, " [payload] ").replace(/\s+/g, " ").trim();
    return flat.length > limit ? flat.slice(0, limit) + "…" : flat;
}
export function appendEntries(pane, entries) {
    for (const entry of entries) {
        pane.appendChild(renderEntry(entry));
    }
    if (entries.length) {
        pane.scrollTop = pane.scrollHeight;
    }
}
