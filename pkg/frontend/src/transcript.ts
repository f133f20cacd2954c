// Transcript pane: appends polled entries under a cursor, newest at bottom.

import type { TranscriptEntry } from "./types.js";

export function renderEntry(entry: TranscriptEntry): HTMLElement {
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

function compact(text: string, limit = 400): string {
  const flat = text.replace(/```[\s\S]*?```/g, " [payload] ").replace(/\s+/g, " ").trim();
  return flat.length > limit ? flat.slice(0, limit) + "…" : flat;
}

export function appendEntries(pane: HTMLElement, entries: TranscriptEntry[]): void {
  for (const entry of entries) {
    pane.appendChild(renderEntry(entry));
  }
  if (entries.length) {
    pane.scrollTop = pane.scrollHeight;
  }
}
