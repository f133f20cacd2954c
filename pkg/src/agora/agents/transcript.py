"""Append-only log of agent interactions, persisted as line-delimited JSON."""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass
from typing import Optional, Union


@dataclass(frozen=True)
class TranscriptEntry:
    seq: int
    role: str  # "cp" | "sp" | "resident" | "system"
    agent_id: Optional[Union[int, str]]
    direction: str  # "prompt" | "response"
    text: str
    payload: Optional[dict] = None
    usage: Optional[dict] = None
    timestamp: Optional[float] = None  # None under the scripted backend

    def to_dict(self) -> dict:
        return {
            "seq": self.seq,
            "role": self.role,
            "agent_id": self.agent_id,
            "direction": self.direction,
            "text": self.text,
            "payload": self.payload,
            "usage": self.usage,
            "timestamp": self.timestamp,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "TranscriptEntry":
        return cls(
            seq=int(data["seq"]),
            role=data["role"],
            agent_id=data.get("agent_id"),
            direction=data["direction"],
            text=data.get("text", ""),
            payload=data.get("payload"),
            usage=data.get("usage"),
            timestamp=data.get("timestamp"),
        )


class Transcript:
    """Thread-safe ordered event log with strictly increasing sequence numbers."""

    def __init__(self) -> None:
        self._entries: list[TranscriptEntry] = []
        self._lock = threading.Lock()

    def append(
        self,
        role: str,
        direction: str,
        text: str,
        agent_id: Optional[Union[int, str]] = None,
        payload: Optional[dict] = None,
        usage: Optional[dict] = None,
        timestamp: Optional[float] = None,
    ) -> TranscriptEntry:
        with self._lock:
            entry = TranscriptEntry(
                seq=len(self._entries),
                role=role,
                agent_id=agent_id,
                direction=direction,
                text=text,
                payload=payload,
                usage=usage,
                timestamp=timestamp,
            )
            self._entries.append(entry)
            return entry

    def __len__(self) -> int:
        return len(self._entries)

    def entries(self) -> list[TranscriptEntry]:
        with self._lock:
            return list(self._entries)

    def after(self, seq: int) -> list[TranscriptEntry]:
        """Entries with sequence number strictly greater than seq."""
        with self._lock:
            return [e for e in self._entries if e.seq > seq]

    def save_jsonl(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for entry in self.entries():
                fh.write(json.dumps(entry.to_dict()) + "\n")

    @classmethod
    def load_jsonl(cls, path) -> "Transcript":
        transcript = cls()
        with open(path, "r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if line:
                    transcript._entries.append(TranscriptEntry.from_dict(json.loads(line)))
        return transcript
