"""Chat-completion transport: retries, rate limiting, response caching.

The wire shape is the ubiquitous chat-completions JSON
(`{"model", "messages": [{"role", "content"}], "temperature"}`); endpoint,
credential and model come from AGORA_LLM_ENDPOINT / AGORA_LLM_API_KEY /
AGORA_LLM_MODEL unless passed explicitly, so any compatible provider or a
local stub works.

Responses are cached in content-addressed files (one JSON file per request
key), which makes a warmed cache a replayable fixture: a rerun serves every
request from disk and performs zero network calls.
"""

from __future__ import annotations

import hashlib
import json
import os
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Optional, Sequence

import requests

from .errors import AgoraError

ENV_ENDPOINT = "AGORA_LLM_ENDPOINT"
ENV_API_KEY = "AGORA_LLM_API_KEY"
ENV_MODEL = "AGORA_LLM_MODEL"

_RETRYABLE_STATUSES = (429, 500, 502, 503, 504)


class LLMError(AgoraError):
    pass


class AuthError(LLMError):
    """Credential rejected; never retried."""


class RetriesExhausted(LLMError):
    pass


class MalformedResponse(LLMError):
    """The service replied with something that is not a chat completion."""


@dataclass(frozen=True)
class RetryPolicy:
    max_attempts: int = 5
    base_delay_s: float = 1.0
    factor: float = 2.0


@dataclass(frozen=True)
class ChatRequest:
    model: str
    messages: tuple[tuple[str, str], ...]  # (role, content) pairs
    temperature: float = 0.0
    max_tokens: Optional[int] = None

    @classmethod
    def make(
        cls,
        model: str,
        messages: Sequence[Mapping[str, str]],
        temperature: float = 0.0,
        max_tokens: Optional[int] = None,
    ) -> "ChatRequest":
        return cls(
            model=model,
            messages=tuple((m["role"], m["content"]) for m in messages),
            temperature=temperature,
            max_tokens=max_tokens,
        )

    @property
    def request_key(self) -> str:
        """Digest of the semantic request content (whitespace-normalized)."""
        canon = {
            "model": self.model,
            "temperature": self.temperature,
            "messages": [
                {"role": role, "content": " ".join(content.split())}
                for role, content in self.messages
            ],
        }
        blob = json.dumps(canon, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()

    def body(self) -> dict:
        body = {
            "model": self.model,
            "messages": [{"role": r, "content": c} for r, c in self.messages],
            "temperature": self.temperature,
        }
        if self.max_tokens is not None:
            body["max_tokens"] = self.max_tokens
        return body


@dataclass(frozen=True)
class CacheEntry:
    request_key: str
    response: str
    usage: Mapping[str, int] = field(default_factory=dict)
    created_at: float = 0.0

    def to_dict(self) -> dict:
        return {
            "request_key": self.request_key,
            "response": self.response,
            "usage": dict(self.usage),
            "created_at": self.created_at,
        }


class ResponseCache:
    """Content-addressed file cache; writes are atomic (tmp + rename)."""

    def __init__(self, directory: Path):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)

    def _path(self, key: str) -> Path:
        return self.directory / f"{key}.json"

    def get(self, key: str) -> Optional[CacheEntry]:
        path = self._path(key)
        if not path.exists():
            return None
        data = json.loads(path.read_text(encoding="utf-8"))
        return CacheEntry(
            request_key=data["request_key"],
            response=data["response"],
            usage=data.get("usage", {}),
            created_at=data.get("created_at", 0.0),
        )

    def put(self, entry: CacheEntry) -> None:
        path = self._path(entry.request_key)
        tmp = path.with_suffix(f".tmp-{os.getpid()}-{threading.get_ident()}")
        tmp.write_text(json.dumps(entry.to_dict(), indent=2), encoding="utf-8")
        os.replace(tmp, path)


class TokenBucket:
    """Requests-per-minute limiter shared by all callers of one client."""

    def __init__(self, per_minute: float, clock=time.monotonic, sleep=time.sleep):
        self.capacity = max(1.0, per_minute)
        self.rate = per_minute / 60.0
        self.tokens = self.capacity
        self.updated = clock()
        self.clock = clock
        self.sleep = sleep
        self._lock = threading.Lock()

    def acquire(self) -> None:
        while True:
            with self._lock:
                now = self.clock()
                self.tokens = min(self.capacity, self.tokens + (now - self.updated) * self.rate)
                self.updated = now
                if self.tokens >= 1.0:
                    self.tokens -= 1.0
                    return
                wait = (1.0 - self.tokens) / self.rate
            self.sleep(wait)


class LLMClient:
    """Thread-safe chat-completion client with caching and usage accounting."""

    def __init__(
        self,
        endpoint: Optional[str] = None,
        api_key: Optional[str] = None,
        model: Optional[str] = None,
        cache_dir: Optional[str] = None,
        temperature: float = 0.0,
        requests_per_minute: Optional[float] = None,
        policy: RetryPolicy = RetryPolicy(),
        allow_cached_sampling: bool = False,
        timeout_s: float = 120.0,
        sleep=time.sleep,
    ):
        self.endpoint = endpoint or os.environ.get(ENV_ENDPOINT, "")
        self.api_key = api_key if api_key is not None else os.environ.get(ENV_API_KEY, "")
        self.model = model or os.environ.get(ENV_MODEL, "")
        if not self.endpoint:
            raise LLMError(f"no endpoint configured (flag or {ENV_ENDPOINT})")
        if not self.model:
            raise LLMError(f"no model configured (flag or {ENV_MODEL})")
        self.cache = ResponseCache(Path(cache_dir)) if cache_dir else None
        self.temperature = temperature
        self.policy = policy
        self.allow_cached_sampling = allow_cached_sampling
        self.timeout_s = timeout_s
        self.sleep = sleep
        self.limiter = (
            TokenBucket(requests_per_minute, sleep=sleep) if requests_per_minute else None
        )
        self._usage_lock = threading.Lock()
        self.usage = {
            "calls": 0,
            "network_calls": 0,
            "cache_hits": 0,
            "prompt_tokens": 0,
            "completion_tokens": 0,
        }

    def _cache_usable(self, request: ChatRequest) -> bool:
        if self.cache is None:
            return False
        # Sampling (temperature > 0) makes replies non-reproducible; reusing a
        # cached one silently changes semantics unless explicitly allowed.
        return request.temperature == 0.0 or self.allow_cached_sampling

    def _count(self, **deltas: int) -> None:
        with self._usage_lock:
            for k, v in deltas.items():
                self.usage[k] += v

    def complete(self, request: ChatRequest, policy: Optional[RetryPolicy] = None) -> str:
        text, _ = self.complete_with_usage(request, policy)
        return text

    def complete_with_usage(
        self, request: ChatRequest, policy: Optional[RetryPolicy] = None
    ) -> tuple[str, dict]:
        policy = policy or self.policy
        self._count(calls=1)
        if self._cache_usable(request):
            entry = self.cache.get(request.request_key)
            if entry is not None:
                self._count(cache_hits=1)
                return entry.response, dict(entry.usage)

        last_error: Optional[Exception] = None
        for attempt in range(policy.max_attempts):
            if attempt > 0:
                self.sleep(policy.base_delay_s * policy.factor ** (attempt - 1))
            if self.limiter is not None:
                self.limiter.acquire()
            try:
                response = requests.post(
                    self.endpoint,
                    json=request.body(),
                    headers={"Authorization": f"Bearer {self.api_key}"},
                    timeout=self.timeout_s,
                )
            except (requests.ConnectionError, requests.Timeout) as exc:
                last_error = exc
                continue
            if response.status_code in (401, 403):
                raise AuthError(f"credential rejected (HTTP {response.status_code})")
            if response.status_code in _RETRYABLE_STATUSES:
                last_error = LLMError(f"transient HTTP {response.status_code}")
                continue
            if response.status_code != 200:
                raise MalformedResponse(f"service returned HTTP {response.status_code}")
            try:
                doc = response.json()
                text = doc["choices"][0]["message"]["content"]
            except (ValueError, KeyError, IndexError, TypeError) as exc:
                raise MalformedResponse(f"unexpected response shape: {exc}") from exc
            usage = doc.get("usage", {}) or {}
            self._count(
                network_calls=1,
                prompt_tokens=int(usage.get("prompt_tokens", 0)),
                completion_tokens=int(usage.get("completion_tokens", 0)),
            )
            if self._cache_usable(request):
                self.cache.put(
                    CacheEntry(
                        request_key=request.request_key,
                        response=text,
                        usage=usage,
                        created_at=time.time(),
                    )
                )
            return text, dict(usage)
        raise RetriesExhausted(
            f"gave up after {policy.max_attempts} attempts: {last_error}"
        )

    def complete_messages(self, messages: Sequence[Mapping[str, str]]) -> tuple[str, dict]:
        """Convenience wrapper used by the LLM backend."""
        request = ChatRequest.make(self.model, messages, temperature=self.temperature)
        return self.complete_with_usage(request)

    def usage_summary(self) -> dict:
        with self._usage_lock:
            summary = dict(self.usage)
        calls = summary["calls"]
        summary["cache_hit_rate"] = (summary["cache_hits"] / calls) if calls else 0.0
        summary["total_tokens"] = summary["prompt_tokens"] + summary["completion_tokens"]
        return summary
