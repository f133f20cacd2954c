import json
import threading

import pytest

from agora.llm_client import (
    AuthError,
    ChatRequest,
    LLMClient,
    LLMError,
    MalformedResponse,
    ResponseCache,
    RetriesExhausted,
    RetryPolicy,
    TokenBucket,
    CacheEntry,
)

from llm_stub import StubLLMServer

FAST = RetryPolicy(max_attempts=5, base_delay_s=0.001, factor=2.0)


def make_client(server, tmp_path=None, **kwargs):
    return LLMClient(
        endpoint=server.endpoint,
        api_key="test-key",
        model="stub-model",
        cache_dir=str(tmp_path) if tmp_path else None,
        policy=FAST,
        sleep=lambda s: None,
        **kwargs,
    )


def request(text="hello"):
    return ChatRequest.make("stub-model", [{"role": "user", "content": text}])


class TestRequestKey:
    def test_whitespace_normalized(self):
        a = ChatRequest.make("m", [{"role": "user", "content": "hello   world"}])
        b = ChatRequest.make("m", [{"role": "user", "content": "hello \n world"}])
        assert a.request_key == b.request_key

    def test_semantic_fields_differentiate(self):
        base = request("hi")
        other_model = ChatRequest.make("m2", [{"role": "user", "content": "hi"}])
        other_temp = ChatRequest.make(
            "stub-model", [{"role": "user", "content": "hi"}], temperature=0.7
        )
        assert base.request_key != other_model.request_key
        assert base.request_key != other_temp.request_key


class TestComplete:
    def test_basic_roundtrip_and_usage(self):
        with StubLLMServer(lambda body: "pong") as server:
            client = make_client(server)
            assert client.complete(request()) == "pong"
            summary = client.usage_summary()
            assert summary["calls"] == 1
            assert summary["network_calls"] == 1
            assert summary["prompt_tokens"] == 7
            assert summary["total_tokens"] == 10

    def test_cache_hit_performs_no_network_call(self, tmp_path):
        with StubLLMServer(lambda body: "cached answer") as server:
            client = make_client(server, tmp_path)
            first = client.complete(request())
            assert server.request_count == 1
            second = client.complete(request())
            assert second == first == "cached answer"
            assert server.request_count == 1  # served from disk
            assert client.usage_summary()["cache_hits"] == 1

    def test_warm_cache_survives_new_client(self, tmp_path):
        with StubLLMServer(lambda body: "answer one") as server:
            make_client(server, tmp_path).complete(request())
            assert server.request_count == 1
            replay = make_client(server, tmp_path)
            assert replay.complete(request()) == "answer one"
            assert server.request_count == 1

    def test_transient_429_then_success(self):
        state = {"n": 0}

        def responder(body):
            state["n"] += 1
            return 429 if state["n"] == 1 else "recovered"

        with StubLLMServer(responder) as server:
            client = make_client(server)
            assert client.complete(request()) == "recovered"
            assert server.request_count == 2

    def test_auth_failure_is_immediate(self):
        with StubLLMServer(lambda body: 401) as server:
            client = make_client(server)
            with pytest.raises(AuthError):
                client.complete(request())
            assert server.request_count == 1  # no retry

    def test_retries_exhausted(self):
        with StubLLMServer(lambda body: 503) as server:
            client = make_client(server)
            with pytest.raises(RetriesExhausted):
                client.complete(request())
            assert server.request_count == FAST.max_attempts

    def test_malformed_response_body(self):
        class WeirdServer(StubLLMServer):
            pass

        def responder(body):
            return 204  # no content: not a completion

        with StubLLMServer(responder) as server:
            client = make_client(server)
            with pytest.raises(MalformedResponse):
                client.complete(request())

    def test_nonzero_temperature_bypasses_cache(self, tmp_path):
        with StubLLMServer(lambda body: "sampled") as server:
            client = make_client(server, tmp_path)
            hot = ChatRequest.make(
                "stub-model", [{"role": "user", "content": "hi"}], temperature=0.9
            )
            client.complete(hot)
            client.complete(hot)
            assert server.request_count == 2  # no reuse without opt-in
            allow = make_client(server, tmp_path, allow_cached_sampling=True)
            allow.complete(hot)
            allow.complete(hot)
            assert server.request_count == 3  # second one cached

    def test_missing_endpoint_is_config_error(self, monkeypatch):
        monkeypatch.delenv("AGORA_LLM_ENDPOINT", raising=False)
        monkeypatch.delenv("AGORA_LLM_MODEL", raising=False)
        with pytest.raises(LLMError):
            LLMClient()


class TestResponseCache:
    def test_write_then_read_byte_identical(self, tmp_path):
        cache = ResponseCache(tmp_path)
        entry = CacheEntry(request_key="k" * 64, response="exact\ntexté", usage={"a": 1})
        cache.put(entry)
        got = cache.get("k" * 64)
        assert got.response == entry.response
        assert got.usage == {"a": 1}

    def test_concurrent_writers_leave_valid_entry(self, tmp_path):
        cache = ResponseCache(tmp_path)
        entry = CacheEntry(request_key="a" * 64, response="same value")
        threads = [threading.Thread(target=cache.put, args=(entry,)) for _ in range(16)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        files = list(tmp_path.glob("*.json"))
        assert len(files) == 1
        assert json.loads(files[0].read_text())["response"] == "same value"


class TestTokenBucket:
    def test_waits_when_empty(self):
        clock = {"t": 0.0}
        sleeps = []

        def fake_clock():
            return clock["t"]

        def fake_sleep(s):
            sleeps.append(s)
            clock["t"] += s

        bucket = TokenBucket(per_minute=60.0, clock=fake_clock, sleep=fake_sleep)  # 1/s
        for _ in range(int(bucket.capacity)):
            bucket.acquire()
        bucket.acquire()  # must wait ~1 s for a refill
        assert sleeps and sleeps[0] == pytest.approx(1.0, abs=0.01)
