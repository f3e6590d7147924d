"""Uniform chat-completion interface over live, scripted and recorded backends.

Every provider exposes ``complete(transcript, params) -> ModelResponse``.
Implementations must be thread-safe: the harness drives them from a
worker pool.
"""

from __future__ import annotations

import hashlib
import json
import random
import re
import threading
import time
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable, Mapping, Optional, Sequence

import httpx

from .errors import (
    CassetteMiss,
    ProviderRejected,
    RateLimited,
    TransportError,
)
from .types import Message, Role, TokenUsage


def token_estimate(text: str) -> int:
    """Deterministic fallback estimate: ceil(len/4) characters per token."""
    return (len(text) + 3) // 4


@dataclass(frozen=True)
class GenerationParams:
    max_tokens: int = 2048
    temperature: Optional[float] = None
    thinking_budget: Optional[int] = None

    def __post_init__(self):
        if self.max_tokens < 1:
            raise ValueError("max_tokens must be >= 1")
        if self.temperature is not None and self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.thinking_budget is not None:
            if self.thinking_budget < 1:
                raise ValueError("thinking_budget must be >= 1 when set")
            if self.thinking_budget > self.max_tokens:
                raise ValueError("thinking_budget must not exceed max_tokens")

    def to_dict(self) -> dict:
        return {
            "max_tokens": self.max_tokens,
            "temperature": self.temperature,
            "thinking_budget": self.thinking_budget,
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "GenerationParams":
        return cls(
            max_tokens=int(d.get("max_tokens", 2048)),
            temperature=d.get("temperature"),
            thinking_budget=d.get("thinking_budget"),
        )


@dataclass(frozen=True)
class ModelResponse:
    text: str
    usage: TokenUsage
    latency_s: float
    thinking_text: Optional[str] = None
    usage_estimated: bool = False
    retries: int = 0

    def to_dict(self) -> dict:
        return {
            "text": self.text,
            "usage": self.usage.to_dict(),
            "latency_s": self.latency_s,
            "thinking_text": self.thinking_text,
            "usage_estimated": self.usage_estimated,
            "retries": self.retries,
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "ModelResponse":
        return cls(
            text=d["text"],
            usage=TokenUsage.from_dict(d.get("usage", {})),
            latency_s=float(d.get("latency_s", 0.0)),
            thinking_text=d.get("thinking_text"),
            usage_estimated=bool(d.get("usage_estimated", False)),
            retries=int(d.get("retries", 0)),
        )


def _check_transcript(transcript: Sequence[Message]) -> None:
    if not transcript or transcript[-1].role is not Role.USER:
        raise ValueError("transcript must end with a user message")


def request_hash(transcript: Sequence[Message], params: GenerationParams) -> str:
    """Stable digest of a request, used as the cassette lookup key."""
    payload = {
        "transcript": [
            [m.role.value, m.content, m.cache_checkpoint] for m in transcript
        ],
        "params": params.to_dict(),
    }
    blob = json.dumps(payload, sort_keys=True, ensure_ascii=False)
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


class Provider:
    """Interface marker; subclasses implement complete()."""

    def complete(self, transcript: Sequence[Message], params: GenerationParams) -> ModelResponse:
        raise NotImplementedError


# ---------------------------------------------------------------------------
# Mock provider


@dataclass(frozen=True)
class MockRule:
    """Scripted reply rule.

    ``contains``/``pattern`` match against the concatenated transcript
    text. ``responses`` are indexed by the number of assistant turns
    already in the transcript (clamped to the last entry), so a rule can
    answer differently on the initial call and on each reflection.
    """

    responses: tuple[str, ...]
    contains: Optional[str] = None
    pattern: Optional[str] = None

    def matches(self, transcript_text: str) -> bool:
        if self.contains is not None and self.contains not in transcript_text:
            return False
        if self.pattern is not None and re.search(self.pattern, transcript_text) is None:
            return False
        return True

    @classmethod
    def from_dict(cls, d: Mapping) -> "MockRule":
        return cls(
            responses=tuple(d["responses"]),
            contains=d.get("contains"),
            pattern=d.get("pattern"),
        )


@dataclass(frozen=True)
class MockScript:
    rules: tuple[MockRule, ...] = ()
    default: Optional[str] = None

    @classmethod
    def from_dict(cls, d: Mapping) -> "MockScript":
        return cls(
            rules=tuple(MockRule.from_dict(r) for r in d.get("rules", ())),
            default=d.get("default"),
        )


class MockProvider(Provider):
    """Deterministic offline provider.

    The reply is a pure function of (transcript, script, seed); latency
    is synthesized as ``base + per_token * output_tokens`` and never
    slept, so large mock runs finish in milliseconds.
    """

    def __init__(
        self,
        script: MockScript | None = None,
        *,
        seed: int = 0,
        base_latency_s: float = 0.5,
        per_token_latency_s: float = 0.01,
    ):
        self.script = script or MockScript()
        self.seed = seed
        self.base_latency_s = base_latency_s
        self.per_token_latency_s = per_token_latency_s

    def _pick_response(self, transcript: Sequence[Message]) -> str:
        text = "\n".join(m.content for m in transcript)
        turn = sum(1 for m in transcript if m.role is Role.ASSISTANT)
        for rule in self.script.rules:
            if rule.matches(text):
                return rule.responses[min(turn, len(rule.responses) - 1)]
        if self.script.default is not None:
            return self.script.default
        digest = hashlib.sha256(f"{self.seed}:{request_hash(transcript, GenerationParams())}".encode()).hexdigest()
        return f"mock response {digest[:12]}"

    def complete(self, transcript: Sequence[Message], params: GenerationParams) -> ModelResponse:
        _check_transcript(transcript)
        text = self._pick_response(transcript)
        output_tokens = token_estimate(text)

        # Token accounting mirrors a caching provider: everything up to
        # the last checkpoint reads from cache, the rest bills as input.
        checkpoint_idx = -1
        for i, m in enumerate(transcript):
            if m.cache_checkpoint:
                checkpoint_idx = i
        cached = sum(token_estimate(m.content) for m in transcript[: checkpoint_idx + 1])
        fresh = sum(token_estimate(m.content) for m in transcript[checkpoint_idx + 1 :])
        usage = TokenUsage(
            input_tokens=fresh,
            output_tokens=output_tokens,
            cache_read_tokens=cached,
        )
        thinking = None
        if params.thinking_budget is not None:
            thinking = f"[thinking within {params.thinking_budget} tokens]"
        latency = self.base_latency_s + self.per_token_latency_s * output_tokens
        return ModelResponse(text=text, usage=usage, latency_s=latency, thinking_text=thinking)


# ---------------------------------------------------------------------------
# HTTP provider


_DEFAULT_REQUEST_FIELDS = {
    "model": "model",
    "messages": "messages",
    "role": "role",
    "content": "content",
    "max_tokens": "max_tokens",
    "temperature": "temperature",
    "thinking_budget": None,  # unmapped: budget requests are rejected
    "cache_checkpoint": None,  # unmapped: checkpoint flags are dropped
}

_DEFAULT_RESPONSE_FIELDS = {
    "text": "choices.0.message.content",
    "input_tokens": "usage.prompt_tokens",
    "output_tokens": "usage.completion_tokens",
    "cache_read_tokens": None,
    "cache_write_tokens": None,
    "thinking_text": None,
}


def _dig(obj, dotted: str):
    cur = obj
    for part in dotted.split("."):
        if isinstance(cur, list):
            cur = cur[int(part)]
        elif isinstance(cur, Mapping) and part in cur:
            cur = cur[part]
        else:
            return None
    return cur


def _bury(obj: dict, dotted: str, value) -> None:
    parts = dotted.split(".")
    cur = obj
    for part in parts[:-1]:
        cur = cur.setdefault(part, {})
    cur[parts[-1]] = value


class HttpProvider(Provider):
    """Generic JSON chat-completion client with renameable fields.

    Field adapters come from the providers config so one client serves
    differently-shaped APIs. Auth material is read from the environment
    variable named in the config and is never stored in config files.
    """

    def __init__(
        self,
        model_id: str,
        endpoint: str,
        *,
        auth_env: Optional[str] = None,
        auth_header: str = "Authorization",
        auth_scheme: str = "Bearer",
        request_fields: Optional[Mapping[str, Optional[str]]] = None,
        response_fields: Optional[Mapping[str, Optional[str]]] = None,
        timeout_s: float = 120.0,
        transport: Optional[httpx.BaseTransport] = None,
        env: Optional[Mapping[str, str]] = None,
    ):
        self.model_id = model_id
        self.endpoint = endpoint
        self.request_fields = {**_DEFAULT_REQUEST_FIELDS, **(request_fields or {})}
        self.response_fields = {**_DEFAULT_RESPONSE_FIELDS, **(response_fields or {})}
        headers = {}
        if auth_env:
            import os

            key = (env if env is not None else os.environ).get(auth_env)
            if not key:
                raise ProviderRejected(f"environment variable {auth_env!r} is not set")
            headers[auth_header] = f"{auth_scheme} {key}".strip()
        self._client = httpx.Client(timeout=timeout_s, transport=transport, headers=headers)

    def _build_body(self, transcript: Sequence[Message], params: GenerationParams) -> dict:
        rf = self.request_fields
        body: dict = {}
        _bury(body, rf["model"], self.model_id)
        messages = []
        for m in transcript:
            entry = {rf["role"]: m.role.value, rf["content"]: m.content}
            if m.cache_checkpoint:
                if rf.get("cache_checkpoint"):
                    entry[rf["cache_checkpoint"]] = True
                # else: provider has no caching field; flag is advisory
            messages.append(entry)
        _bury(body, rf["messages"], messages)
        _bury(body, rf["max_tokens"], params.max_tokens)
        if params.temperature is not None and rf.get("temperature"):
            _bury(body, rf["temperature"], params.temperature)
        if params.thinking_budget is not None:
            if not rf.get("thinking_budget"):
                raise ProviderRejected(
                    f"model {self.model_id!r} has no thinking_budget field mapping"
                )
            _bury(body, rf["thinking_budget"], params.thinking_budget)
        return body

    def complete(self, transcript: Sequence[Message], params: GenerationParams) -> ModelResponse:
        _check_transcript(transcript)
        body = self._build_body(transcript, params)
        started = time.perf_counter()
        try:
            resp = self._client.post(self.endpoint, json=body)
        except httpx.HTTPError as exc:
            raise TransportError(str(exc)) from exc
        latency = time.perf_counter() - started
        if resp.status_code == 429:
            raise RateLimited(f"{self.endpoint} returned 429")
        if resp.status_code >= 500:
            raise TransportError(f"{self.endpoint} returned {resp.status_code}")
        if resp.status_code >= 400:
            raise ProviderRejected(f"{self.endpoint} returned {resp.status_code}: {resp.text[:500]}")
        try:
            payload = resp.json()
        except ValueError as exc:
            raise TransportError(f"non-JSON response from {self.endpoint}") from exc

        pf = self.response_fields
        text = _dig(payload, pf["text"]) if pf["text"] else None
        if not isinstance(text, str):
            raise ProviderRejected(f"response field {pf['text']!r} missing or not text")
        in_tok = _dig(payload, pf["input_tokens"]) if pf["input_tokens"] else None
        out_tok = _dig(payload, pf["output_tokens"]) if pf["output_tokens"] else None
        estimated = in_tok is None or out_tok is None
        if estimated:
            in_tok = sum(token_estimate(m.content) for m in transcript)
            out_tok = token_estimate(text)
        read_tok = _dig(payload, pf["cache_read_tokens"]) if pf["cache_read_tokens"] else None
        write_tok = _dig(payload, pf["cache_write_tokens"]) if pf["cache_write_tokens"] else None
        thinking = _dig(payload, pf["thinking_text"]) if pf["thinking_text"] else None
        usage = TokenUsage(
            input_tokens=int(in_tok),
            output_tokens=int(out_tok),
            cache_read_tokens=int(read_tok or 0),
            cache_write_tokens=int(write_tok or 0),
        )
        return ModelResponse(
            text=text,
            usage=usage,
            latency_s=latency,
            thinking_text=thinking,
            usage_estimated=estimated,
        )


# ---------------------------------------------------------------------------
# Cassettes: record and replay


def _cassette_record(
    req_hash: str,
    transcript: Sequence[Message],
    params: GenerationParams,
    response: ModelResponse,
) -> dict:
    rec = {
        "request_hash": req_hash,
        "transcript": [
            {"role": m.role.value, "content": m.content, "cache_checkpoint": m.cache_checkpoint}
            for m in transcript
        ],
        "params": params.to_dict(),
        "response_text": response.text,
        "usage": response.usage.to_dict(),
        "latency_s": response.latency_s,
    }
    if response.thinking_text is not None:
        rec["thinking_text"] = response.thinking_text
    return rec


class RecordingProvider(Provider):
    """Wraps a live provider and appends every call to a JSONL cassette."""

    def __init__(self, inner: Provider, cassette_path: Path | str):
        self.inner = inner
        self.cassette_path = Path(cassette_path)
        self._lock = threading.Lock()

    def complete(self, transcript: Sequence[Message], params: GenerationParams) -> ModelResponse:
        response = self.inner.complete(transcript, params)
        rec = _cassette_record(request_hash(transcript, params), transcript, params, response)
        line = json.dumps(rec, ensure_ascii=False)
        with self._lock:
            with open(self.cassette_path, "a", encoding="utf-8") as fh:
                fh.write(line + "\n")
        return response


class ReplayProvider(Provider):
    """Serves responses from a cassette; raises CassetteMiss when absent.

    Responses recorded for the same request hash are consumed in FIFO
    order so repeated identical calls replay faithfully.
    """

    def __init__(self, cassette_path: Path | str):
        self.cassette_path = Path(cassette_path)
        self._lock = threading.Lock()
        self._by_hash: dict[str, list[dict]] = {}
        if not self.cassette_path.exists():
            raise CassetteMiss(f"cassette {self.cassette_path} does not exist")
        with open(self.cassette_path, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                rec = json.loads(line)
                self._by_hash.setdefault(rec["request_hash"], []).append(rec)

    def complete(self, transcript: Sequence[Message], params: GenerationParams) -> ModelResponse:
        _check_transcript(transcript)
        key = request_hash(transcript, params)
        with self._lock:
            queue = self._by_hash.get(key)
            if not queue:
                raise CassetteMiss(f"no recorded response for request {key[:12]}…")
            rec = queue.pop(0)
        return ModelResponse(
            text=rec["response_text"],
            usage=TokenUsage.from_dict(rec.get("usage", {})),
            latency_s=float(rec.get("latency_s", 0.0)),
            thinking_text=rec.get("thinking_text"),
        )


# ---------------------------------------------------------------------------
# Operational wrappers


class RetryingProvider(Provider):
    """Retries transient failures with exponential backoff and full jitter.

    Non-retryable errors (ProviderRejected, CassetteMiss) surface
    immediately. The retry count is recorded on the response so analyses
    can exclude retried samples from latency statistics.
    """

    RETRYABLE = (TransportError, RateLimited)

    def __init__(
        self,
        inner: Provider,
        *,
        max_retries: int = 5,
        base_delay_s: float = 0.5,
        max_delay_s: float = 30.0,
        seed: int = 0,
        sleep: Callable[[float], None] = time.sleep,
    ):
        self.inner = inner
        self.max_retries = max_retries
        self.base_delay_s = base_delay_s
        self.max_delay_s = max_delay_s
        self._rng = random.Random(seed)
        self._sleep = sleep

    def complete(self, transcript: Sequence[Message], params: GenerationParams) -> ModelResponse:
        attempt = 0
        while True:
            try:
                response = self.inner.complete(transcript, params)
            except self.RETRYABLE:
                if attempt >= self.max_retries:
                    raise
                cap = min(self.max_delay_s, self.base_delay_s * (2 ** attempt))
                self._sleep(self._rng.uniform(0.0, cap))
                attempt += 1
                continue
            if attempt:
                response = replace(response, retries=attempt)
            return response


class _TokenBucket:
    def __init__(self, rate_per_s: float, capacity: float, clock=time.monotonic, sleep=time.sleep):
        self.rate = rate_per_s
        self.capacity = capacity
        self.tokens = capacity
        self.updated = clock()
        self.clock = clock
        self.sleep = sleep
        self.lock = threading.Lock()

    def acquire(self) -> None:
        while True:
            with self.lock:
                now = self.clock()
                self.tokens = min(self.capacity, self.tokens + (now - self.updated) * self.rate)
                self.updated = now
                if self.tokens >= 1.0:
                    self.tokens -= 1.0
                    return
                wait = (1.0 - self.tokens) / self.rate
            self.sleep(wait)


class ThrottledProvider(Provider):
    """Caps in-flight calls and, optionally, sustained request rate."""

    def __init__(
        self,
        inner: Provider,
        *,
        max_in_flight: int = 4,
        rate_per_s: Optional[float] = None,
        burst: Optional[float] = None,
    ):
        self.inner = inner
        self._sem = threading.BoundedSemaphore(max_in_flight)
        self._bucket = (
            _TokenBucket(rate_per_s, burst if burst is not None else max(1.0, rate_per_s))
            if rate_per_s
            else None
        )

    def complete(self, transcript: Sequence[Message], params: GenerationParams) -> ModelResponse:
        if self._bucket is not None:
            self._bucket.acquire()
        with self._sem:
            return self.inner.complete(transcript, params)
