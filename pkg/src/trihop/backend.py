"""Text-generation backends behind one ``generate`` interface.

Two implementations: an HTTP client for OpenAI-compatible completion
endpoints (bearer auth, bounded retries with exponential backoff, a
per-handle in-flight cap and optional token-bucket rate limit) and a
deterministic scripted mock for offline tests, keyed by
(instance id, step) so exhausted or missing scripts fail loudly.
"""
from __future__ import annotations

import json
import math
import os
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Protocol

import requests

from .errors import (
    AuthMissingError,
    BadFixtureError,
    MalformedResponseError,
    RateLimitedError,
    ScriptExhaustedError,
    TransportError,
)

DEFAULT_API_KEY_ENV = "THOR_API_KEY"
DEFAULT_TIMEOUT = 60.0
DEFAULT_MAX_RETRIES = 3
DEFAULT_MAX_IN_FLIGHT = 8
DEFAULT_MAX_TOKENS = 256
BACKOFF_INITIAL = 1.0  # seconds; doubles per retry: 1s, 2s, 4s


@dataclass(frozen=True)
class Candidate:
    """One sampled generation: trimmed text plus a confidence score.

    The score is the mean per-token log-probability when the backend
    exposes log-probabilities, else 0.0 for every candidate (voting then
    degrades to pure plurality).
    """

    text: str
    score: float = 0.0


@dataclass(frozen=True)
class GenerationRequest:
    """One sampling request.

    ``instance_id`` and ``step`` route the request to the right script
    entry in the mock backend and are echoed into traces; the HTTP
    backend ignores them. ``seed`` is passed through to the endpoint and
    recorded, not enforced client-side.
    """

    prompt: str
    n: int = 1
    temperature: float = 0.0
    max_tokens: int = DEFAULT_MAX_TOKENS
    seed: int | None = None
    instance_id: str | None = None
    step: int | None = None

    def validate(self) -> None:
        if not self.prompt or not self.prompt.strip():
            raise ValueError("prompt must be non-empty")
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")
        if self.temperature < 0:
            raise ValueError(f"temperature must be >= 0, got {self.temperature}")
        if self.temperature == 0 and self.n != 1:
            raise ValueError("temperature 0 is greedy decoding and permits only n=1")
        if self.max_tokens < 1:
            raise ValueError(f"max_tokens must be >= 1, got {self.max_tokens}")


@dataclass
class BackendConfig:
    kind: str = "mock"  # "http" or "mock"
    endpoint_url: str | None = None
    model_name: str | None = None
    api_key_env: str = DEFAULT_API_KEY_ENV
    timeout: float = DEFAULT_TIMEOUT
    max_retries: int = DEFAULT_MAX_RETRIES
    max_in_flight: int = DEFAULT_MAX_IN_FLIGHT
    requests_per_second: float | None = None  # token bucket; None disables

    def validate(self) -> None:
        if self.kind not in ("http", "mock"):
            raise ValueError(f"backend kind must be 'http' or 'mock', got {self.kind!r}")
        if self.kind == "http" and not (self.endpoint_url and self.model_name):
            raise ValueError("http backend requires endpoint_url and model_name")
        if self.timeout <= 0:
            raise ValueError("timeout must be positive")
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")
        if self.max_in_flight < 1:
            raise ValueError("max_in_flight must be >= 1")
        if self.requests_per_second is not None and self.requests_per_second <= 0:
            raise ValueError("requests_per_second must be positive when set")


class Backend(Protocol):
    def generate(self, request: GenerationRequest) -> list[Candidate]: ...


# Transport signature: (url, headers, payload, timeout) -> (status, parsed
# JSON body or None). Network-level failures raise requests.RequestException.
Transport = Callable[[str, dict, dict, float], tuple[int, object]]


class _TokenBucket:
    """Thread-safe token bucket: at most ``rate`` acquisitions per second."""

    def __init__(self, rate: float, sleep: Callable[[float], None]) -> None:
        self._rate = rate
        self._capacity = max(rate, 1.0)
        self._tokens = self._capacity
        self._updated = time.monotonic()
        self._lock = threading.Lock()
        self._sleep = sleep

    def acquire(self) -> None:
        while True:
            with self._lock:
                now = time.monotonic()
                self._tokens = min(self._capacity, self._tokens + (now - self._updated) * self._rate)
                self._updated = now
                if self._tokens >= 1.0:
                    self._tokens -= 1.0
                    return
                wait = (1.0 - self._tokens) / self._rate
            self._sleep(wait)


class HttpBackend:
    """Client for OpenAI-compatible completion endpoints.

    Sends prompts in the completions framing (``prompt`` body field) and
    accepts both ``choices[i].text`` and ``choices[i].message.content``
    response shapes. Rate-limit (429) and server (5xx) responses plus
    network failures are retried with exponential backoff up to
    ``max_retries`` re-attempts; other client errors surface immediately.
    Whitespace-only generations are dropped and re-asked once; a second
    empty reply is a malformed response.
    """

    def __init__(
        self,
        config: BackendConfig,
        transport: Transport | None = None,
        sleep: Callable[[float], None] = time.sleep,
    ) -> None:
        config.validate()
        if config.kind != "http":
            raise ValueError("HttpBackend requires kind='http'")
        api_key = os.environ.get(config.api_key_env, "")
        if not api_key:
            raise AuthMissingError(
                f"environment variable {config.api_key_env} is unset; it must hold the API key"
            )
        self._config = config
        self._headers = {
            "Authorization": f"Bearer {api_key}",
            "Content-Type": "application/json",
        }
        self._sleep = sleep
        self._transport = transport if transport is not None else self._requests_transport
        self._gate = threading.BoundedSemaphore(config.max_in_flight)
        self._bucket = (
            _TokenBucket(config.requests_per_second, sleep)
            if config.requests_per_second
            else None
        )
        self._local = threading.local()

    @property
    def max_in_flight(self) -> int:
        return self._config.max_in_flight

    def generate(self, request: GenerationRequest) -> list[Candidate]:
        request.validate()
        with self._gate:
            candidates = self._sample(request, request.n)
            kept = [c for c in candidates if c.text]
            missing = request.n - len(kept)
            if missing:
                # Re-ask once for the dropped whitespace-only generations.
                refill = [c for c in self._sample(request, missing) if c.text]
                if len(refill) < missing:
                    raise MalformedResponseError(
                        "backend returned whitespace-only generations twice in a row"
                    )
                kept.extend(refill)
            return kept

    def _sample(self, request: GenerationRequest, n: int) -> list[Candidate]:
        payload: dict = {
            "model": self._config.model_name,
            "prompt": request.prompt,
            "n": n,
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
            "logprobs": 1,
        }
        if request.seed is not None:
            payload["seed"] = request.seed
        body = self._call_with_retries(payload)
        return self._parse_choices(body, n)

    def _call_with_retries(self, payload: dict) -> object:
        assert self._config.endpoint_url is not None
        url = self._config.endpoint_url
        last_error: Exception = TransportError("no attempt made")
        for attempt in range(self._config.max_retries + 1):
            if self._bucket is not None:
                self._bucket.acquire()
            try:
                status, body = self._transport(url, self._headers, payload, self._config.timeout)
            except requests.RequestException as exc:
                last_error = TransportError(f"request to {url} failed: {exc}")
            else:
                if status == 429:
                    last_error = RateLimitedError(f"{url} responded 429")
                elif status >= 500:
                    last_error = TransportError(f"{url} responded {status}")
                elif status >= 400:
                    raise TransportError(f"{url} responded {status}")
                else:
                    return body
            if attempt < self._config.max_retries:
                self._sleep(BACKOFF_INITIAL * (2**attempt))
        raise last_error

    def _parse_choices(self, body: object, n: int) -> list[Candidate]:
        if not isinstance(body, dict) or not isinstance(body.get("choices"), list):
            raise MalformedResponseError("response has no 'choices' list")
        choices = body["choices"]
        if len(choices) != n:
            raise MalformedResponseError(f"asked for {n} choices, got {len(choices)}")
        candidates = []
        for choice in choices:
            if not isinstance(choice, dict):
                raise MalformedResponseError("choice entries must be objects")
            text = choice.get("text")
            if text is None:
                message = choice.get("message")
                if isinstance(message, dict):
                    text = message.get("content")
            if not isinstance(text, str):
                raise MalformedResponseError("choice carries no text")
            candidates.append(Candidate(text=text.strip(), score=_mean_logprob(choice)))
        return candidates

    def _requests_transport(
        self, url: str, headers: dict, payload: dict, timeout: float
    ) -> tuple[int, object]:
        # One Session per thread; Session objects are not thread-safe.
        session = getattr(self._local, "session", None)
        if session is None:
            session = requests.Session()
            self._local.session = session
        response = session.post(url, headers=headers, json=payload, timeout=timeout)
        try:
            body = response.json()
        except ValueError:
            body = None
        if response.status_code < 400 and body is None:
            raise MalformedResponseError(f"{url} returned a non-JSON body")
        return response.status_code, body


def _mean_logprob(choice: dict) -> float:
    logprobs = choice.get("logprobs")
    if not isinstance(logprobs, dict):
        return 0.0
    values: list[float] = []
    token_logprobs = logprobs.get("token_logprobs")
    if isinstance(token_logprobs, list):
        values = [v for v in token_logprobs if isinstance(v, (int, float))]
    else:
        content = logprobs.get("content")
        if isinstance(content, list):
            values = [
                item["logprob"]
                for item in content
                if isinstance(item, dict) and isinstance(item.get("logprob"), (int, float))
            ]
    if not values:
        return 0.0
    mean = sum(values) / len(values)
    return mean if math.isfinite(mean) else 0.0


@dataclass(frozen=True)
class _ScriptEntry:
    replies: tuple[str, ...]
    scores: tuple[float, ...]
    error: str | None


class MockBackend:
    """Deterministic scripted backend for offline tests.

    Each (instance id, step) key holds exactly one scripted candidate
    list, consumed by exactly one generate call; asking again, asking for
    an unscripted key, or asking for a different sample count than the
    script provides raises, so tests fail loudly instead of drifting.
    """

    max_in_flight = None  # no client-side bound; the mock is in-process

    def __init__(self, script: dict[tuple[str, int], _ScriptEntry]) -> None:
        self._pending = dict(script)
        self._consumed: set[tuple[str, int]] = set()
        self._lock = threading.Lock()

    def generate(self, request: GenerationRequest) -> list[Candidate]:
        request.validate()
        if request.instance_id is None or request.step is None:
            raise ValueError("mock backend requests must carry instance_id and step")
        key = (request.instance_id, request.step)
        with self._lock:
            entry = self._pending.pop(key, None)
            if entry is None:
                state = "already consumed" if key in self._consumed else "never scripted"
                raise ScriptExhaustedError(f"no scripted reply for {key}: {state}")
            self._consumed.add(key)
        if entry.error is not None:
            raise TransportError(f"scripted failure for {key}: {entry.error}")
        if len(entry.replies) != request.n:
            raise ScriptExhaustedError(
                f"script for {key} holds {len(entry.replies)} replies but n={request.n} were requested"
            )
        return [Candidate(text=t, score=s) for t, s in zip(entry.replies, entry.scores)]


def load_mock_script(path: str | Path) -> MockBackend:
    """Parse a JSONL mock fixture into a ready MockBackend.

    One object per line: {"id": str, "step": int, "replies": [str]} with
    optional equal-length "scores"; or {"id", "step", "error": str} to
    script a transport failure for that key. Keys must be unique and the
    file non-empty.
    """
    path = Path(path)
    script: dict[tuple[str, int], _ScriptEntry] = {}
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise BadFixtureError(f"cannot read mock script {path}: {exc}") from exc
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise BadFixtureError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
        key, entry = _parse_script_record(record, f"{path}:{lineno}")
        if key in script:
            raise BadFixtureError(f"{path}:{lineno}: duplicate key {key}")
        script[key] = entry
    if not script:
        raise BadFixtureError(f"{path}: fixture contains no script entries")
    return MockBackend(script)


def _parse_script_record(record: object, where: str) -> tuple[tuple[str, int], _ScriptEntry]:
    if not isinstance(record, dict):
        raise BadFixtureError(f"{where}: entry must be an object")
    allowed = {"id", "step", "replies", "scores", "error"}
    unknown = set(record) - allowed
    if unknown:
        raise BadFixtureError(f"{where}: unknown fields {sorted(unknown)}")
    instance_id = record.get("id")
    step = record.get("step")
    if not isinstance(instance_id, str) or not instance_id:
        raise BadFixtureError(f"{where}: 'id' must be a non-empty string")
    if not isinstance(step, int) or isinstance(step, bool):
        raise BadFixtureError(f"{where}: 'step' must be an integer")
    error = record.get("error")
    replies = record.get("replies")
    if error is not None:
        if not isinstance(error, str) or not error.strip():
            raise BadFixtureError(f"{where}: 'error' must be a non-empty string")
        if replies is not None or record.get("scores") is not None:
            raise BadFixtureError(f"{where}: 'error' excludes 'replies'/'scores'")
        return (instance_id, step), _ScriptEntry(replies=(), scores=(), error=error)
    if not isinstance(replies, list) or not replies:
        raise BadFixtureError(f"{where}: 'replies' must be a non-empty list")
    trimmed = []
    for reply in replies:
        if not isinstance(reply, str) or not reply.strip():
            raise BadFixtureError(f"{where}: replies must be non-empty strings")
        trimmed.append(reply.strip())
    scores = record.get("scores")
    if scores is None:
        score_tuple = tuple(0.0 for _ in trimmed)
    else:
        if not isinstance(scores, list) or len(scores) != len(trimmed):
            raise BadFixtureError(f"{where}: 'scores' must match 'replies' in length")
        for value in scores:
            if not isinstance(value, (int, float)) or isinstance(value, bool) or not math.isfinite(value):
                raise BadFixtureError(f"{where}: scores must be finite numbers")
        score_tuple = tuple(float(v) for v in scores)
    return (instance_id, step), _ScriptEntry(replies=tuple(trimmed), scores=score_tuple, error=None)


def make_backend(config: BackendConfig, mock_script: str | Path | None = None) -> Backend:
    """Construct the backend a config describes."""
    config.validate()
    if config.kind == "mock":
        if mock_script is None:
            raise ValueError("mock backend requires a mock script path")
        return load_mock_script(mock_script)
    return HttpBackend(config)
