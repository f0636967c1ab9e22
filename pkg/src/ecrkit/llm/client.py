"""Chat completion clients: HTTP provider, offline mock, disk cache.

All clients share one method, ``complete(prompt, operator=None) -> str``.
The cache key is a pure function of (model, rendered prompt, temperature),
so identical requests are served from disk without touching the network;
cache writes are atomic (write-temp-then-rename). Temperature defaults to
0 for reproducibility.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import threading
import time
import uuid
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Iterable, Mapping, Protocol

import requests

from ..errors import RefusalError, TransportError

log = logging.getLogger(__name__)

DEFAULT_CONCURRENCY = 4
MAX_RETRIES = 5
API_KEY_ENV = "ECRKIT_LLM_API_KEY"


def cache_key(model: str, prompt: str, temperature: float) -> str:
    payload = json.dumps(
        {"model": model, "prompt": prompt, "temperature": temperature},
        sort_keys=True, ensure_ascii=False,
    )
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def prompt_hash(prompt: str) -> str:
    return hashlib.sha256(prompt.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class LlmExchange:
    """One completed request/response round trip."""

    operator: str | None
    prompt: str
    response: str
    model: str
    temperature: float
    cache_key: str
    timestamp: float


class CompletionClient(Protocol):
    model: str
    temperature: float

    def complete(self, prompt: str, operator: str | None = None) -> str: ...


class MockClient:
    """Offline client serving canned responses keyed by prompt hash."""

    def __init__(self, responses: Mapping[str, str], model: str = "mock",
                 temperature: float = 0.0):
        self._responses = dict(responses)
        self.model = model
        self.temperature = temperature
        self.calls = 0

    @classmethod
    def from_fixture_file(cls, path: str | Path, **kwargs) -> "MockClient":
        """Load a JSON object mapping prompt-hash -> response text."""
        with open(path, encoding="utf-8") as handle:
            return cls(json.load(handle), **kwargs)

    @classmethod
    def from_transcript(cls, path: str | Path, **kwargs) -> "MockClient":
        """Load a JSONL transcript of {"prompt":..., "response":...} records."""
        responses: dict[str, str] = {}
        with open(path, encoding="utf-8") as handle:
            for line in handle:
                if not line.strip():
                    continue
                rec = json.loads(line)
                responses[prompt_hash(rec["prompt"])] = rec["response"]
        return cls(responses, **kwargs)

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[str, str]], **kwargs) -> "MockClient":
        return cls({prompt_hash(p): r for p, r in pairs}, **kwargs)

    def complete(self, prompt: str, operator: str | None = None) -> str:
        self.calls += 1
        key = prompt_hash(prompt)
        try:
            return self._responses[key]
        except KeyError:
            raise TransportError(
                f"mock client has no canned response for prompt hash {key[:12]}…"
            ) from None


class HttpChatClient:
    """OpenAI-compatible chat-completions client.

    The API key is read from the environment, never from config files.
    Transient transport failures (connection errors, timeouts, 429, 5xx)
    are retried with exponential backoff up to ``max_retries`` attempts;
    content-filter refusals raise immediately with the raw response
    attached.
    """

    def __init__(self, endpoint: str, model: str, temperature: float = 0.0,
                 max_tokens: int = 1024, api_key_env: str = API_KEY_ENV,
                 max_retries: int = MAX_RETRIES, backoff: float = 0.5,
                 timeout: float = 60.0, session: requests.Session | None = None):
        self.endpoint = endpoint.rstrip("/")
        self.model = model
        self.temperature = temperature
        self.max_tokens = max_tokens
        self.api_key_env = api_key_env
        self.max_retries = max_retries
        self.backoff = backoff
        self.timeout = timeout
        self._session = session or requests.Session()

    def complete(self, prompt: str, operator: str | None = None) -> str:
        headers = {"Content-Type": "application/json"}
        api_key = os.environ.get(self.api_key_env)
        if api_key:
            headers["Authorization"] = f"Bearer {api_key}"
        body = {
            "model": self.model,
            "temperature": self.temperature,
            "max_tokens": self.max_tokens,
            "messages": [{"role": "user", "content": prompt}],
        }
        last_error: Exception | None = None
        for attempt in range(self.max_retries):
            try:
                resp = self._session.post(
                    f"{self.endpoint}/chat/completions",
                    json=body, headers=headers, timeout=self.timeout,
                )
            except requests.RequestException as exc:
                last_error = exc
            else:
                if resp.status_code == 200:
                    return self._extract(resp)
                if resp.status_code not in (429,) and resp.status_code < 500:
                    raise TransportError(
                        f"provider returned HTTP {resp.status_code}: {resp.text[:500]}"
                    )
                last_error = TransportError(f"provider returned HTTP {resp.status_code}")
            time.sleep(self.backoff * 2 ** attempt)
        raise TransportError(
            f"completion failed after {self.max_retries} attempts: {last_error}"
        )

    @staticmethod
    def _extract(resp: requests.Response) -> str:
        try:
            data = resp.json()
            choice = data["choices"][0]
        except (ValueError, KeyError, IndexError) as exc:
            raise TransportError(f"malformed completion response: {exc}") from exc
        if choice.get("finish_reason") == "content_filter":
            raise RefusalError(resp.text)
        content = choice.get("message", {}).get("content")
        if content is None:
            raise TransportError("completion response carries no message content")
        return content


class CachingClient:
    """Wrap a client with a content-addressed on-disk exchange cache."""

    def __init__(self, inner: CompletionClient, cache_dir: str | Path):
        self._inner = inner
        self._dir = Path(cache_dir)
        self._dir.mkdir(parents=True, exist_ok=True)

    @property
    def model(self) -> str:
        return self._inner.model

    @property
    def temperature(self) -> float:
        return self._inner.temperature

    def _path(self, key: str) -> Path:
        return self._dir / f"{key}.json"

    def complete(self, prompt: str, operator: str | None = None) -> str:
        key = cache_key(self._inner.model, prompt, self._inner.temperature)
        path = self._path(key)
        if path.exists():
            try:
                with open(path, encoding="utf-8") as handle:
                    return json.load(handle)["response"]
            except (ValueError, KeyError):
                log.warning("discarding corrupt cache entry %s", path.name)
                path.unlink(missing_ok=True)
        response = self._inner.complete(prompt, operator)
        exchange = LlmExchange(
            operator=operator,
            prompt=prompt,
            response=response,
            model=self._inner.model,
            temperature=self._inner.temperature,
            cache_key=key,
            timestamp=time.time(),
        )
        tmp = path.with_name(f"{path.name}.tmp-{uuid.uuid4().hex}")
        with open(tmp, "w", encoding="utf-8") as handle:
            json.dump(asdict(exchange), handle, ensure_ascii=False, sort_keys=True)
        os.replace(tmp, path)
        return response


class RateLimiter:
    """Enforce a minimum interval between request starts across threads."""

    def __init__(self, min_interval: float):
        self.min_interval = min_interval
        self._lock = threading.Lock()
        self._next_at = 0.0

    def wait(self) -> None:
        with self._lock:
            now = time.monotonic()
            delay = self._next_at - now
            self._next_at = max(now, self._next_at) + self.min_interval
        if delay > 0:
            time.sleep(delay)


def complete_many(client: CompletionClient, prompts: list[str],
                  operator: str | None = None,
                  concurrency: int = DEFAULT_CONCURRENCY,
                  rate_limiter: RateLimiter | None = None) -> list[str]:
    """Complete several prompts with bounded in-flight concurrency.

    Output order matches input order regardless of completion schedule.
    """
    if concurrency < 1:
        raise ValueError("concurrency must be >= 1")

    def run(prompt: str) -> str:
        if rate_limiter is not None:
            rate_limiter.wait()
        return client.complete(prompt, operator)

    if concurrency == 1 or len(prompts) <= 1:
        return [run(p) for p in prompts]
    with ThreadPoolExecutor(max_workers=concurrency) as pool:
        return list(pool.map(run, prompts))
