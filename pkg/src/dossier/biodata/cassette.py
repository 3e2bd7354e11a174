"""HTTP record/replay for the source clients.

Every request is keyed by SHA-256 of method + URL + body.  Cassettes are
JSON-lines files, one per source, each line holding one request/response
pair with the body base64-encoded.  Offline runs replay byte-identical
responses; recording rewrites entries by key so re-runs are idempotent.
"""

from __future__ import annotations

import base64
import hashlib
import json
import re
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from urllib.parse import urlencode

import requests

from ..core import DossierError
from .registry import REGISTRY


class BiodataError(DossierError):
    pass


class CassetteMissError(BiodataError):
    pass


def canonical_url(base: str, params: dict | None = None) -> str:
    if not params:
        return base
    query = urlencode(sorted((k, str(v)) for k, v in params.items()))
    return f"{base}?{query}"


def request_key(method: str, url: str, body: bytes | None = None) -> str:
    h = hashlib.sha256()
    h.update(method.upper().encode())
    h.update(b"\n")
    h.update(url.encode())
    h.update(b"\n")
    if body:
        h.update(body)
    return h.hexdigest()


def source_slug(name: str) -> str:
    return re.sub(r"[^a-z0-9]+", "_", name.lower()).strip("_")


@dataclass(frozen=True)
class TransportResponse:
    status: int
    content_type: str
    body: bytes

    @property
    def text(self) -> str:
        return self.body.decode("utf-8")

    def json(self):
        return json.loads(self.body)


class CassetteStore:
    """Per-source JSONL cassette files under one directory."""

    def __init__(self, directory: str | Path):
        self.directory = Path(directory)
        self._lock = threading.RLock()
        self._loaded: dict[str, dict[str, dict]] = {}

    def _path(self, source: str) -> Path:
        return self.directory / f"{source_slug(source)}.jsonl"

    def _entries(self, source: str) -> dict[str, dict]:
        with self._lock:
            if source not in self._loaded:
                entries: dict[str, dict] = {}
                path = self._path(source)
                if path.exists():
                    for line in path.read_text(encoding="utf-8").splitlines():
                        if line.strip():
                            entry = json.loads(line)
                            entries[entry["key"]] = entry
                self._loaded[source] = entries
            return self._loaded[source]

    def lookup(self, source: str, key: str) -> TransportResponse | None:
        entry = self._entries(source).get(key)
        if entry is None:
            return None
        resp = entry["response"]
        return TransportResponse(
            status=int(resp["status"]),
            content_type=resp.get("content_type", "application/json"),
            body=base64.b64decode(resp["body_b64"]),
        )

    def record(self, source: str, key: str, method: str, url: str, response: TransportResponse) -> None:
        entry = {
            "key": key,
            "request": {"method": method.upper(), "url": url},
            "response": {
                "status": response.status,
                "content_type": response.content_type,
                "body_b64": base64.b64encode(response.body).decode("ascii"),
            },
        }
        with self._lock:
            entries = self._entries(source)
            entries[key] = entry
            self.directory.mkdir(parents=True, exist_ok=True)
            lines = [json.dumps(entries[k], sort_keys=True) for k in sorted(entries)]
            self._path(source).write_text("\n".join(lines) + "\n", encoding="utf-8")

    def keys(self, source: str) -> list[str]:
        return sorted(self._entries(source))


class ReplayTransport:
    """Serves recorded responses only; a miss is an error naming the key."""

    def __init__(self, store: CassetteStore):
        self.store = store

    def request(self, source: str, method: str, url: str, body: bytes | None = None) -> TransportResponse:
        key = request_key(method, url, body)
        response = self.store.lookup(source, key)
        if response is None:
            raise CassetteMissError(
                f"no cassette entry for {source}: key {key} ({method} {url})"
            )
        return response


class RateLimiter:
    """Token bucket per source, capacity one second of tokens."""

    def __init__(self, sleep=time.sleep, now=time.monotonic):
        self._sleep = sleep
        self._now = now
        self._lock = threading.Lock()
        self._state: dict[str, tuple[float, float]] = {}  # tokens, last refill

    def acquire(self, source: str, rate: float) -> None:
        if rate <= 0:
            return
        while True:
            with self._lock:
                tokens, last = self._state.get(source, (rate, self._now()))
                now = self._now()
                tokens = min(rate, tokens + (now - last) * rate)
                if tokens >= 1.0:
                    self._state[source] = (tokens - 1.0, now)
                    return
                needed = (1.0 - tokens) / rate
                self._state[source] = (tokens, now)
            self._sleep(needed)


class LiveTransport:
    """Real HTTP with per-source rate limiting and a 3-attempt retry on
    transport/5xx failures (backoff from 250 ms)."""

    def __init__(self, session: requests.Session | None = None, sleep=time.sleep,
                 limiter: RateLimiter | None = None, timeout_s: float = 30.0):
        self.session = session or requests.Session()
        self.sleep = sleep
        self.limiter = limiter or RateLimiter(sleep=sleep)
        self.timeout_s = timeout_s

    def request(self, source: str, method: str, url: str, body: bytes | None = None) -> TransportResponse:
        entry = REGISTRY.get(source)
        rate = entry.rate_limit if entry else 1.0
        last_error = None
        for attempt in range(3):
            self.limiter.acquire(source, rate)
            try:
                resp = self.session.request(
                    method,
                    url,
                    data=body,
                    headers={"Content-Type": "application/json"} if body else None,
                    timeout=self.timeout_s,
                )
            except (requests.ConnectionError, requests.Timeout) as exc:
                last_error = exc
            else:
                if resp.status_code >= 500:
                    last_error = BiodataError(f"{source} returned {resp.status_code}")
                else:
                    return TransportResponse(
                        status=resp.status_code,
                        content_type=resp.headers.get("Content-Type", ""),
                        body=resp.content,
                    )
            if attempt < 2:
                self.sleep(0.25 * (2**attempt))
        raise BiodataError(f"{source} request failed after 3 attempts: {last_error}")


class RecordingTransport:
    """Delegates to an inner transport and records what comes back."""

    def __init__(self, inner, store: CassetteStore):
        self.inner = inner
        self.store = store

    def request(self, source: str, method: str, url: str, body: bytes | None = None) -> TransportResponse:
        response = self.inner.request(source, method, url, body)
        self.store.record(source, request_key(method, url, body), method, url, response)
        return response
