"""HTTP chat-completion client with retry, backoff and a shared rate limit."""

from __future__ import annotations

import json
import logging
import os
import threading
import time
from dataclasses import dataclass
from pathlib import Path

import httpx

from .errors import AuthFailure, EndpointUnreachable, RateLimited

log = logging.getLogger(__name__)

TRANSIENT_STATUS = {429, 500, 502, 503, 504}


@dataclass(frozen=True)
class ClassifierClientConfig:
    endpoint_url: str = "https://api.openai.com/v1/chat/completions"
    model_name: str = "gpt-3.5-turbo"
    auth_token_env_var: str = "CHAT_API_TOKEN"
    max_retries: int = 3
    request_timeout: float = 30.0
    max_concurrent_requests: int = 4
    temperature: float = 0.0
    backoff_base: float = 0.5
    backoff_cap: float = 30.0
    requests_per_second: float | None = None

    def problems(self) -> list[str]:
        out = []
        if self.max_retries < 0:
            out.append("max_retries must be >= 0")
        if self.max_concurrent_requests < 1:
            out.append("max_concurrent_requests must be >= 1")
        if self.request_timeout <= 0:
            out.append("request_timeout must be > 0")
        if not self.endpoint_url.startswith(("http://", "https://")):
            out.append(f"endpoint_url must be an http(s) URL (got {self.endpoint_url!r})")
        if self.requests_per_second is not None and self.requests_per_second <= 0:
            out.append("requests_per_second must be > 0")
        return out


class RateLimiter:
    """Minimum spacing between request starts, shared by all worker threads."""

    def __init__(self, per_second: float | None, clock=time.monotonic, sleep=time.sleep):
        self.interval = 1.0 / per_second if per_second else 0.0
        self._next = 0.0
        self._lock = threading.Lock()
        self._clock = clock
        self._sleep = sleep

    def wait(self) -> None:
        if not self.interval:
            return
        with self._lock:
            now = self._clock()
            start = max(now, self._next)
            self._next = start + self.interval
        if start > now:
            self._sleep(start - now)


class ChatCompletionClient:
    def __init__(
        self,
        config: ClassifierClientConfig,
        transport: httpx.BaseTransport | None = None,
        sleep=time.sleep,
    ):
        self.config = config
        self._sleep = sleep
        self._limiter = RateLimiter(config.requests_per_second, sleep=sleep)
        self._http = httpx.Client(transport=transport, timeout=config.request_timeout)

    def close(self) -> None:
        self._http.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def _headers(self) -> dict:
        headers = {"Content-Type": "application/json"}
        var = self.config.auth_token_env_var
        if var:
            token = os.environ.get(var)
            if not token:
                raise AuthFailure(f"environment variable {var} is not set")
            headers["Authorization"] = f"Bearer {token}"
        return headers

    def _delay(self, attempt: int, response: httpx.Response | None) -> float:
        if response is not None and "retry-after" in response.headers:
            try:
                return min(float(response.headers["retry-after"]), self.config.backoff_cap)
            except ValueError:
                pass
        return min(self.config.backoff_base * 2**attempt, self.config.backoff_cap)

    def complete(self, messages: list[dict], key: str | None = None) -> str:
        payload = {
            "model": self.config.model_name,
            "temperature": self.config.temperature,
            "messages": messages,
        }
        headers = self._headers()
        last: Exception | None = None
        rate_limited = False
        for attempt in range(self.config.max_retries + 1):
            if attempt:
                self._sleep(self._delay(attempt - 1, response))
            response = None
            self._limiter.wait()
            try:
                response = self._http.post(self.config.endpoint_url, json=payload, headers=headers)
            except httpx.TransportError as exc:
                last, rate_limited = exc, False
                log.info("attempt %d for %s failed: %s", attempt + 1, key, exc)
                continue
            if response.status_code in (401, 403):
                raise AuthFailure(f"endpoint rejected credentials (HTTP {response.status_code})")
            if response.status_code in TRANSIENT_STATUS:
                rate_limited = response.status_code == 429
                last = EndpointUnreachable(f"HTTP {response.status_code}")
                log.info("attempt %d for %s got HTTP %d", attempt + 1, key, response.status_code)
                continue
            if response.status_code >= 400:
                raise EndpointUnreachable(f"HTTP {response.status_code}: {response.text[:200]}")
            return _first_choice_text(response)
        if rate_limited:
            raise RateLimited(f"still rate limited after {self.config.max_retries} retries")
        raise EndpointUnreachable(f"gave up after {self.config.max_retries + 1} attempts: {last}")


def _first_choice_text(response: httpx.Response) -> str:
    try:
        return response.json()["choices"][0]["message"]["content"]
    except (ValueError, KeyError, IndexError, TypeError):
        raise EndpointUnreachable(f"unexpected response body: {response.text[:200]}") from None


class ReplayClient:
    """Serves recorded responses from an audit log instead of calling the endpoint."""

    def __init__(self, responses: dict[str, str]):
        self.responses = responses

    @classmethod
    def from_audit_log(cls, path: str | Path) -> "ReplayClient":
        responses = {}
        with open(path, encoding="utf-8") as fh:
            for line_no, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                try:
                    rec = json.loads(line)
                    responses[rec["id"]] = rec["response"]
                except (ValueError, KeyError, TypeError):
                    raise ValueError(f"{path}:{line_no}: not an audit record (needs id and response)") from None
        return cls(responses)

    def complete(self, messages: list[dict], key: str | None = None) -> str:
        if key not in self.responses:
            raise EndpointUnreachable(f"no recorded response for {key!r}")
        return self.responses[key]
