"""Chat-completion transport: OpenAI-compatible HTTP client.

A backend performs exactly one completion attempt per ``send`` call and
signals recoverable trouble with :class:`TransientError`; retry policy
lives in the gateway so scripted mocks share it.
"""

from __future__ import annotations

import os
import threading
import time
from dataclasses import dataclass, field

import requests

from ..models import Reference  # noqa: F401  (re-exported for prompt payloads)


class GatewayError(Exception):
    """LLM access failed for good (retries exhausted, script exhausted...)."""


class TransientError(GatewayError):
    """Single failed attempt that the gateway may retry."""


class ProtocolError(GatewayError):
    """Endpoint answered but not with a parseable completion body."""


@dataclass(frozen=True)
class ChatMessage:
    role: str  # system | user | assistant
    content: str

    def __post_init__(self) -> None:
        if self.role not in ("system", "user", "assistant"):
            raise ValueError(f"unknown role {self.role!r}")
        if self.role == "user" and not self.content:
            raise ValueError("user message content must be non-empty")

    def to_dict(self) -> dict:
        return {"role": self.role, "content": self.content}


@dataclass
class LlmConfig:
    endpoint: str = "https://api.openai.com/v1/chat/completions"
    model: str = "gpt-3.5-turbo"
    temperature: float = 0.3
    max_retries: int = 3
    timeout: float = 60.0
    backoff: float = 0.5  # seconds, doubled per retry
    api_key_env: str = "OPENAI_API_KEY"
    max_in_flight: int = 4
    requests_per_minute: int = 0  # 0 disables rate limiting
    shots: dict[str, int] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")


class OpenAiChatClient:
    """POST {model, messages, temperature} -> choices[0].message.content."""

    def __init__(self, config: LlmConfig, session: requests.Session | None = None):
        self.config = config
        self._session = session or requests.Session()
        self._gate = threading.Semaphore(max(1, config.max_in_flight))
        self._lock = threading.Lock()
        self._recent: list[float] = []  # request timestamps for rate limiting

    def _throttle(self) -> None:
        rpm = self.config.requests_per_minute
        if rpm <= 0:
            return
        with self._lock:
            now = time.monotonic()
            self._recent = [t for t in self._recent if now - t < 60.0]
            if len(self._recent) >= rpm:
                wait = 60.0 - (now - self._recent[0])
            else:
                wait = 0.0
            self._recent.append(now + wait)
        if wait > 0:
            time.sleep(wait)

    def send(self, messages: list[ChatMessage], family: str | None = None) -> str:
        del family  # transport does not care which prompt family is calling
        headers = {"Content-Type": "application/json"}
        api_key = os.environ.get(self.config.api_key_env, "")
        if api_key:
            headers["Authorization"] = f"Bearer {api_key}"
        body = {
            "model": self.config.model,
            "messages": [m.to_dict() for m in messages],
            "temperature": self.config.temperature,
        }
        self._throttle()
        with self._gate:
            try:
                resp = self._session.post(
                    self.config.endpoint,
                    json=body,
                    headers=headers,
                    timeout=self.config.timeout,
                )
            except requests.RequestException as exc:
                raise TransientError(f"request failed: {exc}")
        if resp.status_code in (429,) or resp.status_code >= 500:
            raise TransientError(f"HTTP {resp.status_code}")
        if resp.status_code != 200:
            raise GatewayError(f"HTTP {resp.status_code}: {resp.text[:200]}")
        try:
            payload = resp.json()
            return payload["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise ProtocolError(f"malformed completion body: {exc}")
