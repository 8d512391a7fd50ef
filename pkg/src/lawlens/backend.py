"""Client for OpenAI-compatible chat and embedding services."""

from __future__ import annotations

import math
import os
import threading
import time
from dataclasses import dataclass, field

import requests

from .errors import BackendError, BackendTimeout, ValidationError

ENV_URL = "LAWLENS_BACKEND_URL"
ENV_MODEL = "LAWLENS_BACKEND_MODEL"
ENV_TIMEOUT = "LAWLENS_BACKEND_TIMEOUT_S"


@dataclass
class BackendConfig:
    base_url: str
    model: str = "default"
    timeout_s: float = 30.0
    max_concurrency: int = 4
    retries: int = 2
    backoff_s: float = 0.2
    api_key: str | None = None
    temperature: float = 0.0     # deterministic by default

    def __post_init__(self):
        if self.timeout_s <= 0:
            raise ValidationError("timeout must be positive")
        if self.max_concurrency < 1:
            raise ValidationError("concurrency must be >= 1")

    @classmethod
    def from_env(cls, base_url: str | None = None) -> "BackendConfig":
        url = base_url or os.environ.get(ENV_URL)
        if not url:
            raise ValidationError(f"no backend URL (set {ENV_URL})")
        return cls(
            base_url=url,
            model=os.environ.get(ENV_MODEL, "default"),
            timeout_s=float(os.environ.get(ENV_TIMEOUT, "30")),
        )


@dataclass
class ChatReply:
    text: str
    top_logprobs: dict[str, float] = field(default_factory=dict)


class BackendClient:
    """Shareable client enforcing the configured in-flight request cap."""

    def __init__(self, config: BackendConfig):
        self.config = config
        self._gate = threading.Semaphore(config.max_concurrency)
        self._session = requests.Session()

    def _headers(self) -> dict:
        headers = {"Content-Type": "application/json"}
        if self.config.api_key:
            headers["Authorization"] = f"Bearer {self.config.api_key}"
        return headers

    def _post(self, path: str, body: dict) -> dict:
        url = self.config.base_url.rstrip("/") + path
        last_error: Exception | None = None
        with self._gate:
            for attempt in range(self.config.retries + 1):
                if attempt:
                    time.sleep(self.config.backoff_s * attempt)
                try:
                    resp = self._session.post(
                        url, json=body, headers=self._headers(),
                        timeout=self.config.timeout_s,
                    )
                except requests.Timeout as e:
                    last_error = BackendTimeout(f"request to {url} timed out")
                    continue
                except requests.ConnectionError as e:
                    last_error = BackendError(f"connection to {url} failed: {e}")
                    continue
                if resp.status_code >= 500:
                    last_error = BackendError(
                        f"{url} returned {resp.status_code}"
                    )
                    continue
                if resp.status_code != 200:
                    raise BackendError(
                        f"{url} returned {resp.status_code}: {resp.text[:200]}"
                    )
                try:
                    return resp.json()
                except ValueError as e:
                    raise BackendError(f"malformed JSON body from {url}") from e
        raise last_error if last_error else BackendError("request failed")

    def chat(self, messages: list[dict]) -> ChatReply:
        """One round-trip to the chat-completions endpoint."""
        for m in messages:
            if m.get("role") not in ("system", "user"):
                raise ValidationError(f"invalid message role {m.get('role')!r}")
        body = {
            "model": self.config.model,
            "messages": messages,
            "temperature": self.config.temperature,
            "logprobs": True,
            "top_logprobs": 5,
        }
        data = self._post("/chat/completions", body)
        try:
            choice = data["choices"][0]
            text = choice["message"]["content"]
        except (KeyError, IndexError, TypeError) as e:
            raise BackendError(f"malformed chat reply: {data}") from e
        top: dict[str, float] = {}
        logprobs = (choice.get("logprobs") or {}).get("content") or []
        if logprobs:
            for cand in logprobs[0].get("top_logprobs", []):
                token = cand.get("token")
                lp = cand.get("logprob")
                if token is not None and lp is not None:
                    top[token] = float(lp)
        return ChatReply(text=text, top_logprobs=top)

    def embed(self, tokens: list[str]) -> list[list[float]]:
        """One L2-normalized vector per token, all the same dimension."""
        if not tokens:
            raise ValidationError("embed requires a non-empty token list")
        body = {"model": self.config.model, "input": list(tokens)}
        data = self._post("/embeddings", body)
        try:
            vectors = [item["embedding"] for item in data["data"]]
        except (KeyError, TypeError) as e:
            raise BackendError(f"malformed embeddings reply: {data}") from e
        if len(vectors) != len(tokens):
            raise BackendError(
                f"expected {len(tokens)} vectors, got {len(vectors)}"
            )
        dims = {len(v) for v in vectors}
        if len(dims) != 1:
            raise BackendError(f"inconsistent embedding dimensions: {sorted(dims)}")
        out = []
        for v in vectors:
            norm = math.sqrt(sum(x * x for x in v))
            out.append([x / norm for x in v] if norm > 0 else list(v))
        return out
