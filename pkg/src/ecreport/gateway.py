"""Chat-completion gateway.

Callers build a :class:`ChatRequest` and hand it to :func:`complete` together
with a backend. Remote backends speak HTTPS to a provider; the
:class:`ScriptedBackend` replays canned responses so that generation and
judging runs are reproducible offline.

API keys are read from the environment only:

==========  ======================
provider    environment variable
==========  ======================
openai      ``OPENAI_API_KEY``
mistral     ``MISTRAL_API_KEY``
gemini      ``GEMINI_API_KEY``
==========  ======================
"""

from __future__ import annotations

import logging
import os
import threading
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, Iterable, Protocol, Sequence

import httpx

from ecreport.model import EcReportError
from ecreport.storage import read_jsonl, write_jsonl

logger = logging.getLogger(__name__)

API_KEY_ENV = {
    "openai": "OPENAI_API_KEY",
    "mistral": "MISTRAL_API_KEY",
    "gemini": "GEMINI_API_KEY",
}


class GatewayError(EcReportError):
    """Provider failure. ``payload`` holds whatever the provider sent back."""

    retryable = False

    def __init__(self, message: str, payload: Any = None):
        super().__init__(message)
        self.payload = payload


class AuthError(GatewayError):
    pass


class ContentPolicyError(GatewayError):
    pass


class ProviderError(GatewayError):
    """Non-transient provider rejection (bad request, unknown model, ...)."""


class RateLimited(GatewayError):
    retryable = True


class TransportError(GatewayError):
    retryable = True


class ScriptExhausted(GatewayError):
    pass


class ReplayMismatch(GatewayError):
    pass


class ChatRole(str, Enum):
    SYSTEM = "System"
    USER = "User"
    ASSISTANT = "Assistant"


@dataclass(frozen=True)
class ChatMessage:
    role: ChatRole
    text: str


@dataclass(frozen=True)
class ChatRequest:
    system_prompt: str
    messages: tuple[ChatMessage, ...]
    model_id: str
    temperature: float = 0.0
    max_output_tokens: int = 4096

    def __post_init__(self) -> None:
        if not self.messages:
            raise ValueError("ChatRequest needs at least one message")
        if not self.model_id:
            raise ValueError("ChatRequest needs a model_id")
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.max_output_tokens <= 0:
            raise ValueError("max_output_tokens must be > 0")

    def to_dict(self) -> dict[str, Any]:
        return {
            "system_prompt": self.system_prompt,
            "messages": [{"role": m.role.value, "text": m.text} for m in self.messages],
            "model_id": self.model_id,
            "temperature": self.temperature,
            "max_output_tokens": self.max_output_tokens,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> ChatRequest:
        return cls(
            system_prompt=d["system_prompt"],
            messages=tuple(ChatMessage(ChatRole(m["role"]), m["text"]) for m in d["messages"]),
            model_id=d["model_id"],
            temperature=float(d.get("temperature", 0.0)),
            max_output_tokens=int(d.get("max_output_tokens", 4096)),
        )


@dataclass(frozen=True)
class ChatResponse:
    text: str
    provider_latency: float = 0.0
    prompt_tokens: int = 0
    completion_tokens: int = 0
    tokens_estimated: bool = False

    def to_dict(self) -> dict[str, Any]:
        return {
            "text": self.text,
            "provider_latency": self.provider_latency,
            "prompt_tokens": self.prompt_tokens,
            "completion_tokens": self.completion_tokens,
            "tokens_estimated": self.tokens_estimated,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> ChatResponse:
        return cls(
            text=d["text"],
            provider_latency=float(d.get("provider_latency", 0.0)),
            prompt_tokens=int(d.get("prompt_tokens", 0)),
            completion_tokens=int(d.get("completion_tokens", 0)),
            tokens_estimated=bool(d.get("tokens_estimated", False)),
        )


def estimate_tokens(text: str) -> int:
    return round(len(text.split()) * 4 / 3)


def _estimate_prompt_tokens(request: ChatRequest) -> int:
    return estimate_tokens(request.system_prompt) + sum(estimate_tokens(m.text) for m in request.messages)


class Backend(Protocol):
    def send(self, request: ChatRequest) -> ChatResponse: ...


# --------------------------------------------------------------------------
# Scripted backend
# --------------------------------------------------------------------------


class ScriptedBackend:
    """Replays a fixed queue of responses, one per call.

    With ``expected`` requests and ``strict=True`` every incoming request is
    compared against the recorded one and a :class:`ReplayMismatch` is raised
    on the first difference.
    """

    def __init__(
        self,
        queue: Iterable[str | ChatResponse],
        expected: Sequence[ChatRequest] | None = None,
        strict: bool = False,
    ):
        self.queue: list[ChatResponse] = [
            r if isinstance(r, ChatResponse) else ChatResponse(text=r) for r in queue
        ]
        self.expected = list(expected) if expected is not None else None
        self.strict = strict
        self.cursor = 0
        self._lock = threading.Lock()

    def send(self, request: ChatRequest) -> ChatResponse:
        with self._lock:
            if self.cursor >= len(self.queue):
                raise ScriptExhausted(f"scripted backend exhausted after {len(self.queue)} responses")
            if self.strict and self.expected is not None:
                want = self.expected[self.cursor]
                if want != request:
                    raise ReplayMismatch(
                        f"request {self.cursor} differs from the recording",
                        payload={"expected": want.to_dict(), "got": request.to_dict()},
                    )
            response = self.queue[self.cursor]
            self.cursor += 1
        if response.prompt_tokens or response.completion_tokens:
            return response
        return ChatResponse(
            text=response.text,
            provider_latency=response.provider_latency,
            prompt_tokens=_estimate_prompt_tokens(request),
            completion_tokens=estimate_tokens(response.text),
            tokens_estimated=True,
        )

    @property
    def remaining(self) -> int:
        return len(self.queue) - self.cursor


class ConstantBackend:
    """Answers every request with the same text. Useful as a mock judge."""

    def __init__(self, text: str):
        self.text = text

    def send(self, request: ChatRequest) -> ChatResponse:
        return ChatResponse(
            text=self.text,
            prompt_tokens=_estimate_prompt_tokens(request),
            completion_tokens=estimate_tokens(self.text),
            tokens_estimated=True,
        )


def record_replay(
    session: Sequence[tuple[ChatRequest, ChatResponse]], strict: bool = False
) -> ScriptedBackend:
    """Backend that replays the responses of a recorded session in order."""
    if not session:
        raise ValueError("cannot replay an empty session")
    return ScriptedBackend(
        [resp for _, resp in session], expected=[req for req, _ in session], strict=strict
    )


class RecordingBackend:
    """Wraps another backend and keeps every (request, response) pair it sees."""

    def __init__(self, inner: Backend):
        self.inner = inner
        self.session: list[tuple[ChatRequest, ChatResponse]] = []
        self._lock = threading.Lock()

    def send(self, request: ChatRequest) -> ChatResponse:
        response = self.inner.send(request)
        with self._lock:
            self.session.append((request, response))
        return response


def save_session(path, session: Sequence[tuple[ChatRequest, ChatResponse]]) -> None:
    write_jsonl(path, ({"request": q.to_dict(), "response": r.to_dict()} for q, r in session))


def load_session(path) -> list[tuple[ChatRequest, ChatResponse]]:
    return [
        (ChatRequest.from_dict(rec["request"]), ChatResponse.from_dict(rec["response"]))
        for rec in read_jsonl(path)
    ]


# --------------------------------------------------------------------------
# Remote backends
# --------------------------------------------------------------------------


def _classify_http_error(status: int, payload: Any) -> GatewayError:
    text = str(payload).lower()
    if status in (401, 403):
        return AuthError(f"provider rejected credentials (HTTP {status})", payload)
    if status == 429:
        return RateLimited("provider rate limit hit (HTTP 429)", payload)
    if status >= 500:
        return TransportError(f"provider server error (HTTP {status})", payload)
    if "content_policy" in text or "content_filter" in text or "safety" in text:
        return ContentPolicyError(f"provider refused content (HTTP {status})", payload)
    return ProviderError(f"provider rejected request (HTTP {status})", payload)


class _HttpBackend:
    provider = ""

    def __init__(
        self,
        api_key: str | None = None,
        base_url: str | None = None,
        client: httpx.Client | None = None,
        timeout: float = 120.0,
    ):
        if api_key is None:
            env = API_KEY_ENV[self.provider]
            api_key = os.environ.get(env)
            if not api_key:
                raise AuthError(f"environment variable {env} is not set")
        self.api_key = api_key
        self.base_url = (base_url or self.default_base_url).rstrip("/")
        self.client = client or httpx.Client(timeout=timeout)

    default_base_url = ""

    def _post(self, url: str, body: dict[str, Any], headers: dict[str, str]) -> tuple[Any, float]:
        start = time.monotonic()
        try:
            resp = self.client.post(url, json=body, headers=headers)
        except httpx.TransportError as exc:
            raise TransportError(f"{self.provider}: {exc}", payload=repr(exc)) from exc
        latency = time.monotonic() - start
        try:
            payload = resp.json()
        except ValueError:
            payload = resp.text
        if resp.status_code >= 400:
            raise _classify_http_error(resp.status_code, payload)
        return payload, latency


class OpenAICompatibleBackend(_HttpBackend):
    """Chat-completions endpoint as served by OpenAI and Mistral."""

    provider = "openai"
    default_base_url = "https://api.openai.com/v1"

    def send(self, request: ChatRequest) -> ChatResponse:
        role_names = {ChatRole.SYSTEM: "system", ChatRole.USER: "user", ChatRole.ASSISTANT: "assistant"}
        messages = [{"role": "system", "content": request.system_prompt}] if request.system_prompt else []
        messages += [{"role": role_names[m.role], "content": m.text} for m in request.messages]
        body = {
            "model": request.model_id,
            "messages": messages,
            "temperature": request.temperature,
            "max_tokens": request.max_output_tokens,
        }
        payload, latency = self._post(
            f"{self.base_url}/chat/completions", body, {"Authorization": f"Bearer {self.api_key}"}
        )
        try:
            choice = payload["choices"][0]
            text = choice["message"].get("content") or ""
        except (KeyError, IndexError, TypeError) as exc:
            raise ProviderError("unexpected chat-completion payload", payload) from exc
        if choice.get("finish_reason") == "content_filter":
            raise ContentPolicyError("provider filtered the completion", payload)
        usage = payload.get("usage") or {}
        if "prompt_tokens" in usage:
            return ChatResponse(text, latency, int(usage["prompt_tokens"]), int(usage.get("completion_tokens", 0)))
        return ChatResponse(text, latency, _estimate_prompt_tokens(request), estimate_tokens(text), True)


class MistralBackend(OpenAICompatibleBackend):
    provider = "mistral"
    default_base_url = "https://api.mistral.ai/v1"


class GeminiBackend(_HttpBackend):
    provider = "gemini"
    default_base_url = "https://generativelanguage.googleapis.com/v1beta"

    def send(self, request: ChatRequest) -> ChatResponse:
        # Gemini wants alternating user/model turns, so merge consecutive same-role messages.
        contents: list[dict[str, Any]] = []
        for m in request.messages:
            role = "model" if m.role is ChatRole.ASSISTANT else "user"
            if contents and contents[-1]["role"] == role:
                contents[-1]["parts"].append({"text": m.text})
            else:
                contents.append({"role": role, "parts": [{"text": m.text}]})
        body: dict[str, Any] = {
            "contents": contents,
            "generationConfig": {
                "temperature": request.temperature,
                "maxOutputTokens": request.max_output_tokens,
            },
        }
        if request.system_prompt:
            body["systemInstruction"] = {"parts": [{"text": request.system_prompt}]}
        payload, latency = self._post(
            f"{self.base_url}/models/{request.model_id}:generateContent",
            body,
            {"x-goog-api-key": self.api_key},
        )
        candidates = payload.get("candidates") if isinstance(payload, dict) else None
        if not candidates:
            if isinstance(payload, dict) and payload.get("promptFeedback", {}).get("blockReason"):
                raise ContentPolicyError("prompt blocked by provider", payload)
            raise ProviderError("unexpected generateContent payload", payload)
        cand = candidates[0]
        if cand.get("finishReason") == "SAFETY":
            raise ContentPolicyError("completion blocked by provider", payload)
        parts = cand.get("content", {}).get("parts", [])
        text = "".join(p.get("text", "") for p in parts)
        usage = payload.get("usageMetadata") or {}
        if "promptTokenCount" in usage:
            return ChatResponse(
                text, latency, int(usage["promptTokenCount"]), int(usage.get("candidatesTokenCount", 0))
            )
        return ChatResponse(text, latency, _estimate_prompt_tokens(request), estimate_tokens(text), True)


def remote_backend(provider: str, **kwargs: Any) -> Backend:
    classes = {"openai": OpenAICompatibleBackend, "mistral": MistralBackend, "gemini": GeminiBackend}
    try:
        cls = classes[provider]
    except KeyError:
        raise ValueError(f"unknown provider {provider!r}; expected one of {sorted(classes)}") from None
    return cls(**kwargs)


# --------------------------------------------------------------------------
# Retrying entry point
# --------------------------------------------------------------------------


@dataclass
class RetryPolicy:
    retries: int = 2
    base_delay: float = 1.0
    max_delay: float = 30.0
    sleep: Callable[[float], None] = field(default=time.sleep, repr=False)

    def delay(self, attempt: int) -> float:
        return min(self.max_delay, self.base_delay * 2**attempt)


def complete(request: ChatRequest, backend: Backend, retry: RetryPolicy | None = None) -> ChatResponse:
    """Send ``request`` through ``backend``, retrying transient failures.

    At most ``retry.retries + 1`` attempts are made. Authentication,
    content-policy and other non-transient errors are raised immediately.
    """
    retry = retry or RetryPolicy()
    attempt = 0
    while True:
        try:
            response = backend.send(request)
        except GatewayError as exc:
            if not exc.retryable or attempt >= retry.retries:
                raise
            wait = retry.delay(attempt)
            logger.warning("transient provider failure (%s); retry %d in %.1fs", exc, attempt + 1, wait)
            retry.sleep(wait)
            attempt += 1
            continue
        logger.debug("model=%s prompt_tokens=%d completion_tokens=%d",
                     request.model_id, response.prompt_tokens, response.completion_tokens)
        return response
