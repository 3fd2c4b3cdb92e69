"""Chat-completion and embedding backends with record/replay fixtures.

Every model call in the package goes through a :class:`Backend`. Three
flavours cover production and tests:

* :class:`OpenAIBackend` talks to any OpenAI-compatible HTTP endpoint.
* :class:`ReplayBackend` answers from a newline-delimited fixture file and
  raises :class:`FixtureMiss` for anything it has not seen.
* :class:`RecordingBackend` wraps another backend and appends each new
  request/response pair to a fixture file.

Fixture records look like ``{"request_key": ..., "kind": "chat" | "embed",
"response": ...}``. Chat keys hash the canonical request; embedding keys
hash ``(model_name, text)`` one text at a time, so the same string embedded in
two different batches replays identically.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
import os
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Iterable, Sequence

from .errors import (BackendError, EmptyInput, FixtureError, FixtureMiss, RateLimited,
                     TransportError)

log = logging.getLogger(__name__)

DEFAULT_TEMPERATURE = 0.2
DEFAULT_TOP_P = 0.7
ROLES = ("system", "user", "assistant")


@dataclass(frozen=True)
class Message:
    role: str
    content: str

    def __post_init__(self):
        if self.role not in ROLES:
            raise ValueError(f"role must be one of {ROLES}, got {self.role!r}")


@dataclass(frozen=True)
class ChatRequest:
    messages: tuple[Message, ...]
    temperature: float = DEFAULT_TEMPERATURE
    top_p: float = DEFAULT_TOP_P
    model_name: str = ""

    def __post_init__(self):
        if not self.messages:
            raise ValueError("a chat request needs at least one message")
        if not 0.0 <= self.temperature <= 2.0:
            raise ValueError("temperature must lie in [0, 2]")
        if not 0.0 < self.top_p <= 1.0:
            raise ValueError("top_p must lie in (0, 1]")

    @classmethod
    def of(cls, *pairs: tuple[str, str], **kwargs) -> "ChatRequest":
        return cls(tuple(Message(r, c) for r, c in pairs), **kwargs)

    def to_wire(self) -> dict:
        return {
            "model": self.model_name,
            "messages": [{"role": m.role, "content": m.content} for m in self.messages],
            "temperature": self.temperature,
            "top_p": self.top_p,
        }


@dataclass(frozen=True)
class ChatResponse:
    content: str
    finish_reason: str = "stop"
    usage: dict | None = None

    def to_json(self) -> dict:
        d = {"content": self.content, "finish_reason": self.finish_reason}
        if self.usage:
            d["usage"] = self.usage
        return d

    @classmethod
    def from_json(cls, d: dict) -> "ChatResponse":
        return cls(d["content"], d.get("finish_reason", "stop"), d.get("usage"))


@dataclass(frozen=True)
class EmbeddingVector:
    values: tuple[float, ...]

    @property
    def dim(self) -> int:
        return len(self.values)

    def __len__(self) -> int:
        return len(self.values)


def _canonical(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def request_key(request: ChatRequest) -> str:
    """Stable hash of the fields that determine a completion."""
    payload = {
        "kind": "chat",
        "model": request.model_name,
        "messages": [[m.role, m.content] for m in request.messages],
        "temperature": round(float(request.temperature), 6),
        "top_p": round(float(request.top_p), 6),
    }
    return hashlib.sha256(_canonical(payload).encode("utf-8")).hexdigest()


def wire_request_key(body: str | dict) -> str:
    """``request_key`` computed from a wire-format JSON body."""
    if isinstance(body, str):
        body = json.loads(body)
    req = ChatRequest(
        tuple(Message(m["role"], m["content"]) for m in body["messages"]),
        temperature=body.get("temperature", DEFAULT_TEMPERATURE),
        top_p=body.get("top_p", DEFAULT_TOP_P),
        model_name=body.get("model", ""),
    )
    return request_key(req)


def embed_key(model_name: str, text: str) -> str:
    payload = {"kind": "embed", "model": model_name, "input": text}
    return hashlib.sha256(_canonical(payload).encode("utf-8")).hexdigest()


class Backend:
    """Base class. Subclasses implement ``_chat`` and ``_embed``.

    ``embed`` consults an in-memory cache keyed by ``(model_name, text)``
    before delegating, so repeated strings are embedded once per process.
    """

    name = "backend"

    def __init__(self, model_name: str = "", embed_model: str = ""):
        self.model_name = model_name
        self.embed_model = embed_model
        self._cache: dict[tuple[str, str], EmbeddingVector] = {}
        self._cache_lock = threading.Lock()

    def chat(self, request: ChatRequest) -> ChatResponse:
        if not request.model_name and self.model_name:
            request = ChatRequest(request.messages, request.temperature, request.top_p, self.model_name)
        return self._chat(request)

    def embed(self, texts: Sequence[str]) -> list[EmbeddingVector]:
        if not texts:
            raise EmptyInput("embed() needs at least one text")
        for t in texts:
            if not isinstance(t, str) or not t.strip():
                raise EmptyInput("embed() inputs must be nonempty after trimming")
        with self._cache_lock:
            missing = [t for t in dict.fromkeys(texts) if (self.embed_model, t) not in self._cache]
        if missing:
            vectors = self._embed(missing)
            if len(vectors) != len(missing):
                raise BackendError(f"backend returned {len(vectors)} vectors for {len(missing)} texts")
            with self._cache_lock:
                for t, v in zip(missing, vectors):
                    self._cache[(self.embed_model, t)] = v
        with self._cache_lock:
            out = [self._cache[(self.embed_model, t)] for t in texts]
        dims = {v.dim for v in out}
        if len(dims) > 1:
            raise BackendError(f"inconsistent embedding dims {sorted(dims)}")
        return out

    def embed_one(self, text: str) -> EmbeddingVector:
        return self.embed([text])[0]

    def _chat(self, request: ChatRequest) -> ChatResponse:
        raise BackendError(f"{type(self).__name__} does not serve chat requests")

    def _embed(self, texts: list[str]) -> list[EmbeddingVector]:
        raise BackendError(f"{type(self).__name__} does not serve embeddings")


# -- replay / record ------------------------------------------------------

def read_fixture(path: str | Path) -> dict[str, dict]:
    """Load a fixture file into ``{request_key: record}``.

    Raises :class:`FixtureError` when one key maps to two different responses
    or when embedding vectors disagree on dimension.
    """
    entries: dict[str, dict] = {}
    dims: set[int] = set()
    p = Path(path)
    if not p.exists():
        return entries
    with p.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                key, kind, response = rec["request_key"], rec["kind"], rec["response"]
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise FixtureError(f"{p}:{lineno}: malformed record ({exc})") from exc
            if kind not in ("chat", "embed"):
                raise FixtureError(f"{p}:{lineno}: unknown kind {kind!r}")
            if kind == "embed":
                if not isinstance(response, list) or not response:
                    raise FixtureError(f"{p}:{lineno}: embedding response must be a nonempty list")
                dims.add(len(response))
                if len(dims) > 1:
                    raise FixtureError(f"{p}: mixed embedding dims {sorted(dims)}")
            if key in entries and entries[key] != rec:
                raise FixtureError(f"{p}:{lineno}: request key {key} collides with a different record")
            entries[key] = rec
    return entries


class ReplayBackend(Backend):
    """Serves recorded responses only; never touches the network."""

    name = "replay"

    def __init__(self, fixture_path: str | Path, model_name: str = "", embed_model: str = ""):
        super().__init__(model_name, embed_model)
        self.fixture_path = Path(fixture_path)
        if not self.fixture_path.exists():
            raise FixtureError(f"fixture file {self.fixture_path} does not exist")
        self.entries = read_fixture(self.fixture_path)

    def _chat(self, request: ChatRequest) -> ChatResponse:
        key = request_key(request)
        rec = self.entries.get(key)
        if rec is None or rec["kind"] != "chat":
            raise FixtureMiss(key)
        return ChatResponse.from_json(rec["response"])

    def _embed(self, texts: list[str]) -> list[EmbeddingVector]:
        out = []
        for t in texts:
            key = embed_key(self.embed_model, t)
            rec = self.entries.get(key)
            if rec is None or rec["kind"] != "embed":
                raise FixtureMiss(key)
            out.append(EmbeddingVector(tuple(float(x) for x in rec["response"])))
        return out


class RecordingBackend(Backend):
    """Forwards to ``inner`` and appends unseen request/response pairs to a fixture."""

    name = "record"

    def __init__(self, inner: Backend, fixture_path: str | Path):
        super().__init__(inner.model_name, inner.embed_model)
        self.inner = inner
        self.fixture_path = Path(fixture_path)
        self.entries = read_fixture(self.fixture_path)
        self._lock = threading.Lock()

    def _append(self, key: str, kind: str, response) -> None:
        rec = {"request_key": key, "kind": kind, "response": response}
        with self._lock:
            if key in self.entries:
                return
            self.entries[key] = rec
            self.fixture_path.parent.mkdir(parents=True, exist_ok=True)
            with self.fixture_path.open("a", encoding="utf-8") as fh:
                fh.write(_canonical(rec) + "\n")

    def _chat(self, request: ChatRequest) -> ChatResponse:
        key = request_key(request)
        rec = self.entries.get(key)
        if rec is not None and rec["kind"] == "chat":
            return ChatResponse.from_json(rec["response"])
        resp = self.inner.chat(request)
        self._append(key, "chat", resp.to_json())
        return resp

    def _embed(self, texts: list[str]) -> list[EmbeddingVector]:
        vectors = self.inner.embed(texts)
        for t, v in zip(texts, vectors):
            self._append(embed_key(self.embed_model, t), "embed", list(v.values))
        return vectors


# -- live HTTP --------------------------------------------------------------

class OpenAIBackend(Backend):
    """OpenAI-compatible ``/chat/completions`` and ``/embeddings`` client.

    Retries HTTP 429 and 5xx with capped exponential backoff: at most
    ``max_attempts`` tries and ``max_total_delay`` seconds of sleeping in
    total.
    """

    name = "openai"

    def __init__(self, base_url: str | None = None, api_key: str | None = None,
                 model_name: str = "gpt-4", embed_model: str = "text-embedding-ada-002",
                 timeout: float = 60.0, max_attempts: int = 5, base_delay: float = 1.0,
                 max_delay: float = 16.0, max_total_delay: float = 60.0,
                 sleep: Callable[[float], None] = time.sleep, client=None):
        super().__init__(model_name, embed_model)
        import httpx

        self.base_url = (base_url or os.environ.get("OPENAI_BASE_URL") or "https://api.openai.com/v1").rstrip("/")
        self.api_key = api_key if api_key is not None else os.environ.get("OPENAI_API_KEY", "")
        self.max_attempts = max_attempts
        self.base_delay = base_delay
        self.max_delay = max_delay
        self.max_total_delay = max_total_delay
        self._sleep = sleep
        self._client = client or httpx.Client(timeout=timeout)
        self._httpx = httpx

    def _post(self, path: str, body: dict) -> dict:
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        url = f"{self.base_url}{path}"
        slept = 0.0
        for attempt in range(1, self.max_attempts + 1):
            try:
                resp = self._client.post(url, json=body, headers=headers)
            except self._httpx.HTTPError as exc:
                raise TransportError(f"POST {url} failed: {exc}") from exc
            retryable = resp.status_code == 429 or resp.status_code >= 500
            if resp.status_code < 400:
                try:
                    return resp.json()
                except ValueError as exc:
                    raise TransportError(f"POST {url}: response is not JSON", resp.status_code) from exc
            if not retryable or attempt == self.max_attempts:
                break
            delay = min(self.max_delay, self.base_delay * 2 ** (attempt - 1))
            delay = min(delay, self.max_total_delay - slept)
            if delay <= 0:
                break
            log.warning("POST %s returned %s; retrying in %.1fs", url, resp.status_code, delay)
            self._sleep(delay)
            slept += delay
        if resp.status_code == 429:
            raise RateLimited(f"POST {url}: rate limited after {attempt} attempts", 429)
        raise TransportError(f"POST {url}: HTTP {resp.status_code}: {resp.text[:200]}", resp.status_code)

    def _chat(self, request: ChatRequest) -> ChatResponse:
        data = self._post("/chat/completions", request.to_wire())
        try:
            choice = data["choices"][0]
            return ChatResponse(choice["message"]["content"] or "", choice.get("finish_reason") or "stop",
                                data.get("usage"))
        except (KeyError, IndexError, TypeError) as exc:
            raise TransportError(f"malformed chat response: {exc}") from exc

    def _embed(self, texts: list[str]) -> list[EmbeddingVector]:
        data = self._post("/embeddings", {"model": self.embed_model, "input": list(texts)})
        try:
            rows = sorted(data["data"], key=lambda r: r.get("index", 0))
            return [EmbeddingVector(tuple(float(x) for x in r["embedding"])) for r in rows]
        except (KeyError, TypeError) as exc:
            raise TransportError(f"malformed embedding response: {exc}") from exc


# -- offline helpers --------------------------------------------------------

class HashEmbeddingBackend(Backend):
    """Deterministic feature-hashing embedder over character trigrams and words.

    Not a semantic model: it exists so fixtures can be authored and tests run
    without any network access. Vectors are L2-normalised.
    """

    name = "hash"

    def __init__(self, dim: int = 64, embed_model: str = "hash-64"):
        super().__init__("", embed_model)
        if dim <= 0:
            raise ValueError("dim must be positive")
        self.dim = dim

    @staticmethod
    def _features(text: str) -> Iterable[str]:
        folded = text.casefold()
        for word in folded.split():
            yield "w:" + word
            padded = f"#{word}#"
            for i in range(len(padded) - 2):
                yield "c:" + padded[i:i + 3]

    def _vector(self, text: str) -> EmbeddingVector:
        acc = [0.0] * self.dim
        for feat in self._features(text):
            h = hashlib.blake2b(feat.encode("utf-8"), digest_size=8).digest()
            idx = int.from_bytes(h[:4], "little") % self.dim
            sign = 1.0 if h[4] & 1 else -1.0
            acc[idx] += sign
        norm = math.sqrt(sum(x * x for x in acc)) or 1.0
        return EmbeddingVector(tuple(x / norm for x in acc))

    def _embed(self, texts: list[str]) -> list[EmbeddingVector]:
        return [self._vector(t) for t in texts]


class ScriptedChatBackend(Backend):
    """Chat backend answering through a Python callable; used to author fixtures."""

    name = "scripted"

    def __init__(self, respond: Callable[[ChatRequest], str], model_name: str = "scripted"):
        super().__init__(model_name, "")
        self.respond = respond

    def _chat(self, request: ChatRequest) -> ChatResponse:
        return ChatResponse(self.respond(request))
