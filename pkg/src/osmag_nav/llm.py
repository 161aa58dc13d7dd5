"""Uniform text-completion backends: one live HTTP client, two offline stand-ins.

The live backend speaks the OpenAI-compatible chat-completions protocol; the
scripted backend replays fixture replies keyed by a hash of the request; the
heuristic backend (defined in the retrieval module, constructed here via
:func:`make_backend`) computes a retrieval plan from the prompt itself with a
deterministic string-similarity scorer. Offline backends are referentially
transparent: identical request, identical reply bytes.
"""

from __future__ import annotations

import hashlib
import json
import os
import threading
import time
from dataclasses import dataclass

API_KEY_ENV = "OSMAG_NAV_API_KEY"
DEFAULT_TIMEOUT_S = 30.0
DEFAULT_RETRIES = 3
DEFAULT_MAX_IN_FLIGHT = 4


class BackendError(Exception):
    """Base error for completion backends."""


class CredentialError(BackendError):
    """Live backend selected but no API key in the environment."""


class BackendUnavailableError(BackendError):
    """Network/transport failure that survived all retries."""


class MissingFixtureError(BackendError):
    """Scripted backend has no reply for this prompt hash."""


@dataclass(frozen=True)
class CompletionRequest:
    system_text: str
    user_text: str
    max_tokens: int = 1024
    temperature: float = 0.0

    def fingerprint(self) -> str:
        digest = hashlib.sha256()
        digest.update(self.system_text.encode("utf-8"))
        digest.update(b"\x00")
        digest.update(self.user_text.encode("utf-8"))
        return digest.hexdigest()


class TextBackend:
    """Interface: subclasses implement ``complete_text``."""

    kind = "abstract"

    def complete_text(self, req: CompletionRequest) -> str:
        raise NotImplementedError


def complete(backend: TextBackend, req: CompletionRequest) -> str:
    return backend.complete_text(req)


class ScriptedBackend(TextBackend):
    """Replays canned replies; fails loudly on an unknown prompt key.

    The fixture maps ``CompletionRequest.fingerprint()`` hex digests to reply
    text. :meth:`record` builds fixtures from (request, reply) pairs.
    """

    kind = "scripted"

    def __init__(self, fixtures: dict[str, str]):
        self.fixtures = dict(fixtures)

    @classmethod
    def from_file(cls, path: str) -> "ScriptedBackend":
        with open(path, "r", encoding="utf-8") as fh:
            return cls(json.load(fh))

    def record(self, req: CompletionRequest, reply: str) -> None:
        self.fixtures[req.fingerprint()] = reply

    def complete_text(self, req: CompletionRequest) -> str:
        key = req.fingerprint()
        if key not in self.fixtures:
            raise MissingFixtureError(f"no scripted reply for prompt hash {key[:16]}…")
        return self.fixtures[key]


class LiveBackend(TextBackend):
    """OpenAI-compatible chat-completions client with bounded retries.

    The credential comes from the environment only (never a flag or file) and
    is never echoed. A call can block at most timeout x retries.
    """

    kind = "live"

    def __init__(
        self,
        endpoint: str,
        model: str,
        api_key: str | None = None,
        timeout_s: float = DEFAULT_TIMEOUT_S,
        retries: int = DEFAULT_RETRIES,
        max_in_flight: int = DEFAULT_MAX_IN_FLIGHT,
    ):
        key = api_key if api_key is not None else os.environ.get(API_KEY_ENV)
        if not key:
            raise CredentialError(f"set {API_KEY_ENV} to use the live backend")
        self.endpoint = endpoint.rstrip("/")
        self.model = model
        self._api_key = key
        self.timeout_s = timeout_s
        self.retries = retries
        self._gate = threading.Semaphore(max_in_flight)

    def complete_text(self, req: CompletionRequest) -> str:
        import requests

        body = {
            "model": self.model,
            "messages": [
                {"role": "system", "content": req.system_text},
                {"role": "user", "content": req.user_text},
            ],
            "temperature": req.temperature,
            "max_tokens": req.max_tokens,
        }
        headers = {
            "Authorization": f"Bearer {self._api_key}",
            "Content-Type": "application/json",
        }
        url = f"{self.endpoint}/chat/completions"
        last_error: Exception | None = None
        # Hard ceiling: a call never blocks past timeout x retries, backoff included.
        deadline = time.monotonic() + self.timeout_s * self.retries
        with self._gate:
            for attempt in range(self.retries):
                remaining = deadline - time.monotonic()
                if remaining <= 0:
                    break
                try:
                    resp = requests.post(
                        url, json=body, headers=headers, timeout=min(self.timeout_s, remaining)
                    )
                    if resp.status_code in (429, 500, 502, 503, 504):
                        last_error = BackendUnavailableError(
                            f"HTTP {resp.status_code} from completion endpoint"
                        )
                    else:
                        resp.raise_for_status()
                        data = resp.json()
                        return data["choices"][0]["message"]["content"]
                except requests.RequestException as exc:
                    last_error = exc
                except (KeyError, IndexError, ValueError) as exc:
                    raise BackendUnavailableError(f"malformed completion response: {exc}") from exc
                backoff = min(2.0**attempt * 0.25, 2.0)
                if attempt + 1 < self.retries and time.monotonic() + backoff < deadline:
                    time.sleep(backoff)
        raise BackendUnavailableError(
            f"completion endpoint failed after {self.retries} attempts: {last_error}"
        )


def make_backend(spec: dict) -> TextBackend:
    """Build a backend from a config dict: {"kind": "live"|"scripted"|"heuristic", ...}."""
    kind = spec.get("kind", "heuristic")
    if kind == "scripted":
        if "fixtures_file" in spec:
            return ScriptedBackend.from_file(spec["fixtures_file"])
        return ScriptedBackend(spec.get("fixtures", {}))
    if kind == "live":
        return LiveBackend(
            endpoint=spec["endpoint"],
            model=spec.get("model", "gpt-4o"),
            timeout_s=float(spec.get("timeout_s", DEFAULT_TIMEOUT_S)),
            retries=int(spec.get("retries", DEFAULT_RETRIES)),
            max_in_flight=int(spec.get("max_in_flight", DEFAULT_MAX_IN_FLIGHT)),
        )
    if kind == "heuristic":
        from .retrieval import HeuristicBackend

        return HeuristicBackend()
    raise BackendError(f"unknown backend kind '{kind}'")
