"""Uniform chat-completion access with a deterministic mock provider.

Two provider kinds are supported:

* ``http_openai_compatible``: POSTs the standard chat-completions payload to
  ``{base_url}/chat/completions`` with a bearer key read from an environment
  variable. Transient failures (connection errors, timeouts, 429, 5xx) are
  retried with exponential backoff; authentication failures never are.
* ``mock``: replays canned assistant texts from a JSON file mapping string
  keys to responses. Call sites attach a semantic ``fixture_key`` to the
  request (e.g. ``detect:sql-orders``) so prompt-template edits do not
  invalidate fixtures. A mock completion is a pure function of
  (fixture file, key).

``complete_structured`` layers JSON parsing and schema validation on top,
re-prompting with a corrective instruction up to 2 extra times before giving
up. Total upstream attempts per logical call are therefore bounded by
(1 + max_retries) * 3.
"""

from __future__ import annotations

import json
import logging
import os
import time
from dataclasses import dataclass, replace
from enum import Enum
from pathlib import Path
from typing import Any, Callable, Optional

import jsonschema
import requests

from .model import InvariantViolation

logger = logging.getLogger(__name__)


class GatewayError(Exception):
    """Base class for everything the gateway can raise."""


class GatewayTimeoutError(GatewayError):
    pass


class AuthenticationError(GatewayError):
    pass


class RateLimitError(GatewayError):
    pass


class UpstreamError(GatewayError):
    """Transport-level failure or a 5xx from the provider."""


class MalformedResponseError(GatewayError):
    """The provider replied 2xx but the body is not a chat completion."""


class MissingFixtureError(GatewayError):
    """The mock provider has no canned response for the request's key."""

    def __init__(self, key: str, fixture_path: str):
        self.key = key
        super().__init__(f"no mock fixture for key {key!r} in {fixture_path}")


class SchemaViolationError(GatewayError):
    """Model output could not be coerced to the named schema after re-prompts."""

    def __init__(self, schema_name: str, detail: str):
        self.schema_name = schema_name
        super().__init__(f"response does not match schema {schema_name!r}: {detail}")


class Role(str, Enum):
    SYSTEM = "system"
    USER = "user"
    ASSISTANT = "assistant"


class ResponseFormat(str, Enum):
    FREE_TEXT = "free_text"
    STRUCTURED_OBJECT = "structured_object"


class ProviderKind(str, Enum):
    HTTP_OPENAI_COMPATIBLE = "http_openai_compatible"
    MOCK = "mock"


@dataclass(frozen=True)
class ChatMessage:
    role: Role
    content: str

    def to_wire(self) -> dict[str, str]:
        return {"role": self.role.value, "content": self.content}


@dataclass(frozen=True)
class ChatRequest:
    """A single chat-completion request.

    `fixture_key` is only meaningful for the mock provider; HTTP providers
    ignore it.
    """

    model: str
    messages: tuple[ChatMessage, ...]
    temperature: float = 0.0
    max_tokens: int = 2048
    response_format: ResponseFormat = ResponseFormat.FREE_TEXT
    fixture_key: Optional[str] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "messages", tuple(self.messages))
        if not self.messages:
            raise InvariantViolation("messages must be nonempty")
        if self.messages[0].role not in (Role.SYSTEM, Role.USER):
            raise InvariantViolation("first message must have role system or user")
        if not 0.0 <= self.temperature <= 2.0:
            raise InvariantViolation("temperature must be in [0, 2]")
        if self.max_tokens <= 0:
            raise InvariantViolation("max_tokens must be positive")


@dataclass(frozen=True)
class ProviderConfig:
    kind: ProviderKind
    base_url: Optional[str] = None
    api_key_env: str = "OPENAI_API_KEY"
    timeout: float = 30.0
    max_retries: int = 2
    fixture_path: Optional[str] = None

    def __post_init__(self) -> None:
        if not isinstance(self.kind, ProviderKind):
            object.__setattr__(self, "kind", ProviderKind(self.kind))
        if self.kind is ProviderKind.HTTP_OPENAI_COMPATIBLE and not self.base_url:
            raise InvariantViolation("http provider requires base_url")
        if self.kind is ProviderKind.MOCK and not self.fixture_path:
            raise InvariantViolation("mock provider requires fixture_path")
        if self.fixture_path is not None:
            object.__setattr__(self, "fixture_path", str(self.fixture_path))

    @classmethod
    def mock(cls, fixture_path: str | Path, **kw: Any) -> "ProviderConfig":
        return cls(kind=ProviderKind.MOCK, fixture_path=str(fixture_path), **kw)

    @classmethod
    def http(cls, base_url: str, **kw: Any) -> "ProviderConfig":
        return cls(kind=ProviderKind.HTTP_OPENAI_COMPATIBLE, base_url=base_url, **kw)


# Fixture files are small; cache parsed content keyed by (path, mtime) so
# repeated lookups stay a pure function of the file content.
_fixture_cache: dict[tuple[str, float], dict[str, str]] = {}


def _load_fixtures(path: str) -> dict[str, str]:
    mtime = os.path.getmtime(path)
    cached = _fixture_cache.get((path, mtime))
    if cached is not None:
        return cached
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    if not isinstance(data, dict):
        raise MalformedResponseError(f"fixture file {path} must be a JSON object")
    _fixture_cache.clear()
    _fixture_cache[(path, mtime)] = data
    return data


def _complete_mock(cfg: ProviderConfig, req: ChatRequest) -> str:
    fixtures = _load_fixtures(cfg.fixture_path)
    key = req.fixture_key
    if key is None or key not in fixtures:
        raise MissingFixtureError(str(key), cfg.fixture_path)
    return fixtures[key]


def _complete_http(
    cfg: ProviderConfig,
    req: ChatRequest,
    session: Optional[requests.Session] = None,
    sleep: Callable[[float], None] = time.sleep,
) -> str:
    api_key = os.environ.get(cfg.api_key_env)
    if not api_key:
        raise AuthenticationError(
            f"environment variable {cfg.api_key_env} is not set"
        )
    session = session or requests.Session()
    url = cfg.base_url.rstrip("/") + "/chat/completions"
    payload: dict[str, Any] = {
        "model": req.model,
        "messages": [m.to_wire() for m in req.messages],
        "temperature": req.temperature,
        "max_tokens": req.max_tokens,
    }
    if req.response_format is ResponseFormat.STRUCTURED_OBJECT:
        payload["response_format"] = {"type": "json_object"}
    headers = {"Authorization": f"Bearer {api_key}"}

    last_error: GatewayError = UpstreamError("no attempt made")
    for attempt in range(cfg.max_retries + 1):
        try:
            resp = session.post(url, json=payload, headers=headers, timeout=cfg.timeout)
        except requests.Timeout:
            last_error = GatewayTimeoutError(f"request timed out after {cfg.timeout}s")
        except requests.RequestException as exc:
            last_error = UpstreamError(f"transport failure: {exc}")
        else:
            if resp.status_code in (401, 403):
                raise AuthenticationError(f"provider returned {resp.status_code}")
            if resp.status_code == 429:
                last_error = RateLimitError("provider returned 429")
            elif resp.status_code >= 500:
                last_error = UpstreamError(f"provider returned {resp.status_code}")
            elif resp.status_code >= 400:
                raise UpstreamError(
                    f"provider returned {resp.status_code}: {resp.text[:200]}"
                )
            else:
                try:
                    body = resp.json()
                    return body["choices"][0]["message"]["content"]
                except (ValueError, KeyError, IndexError, TypeError) as exc:
                    raise MalformedResponseError(
                        f"unexpected completion body: {exc}"
                    ) from exc
        if attempt < cfg.max_retries:
            delay = 0.25 * (2**attempt)
            logger.debug("retrying after %s (attempt %d): %s", delay, attempt, last_error)
            sleep(delay)
    raise last_error


def complete(
    cfg: ProviderConfig,
    req: ChatRequest,
    session: Optional[requests.Session] = None,
    sleep: Callable[[float], None] = time.sleep,
) -> str:
    """Return the assistant text for one chat request."""
    if cfg.kind is ProviderKind.MOCK:
        return _complete_mock(cfg, req)
    return _complete_http(cfg, req, session=session, sleep=sleep)


# ---------------------------------------------------------------------------
# Structured output
# ---------------------------------------------------------------------------

_PAIR = {
    "type": "array",
    "minItems": 2,
    "maxItems": 2,
    "items": {"type": "string"},
}

_EXAMPLE = {
    "type": "object",
    "required": ["kind", "input_description", "expected_behavior"],
    "properties": {
        "kind": {"enum": ["selected", "not_selected", "edge"]},
        "input_description": {"type": "string"},
        "expected_behavior": {"type": "string"},
    },
}

SCHEMAS: dict[str, dict[str, Any]] = {
    "ambiguity_list": {
        "type": "object",
        "required": ["ambiguities"],
        "properties": {
            "ambiguities": {
                "type": "array",
                "items": {
                    "type": "object",
                    "required": ["label", "description"],
                    "properties": {
                        "id": {"type": "string"},
                        "label": {"type": "string", "minLength": 1},
                        "description": {"type": "string"},
                        "depends_on": {"type": "array", "items": _PAIR},
                    },
                },
            }
        },
    },
    "question_plan": {
        "type": "object",
        "required": ["questions"],
        "properties": {
            "questions": {
                "type": "array",
                "minItems": 1,
                "items": {
                    "type": "object",
                    "required": ["targets", "text", "options"],
                    "properties": {
                        "id": {"type": "string"},
                        "targets": {"type": "string"},
                        "text": {"type": "string"},
                        "options": {
                            "type": "array",
                            "minItems": 2,
                            "items": {
                                "type": "object",
                                "required": ["id", "text", "resolves_to"],
                                "properties": {
                                    "id": {"type": "string"},
                                    "text": {"type": "string"},
                                    "resolves_to": {"type": "string", "minLength": 1},
                                    "illustration": {
                                        "type": "object",
                                        "required": ["input", "output"],
                                        "properties": {
                                            "input": {"type": "string"},
                                            "output": {"type": "string"},
                                        },
                                    },
                                },
                            },
                        },
                        "guard": {"type": "array", "items": _PAIR},
                        "allows_free_text": {"type": "boolean"},
                    },
                },
            }
        },
    },
    "final_solution": {
        "type": "object",
        "required": ["artifact", "artifact_kind"],
        "properties": {
            "artifact": {"type": "string", "minLength": 1},
            "artifact_kind": {"enum": ["sql", "code", "analysis", "narrative"]},
            "examples": {"type": "array", "items": _EXAMPLE},
        },
    },
    "example_set": {
        "type": "object",
        "required": ["examples"],
        "properties": {
            "examples": {"type": "array", "minItems": 1, "items": _EXAMPLE},
        },
    },
}


def _strip_code_fence(text: str) -> str:
    stripped = text.strip()
    if stripped.startswith("```"):
        first_newline = stripped.find("\n")
        if first_newline != -1 and stripped.endswith("```"):
            return stripped[first_newline + 1 : -3].strip()
    return stripped


def parse_structured(text: str, schema_name: str) -> dict[str, Any]:
    """Parse assistant text as JSON and validate it against a named schema."""
    if schema_name not in SCHEMAS:
        raise KeyError(f"unknown schema {schema_name!r}")
    try:
        obj = json.loads(_strip_code_fence(text))
    except ValueError as exc:
        raise SchemaViolationError(schema_name, f"not valid JSON: {exc}") from exc
    try:
        jsonschema.validate(obj, SCHEMAS[schema_name])
    except jsonschema.ValidationError as exc:
        raise SchemaViolationError(schema_name, exc.message) from exc
    return obj


_CORRECTIVE = (
    "Your previous reply could not be used: {error}. "
    "Reply again with ONLY a JSON object that satisfies the requested structure, "
    "with no surrounding prose or code fences."
)

STRUCTURED_REPROMPTS = 2


def complete_structured_raw(
    cfg: ProviderConfig,
    req: ChatRequest,
    schema_name: str,
    session: Optional[requests.Session] = None,
    sleep: Callable[[float], None] = time.sleep,
) -> tuple[dict[str, Any], str]:
    """Like :func:`complete_structured` but also returns the winning raw text."""
    if req.response_format is not ResponseFormat.STRUCTURED_OBJECT:
        raise InvariantViolation(
            "complete_structured requires response_format=structured_object"
        )
    current = req
    last: Optional[SchemaViolationError] = None
    for _ in range(1 + STRUCTURED_REPROMPTS):
        text = complete(cfg, current, session=session, sleep=sleep)
        try:
            return parse_structured(text, schema_name), text
        except SchemaViolationError as exc:
            last = exc
            current = replace(
                current,
                messages=current.messages
                + (
                    ChatMessage(Role.ASSISTANT, text),
                    ChatMessage(Role.USER, _CORRECTIVE.format(error=exc)),
                ),
            )
    raise last


def complete_structured(
    cfg: ProviderConfig,
    req: ChatRequest,
    schema_name: str,
    session: Optional[requests.Session] = None,
    sleep: Callable[[float], None] = time.sleep,
) -> dict[str, Any]:
    """Run a completion and parse the reply as a schema-validated object.

    On a parse or validation failure the request is re-issued with the bad
    reply plus a corrective instruction appended, up to 2 additional times.
    """
    return complete_structured_raw(
        cfg, req, schema_name, session=session, sleep=sleep
    )[0]
