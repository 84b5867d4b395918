from __future__ import annotations

import json
import os

import pytest
import requests

from clarify.gateway import (
    AuthenticationError,
    ChatMessage,
    ChatRequest,
    GatewayTimeoutError,
    MalformedResponseError,
    MissingFixtureError,
    ProviderConfig,
    ProviderKind,
    RateLimitError,
    ResponseFormat,
    Role,
    SCHEMAS,
    SchemaViolationError,
    UpstreamError,
    complete,
    complete_structured,
    complete_structured_raw,
    parse_structured,
)
from clarify.model import InvariantViolation


def _req(**kw) -> ChatRequest:
    base = dict(
        model="gpt-4o",
        messages=(ChatMessage(Role.USER, "hello"),),
    )
    base.update(kw)
    return ChatRequest(**base)


def _write_fixtures(tmp_path, mapping) -> str:
    path = tmp_path / "fixtures.json"
    path.write_text(json.dumps(mapping), encoding="utf-8")
    return str(path)


# -- request validation -------------------------------------------------------


def test_temperature_bounds():
    with pytest.raises(InvariantViolation):
        _req(temperature=2.5)
    with pytest.raises(InvariantViolation):
        _req(temperature=-0.1)


def test_max_tokens_positive():
    with pytest.raises(InvariantViolation):
        _req(max_tokens=0)


def test_messages_required():
    with pytest.raises(InvariantViolation):
        _req(messages=())


# -- mock provider ------------------------------------------------------------


def test_mock_returns_fixture_text(tmp_path):
    cfg = ProviderConfig.mock(_write_fixtures(tmp_path, {"detect:x": "reply"}))
    assert complete(cfg, _req(fixture_key="detect:x")) == "reply"


def test_mock_missing_fixture_names_key_and_path(tmp_path):
    path = _write_fixtures(tmp_path, {})
    cfg = ProviderConfig.mock(path)
    with pytest.raises(MissingFixtureError) as err:
        complete(cfg, _req(fixture_key="detect:gone"))
    assert "detect:gone" in str(err.value)
    assert path in str(err.value)


def test_mock_without_fixture_key_fails(tmp_path):
    cfg = ProviderConfig.mock(_write_fixtures(tmp_path, {"a": "b"}))
    with pytest.raises(MissingFixtureError):
        complete(cfg, _req())


def test_fixture_cache_tracks_mtime(tmp_path):
    path = tmp_path / "fixtures.json"
    path.write_text(json.dumps({"k": "one"}), encoding="utf-8")
    cfg = ProviderConfig.mock(str(path))
    assert complete(cfg, _req(fixture_key="k")) == "one"
    path.write_text(json.dumps({"k": "two"}), encoding="utf-8")
    os.utime(path, (1, 1))  # force a distinct mtime
    assert complete(cfg, _req(fixture_key="k")) == "two"


def test_mock_config_requires_fixture_path():
    with pytest.raises(InvariantViolation):
        ProviderConfig(kind=ProviderKind.MOCK, fixture_path=None)


# -- HTTP provider ------------------------------------------------------------


class FakeResponse:
    def __init__(self, status_code: int, body=None, text: str = ""):
        self.status_code = status_code
        self._body = body
        self.text = text

    def json(self):
        if self._body is None:
            raise ValueError("no json")
        return self._body


class FakeSession:
    """Replays a scripted sequence of responses or exceptions."""

    def __init__(self, script):
        self.script = list(script)
        self.calls = []

    def post(self, url, json=None, headers=None, timeout=None):
        self.calls.append({"url": url, "json": json, "headers": headers})
        item = self.script.pop(0)
        if isinstance(item, Exception):
            raise item
        return item


def _ok(content: str) -> FakeResponse:
    return FakeResponse(200, {"choices": [{"message": {"content": content}}]})


@pytest.fixture()
def http_cfg(monkeypatch):
    monkeypatch.setenv("OPENAI_API_KEY", "sk-test")
    return ProviderConfig.http("https://llm.example/v1")


def test_http_happy_path(http_cfg):
    session = FakeSession([_ok("hi there")])
    assert complete(http_cfg, _req(), session=session) == "hi there"
    call = session.calls[0]
    assert call["url"] == "https://llm.example/v1/chat/completions"
    assert call["headers"]["Authorization"] == "Bearer sk-test"
    assert call["json"]["model"] == "gpt-4o"


def test_http_structured_flag_in_payload(http_cfg):
    session = FakeSession([_ok("{}")])
    complete(
        http_cfg,
        _req(response_format=ResponseFormat.STRUCTURED_OBJECT),
        session=session,
    )
    assert session.calls[0]["json"]["response_format"] == {"type": "json_object"}


def test_missing_api_key_env(monkeypatch):
    monkeypatch.delenv("OPENAI_API_KEY", raising=False)
    cfg = ProviderConfig.http("https://llm.example/v1")
    with pytest.raises(AuthenticationError):
        complete(cfg, _req(), session=FakeSession([]))


def test_auth_failure_is_never_retried(http_cfg):
    session = FakeSession([FakeResponse(401)])
    with pytest.raises(AuthenticationError):
        complete(http_cfg, _req(), session=session)
    assert len(session.calls) == 1


def test_rate_limit_retries_with_backoff(http_cfg):
    session = FakeSession([FakeResponse(429), FakeResponse(429), _ok("ok")])
    delays = []
    assert complete(http_cfg, _req(), session=session, sleep=delays.append) == "ok"
    assert delays == [0.25, 0.5]


def test_server_error_exhausts_retries(http_cfg):
    session = FakeSession([FakeResponse(500)] * 3)
    with pytest.raises(UpstreamError):
        complete(http_cfg, _req(), session=session, sleep=lambda _s: None)
    assert len(session.calls) == 3  # max_retries=2 means three attempts


def test_timeout_maps_to_gateway_timeout(http_cfg):
    session = FakeSession([requests.Timeout()] * 3)
    with pytest.raises(GatewayTimeoutError):
        complete(http_cfg, _req(), session=session, sleep=lambda _s: None)


def test_client_error_is_not_retried(http_cfg):
    session = FakeSession([FakeResponse(422, text="bad request body")])
    with pytest.raises(UpstreamError):
        complete(http_cfg, _req(), session=session)
    assert len(session.calls) == 1


def test_malformed_completion_body(http_cfg):
    session = FakeSession([FakeResponse(200, {"choices": []})])
    with pytest.raises(MalformedResponseError):
        complete(http_cfg, _req(), session=session)


def test_http_config_requires_base_url():
    with pytest.raises(InvariantViolation):
        ProviderConfig(kind=ProviderKind.HTTP_OPENAI_COMPATIBLE, base_url=None)


# -- structured output --------------------------------------------------------


def test_parse_structured_accepts_fenced_json():
    text = '```json\n{"ambiguities": []}\n```'
    assert parse_structured(text, "ambiguity_list") == {"ambiguities": []}


def test_parse_structured_rejects_prose():
    with pytest.raises(SchemaViolationError):
        parse_structured("Sure! Here are the ambiguities you asked for.", "ambiguity_list")


def test_parse_structured_rejects_schema_violation():
    with pytest.raises(SchemaViolationError):
        parse_structured('{"ambiguities": [{"id": "A1"}]}', "ambiguity_list")


def test_parse_structured_unknown_schema():
    with pytest.raises(KeyError):
        parse_structured("{}", "nope")


def test_known_schemas():
    assert {"ambiguity_list", "question_plan", "final_solution", "example_set"} <= set(
        SCHEMAS
    )


def test_structured_requires_structured_format(tmp_path):
    cfg = ProviderConfig.mock(_write_fixtures(tmp_path, {}))
    with pytest.raises(InvariantViolation):
        complete_structured(cfg, _req(), "ambiguity_list")


def test_structured_reprompt_recovers(http_cfg):
    good = json.dumps({"ambiguities": [{"label": "Tone", "description": "which?"}]})
    session = FakeSession([_ok("Sorry, here you go:"), _ok(good)])
    req = _req(response_format=ResponseFormat.STRUCTURED_OBJECT)
    obj, raw = complete_structured_raw(http_cfg, req, "ambiguity_list", session=session)
    assert obj["ambiguities"][0]["label"] == "Tone"
    assert raw == good
    # the corrective turn carries the bad reply back to the model
    second = session.calls[1]["json"]["messages"]
    assert second[-2]["role"] == "assistant"
    assert second[-2]["content"] == "Sorry, here you go:"
    assert "could not be used" in second[-1]["content"]


def test_structured_gives_up_after_reprompts(http_cfg):
    session = FakeSession([_ok("prose")] * 3)
    req = _req(response_format=ResponseFormat.STRUCTURED_OBJECT)
    with pytest.raises(SchemaViolationError):
        complete_structured(http_cfg, req, "ambiguity_list", session=session)
    assert len(session.calls) == 3  # initial + STRUCTURED_REPROMPTS
