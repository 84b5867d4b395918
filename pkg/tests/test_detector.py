from __future__ import annotations

import json

import pytest

from clarify.detector import (
    DetectionResult,
    MAX_AMBIGUITIES,
    build_detect_request,
    coerce_ambiguities,
    detect,
)
from clarify.gateway import (
    ProviderConfig,
    ResponseFormat,
    SchemaViolationError,
)
from clarify.model import AmbiguityStatus, AmbiguousPrompt, Domain


def _prompt(**kw) -> AmbiguousPrompt:
    base = dict(
        id="sql-orders",
        text="Find all orders placed last month by customers with high spending habits.",
        domain=Domain.DATA_ANALYSIS,
    )
    base.update(kw)
    return AmbiguousPrompt(**base)


def test_request_shape():
    req = build_detect_request(_prompt(context="orders has an order_date column"), "gpt-4o")
    assert req.temperature == 0.0
    assert req.response_format is ResponseFormat.STRUCTURED_OBJECT
    assert req.fixture_key == "detect:sql-orders"
    user = req.messages[-1].content
    assert "order_date" in user
    assert "last month" in user


def test_request_omits_context_block_when_absent():
    req = build_detect_request(_prompt(), "gpt-4o")
    assert "Context" not in req.messages[-1].content


def test_coerce_merges_duplicate_labels_keeping_first():
    out = coerce_ambiguities(
        [
            {"label": "Time Frame", "description": "first"},
            {"label": "time_frame!", "description": "second"},
            {"label": "Spending", "description": "third"},
        ]
    )
    assert [a.label for a in out] == ["Time Frame", "Spending"]
    assert out[0].description == "first"


def test_coerce_caps_ranked_list():
    entries = [{"label": f"aspect {i}", "description": "d"} for i in range(12)]
    out = coerce_ambiguities(entries)
    assert len(out) == MAX_AMBIGUITIES


def test_coerce_assigns_positional_ids():
    out = coerce_ambiguities(
        [
            {"label": "One", "description": ""},
            {"label": "dup", "description": ""},
            {"label": "DUP", "description": ""},
            {"label": "Two", "description": ""},
        ]
    )
    # merged duplicate does not leave a gap
    assert [a.id for a in out] == ["A1", "A2", "A3"]


def test_coerce_rejects_duplicate_model_ids():
    with pytest.raises(SchemaViolationError):
        coerce_ambiguities(
            [
                {"id": "A1", "label": "One", "description": ""},
                {"id": "A1", "label": "Two", "description": ""},
            ]
        )


def test_coerce_skips_blank_labels():
    out = coerce_ambiguities([{"label": "  ", "description": ""}, {"label": "ok", "description": ""}])
    assert [a.label for a in out] == ["ok"]


def test_coerce_preserves_depends_on():
    out = coerce_ambiguities(
        [
            {"label": "One", "description": ""},
            {"label": "Two", "description": "", "depends_on": [["A1", "A"]]},
        ]
    )
    assert out[1].depends_on == (("A1", "A"),)


def test_detect_against_bundled_fixture(mock_cfg):
    result = detect(_prompt(), mock_cfg)
    assert result.prompt_id == "sql-orders"
    assert [a.label for a in result.ambiguities] == [
        "Time Frame Interpretation",
        'Definition of "high spending habits"',
    ]
    assert all(a.status is AmbiguityStatus.OPEN for a in result.ambiguities)
    assert json.loads(result.raw_model_text)["ambiguities"]


def test_detect_empty_for_fully_specified(mock_cfg):
    result = detect(_prompt(id="fully-specified", text="add two integers"), mock_cfg)
    assert result.ambiguities == ()


def test_detect_rejects_prose_reply(tmp_path):
    path = tmp_path / "f.json"
    path.write_text(json.dumps({"detect:p1": "I think it is ambiguous."}))
    cfg = ProviderConfig.mock(str(path))
    with pytest.raises(SchemaViolationError):
        detect(_prompt(id="p1"), cfg)


def test_detection_result_round_trip(mock_cfg):
    result = detect(_prompt(), mock_cfg)
    assert DetectionResult.from_dict(result.to_dict()) == result
