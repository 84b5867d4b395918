from __future__ import annotations

import pytest
from fastapi.testclient import TestClient

from clarify.dialogue import replay
from clarify.service import SessionService, create_app
from clarify.store import SessionStore

SQL_PROMPT = (
    "Translate the following request into SQL: Find all orders placed last "
    "month by customers with high spending habits."
)

SQL_QUERY = """\
SELECT o.order_id, o.order_date, c.customer_id, c.total_spent
FROM orders o JOIN customers c ON o.customer_id = c.customer_id
WHERE o.order_date BETWEEN '2025-02-01' AND '2025-02-28'
  AND c.total_spent > 1000;"""


@pytest.fixture()
def store(tmp_path) -> SessionStore:
    return SessionStore(tmp_path / "sessions")


@pytest.fixture()
def service(store, mock_cfg) -> SessionService:
    return SessionService(store, mock_cfg)


@pytest.fixture()
def client(service) -> TestClient:
    return TestClient(create_app(service), raise_server_exceptions=False)


def _create_sql_session(client) -> str:
    resp = client.post(
        "/sessions",
        json={
            "text": SQL_PROMPT,
            "domain": "data_analysis",
            "prompt_id": "sql-orders",
            "context": "orders(order_id, order_date); customers(customer_id, total_spent)",
        },
    )
    assert resp.status_code == 201, resp.text
    return resp.json()["session_id"]


def _answer(client, sid: str, question_id: str, option_id: str, free_text=None):
    payload = {"question_id": question_id, "option_id": option_id}
    if free_text is not None:
        payload["free_text"] = free_text
    return client.post(f"/sessions/{sid}/answers", json=payload)


def test_create_session_view(client):
    resp = client.post(
        "/sessions",
        json={"text": SQL_PROMPT, "domain": "data_analysis", "prompt_id": "sql-orders"},
    )
    assert resp.status_code == 201
    body = resp.json()
    view = body["view"]
    assert view["phase"] == "clarifying"
    assert view["open_count"] == 2
    assert view["progress"] == {"closed": 0, "total": 2}
    assert view["next"]["id"] == "Q1"
    assert len(body["detection"]["ambiguities"]) == 2


def test_create_session_requires_text(client):
    resp = client.post("/sessions", json={"text": "  ", "domain": "coding"})
    assert resp.status_code == 400
    assert resp.json()["error"]["code"] == "bad_request"


def test_create_session_rejects_unknown_domain(client):
    resp = client.post("/sessions", json={"text": "x", "domain": "cooking"})
    assert resp.status_code == 400


def test_unknown_session_is_404(client):
    resp = client.get("/sessions/nope")
    assert resp.status_code == 404
    assert resp.json()["error"]["code"] == "not_found"


def test_full_session_walkthrough(client):
    sid = _create_sql_session(client)

    nxt = client.get(f"/sessions/{sid}/next").json()
    assert nxt["done"] is False
    assert nxt["question"]["id"] == "Q1"
    assert len(nxt["question"]["options"]) == 2

    resp = _answer(client, sid, "Q1", "A")
    body = resp.json()
    assert resp.status_code == 200
    assert body["statuses"]["A1"] == "resolved"
    assert body["open_count"] == 1
    assert body["next"]["id"] == "Q2"

    resp = _answer(client, sid, "Q2", "A")
    assert resp.json()["next"]["id"] == "Q3"
    # A2 stays open while the guarded refinement is pending
    assert resp.json()["statuses"]["A2"] == "open"

    resp = _answer(client, sid, "Q3", "A2")
    body = resp.json()
    assert body["open_count"] == 0
    assert body["phase"] == "finalizing"
    assert body["next"] is None

    nxt = client.get(f"/sessions/{sid}/next").json()
    assert nxt == {"done": True, "phase": "finalizing", "question": None}

    resp = client.post(f"/sessions/{sid}/finalize")
    assert resp.status_code == 200
    solution = resp.json()["solution"]
    assert solution["artifact"] == SQL_QUERY
    assert solution["artifact_kind"] == "sql"
    assert {e["kind"] for e in solution["examples"]} == {
        "selected", "not_selected", "edge",
    }
    assert client.get(f"/sessions/{sid}").json()["phase"] == "done"


def test_out_of_order_answer_conflicts(client):
    sid = _create_sql_session(client)
    resp = _answer(client, sid, "Q3", "A2")
    assert resp.status_code == 409
    assert resp.json()["error"]["code"] == "conflict"


def test_unknown_option_is_bad_request(client):
    sid = _create_sql_session(client)
    resp = _answer(client, sid, "Q1", "Z")
    assert resp.status_code == 400


def test_free_text_flows_through(client):
    sid = _create_sql_session(client)
    _answer(client, sid, "Q1", "A")
    _answer(client, sid, "Q2", "A")
    resp = _answer(client, sid, "Q3", "A1", free_text="$2,500")
    view = resp.json()["view"]
    amb = {a["id"]: a for a in view["ambiguities"]}
    assert amb["A2"]["resolution"] == "total_spent > $2,500"


def test_finalize_with_open_ambiguities_conflicts(client):
    sid = _create_sql_session(client)
    _answer(client, sid, "Q1", "A")
    resp = client.post(f"/sessions/{sid}/finalize")
    assert resp.status_code == 409


def test_finalize_is_idempotent(client):
    sid = _create_sql_session(client)
    for q, o in (("Q1", "A"), ("Q2", "A"), ("Q3", "A2")):
        _answer(client, sid, q, o)
    first = client.post(f"/sessions/{sid}/finalize").json()
    second = client.post(f"/sessions/{sid}/finalize").json()
    assert first == second
    assert first["revision_used"] is False


def test_one_feedback_revision_then_conflict(client):
    sid = _create_sql_session(client)
    for q, o in (("Q1", "A"), ("Q2", "A"), ("Q3", "A2")):
        _answer(client, sid, q, o)
    client.post(f"/sessions/{sid}/finalize")
    resp = client.post(
        f"/sessions/{sid}/finalize", json={"feedback": "also show the customer name"}
    )
    assert resp.status_code == 200
    assert "c.name" in resp.json()["solution"]["artifact"]
    assert resp.json()["revision_used"] is True
    resp = client.post(f"/sessions/{sid}/finalize", json={"feedback": "more"})
    assert resp.status_code == 409


def test_next_after_done_conflicts(client):
    sid = _create_sql_session(client)
    for q, o in (("Q1", "A"), ("Q2", "A"), ("Q3", "A2")):
        _answer(client, sid, q, o)
    client.post(f"/sessions/{sid}/finalize")
    assert client.get(f"/sessions/{sid}/next").status_code == 409
    # answering after done is a conflict as well
    assert _answer(client, sid, "Q1", "A").status_code == 409


def test_transcript_is_plain_text(client):
    sid = _create_sql_session(client)
    _answer(client, sid, "Q1", "A")
    resp = client.get(f"/sessions/{sid}/transcript")
    assert resp.status_code == 200
    assert resp.headers["content-type"].startswith("text/plain")
    assert 'How should we interpret "last month" in the query?' in resp.text


def test_fully_specified_prompt_skips_clarifying(client):
    resp = client.post(
        "/sessions",
        json={"text": "add two integers", "domain": "coding",
              "prompt_id": "fully-specified"},
    )
    assert resp.status_code == 201
    sid = resp.json()["session_id"]
    assert resp.json()["view"]["phase"] == "finalizing"
    nxt = client.get(f"/sessions/{sid}/next").json()
    assert nxt["done"] is True
    solution = client.post(f"/sessions/{sid}/finalize").json()["solution"]
    assert solution["artifact_kind"] == "code"


def test_upstream_failure_maps_to_502(client):
    resp = client.post(
        "/sessions",
        json={"text": "anything", "domain": "coding", "prompt_id": "no-fixture-here"},
    )
    assert resp.status_code == 502
    assert resp.json()["error"]["code"] == "upstream_failure"


def test_crash_recovery_restores_identical_state(store, mock_cfg, client):
    sid = _create_sql_session(client)
    _answer(client, sid, "Q1", "A")
    _answer(client, sid, "Q2", "A")
    view_before = client.get(f"/sessions/{sid}").json()

    # a fresh service over the same directory: the process restarted
    revived = SessionService(store, mock_cfg)
    client2 = TestClient(create_app(revived), raise_server_exceptions=False)
    assert client2.get(f"/sessions/{sid}").json() == view_before

    # and the persisted transcript replays to the identical state
    doc = store.load(sid)
    assert replay(doc.state).to_dict() == doc.state.to_dict()

    resp = _answer(client2, sid, "Q3", "A2")
    assert resp.json()["phase"] == "finalizing"


def test_persist_before_ack(store, client):
    sid = _create_sql_session(client)
    _answer(client, sid, "Q1", "A")
    # what the store holds must already include the acknowledged answer
    doc = store.load(sid)
    assert [a.question_id for a in doc.state.transcript] == ["Q1"]


def test_ui_mount_serves_static_files(service, tmp_path):
    ui = tmp_path / "ui"
    ui.mkdir()
    (ui / "index.html").write_text("<!doctype html><title>clarify</title>")
    client = TestClient(create_app(service, ui_dir=ui))
    resp = client.get("/")
    assert resp.status_code == 200
    assert "clarify" in resp.text
