from __future__ import annotations

import json
from datetime import timedelta

import pytest

from conftest import make_session

from clarify.dialogue import apply_answer
from clarify.model import (
    Ambiguity,
    Answer,
    ClarificationQuestion,
    Domain,
    Option,
)
from clarify.store import (
    CorruptDocumentError,
    Dataset,
    DatasetError,
    DatasetRecord,
    SessionStore,
    StoreError,
    StoredSession,
    UnknownSessionError,
    dump_dataset,
    export_transcript,
    load_dataset,
)


def _record_dict(**kw) -> dict:
    base = {
        "id": "r1",
        "domain": "coding",
        "prompt_text": "write a parser",
        "reference_ambiguities": [
            {
                "id": "A1",
                "label": "Input Format",
                "description": "which format?",
                "status": "open",
                "resolution": None,
                "depends_on": [],
            }
        ],
        "gold_resolutions": {"A1": "json lines"},
        "disambiguated_prompt": "write a parser\n\nInput Format: json lines",
        "notes": None,
    }
    base.update(kw)
    return base


def _write_corpus(tmp_path, records, manifest=None):
    manifest = manifest or {"coding": len(records)}
    path = tmp_path / "corpus.jsonl"
    lines = [json.dumps({"manifest": manifest})]
    lines += [json.dumps(r) for r in records]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


# -- dataset validation -------------------------------------------------------


def test_load_valid_corpus(tmp_path):
    path = _write_corpus(tmp_path, [_record_dict()])
    dataset = load_dataset(path)
    assert dataset.by_id("r1").domain is Domain.CODING
    assert dataset.manifest == {"coding": 1}


def test_bundled_corpus_counts(corpus):
    assert len(corpus.records) == 75
    for domain in Domain:
        assert len(corpus.by_domain(domain)) == 25


def test_reference_count_bounds_name_the_record(tmp_path):
    refs = [
        {
            "id": f"A{i}",
            "label": f"aspect {i}",
            "description": "",
            "status": "open",
            "resolution": None,
            "depends_on": [],
        }
        for i in range(1, 7)
    ]
    golds = {f"A{i}": "x" for i in range(1, 7)}
    bad = _record_dict(id="too-many", reference_ambiguities=refs, gold_resolutions=golds)
    path = _write_corpus(tmp_path, [bad])
    with pytest.raises(DatasetError) as err:
        load_dataset(path)
    msg = str(err.value)
    assert "too-many" in msg
    assert "6" in msg


def test_zero_reference_ambiguities_rejected(tmp_path):
    bad = _record_dict(reference_ambiguities=[], gold_resolutions={})
    path = _write_corpus(tmp_path, [bad])
    with pytest.raises(DatasetError):
        load_dataset(path)


def test_non_open_reference_status_rejected():
    refs = [
        {
            "id": "A1",
            "label": "x",
            "description": "",
            "status": "resolved",
            "resolution": "r",
            "depends_on": [],
        }
    ]
    with pytest.raises(DatasetError):
        DatasetRecord.from_dict(_record_dict(reference_ambiguities=refs))


def test_stray_gold_key_rejected():
    with pytest.raises(DatasetError) as err:
        DatasetRecord.from_dict(_record_dict(gold_resolutions={"A1": "x", "A9": "y"}))
    assert "A9" in str(err.value)


def test_duplicate_reference_ids_rejected():
    refs = [
        {"id": "A1", "label": "x", "description": "", "status": "open",
         "resolution": None, "depends_on": []},
        {"id": "A1", "label": "y", "description": "", "status": "open",
         "resolution": None, "depends_on": []},
    ]
    with pytest.raises(DatasetError):
        DatasetRecord.from_dict(_record_dict(reference_ambiguities=refs))


def test_duplicate_record_ids_rejected(tmp_path):
    path = _write_corpus(
        tmp_path, [_record_dict(), _record_dict()], manifest={"coding": 2}
    )
    with pytest.raises(DatasetError) as err:
        load_dataset(path)
    assert "r1" in str(err.value)


def test_manifest_mismatch_rejected(tmp_path):
    path = _write_corpus(tmp_path, [_record_dict()], manifest={"coding": 2})
    with pytest.raises(DatasetError):
        load_dataset(path)


def test_bad_json_line_reports_line_number(tmp_path):
    path = tmp_path / "corpus.jsonl"
    path.write_text(
        json.dumps({"manifest": {"coding": 1}}) + "\n{not json\n", encoding="utf-8"
    )
    with pytest.raises(DatasetError) as err:
        load_dataset(path)
    assert "line 2" in str(err.value)


def test_missing_manifest_rejected(tmp_path):
    path = tmp_path / "corpus.jsonl"
    path.write_text(json.dumps(_record_dict()) + "\n", encoding="utf-8")
    with pytest.raises(DatasetError):
        load_dataset(path)


def test_empty_file_rejected(tmp_path):
    path = tmp_path / "corpus.jsonl"
    path.write_text("", encoding="utf-8")
    with pytest.raises(DatasetError):
        load_dataset(path)


def test_dump_load_round_trip(tmp_path, corpus):
    path = tmp_path / "copy.jsonl"
    dump_dataset(corpus, path)
    again = load_dataset(path)
    assert again == corpus


def test_unknown_record_id(corpus):
    with pytest.raises(DatasetError):
        corpus.by_id("no-such-record")


# -- session persistence ------------------------------------------------------


def _session_doc():
    amb = Ambiguity(id="A1", label="L", description="d")
    q = ClarificationQuestion(
        id="Q1",
        targets="A1",
        text="which?",
        options=(
            Option(id="A", text="One.", resolves_to="one"),
            Option(id="B", text="Two.", resolves_to="two"),
        ),
    )
    state = make_session([amb], [q])
    state = apply_answer(
        state,
        Answer(question_id="Q1", option_id="A",
               answered_at=state.updated_at + timedelta(seconds=1)),
    )
    return StoredSession(state=state)


def test_save_load_round_trip(tmp_path):
    store = SessionStore(tmp_path / "sessions")
    doc = _session_doc()
    store.save(doc)
    assert store.load("s1").to_dict() == doc.to_dict()


def test_save_overwrites_atomically(tmp_path):
    store = SessionStore(tmp_path)
    doc = _session_doc()
    store.save(doc)
    store.save(doc)  # idempotent upsert
    assert store.list_ids() == ["s1"]
    assert not list(tmp_path.glob("*.tmp"))


def test_unknown_session(tmp_path):
    with pytest.raises(UnknownSessionError):
        SessionStore(tmp_path).load("ghost")


def test_corrupt_document(tmp_path):
    store = SessionStore(tmp_path)
    (tmp_path / "bad.json").write_text("{truncated", encoding="utf-8")
    with pytest.raises(CorruptDocumentError):
        store.load("bad")


def test_invalid_session_ids_rejected(tmp_path):
    store = SessionStore(tmp_path)
    for bad in ("", "../etc", ".hidden", "a/b"):
        with pytest.raises(StoreError):
            store.load(bad)


def test_exists_and_delete(tmp_path):
    store = SessionStore(tmp_path)
    doc = _session_doc()
    store.save(doc)
    assert store.exists("s1")
    store.delete("s1")
    assert not store.exists("s1")
    store.delete("s1")  # idempotent


def test_export_transcript_content(tmp_path):
    doc = _session_doc()
    text = export_transcript(doc)
    assert "Q1: which?" in text
    assert "answer A: One." in text
    assert "recorded: one" in text
    assert "A1 L: resolved" in text
