"""Corpus loading, session persistence, and transcript export.

The corpus is a line-delimited file: a manifest header line with per-domain
counts, then one record per line. Validation is streaming and every failure
names the record (and field) it tripped on.

Sessions persist as one JSON document per session id in a directory. Writes
go through a temp file and an atomic rename, so a crash mid-write leaves the
previous document intact: at most the answer being acknowledged is lost.
"""

from __future__ import annotations

import json
import logging
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterator, Optional

from .dialogue import SessionState, interpretation_for
from .model import Ambiguity, AmbiguityStatus, Domain, format_ts
from .solution import FinalSolution

logger = logging.getLogger(__name__)


class StoreError(Exception):
    pass


class DatasetError(StoreError):
    """A corpus file failed to parse or validate."""


class UnknownSessionError(StoreError):
    pass


class CorruptDocumentError(StoreError):
    pass


MIN_REFERENCE_AMBIGUITIES = 1
MAX_REFERENCE_AMBIGUITIES = 5


@dataclass(frozen=True)
class DatasetRecord:
    """One corpus entry: an ambiguous prompt with its reference annotation."""

    id: str
    domain: Domain
    prompt_text: str
    reference_ambiguities: tuple[Ambiguity, ...]
    gold_resolutions: dict[str, str]
    disambiguated_prompt: str
    notes: Optional[str] = None

    def __post_init__(self) -> None:
        if not isinstance(self.domain, Domain):
            object.__setattr__(self, "domain", Domain(self.domain))
        object.__setattr__(
            self, "reference_ambiguities", tuple(self.reference_ambiguities)
        )
        object.__setattr__(self, "gold_resolutions", dict(self.gold_resolutions))
        n = len(self.reference_ambiguities)
        if not MIN_REFERENCE_AMBIGUITIES <= n <= MAX_REFERENCE_AMBIGUITIES:
            raise DatasetError(
                f"record {self.id}: reference_ambiguities has {n} entries, "
                f"expected {MIN_REFERENCE_AMBIGUITIES}..{MAX_REFERENCE_AMBIGUITIES}"
            )
        ref_ids = [a.id for a in self.reference_ambiguities]
        if len(set(ref_ids)) != n:
            raise DatasetError(
                f"record {self.id}: reference_ambiguities has duplicate ids"
            )
        for a in self.reference_ambiguities:
            if a.status is not AmbiguityStatus.OPEN:
                raise DatasetError(
                    f"record {self.id}: reference_ambiguities entry {a.id} "
                    f"has status {a.status.value}, expected open"
                )
        stray = set(self.gold_resolutions) - set(ref_ids)
        if stray:
            raise DatasetError(
                f"record {self.id}: gold_resolutions keys {sorted(stray)} "
                "name no reference ambiguity"
            )

    def to_dict(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "domain": self.domain.value,
            "prompt_text": self.prompt_text,
            "reference_ambiguities": [a.to_dict() for a in self.reference_ambiguities],
            "gold_resolutions": dict(self.gold_resolutions),
            "disambiguated_prompt": self.disambiguated_prompt,
            "notes": self.notes,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "DatasetRecord":
        return cls(
            id=data["id"],
            domain=Domain(data["domain"]),
            prompt_text=data["prompt_text"],
            reference_ambiguities=tuple(
                Ambiguity.from_dict(a) for a in data["reference_ambiguities"]
            ),
            gold_resolutions=dict(data.get("gold_resolutions") or {}),
            disambiguated_prompt=data["disambiguated_prompt"],
            notes=data.get("notes"),
        )


@dataclass(frozen=True)
class Dataset:
    records: tuple[DatasetRecord, ...]
    manifest: dict[str, int] = field(default_factory=dict)

    def __post_init__(self) -> None:
        object.__setattr__(self, "records", tuple(self.records))
        object.__setattr__(self, "manifest", dict(self.manifest))
        ids = [r.id for r in self.records]
        dupes = {i for i in ids if ids.count(i) > 1}
        if dupes:
            raise DatasetError(f"duplicate record ids: {sorted(dupes)}")
        actual: dict[str, int] = {}
        for r in self.records:
            actual[r.domain.value] = actual.get(r.domain.value, 0) + 1
        if self.manifest and self.manifest != actual:
            raise DatasetError(
                f"manifest counts {self.manifest} do not match records {actual}"
            )

    def by_id(self, record_id: str) -> DatasetRecord:
        for r in self.records:
            if r.id == record_id:
                return r
        raise DatasetError(f"no record {record_id!r} in dataset")

    def by_domain(self, domain: Domain) -> list[DatasetRecord]:
        return [r for r in self.records if r.domain is domain]


def load_dataset(path: str | Path) -> Dataset:
    """Read and validate a line-delimited corpus file."""
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    nonblank = [(i + 1, line) for i, line in enumerate(lines) if line.strip()]
    if not nonblank:
        raise DatasetError(f"{path}: empty file, expected a manifest header line")
    header_no, header = nonblank[0]
    try:
        head = json.loads(header)
        manifest = dict(head["manifest"])
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise DatasetError(
            f"{path}: line {header_no}: bad manifest header ({exc})"
        ) from exc
    records: list[DatasetRecord] = []
    for index, (line_no, line) in enumerate(nonblank[1:]):
        try:
            data = json.loads(line)
        except json.JSONDecodeError as exc:
            raise DatasetError(
                f"{path}: record {index} (line {line_no}): invalid JSON: {exc}"
            ) from exc
        try:
            records.append(DatasetRecord.from_dict(data))
        except DatasetError:
            raise
        except (KeyError, ValueError, TypeError) as exc:
            rid = data.get("id", f"#{index}") if isinstance(data, dict) else f"#{index}"
            raise DatasetError(
                f"{path}: record {rid} (line {line_no}): {exc}"
            ) from exc
    dataset = Dataset(records=tuple(records), manifest=manifest)
    logger.info("loaded %d records from %s", len(dataset.records), path)
    return dataset


def dump_dataset(dataset: Dataset, path: str | Path) -> None:
    """Write a corpus in the same line-delimited format load_dataset reads."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps({"manifest": dataset.manifest}) + "\n")
        for record in dataset.records:
            fh.write(json.dumps(record.to_dict(), ensure_ascii=False) + "\n")


# ---------------------------------------------------------------------------
# Session persistence
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class StoredSession:
    """The full persisted document: state plus any finalized solution."""

    state: SessionState
    solution: Optional[FinalSolution] = None
    revision_used: bool = False

    def to_dict(self) -> dict[str, Any]:
        return {
            "state": self.state.to_dict(),
            "solution": self.solution.to_dict() if self.solution else None,
            "revision_used": self.revision_used,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "StoredSession":
        return cls(
            state=SessionState.from_dict(data["state"]),
            solution=(
                FinalSolution.from_dict(data["solution"])
                if data.get("solution")
                else None
            ),
            revision_used=bool(data.get("revision_used", False)),
        )


class SessionStore:
    """One JSON document per session id under a base directory."""

    def __init__(self, base_dir: str | Path) -> None:
        self.base_dir = Path(base_dir)
        self.base_dir.mkdir(parents=True, exist_ok=True)

    def _path(self, session_id: str) -> Path:
        if not session_id or "/" in session_id or session_id.startswith("."):
            raise StoreError(f"invalid session id: {session_id!r}")
        return self.base_dir / f"{session_id}.json"

    def save(self, doc: StoredSession) -> None:
        """Atomically upsert the document; returns only after it is durable."""
        path = self._path(doc.state.session_id)
        payload = json.dumps(doc.to_dict(), ensure_ascii=False, indent=2)
        fd, tmp = tempfile.mkstemp(dir=self.base_dir, suffix=".tmp")
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as fh:
                fh.write(payload)
                fh.flush()
                os.fsync(fh.fileno())
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise

    def load(self, session_id: str) -> StoredSession:
        path = self._path(session_id)
        if not path.exists():
            raise UnknownSessionError(f"no session {session_id!r}")
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
            return StoredSession.from_dict(data)
        except (json.JSONDecodeError, KeyError, ValueError, TypeError) as exc:
            raise CorruptDocumentError(f"session {session_id!r}: {exc}") from exc

    def exists(self, session_id: str) -> bool:
        return self._path(session_id).exists()

    def list_ids(self) -> list[str]:
        return sorted(p.stem for p in self.base_dir.glob("*.json"))

    def delete(self, session_id: str) -> None:
        path = self._path(session_id)
        if path.exists():
            path.unlink()


def export_transcript(doc: StoredSession) -> str:
    """Render the ordered Q/A history, with timestamps, for human review."""
    state = doc.state
    out: list[str] = [
        f"session {state.session_id}",
        f"prompt {state.prompt.id} ({state.prompt.domain.value})",
        f"created {format_ts(state.created_at)}",
        "",
    ]
    for n, answer in enumerate(state.transcript, start=1):
        question = state.plan.question(answer.question_id)
        qtext = question.text if question else "(unknown question)"
        out.append(f"{n}. [{format_ts(answer.answered_at)}] {answer.question_id}: {qtext}")
        label = answer.option_id
        if question is not None:
            opt = question.option(answer.option_id)
            if opt is not None:
                label = f"{opt.id}: {opt.text}"
        out.append(f"   answer {label}")
        if answer.free_text:
            out.append(f"   free text: {answer.free_text}")
        if question is not None:
            out.append(f"   recorded: {interpretation_for(question, answer)}")
    out.append("")
    for amb in state.ambiguities.values():
        line = f"{amb.id} {amb.label}: {amb.status.value}"
        if amb.resolution:
            line += f" ({amb.resolution})"
        out.append(line)
    if doc.solution is not None:
        out += ["", f"artifact kind: {doc.solution.artifact_kind.value}"]
    return "\n".join(out) + "\n"
