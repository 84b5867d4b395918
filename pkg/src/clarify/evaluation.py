"""Measurement harness: detection P/R/F1, efficiency comparison, surveys.

Detected ambiguities are aligned one-to-one against a record's reference
annotation, pooled per domain (micro-average; macro available behind a flag),
and reported with rounding applied only at report time. A simulated user
drives full sessions unattended by matching each question's options against
the record's gold interpretations. Timings of simulated sessions are recorded
but always labeled simulated: they say nothing about human think-time.
"""

from __future__ import annotations

import json
import logging
import time
import uuid
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from datetime import timedelta
from enum import Enum
from pathlib import Path
from typing import Any, Iterable, Optional, Sequence

from . import detector, dialogue, solution
from .gateway import (
    ChatMessage,
    ChatRequest,
    ProviderConfig,
    ResponseFormat,
    Role,
    complete,
)
from .model import (
    Ambiguity,
    AmbiguousPrompt,
    Answer,
    ClarificationQuestion,
    FREE_TEXT_MAX_LEN,
    InvariantViolation,
    normalize_label,
    OTHER_OPTION_ID,
    token_set,
)
from .store import Dataset, DatasetRecord

logger = logging.getLogger(__name__)


class AlignmentMode(str, Enum):
    EXACT_LABEL = "exact_label"
    TOKEN_OVERLAP = "token_overlap"
    LLM_JUDGE = "llm_judge"


JACCARD_THRESHOLD = 0.5


@dataclass(frozen=True)
class Alignment:
    """A one-to-one matching between detected and reference ambiguities."""

    matched: tuple[tuple[str, str], ...]
    unmatched_detected: tuple[str, ...]
    unmatched_reference: tuple[str, ...]
    mode: AlignmentMode

    def __post_init__(self) -> None:
        det = [d for d, _ in self.matched]
        ref = [r for _, r in self.matched]
        if len(set(det)) != len(det) or len(set(ref)) != len(ref):
            raise InvariantViolation("alignment is not one-to-one")


@dataclass(frozen=True)
class PrfMetrics:
    precision: float
    recall: float
    f1: float
    counts: tuple[int, int, int]  # (matched, detected, reference)

    @classmethod
    def from_counts(cls, matched: int, detected: int, reference: int) -> "PrfMetrics":
        if matched < 0 or matched > min(detected, reference):
            raise InvariantViolation(
                f"impossible counts: matched={matched}, detected={detected}, "
                f"reference={reference}"
            )
        p = matched / detected if detected else 0.0
        r = matched / reference if reference else 0.0
        f1 = 2 * p * r / (p + r) if p + r else 0.0
        return cls(precision=p, recall=r, f1=f1, counts=(matched, detected, reference))

    def rounded(self, digits: int = 2) -> dict[str, float]:
        return {
            "precision": round(self.precision, digits),
            "recall": round(self.recall, digits),
            "f1": round(self.f1, digits),
        }


def jaccard(a: frozenset[str], b: frozenset[str]) -> float:
    if not a and not b:
        return 0.0
    return len(a & b) / len(a | b)


def _ambiguity_tokens(a: Ambiguity) -> frozenset[str]:
    return token_set(f"{a.label} {a.description}")


JUDGE_INSTRUCTION = (
    "You compare two short descriptions of an ambiguity found in the same "
    "prompt. Reply with exactly 'yes' if they describe the same underlying "
    "ambiguity, otherwise exactly 'no'."
)


def _judge_pair(
    det: Ambiguity, ref: Ambiguity, cfg: ProviderConfig, model: str
) -> bool:
    key = f"judge:{normalize_label(det.label)}|{normalize_label(ref.label)}"
    req = ChatRequest(
        model=model,
        messages=(
            ChatMessage(Role.SYSTEM, JUDGE_INSTRUCTION),
            ChatMessage(
                Role.USER,
                f"First: {det.label}. {det.description}\n"
                f"Second: {ref.label}. {ref.description}",
            ),
        ),
        temperature=0.0,
        response_format=ResponseFormat.FREE_TEXT,
        fixture_key=key,
    )
    return complete(cfg, req).strip().lower().startswith("yes")


def align(
    detected: Sequence[Ambiguity],
    reference: Sequence[Ambiguity],
    mode: AlignmentMode = AlignmentMode.EXACT_LABEL,
    cfg: Optional[ProviderConfig] = None,
    model: str = "gpt-4o",
) -> Alignment:
    """Match detections to references one-to-one under the chosen criterion."""
    mode = AlignmentMode(mode)
    matched: list[tuple[str, str]] = []
    used_ref: set[int] = set()

    if mode is AlignmentMode.EXACT_LABEL:
        for d in detected:
            key = normalize_label(d.label)
            for j, r in enumerate(reference):
                if j not in used_ref and normalize_label(r.label) == key:
                    matched.append((d.id, r.id))
                    used_ref.add(j)
                    break
    elif mode is AlignmentMode.TOKEN_OVERLAP:
        scored = []
        for i, d in enumerate(detected):
            dt = _ambiguity_tokens(d)
            for j, r in enumerate(reference):
                s = jaccard(dt, _ambiguity_tokens(r))
                if s >= JACCARD_THRESHOLD:
                    # stable tiebreak on input order keeps greedy deterministic
                    scored.append((-s, i, j))
        used_det: set[int] = set()
        for _neg, i, j in sorted(scored):
            if i not in used_det and j not in used_ref:
                matched.append((detected[i].id, reference[j].id))
                used_det.add(i)
                used_ref.add(j)
    else:
        if cfg is None:
            raise InvariantViolation("llm_judge alignment requires a provider config")
        for d in detected:
            for j, r in enumerate(reference):
                if j not in used_ref and _judge_pair(d, r, cfg, model):
                    matched.append((d.id, r.id))
                    used_ref.add(j)
                    break

    matched_det = {d for d, _ in matched}
    matched_ref = {r for _, r in matched}
    return Alignment(
        matched=tuple(matched),
        unmatched_detected=tuple(d.id for d in detected if d.id not in matched_det),
        unmatched_reference=tuple(r.id for r in reference if r.id not in matched_ref),
        mode=mode,
    )


def compute_prf(alignment: Alignment) -> PrfMetrics:
    m = len(alignment.matched)
    return PrfMetrics.from_counts(
        matched=m,
        detected=m + len(alignment.unmatched_detected),
        reference=m + len(alignment.unmatched_reference),
    )


def aggregate_prf(metrics: Sequence[PrfMetrics], macro: bool = False) -> PrfMetrics:
    """Pool a group of per-record metrics into one row.

    Micro-average sums the raw counts and recomputes; macro averages the
    per-record ratios (and is marked by recomputed f1 over averaged P/R
    counts staying in `counts` as the pooled sums either way).
    """
    if not metrics:
        raise ValueError("cannot aggregate an empty group")
    m = sum(x.counts[0] for x in metrics)
    d = sum(x.counts[1] for x in metrics)
    r = sum(x.counts[2] for x in metrics)
    if not macro:
        return PrfMetrics.from_counts(m, d, r)
    p = sum(x.precision for x in metrics) / len(metrics)
    rec = sum(x.recall for x in metrics) / len(metrics)
    f1 = 2 * p * rec / (p + rec) if p + rec else 0.0
    return PrfMetrics(precision=p, recall=rec, f1=f1, counts=(m, d, r))


# ---------------------------------------------------------------------------
# Simulated user
# ---------------------------------------------------------------------------


def _pick_option(
    question: ClarificationQuestion, gold: Optional[str]
) -> tuple[str, Optional[str]]:
    """Choose (option_id, free_text) for one question.

    Best token overlap against the gold interpretation wins; zero overlap
    everywhere falls back to the free-text escape carrying the gold verbatim.
    Without a gold entry (an ambiguity outside the reference) the first
    option stands in for an indifferent user.
    """
    options = question.options
    if gold is None:
        chosen = options[0]
    else:
        gold_tokens = token_set(gold)
        best, best_score = None, 0.0
        for opt in options:
            score = jaccard(token_set(opt.resolves_to), gold_tokens)
            if score > best_score:
                best, best_score = opt, score
        if best is None:
            return OTHER_OPTION_ID, gold[:FREE_TEXT_MAX_LEN]
        chosen = best
    if dialogue.FREE_TEXT_PLACEHOLDER in chosen.resolves_to:
        filler = gold if gold else chosen.text
        return chosen.id, filler[:FREE_TEXT_MAX_LEN]
    return chosen.id, None


def simulate_user(
    record: DatasetRecord, state: dialogue.SessionState
) -> dialogue.SessionState:
    """Drive a clarifying session to completion as the record's gold user.

    Answer timestamps step one second from session creation, so a simulated
    session is a pure function of (record, state).
    """
    step = 0
    while state.phase is dialogue.Phase.CLARIFYING:
        question = dialogue.next_question(state)
        if question is None:
            break
        gold = record.gold_resolutions.get(question.targets)
        option_id, free_text = _pick_option(question, gold)
        step += 1
        state = dialogue.apply_answer(
            state,
            Answer(
                question_id=question.id,
                option_id=option_id,
                free_text=free_text,
                answered_at=state.created_at + timedelta(seconds=step),
            ),
        )
    return state


# ---------------------------------------------------------------------------
# Efficiency comparison
# ---------------------------------------------------------------------------


class EfficiencyMode(str, Enum):
    STANDARD_ONE_SHOT = "standard_one_shot"
    ITERATIVE = "iterative"


@dataclass(frozen=True)
class EfficiencyRecord:
    domain: str
    mode: EfficiencyMode
    interactions: int
    duration_minutes: float

    def __post_init__(self) -> None:
        if not isinstance(self.mode, EfficiencyMode):
            object.__setattr__(self, "mode", EfficiencyMode(self.mode))
        if self.interactions < 1:
            raise InvariantViolation("interactions must be >= 1")
        if self.duration_minutes <= 0:
            raise InvariantViolation("duration must be positive")


def efficiency_report(
    records: Iterable[EfficiencyRecord],
) -> dict[str, dict[str, dict[str, float]]]:
    """Per-domain, per-mode arithmetic means, rounded to 1 decimal here.

    Cells with no records are simply absent from the result.
    """
    cells: dict[tuple[str, str], list[EfficiencyRecord]] = {}
    for rec in records:
        cells.setdefault((rec.domain, rec.mode.value), []).append(rec)
    out: dict[str, dict[str, dict[str, float]]] = {}
    for (domain, mode), rows in sorted(cells.items()):
        out.setdefault(domain, {})[mode] = {
            "interactions": round(sum(r.interactions for r in rows) / len(rows), 1),
            "minutes": round(sum(r.duration_minutes for r in rows) / len(rows), 1),
            "count": len(rows),
        }
    return out


ONE_SHOT_MAX_ROUNDS = 8

ONE_SHOT_INSTRUCTION = (
    "Fulfill the user's request directly in one reply. If the user points "
    "out something you got wrong, reply with a fully revised version."
)


def one_shot_baseline(
    record: DatasetRecord, cfg: ProviderConfig, model: str = "gpt-4o"
) -> int:
    """Interactions a no-clarification workflow needs on this record.

    One raw-prompt call, then revision rounds until the reply contains every
    gold interpretation (case-insensitive substring), capped at
    ONE_SHOT_MAX_ROUNDS.
    """
    goals = [g.lower() for g in record.gold_resolutions.values()]
    messages: tuple[ChatMessage, ...] = (
        ChatMessage(Role.SYSTEM, ONE_SHOT_INSTRUCTION),
        ChatMessage(Role.USER, record.prompt_text),
    )
    for round_no in range(1, ONE_SHOT_MAX_ROUNDS + 1):
        req = ChatRequest(
            model=model,
            messages=messages,
            temperature=0.0,
            fixture_key=f"oneshot:{record.id}:{round_no}",
        )
        text = complete(cfg, req)
        lowered = text.lower()
        missing = [g for g in goals if g not in lowered]
        if not missing:
            return round_no
        messages = messages + (
            ChatMessage(Role.ASSISTANT, text),
            ChatMessage(
                Role.USER,
                "That is not what I meant. I also need: " + "; ".join(missing),
            ),
        )
    return ONE_SHOT_MAX_ROUNDS


# ---------------------------------------------------------------------------
# Survey aggregation
# ---------------------------------------------------------------------------

SURVEY_QUESTION_COUNT = 5
RATING_MIN = 1
RATING_MAX = 5


@dataclass(frozen=True)
class SurveyResponse:
    question_index: int
    rating: int

    def __post_init__(self) -> None:
        if not 1 <= self.question_index <= SURVEY_QUESTION_COUNT:
            raise InvariantViolation(
                f"question_index {self.question_index} outside "
                f"1..{SURVEY_QUESTION_COUNT}"
            )
        if not RATING_MIN <= self.rating <= RATING_MAX:
            raise InvariantViolation(
                f"rating {self.rating} outside {RATING_MIN}..{RATING_MAX}"
            )


def survey_report(responses: Iterable[SurveyResponse]) -> dict[int, float]:
    """Mean rating per question, 1 decimal."""
    buckets: dict[int, list[int]] = {}
    for resp in responses:
        buckets.setdefault(resp.question_index, []).append(resp.rating)
    return {
        q: round(sum(v) / len(v), 1) for q, v in sorted(buckets.items())
    }


def load_survey(path: str | Path) -> list[SurveyResponse]:
    """Read "question_index,rating" lines; a non-numeric header is skipped."""
    out: list[SurveyResponse] = []
    for line_no, line in enumerate(
        Path(path).read_text(encoding="utf-8").splitlines(), start=1
    ):
        bare = line.strip()
        if not bare:
            continue
        parts = [p.strip() for p in bare.split(",")]
        if line_no == 1 and not parts[0].isdigit():
            continue
        if len(parts) != 2:
            raise ValueError(f"{path}: line {line_no}: expected 2 fields")
        out.append(SurveyResponse(int(parts[0]), int(parts[1])))
    return out


# ---------------------------------------------------------------------------
# Batch runs
# ---------------------------------------------------------------------------


def _record_prompt(record: DatasetRecord) -> AmbiguousPrompt:
    return AmbiguousPrompt(
        id=record.id,
        text=record.prompt_text,
        domain=record.domain,
        context=record.notes,
    )


def _detect_one(
    record: DatasetRecord,
    cfg: ProviderConfig,
    mode: AlignmentMode,
    model: str,
) -> tuple[str, PrfMetrics]:
    result = detector.detect(_record_prompt(record), cfg, model=model)
    judge_cfg = cfg if mode is AlignmentMode.LLM_JUDGE else None
    alignment = align(
        result.ambiguities,
        record.reference_ambiguities,
        mode,
        cfg=judge_cfg,
        model=model,
    )
    return record.domain.value, compute_prf(alignment)


def _run_session(
    record: DatasetRecord, cfg: ProviderConfig, model: str
) -> tuple[dialogue.SessionState, solution.FinalSolution]:
    prompt = _record_prompt(record)
    detection = detector.detect(prompt, cfg, model=model)
    if detection.ambiguities:
        plan = dialogue.plan_questions(detection, cfg, model=model)
    else:
        plan = dialogue.QuestionPlan(questions=())
    state = dialogue.build_session(
        prompt, detection, plan, session_id=f"eval-{record.id}-{uuid.uuid4().hex[:8]}"
    )
    state = simulate_user(record, state)
    return solution.generate_solution(state, cfg, model=model)


def _fan_out(items, fn, workers: int):
    """Map fn over items with bounded parallelism, preserving order.

    Returns (results, errors): results holds (item, value) for successes,
    errors holds (item, exception) per failed item. A record failure never
    aborts the batch.
    """
    results, errors = [], []
    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        futures = [(item, pool.submit(fn, item)) for item in items]
        for item, fut in futures:
            try:
                results.append((item, fut.result()))
            except Exception as exc:  # noqa: BLE001 - per-record isolation
                logger.warning("record %s failed: %s", item.id, exc)
                errors.append((item, exc))
    return results, errors


def run_detect_eval(
    dataset: Dataset,
    cfg: ProviderConfig,
    mode: AlignmentMode = AlignmentMode.EXACT_LABEL,
    model: str = "gpt-4o",
    workers: int = 4,
    macro: bool = False,
) -> dict[str, Any]:
    """Detection quality per domain: the report's identification table."""
    results, errors = _fan_out(
        dataset.records, lambda r: _detect_one(r, cfg, mode, model), workers
    )
    by_domain: dict[str, list[PrfMetrics]] = {}
    for _record, (domain, metrics) in results:
        by_domain.setdefault(domain, []).append(metrics)
    rows = {
        domain: aggregate_prf(group, macro=macro).rounded()
        for domain, group in sorted(by_domain.items())
    }
    return {
        "mode": mode.value,
        "average": "macro" if macro else "micro",
        "rows": rows,
        "record_count": len(results),
        "errors": [
            {"record": r.id, "error": str(e)} for r, e in errors
        ],
    }


def run_full_eval(
    dataset: Dataset,
    cfg: ProviderConfig,
    mode: AlignmentMode = AlignmentMode.EXACT_LABEL,
    model: str = "gpt-4o",
    workers: int = 4,
    macro: bool = False,
) -> dict[str, Any]:
    """Detection table plus simulated end-to-end sessions for every record."""
    report = run_detect_eval(
        dataset, cfg, mode=mode, model=model, workers=workers, macro=macro
    )
    results, errors = _fan_out(
        dataset.records, lambda r: _run_session(r, cfg, model), workers
    )
    sessions = []
    for record, (state, final) in results:
        summary = dialogue.session_summary(state)
        sessions.append(
            {
                "record": record.id,
                "domain": record.domain.value,
                "questions_asked": summary["asked"],
                "questions_skipped": summary["skipped"],
                "statuses": state.status_map(),
                "artifact_kind": final.artifact_kind.value,
                "example_count": len(final.examples),
            }
        )
    report["sessions"] = sessions
    report["errors"] += [{"record": r.id, "error": str(e)} for r, e in errors]
    return report


def _efficiency_one(
    record: DatasetRecord, cfg: ProviderConfig, model: str
) -> list[EfficiencyRecord]:
    t0 = time.perf_counter()
    state, _final = _run_session(record, cfg, model)
    iterative_minutes = max((time.perf_counter() - t0) / 60.0, 1e-6)
    # initial prompt + one interaction per answered question
    iterative = 1 + len(state.transcript)

    t0 = time.perf_counter()
    rounds = one_shot_baseline(record, cfg, model=model)
    one_shot_minutes = max((time.perf_counter() - t0) / 60.0, 1e-6)
    domain = record.domain.value
    return [
        EfficiencyRecord(domain, EfficiencyMode.ITERATIVE, iterative, iterative_minutes),
        EfficiencyRecord(
            domain, EfficiencyMode.STANDARD_ONE_SHOT, rounds, one_shot_minutes
        ),
    ]


def run_efficiency_eval(
    dataset: Dataset,
    cfg: ProviderConfig,
    model: str = "gpt-4o",
    workers: int = 4,
) -> dict[str, Any]:
    """Interaction/time comparison between one-shot and iterative modes.

    Durations are wall-clock of simulated sessions, not human time; the
    report says so explicitly.
    """
    results, errors = _fan_out(
        dataset.records, lambda r: _efficiency_one(r, cfg, model), workers
    )
    flat = [rec for _record, pair in results for rec in pair]
    return {
        "cells": efficiency_report(flat),
        "timing": "simulated (machine wall-clock, not human time)",
        "record_count": len(results),
        "errors": [{"record": r.id, "error": str(e)} for r, e in errors],
    }


def build_report(
    dataset: Dataset,
    cfg: ProviderConfig,
    mode: str = "detect",
    align_mode: AlignmentMode = AlignmentMode.EXACT_LABEL,
    model: str = "gpt-4o",
    workers: int = 4,
    macro: bool = False,
    survey_path: Optional[str | Path] = None,
) -> dict[str, Any]:
    """Assemble the CLI-facing report document."""
    report: dict[str, Any] = {
        "records": len(dataset.records),
        "manifest": dict(dataset.manifest),
        "mode": mode,
    }
    if mode == "detect":
        report["identification"] = run_detect_eval(
            dataset, cfg, mode=align_mode, model=model, workers=workers, macro=macro
        )
    elif mode == "full":
        report["identification"] = run_full_eval(
            dataset, cfg, mode=align_mode, model=model, workers=workers, macro=macro
        )
    elif mode == "efficiency":
        report["efficiency"] = run_efficiency_eval(
            dataset, cfg, model=model, workers=workers
        )
    else:
        raise ValueError(f"unknown eval mode: {mode!r}")
    if survey_path is not None:
        report["survey"] = {
            str(q): mean for q, mean in survey_report(load_survey(survey_path)).items()
        }
    return report


def report_errors(report: dict[str, Any]) -> list[dict[str, str]]:
    found: list[dict[str, str]] = []
    for section in report.values():
        if isinstance(section, dict):
            found.extend(section.get("errors") or [])
    return found


def write_report(report: dict[str, Any], path: str | Path) -> None:
    Path(path).write_text(
        json.dumps(report, indent=2, ensure_ascii=False) + "\n", encoding="utf-8"
    )
