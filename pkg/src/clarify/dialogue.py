"""Clarification planning and the progressive cutting-search dialogue.

The session walks a planned question list in order. Each answer narrows the
space: the chosen option's interpretation is recorded against the question's
target ambiguity, and a pruning sweep then closes everything the answer
invalidated. The sweep applies three rules to a fixpoint:

1. An open ambiguity whose ``depends_on`` is contradicted by the transcript is
   eliminated (it only existed under answers that were not given).
2. An open ambiguity that no live question targets anymore, but which has a
   recorded interpretation, is resolved with the latest one. This is what lets
   several questions refine a single ambiguity: intermediate answers leave it
   open while a follow-up (e.g. a guarded threshold question) is still live.
3. An open ambiguity that no live question targets and that was never answered
   is eliminated: every path that could have clarified it was cut off.

A question is *live* while it is unanswered, its target is open, and no guard
entry has been answered with a different option. Guards may only reference
earlier questions, so scanning the plan in order and returning the first
satisfied live question is complete: an earlier unanswered question is always
a permanently skipped one.

Sessions are immutable values; ``apply_answer`` returns a new state, and
replaying the same transcript over the same plan reproduces the state exactly
(timestamps come from the answers, not the wall clock).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from datetime import datetime
from typing import Any, Optional

from .gateway import (
    ChatMessage,
    ChatRequest,
    ProviderConfig,
    ResponseFormat,
    Role,
    complete_structured,
)
from .detector import DetectionResult
from .model import (
    Ambiguity,
    AmbiguityStatus,
    AmbiguousPrompt,
    Answer,
    ClarificationQuestion,
    FREE_TEXT_MAX_LEN,
    Option,
    OTHER_OPTION_ID,
    Phase,
    format_ts,
    now_utc,
    parse_ts,
)

logger = logging.getLogger(__name__)

FREE_TEXT_PLACEHOLDER = "{free_text}"


class DialogueError(Exception):
    """Base class for dialogue-engine failures."""


class WrongPhaseError(DialogueError):
    pass


class OutOfOrderAnswerError(DialogueError):
    pass


class UnknownOptionError(DialogueError):
    pass


class FreeTextError(DialogueError):
    """Free text supplied where forbidden, missing where required, or too long."""


class PlanInvariantError(DialogueError):
    """The planner produced a question list that violates plan invariants."""


@dataclass(frozen=True)
class QuestionPlan:
    questions: tuple[ClarificationQuestion, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "questions", tuple(self.questions))

    def question(self, question_id: str) -> Optional[ClarificationQuestion]:
        for q in self.questions:
            if q.id == question_id:
                return q
        return None

    def validate(self, ambiguities: dict[str, Ambiguity]) -> None:
        """Check plan invariants against the session's ambiguity set."""
        ids = [q.id for q in self.questions]
        if len(set(ids)) != len(ids):
            raise PlanInvariantError(f"duplicate question ids: {ids}")
        seen: set[str] = set()
        targeted: set[str] = set()
        for q in self.questions:
            if q.targets not in ambiguities:
                raise PlanInvariantError(
                    f"question {q.id} targets unknown ambiguity {q.targets!r}"
                )
            targeted.add(q.targets)
            for qid, _oid in q.guard:
                if qid not in seen:
                    raise PlanInvariantError(
                        f"question {q.id} guard references {qid!r}, which does not "
                        "precede it in plan order"
                    )
            seen.add(q.id)
        open_ids = {
            aid for aid, a in ambiguities.items() if a.status is AmbiguityStatus.OPEN
        }
        missing = open_ids - targeted
        if missing:
            raise PlanInvariantError(f"open ambiguities without questions: {sorted(missing)}")

    def to_dict(self) -> dict[str, Any]:
        return {"questions": [q.to_dict() for q in self.questions]}

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "QuestionPlan":
        return cls(
            questions=tuple(
                ClarificationQuestion.from_dict(q) for q in data["questions"]
            )
        )


@dataclass(frozen=True)
class SessionState:
    """The live decision-tree traversal for one prompt.

    ``ambiguities`` preserves detection order; the transcript holds every
    applied answer in order. When the phase is ``done`` no ambiguity is open.
    """

    session_id: str
    prompt: AmbiguousPrompt
    ambiguities: dict[str, Ambiguity]
    plan: QuestionPlan
    transcript: tuple[Answer, ...] = ()
    phase: Phase = Phase.CLARIFYING
    created_at: datetime = field(default_factory=now_utc)
    updated_at: datetime = field(default_factory=now_utc)

    def __post_init__(self) -> None:
        object.__setattr__(self, "ambiguities", dict(self.ambiguities))
        object.__setattr__(self, "transcript", tuple(self.transcript))
        qids = [a.question_id for a in self.transcript]
        if len(set(qids)) != len(qids):
            raise DialogueError("transcript answers the same question twice")

    def ambiguity_list(self) -> list[Ambiguity]:
        return list(self.ambiguities.values())

    def answered_ids(self) -> set[str]:
        return {a.question_id for a in self.transcript}

    def answer_for(self, question_id: str) -> Optional[Answer]:
        for a in self.transcript:
            if a.question_id == question_id:
                return a
        return None

    def status_map(self) -> dict[str, str]:
        return {aid: a.status.value for aid, a in self.ambiguities.items()}

    def to_dict(self) -> dict[str, Any]:
        return {
            "session_id": self.session_id,
            "prompt": self.prompt.to_dict(),
            "ambiguities": [a.to_dict() for a in self.ambiguities.values()],
            "plan": self.plan.to_dict(),
            "transcript": [a.to_dict() for a in self.transcript],
            "phase": self.phase.value,
            "created_at": format_ts(self.created_at),
            "updated_at": format_ts(self.updated_at),
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "SessionState":
        ambiguities = [Ambiguity.from_dict(a) for a in data["ambiguities"]]
        return cls(
            session_id=data["session_id"],
            prompt=AmbiguousPrompt.from_dict(data["prompt"]),
            ambiguities={a.id: a for a in ambiguities},
            plan=QuestionPlan.from_dict(data["plan"]),
            transcript=tuple(Answer.from_dict(a) for a in data["transcript"]),
            phase=Phase(data["phase"]),
            created_at=parse_ts(data["created_at"]),
            updated_at=parse_ts(data["updated_at"]),
        )


# ---------------------------------------------------------------------------
# Planning
# ---------------------------------------------------------------------------

PLAN_INSTRUCTION = """\
You design a short clarification dialogue that resolves every listed ambiguity
in a user's request.

Rules:
- Ask one focused question per ambiguity, in the given order. A follow-up
  question may refine the same ambiguity; give it a "guard" listing the
  (question id, option id) answers under which it applies.
- Every question offers at least 2 mutually exclusive options. Each option has
  a "resolves_to" string: the precise interpretation recorded if it is chosen.
  Where it helps, attach an input/output "illustration" to an option.
- If an option needs a user-typed value (a threshold, a name), set
  "allows_free_text" on the question and put the placeholder {free_text}
  inside that option's resolves_to.

Reply with ONLY a JSON object:
{"questions": [{"id": "Q1", "targets": "A1", "text": "...",
  "options": [{"id": "A", "text": "...", "resolves_to": "..."}],
  "guard": [["Q1", "A"]], "allows_free_text": false}]}
"""


def build_plan_request(detection: DetectionResult, model: str) -> ChatRequest:
    import json as _json

    listing = _json.dumps(
        [
            {"id": a.id, "label": a.label, "description": a.description}
            for a in detection.ambiguities
        ],
        indent=2,
    )
    return ChatRequest(
        model=model,
        messages=(
            ChatMessage(Role.SYSTEM, PLAN_INSTRUCTION),
            ChatMessage(Role.USER, "Ambiguities to clarify:\n" + listing),
        ),
        temperature=0.0,
        response_format=ResponseFormat.STRUCTURED_OBJECT,
        fixture_key=f"plan:{detection.prompt_id}",
    )


def plan_questions(
    detection: DetectionResult, cfg: ProviderConfig, model: str = "gpt-4o"
) -> QuestionPlan:
    """Build the ordered question plan for a detection result."""
    if not detection.ambiguities:
        raise PlanInvariantError("cannot plan questions for an empty detection")
    obj = complete_structured(cfg, build_plan_request(detection, model), "question_plan")
    questions: list[ClarificationQuestion] = []
    for i, q in enumerate(obj["questions"]):
        questions.append(
            ClarificationQuestion(
                id=q.get("id") or f"Q{i + 1}",
                targets=q["targets"],
                text=q["text"],
                options=tuple(Option.from_dict(o) for o in q["options"]),
                guard=tuple(tuple(pair) for pair in q.get("guard") or ()),
                allows_free_text=bool(q.get("allows_free_text", False)),
            )
        )
    plan = QuestionPlan(questions=tuple(questions))
    plan.validate({a.id: a for a in detection.ambiguities})
    return plan


def build_session(
    prompt: AmbiguousPrompt,
    detection: DetectionResult,
    plan: QuestionPlan,
    session_id: str,
    created_at: Optional[datetime] = None,
) -> SessionState:
    """Assemble a new session; phase is finalizing when nothing needs asking."""
    created = created_at or now_utc()
    state = SessionState(
        session_id=session_id,
        prompt=prompt,
        ambiguities={a.id: a for a in detection.ambiguities},
        plan=plan,
        transcript=(),
        phase=Phase.CLARIFYING,
        created_at=created,
        updated_at=created,
    )
    if detection.ambiguities:
        plan.validate(state.ambiguities)
    return _advance_phase(_sweep(state))


# ---------------------------------------------------------------------------
# Traversal
# ---------------------------------------------------------------------------


def _guard_satisfied(question: ClarificationQuestion, state: SessionState) -> bool:
    for qid, oid in question.guard:
        answer = state.answer_for(qid)
        if answer is None or answer.option_id != oid:
            return False
    return True


def _guard_contradicted(question: ClarificationQuestion, state: SessionState) -> bool:
    for qid, oid in question.guard:
        answer = state.answer_for(qid)
        if answer is not None and answer.option_id != oid:
            return True
    return False


def _is_live(
    question: ClarificationQuestion,
    state: SessionState,
    _memo: Optional[dict[str, bool]] = None,
) -> bool:
    """Whether the question can still be asked now or on some future turn.

    A guard entry pointing at an unanswered question is only satisfiable if
    that prerequisite is itself still live; guards reference strictly earlier
    questions, so the recursion terminates.
    """
    memo = _memo if _memo is not None else {}
    if question.id in memo:
        return memo[question.id]
    memo[question.id] = False  # break accidental cycles defensively
    live = True
    if question.id in state.answered_ids():
        live = False
    else:
        target = state.ambiguities.get(question.targets)
        if target is None or target.status is not AmbiguityStatus.OPEN:
            live = False
        else:
            for qid, oid in question.guard:
                answer = state.answer_for(qid)
                if answer is not None:
                    if answer.option_id != oid:
                        live = False
                        break
                else:
                    prereq = state.plan.question(qid)
                    if prereq is None or not _is_live(prereq, state, memo):
                        live = False
                        break
    memo[question.id] = live
    return live


def next_question(state: SessionState) -> Optional[ClarificationQuestion]:
    """First unanswered plan question with an open target and a satisfied guard.

    Returns None (the done marker) when no such question exists; a session that
    has moved on to finalizing keeps reporting done rather than erroring, so
    callers can poll it as the loop condition.
    """
    if state.phase is Phase.FINALIZING:
        return None
    if state.phase is not Phase.CLARIFYING:
        raise WrongPhaseError(f"next_question in phase {state.phase.value}")
    for q in state.plan.questions:
        if q.id in state.answered_ids():
            continue
        target = state.ambiguities.get(q.targets)
        if target is None or target.status is not AmbiguityStatus.OPEN:
            continue
        if _guard_satisfied(q, state):
            return q
    return None


def interpretation_for(question: ClarificationQuestion, answer: Answer) -> str:
    """The interpretation string an answer records on the question's target."""
    if answer.option_id == OTHER_OPTION_ID:
        if not answer.free_text:
            raise FreeTextError("the free-text escape requires free_text")
        return answer.free_text
    option = question.option(answer.option_id)
    if option is None:
        raise UnknownOptionError(
            f"question {question.id} has no option {answer.option_id!r}"
        )
    if FREE_TEXT_PLACEHOLDER in option.resolves_to:
        if not answer.free_text:
            raise FreeTextError(
                f"option {option.id} of {question.id} requires free_text"
            )
        return option.resolves_to.replace(FREE_TEXT_PLACEHOLDER, answer.free_text)
    return option.resolves_to


def _pending_interpretation(state: SessionState, ambiguity_id: str) -> Optional[str]:
    """Latest interpretation recorded against an ambiguity by any answer."""
    result: Optional[str] = None
    for answer in state.transcript:
        question = state.plan.question(answer.question_id)
        if question is not None and question.targets == ambiguity_id:
            result = interpretation_for(question, answer)
    return result


def _depends_on_contradicted(ambiguity: Ambiguity, state: SessionState) -> bool:
    """True when some dependency was answered with a different option.

    Each dependency names either a question id or an ambiguity id (matched via
    the questions targeting it); unanswered dependencies are not contradictions.
    """
    for ref, oid in ambiguity.depends_on:
        direct = state.answer_for(ref)
        if direct is not None and direct.option_id != oid:
            return True
        for answer in state.transcript:
            question = state.plan.question(answer.question_id)
            if question is not None and question.targets == ref and answer.option_id != oid:
                return True
    return False


def _sweep(state: SessionState) -> SessionState:
    """Prune and settle ambiguities to a fixpoint after an answer.

    Rules, in precedence order per iteration: contradicted depends_on
    eliminates; no-live-question with a pending interpretation resolves;
    no-live-question without one eliminates.
    """
    while True:
        memo: dict[str, bool] = {}
        changed = False
        ambiguities = dict(state.ambiguities)
        for aid, amb in ambiguities.items():
            if amb.status is not AmbiguityStatus.OPEN:
                continue
            if _depends_on_contradicted(amb, state):
                ambiguities[aid] = amb.eliminate()
                changed = True
                continue
            has_live = any(
                _is_live(q, state, memo)
                for q in state.plan.questions
                if q.targets == aid
            )
            if has_live:
                continue
            pending = _pending_interpretation(state, aid)
            if pending is not None:
                ambiguities[aid] = amb.resolve(pending)
            else:
                ambiguities[aid] = amb.eliminate()
            changed = True
        if not changed:
            return state
        state = replace(state, ambiguities=ambiguities)


def _advance_phase(state: SessionState) -> SessionState:
    if state.phase is Phase.CLARIFYING and next_question(state) is None:
        # With no askable question left the sweep has closed every ambiguity.
        return replace(state, phase=Phase.FINALIZING)
    return state


def apply_answer(state: SessionState, answer: Answer) -> SessionState:
    """Apply one in-order answer and run the pruning sweep.

    The answer must be for exactly the question ``next_question`` would return.
    """
    if state.phase is not Phase.CLARIFYING:
        raise WrongPhaseError(f"cannot answer in phase {state.phase.value}")
    expected = next_question(state)
    if expected is None or answer.question_id != expected.id:
        raise OutOfOrderAnswerError(
            f"expected an answer to {expected.id if expected else 'nothing'}, "
            f"got {answer.question_id!r}"
        )
    if answer.free_text is not None:
        if len(answer.free_text) > FREE_TEXT_MAX_LEN:
            raise FreeTextError(
                f"free text exceeds {FREE_TEXT_MAX_LEN} characters"
            )
        chosen = expected.option(answer.option_id)
        takes_text = (
            expected.allows_free_text
            or answer.option_id == OTHER_OPTION_ID
            # an option that interpolates the text is itself the opt-in
            or (chosen is not None and FREE_TEXT_PLACEHOLDER in chosen.resolves_to)
        )
        if not takes_text:
            raise FreeTextError(
                f"question {expected.id} does not allow free text"
            )
    # Validates the option id and any required free text before committing.
    interpretation_for(expected, answer)

    state = replace(
        state,
        transcript=state.transcript + (answer,),
        updated_at=answer.answered_at,
    )
    return _advance_phase(_sweep(state))


def open_count(state: SessionState) -> int:
    return sum(
        1 for a in state.ambiguities.values() if a.status is AmbiguityStatus.OPEN
    )


def session_summary(state: SessionState) -> dict[str, int]:
    """Question accounting: asked + skipped always equals the plan size."""
    asked = len(state.transcript)
    total = len(state.plan.questions)
    return {"asked": asked, "skipped": total - asked, "plan_size": total}


def replay(state: SessionState) -> SessionState:
    """Rebuild the final state from the plan and transcript alone.

    Used for crash recovery and determinism checks: all ambiguities are reset
    to open and the transcript is re-applied answer by answer.
    """
    reset = {
        aid: replace(a, status=AmbiguityStatus.OPEN, resolution=None)
        for aid, a in state.ambiguities.items()
    }
    rebuilt = SessionState(
        session_id=state.session_id,
        prompt=state.prompt,
        ambiguities=reset,
        plan=state.plan,
        transcript=(),
        phase=Phase.CLARIFYING,
        created_at=state.created_at,
        updated_at=state.created_at,
    )
    rebuilt = _advance_phase(_sweep(rebuilt))
    for answer in state.transcript:
        rebuilt = apply_answer(rebuilt, answer)
    if state.phase is Phase.DONE:
        rebuilt = replace(rebuilt, phase=Phase.DONE, updated_at=state.updated_at)
    return rebuilt
