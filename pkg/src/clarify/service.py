"""Session-oriented service: the engine behind the HTTP API.

`SessionService` owns the store and provider and serializes all mutations per
session id, so concurrent posts against one session can never interleave; the
loser of the race sees the advanced state and gets a conflict. Every mutation
is persisted before the response is produced.

`create_app` wraps the service in a FastAPI application whose responses are
the canonical serialized domain types, and whose failures are always a single
ApiError body.
"""

from __future__ import annotations

import logging
import threading
import uuid
from enum import Enum
from pathlib import Path
from typing import Any, Optional

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse, PlainTextResponse

from . import detector, dialogue, solution
from .gateway import (
    AuthenticationError,
    GatewayError,
    MissingFixtureError,
    ProviderConfig,
    SchemaViolationError,
)
from .model import (
    Answer,
    AmbiguityStatus,
    AmbiguousPrompt,
    Domain,
    InvariantViolation,
    LifecycleViolationError,
    now_utc,
    parse_ts,
)
from .solution import FinalSolution, MissingExampleKindError, OpenAmbiguityError
from .store import (
    CorruptDocumentError,
    SessionStore,
    StoredSession,
    UnknownSessionError,
    export_transcript,
)

logger = logging.getLogger(__name__)


class ErrorCode(str, Enum):
    BAD_REQUEST = "bad_request"
    NOT_FOUND = "not_found"
    CONFLICT = "conflict"
    UPSTREAM_FAILURE = "upstream_failure"
    INVARIANT_VIOLATION = "invariant_violation"


HTTP_STATUS = {
    ErrorCode.BAD_REQUEST: 400,
    ErrorCode.NOT_FOUND: 404,
    ErrorCode.CONFLICT: 409,
    ErrorCode.UPSTREAM_FAILURE: 502,
    ErrorCode.INVARIANT_VIOLATION: 500,
}


class ApiError(Exception):
    """The single error shape every response failure carries."""

    def __init__(
        self,
        code: ErrorCode | str,
        message: str,
        session_id: Optional[str] = None,
    ) -> None:
        super().__init__(message)
        self.code = ErrorCode(code)
        self.message = message
        self.session_id = session_id

    def to_dict(self) -> dict[str, Any]:
        return {
            "error": {
                "code": self.code.value,
                "message": self.message,
                "session_id": self.session_id,
            }
        }


def _map_error(exc: Exception, session_id: Optional[str] = None) -> ApiError:
    """Every engine error maps to exactly one ApiError code."""
    if isinstance(exc, ApiError):
        return exc
    if isinstance(exc, UnknownSessionError):
        return ApiError(ErrorCode.NOT_FOUND, str(exc), session_id)
    if isinstance(
        exc,
        (
            dialogue.OutOfOrderAnswerError,
            dialogue.WrongPhaseError,
            OpenAmbiguityError,
        ),
    ):
        return ApiError(ErrorCode.CONFLICT, str(exc), session_id)
    if isinstance(
        exc,
        (
            dialogue.UnknownOptionError,
            dialogue.FreeTextError,
            InvariantViolation,
            KeyError,
            ValueError,
        ),
    ):
        return ApiError(ErrorCode.BAD_REQUEST, str(exc), session_id)
    if isinstance(
        exc,
        (
            AuthenticationError,
            MissingFixtureError,
            SchemaViolationError,
            MissingExampleKindError,
            GatewayError,
        ),
    ):
        return ApiError(ErrorCode.UPSTREAM_FAILURE, str(exc), session_id)
    if isinstance(
        exc,
        (LifecycleViolationError, CorruptDocumentError, dialogue.DialogueError),
    ):
        return ApiError(ErrorCode.INVARIANT_VIOLATION, str(exc), session_id)
    logger.exception("unmapped error in session %s", session_id)
    return ApiError(ErrorCode.INVARIANT_VIOLATION, str(exc), session_id)


def _question_view(q: Optional[dialogue.ClarificationQuestion]) -> Optional[dict[str, Any]]:
    return None if q is None else q.to_dict()


def session_view(doc: StoredSession) -> dict[str, Any]:
    """The full client-facing projection of one stored session."""
    state = doc.state
    closed = sum(
        1
        for a in state.ambiguities.values()
        if a.status is not AmbiguityStatus.OPEN
    )
    if state.phase is dialogue.Phase.CLARIFYING:
        nxt = _question_view(dialogue.next_question(state))
    else:
        nxt = None
    return {
        "session_id": state.session_id,
        "phase": state.phase.value,
        "prompt": state.prompt.to_dict(),
        "ambiguities": [a.to_dict() for a in state.ambiguities.values()],
        "open_count": dialogue.open_count(state),
        "progress": {"closed": closed, "total": len(state.ambiguities)},
        "plan_size": len(state.plan.questions),
        "transcript": [a.to_dict() for a in state.transcript],
        "next": nxt,
        "solution": doc.solution.to_dict() if doc.solution else None,
        "revision_used": doc.revision_used,
    }


class SessionService:
    """Create, advance, and finalize sessions over a store and a provider."""

    def __init__(
        self,
        store: SessionStore,
        cfg: ProviderConfig,
        model: str = "gpt-4o",
    ) -> None:
        self.store = store
        self.cfg = cfg
        self.model = model
        self._locks: dict[str, threading.Lock] = {}
        self._registry_lock = threading.Lock()

    def _lock(self, session_id: str) -> threading.Lock:
        with self._registry_lock:
            return self._locks.setdefault(session_id, threading.Lock())

    # -- operations ---------------------------------------------------------

    def create_session(
        self,
        text: str,
        domain: str | Domain,
        context: Optional[str] = None,
        prompt_id: Optional[str] = None,
    ) -> dict[str, Any]:
        if not text or not text.strip():
            raise ApiError(ErrorCode.BAD_REQUEST, "prompt text must be nonempty")
        session_id = uuid.uuid4().hex[:12]
        try:
            prompt = AmbiguousPrompt(
                id=prompt_id or session_id,
                text=text,
                domain=Domain(domain),
                context=context,
            )
            detection = detector.detect(prompt, self.cfg, model=self.model)
            if detection.ambiguities:
                plan = dialogue.plan_questions(detection, self.cfg, model=self.model)
            else:
                plan = dialogue.QuestionPlan(questions=())
            state = dialogue.build_session(prompt, detection, plan, session_id)
        except ApiError:
            raise
        except Exception as exc:
            raise _map_error(exc) from exc
        doc = StoredSession(state=state)
        with self._lock(session_id):
            self.store.save(doc)
        return {
            "session_id": session_id,
            "detection": detection.to_dict(),
            "view": session_view(doc),
        }

    def get_session(self, session_id: str) -> dict[str, Any]:
        try:
            return session_view(self.store.load(session_id))
        except Exception as exc:
            raise _map_error(exc, session_id) from exc

    def get_next(self, session_id: str) -> dict[str, Any]:
        try:
            doc = self.store.load(session_id)
            state = doc.state
            if state.phase is dialogue.Phase.DONE:
                raise ApiError(
                    ErrorCode.CONFLICT, "session already finalized", session_id
                )
            if state.phase is not dialogue.Phase.CLARIFYING:
                return {"done": True, "phase": state.phase.value, "question": None}
            q = dialogue.next_question(state)
            return {
                "done": q is None,
                "phase": state.phase.value,
                "question": _question_view(q),
            }
        except Exception as exc:
            raise _map_error(exc, session_id) from exc

    def post_answer(self, session_id: str, payload: dict[str, Any]) -> dict[str, Any]:
        try:
            answer = Answer(
                question_id=payload["question_id"],
                option_id=payload["option_id"],
                free_text=payload.get("free_text"),
                answered_at=(
                    parse_ts(payload["answered_at"])
                    if payload.get("answered_at")
                    else now_utc()
                ),
            )
        except (KeyError, ValueError, TypeError) as exc:
            raise _map_error(exc, session_id) from exc
        with self._lock(session_id):
            try:
                doc = self.store.load(session_id)
                state = dialogue.apply_answer(doc.state, answer)
                doc = StoredSession(
                    state=state,
                    solution=doc.solution,
                    revision_used=doc.revision_used,
                )
                self.store.save(doc)  # durable before the client hears back
            except Exception as exc:
                raise _map_error(exc, session_id) from exc
        nxt = (
            dialogue.next_question(state)
            if state.phase is dialogue.Phase.CLARIFYING
            else None
        )
        return {
            "statuses": state.status_map(),
            "open_count": dialogue.open_count(state),
            "phase": state.phase.value,
            "next": _question_view(nxt),
            "view": session_view(doc),
        }

    def finalize(
        self, session_id: str, feedback: Optional[str] = None
    ) -> dict[str, Any]:
        with self._lock(session_id):
            try:
                doc = self.store.load(session_id)
                if doc.solution is None:
                    state, final = solution.generate_solution(
                        doc.state, self.cfg, model=self.model
                    )
                    doc = StoredSession(state=state, solution=final)
                    self.store.save(doc)
                if feedback is not None and feedback.strip():
                    if doc.revision_used:
                        raise ApiError(
                            ErrorCode.CONFLICT,
                            "the single feedback revision was already used",
                            session_id,
                        )
                    revised = solution.revise_solution(
                        doc.state, doc.solution, feedback, self.cfg, model=self.model
                    )
                    doc = StoredSession(
                        state=doc.state, solution=revised, revision_used=True
                    )
                    self.store.save(doc)
            except Exception as exc:
                raise _map_error(exc, session_id) from exc
        return {
            "solution": doc.solution.to_dict(),
            "phase": doc.state.phase.value,
            "revision_used": doc.revision_used,
        }

    def get_transcript(self, session_id: str) -> str:
        try:
            return export_transcript(self.store.load(session_id))
        except Exception as exc:
            raise _map_error(exc, session_id) from exc


def create_app(service: SessionService, ui_dir: Optional[str | Path] = None) -> FastAPI:
    """FastAPI application over a SessionService.

    When `ui_dir` points at a built frontend, it is served at the root path.
    """
    app = FastAPI(title="clarify", docs_url=None, redoc_url=None)

    @app.exception_handler(ApiError)
    async def _api_error(_request: Request, exc: ApiError) -> JSONResponse:
        return JSONResponse(status_code=HTTP_STATUS[exc.code], content=exc.to_dict())

    @app.exception_handler(Exception)
    async def _any_error(_request: Request, exc: Exception) -> JSONResponse:
        mapped = _map_error(exc)
        return JSONResponse(
            status_code=HTTP_STATUS[mapped.code], content=mapped.to_dict()
        )

    @app.post("/sessions")
    async def create_session(request: Request) -> JSONResponse:
        body = await request.json()
        if not isinstance(body, dict):
            raise ApiError(ErrorCode.BAD_REQUEST, "body must be an object")
        try:
            result = service.create_session(
                text=body.get("text", ""),
                domain=body.get("domain", ""),
                context=body.get("context"),
                prompt_id=body.get("prompt_id"),
            )
        except ApiError:
            raise
        except Exception as exc:
            raise _map_error(exc) from exc
        return JSONResponse(status_code=201, content=result)

    @app.get("/sessions/{session_id}")
    async def get_session(session_id: str) -> dict[str, Any]:
        return service.get_session(session_id)

    @app.get("/sessions/{session_id}/next")
    async def get_next(session_id: str) -> dict[str, Any]:
        return service.get_next(session_id)

    @app.post("/sessions/{session_id}/answers")
    async def post_answer(session_id: str, request: Request) -> dict[str, Any]:
        body = await request.json()
        if not isinstance(body, dict):
            raise ApiError(ErrorCode.BAD_REQUEST, "body must be an object", session_id)
        return service.post_answer(session_id, body)

    @app.post("/sessions/{session_id}/finalize")
    async def finalize(session_id: str, request: Request) -> dict[str, Any]:
        raw = await request.body()
        feedback = None
        if raw:
            body = await request.json()
            if not isinstance(body, dict):
                raise ApiError(
                    ErrorCode.BAD_REQUEST, "body must be an object", session_id
                )
            feedback = body.get("feedback")
        return service.finalize(session_id, feedback)

    @app.get("/sessions/{session_id}/transcript")
    async def get_transcript(session_id: str) -> PlainTextResponse:
        return PlainTextResponse(service.get_transcript(session_id))

    if ui_dir is not None:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app
