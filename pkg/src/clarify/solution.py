"""Final-solution assembly: disambiguated prompt, artifact, examples.

The disambiguated prompt is a fixed template, not model output, so the same
session always yields the same bytes and stored prompts can be diffed. The
artifact and its representative examples come from the model; the engine never
executes generated code, it presents examples for the user to judge.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from enum import Enum
from typing import Any, Optional

from .dialogue import SessionState
from .gateway import (
    ChatMessage,
    ChatRequest,
    ProviderConfig,
    ResponseFormat,
    Role,
    complete_structured,
)
from .model import AmbiguityStatus, Domain, InvariantViolation, Phase

logger = logging.getLogger(__name__)


class SolutionError(Exception):
    pass


class OpenAmbiguityError(SolutionError):
    """Finalization attempted while ambiguities are still open."""


class MissingExampleKindError(SolutionError):
    """The model never produced the required example kinds."""

    def __init__(self, missing: set[str]) -> None:
        super().__init__(f"missing example kinds: {sorted(missing)}")
        self.missing = frozenset(missing)


class ExampleKind(str, Enum):
    SELECTED = "selected"
    NOT_SELECTED = "not_selected"
    EDGE = "edge"


class ArtifactKind(str, Enum):
    SQL = "sql"
    CODE = "code"
    ANALYSIS = "analysis"
    NARRATIVE = "narrative"


# Creative writing keeps some variety; everything else runs deterministic.
CREATIVE_TEMPERATURE = 0.7

_DOMAIN_ARTIFACT_HINT = {
    Domain.CODING: "code",
    Domain.DATA_ANALYSIS: "sql, code, or analysis",
    Domain.CREATIVE_WRITING: "narrative",
}


@dataclass(frozen=True)
class RepresentativeExample:
    """One illustrative behavior of the artifact: an input and what happens."""

    kind: ExampleKind
    input_description: str
    expected_behavior: str

    def __post_init__(self) -> None:
        if not isinstance(self.kind, ExampleKind):
            object.__setattr__(self, "kind", ExampleKind(self.kind))

    def to_dict(self) -> dict[str, Any]:
        return {
            "kind": self.kind.value,
            "input_description": self.input_description,
            "expected_behavior": self.expected_behavior,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "RepresentativeExample":
        return cls(
            kind=ExampleKind(data["kind"]),
            input_description=data["input_description"],
            expected_behavior=data["expected_behavior"],
        )


@dataclass(frozen=True)
class FinalSolution:
    session_id: str
    disambiguated_prompt: str
    artifact: str
    artifact_kind: ArtifactKind
    examples: tuple[RepresentativeExample, ...] = ()

    def __post_init__(self) -> None:
        if not isinstance(self.artifact_kind, ArtifactKind):
            object.__setattr__(self, "artifact_kind", ArtifactKind(self.artifact_kind))
        object.__setattr__(self, "examples", tuple(self.examples))
        if not self.artifact:
            raise InvariantViolation("artifact must be nonempty")
        missing = missing_example_kinds(self.artifact_kind, self.examples)
        if missing:
            raise MissingExampleKindError(missing)

    def to_dict(self) -> dict[str, Any]:
        return {
            "session_id": self.session_id,
            "disambiguated_prompt": self.disambiguated_prompt,
            "artifact": self.artifact,
            "artifact_kind": self.artifact_kind.value,
            "examples": [e.to_dict() for e in self.examples],
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "FinalSolution":
        return cls(
            session_id=data["session_id"],
            disambiguated_prompt=data["disambiguated_prompt"],
            artifact=data["artifact"],
            artifact_kind=ArtifactKind(data["artifact_kind"]),
            examples=tuple(
                RepresentativeExample.from_dict(e) for e in data.get("examples") or ()
            ),
        )


def missing_example_kinds(
    kind: ArtifactKind, examples: tuple[RepresentativeExample, ...]
) -> set[str]:
    """Kinds the example set still owes for this artifact kind.

    Non-narrative artifacts need at least one example of every kind; a
    narrative just needs one illustrative excerpt of any kind.
    """
    present = {e.kind.value for e in examples}
    if kind is ArtifactKind.NARRATIVE:
        return set() if present else {"any"}
    return {k.value for k in ExampleKind} - present


def build_disambiguated_prompt(state: SessionState) -> str:
    """Original prompt plus one "<label>: <interpretation>" line per resolution.

    Lines follow ambiguity insertion order; eliminated ambiguities are omitted.
    """
    if state.phase not in (Phase.FINALIZING, Phase.DONE):
        raise OpenAmbiguityError(
            f"cannot build disambiguated prompt in phase {state.phase.value}"
        )
    lines = [state.prompt.text.rstrip()]
    resolved = [
        a
        for a in state.ambiguities.values()
        if a.status is AmbiguityStatus.RESOLVED
    ]
    if resolved:
        lines.append("")
        for a in resolved:
            lines.append(f"{a.label}: {a.resolution}")
    return "\n".join(lines)


SOLVE_INSTRUCTION = """\
Produce the final deliverable for the user's now fully-specified request.
Honor every stated interpretation exactly; do not reintroduce choices the
user already made. Also include representative examples that let the user
check the behavior: at least one "selected" (clearly in scope), one
"not_selected" (clearly out), and one "edge" (borderline) case, except for
narrative work, where one illustrative excerpt suffices.

Reply with ONLY a JSON object:
{"artifact": "...", "artifact_kind": "sql|code|analysis|narrative",
 "examples": [{"kind": "selected|not_selected|edge",
   "input_description": "...", "expected_behavior": "..."}]}
"""

EXAMPLES_INSTRUCTION = """\
Given a finished artifact, produce representative examples of its behavior:
at least one "selected" (input clearly handled/included), one "not_selected"
(clearly excluded), and one "edge" (borderline) case. Each example pairs a
concrete input with the exact expected behavior.

Reply with ONLY a JSON object:
{"examples": [{"kind": "selected|not_selected|edge",
  "input_description": "...", "expected_behavior": "..."}]}
"""

_KIND_CORRECTIVE = (
    "Your examples are missing these kinds: {missing}. "
    "Reply again with the full JSON object including at least one example "
    "of every missing kind."
)


def _temperature_for(domain: Domain) -> float:
    return CREATIVE_TEMPERATURE if domain is Domain.CREATIVE_WRITING else 0.0


def build_solve_request(state: SessionState, model: str) -> ChatRequest:
    hint = _DOMAIN_ARTIFACT_HINT[state.prompt.domain]
    return ChatRequest(
        model=model,
        messages=(
            ChatMessage(Role.SYSTEM, SOLVE_INSTRUCTION),
            ChatMessage(
                Role.USER,
                f"Expected artifact kind: {hint}\n\n"
                + build_disambiguated_prompt(state),
            ),
        ),
        temperature=_temperature_for(state.prompt.domain),
        response_format=ResponseFormat.STRUCTURED_OBJECT,
        fixture_key=f"solve:{state.prompt.id}",
    )


def _parse_examples(items: list[dict[str, Any]]) -> tuple[RepresentativeExample, ...]:
    return tuple(RepresentativeExample.from_dict(e) for e in items)


def generate_examples(
    artifact: str,
    artifact_kind: ArtifactKind,
    cfg: ProviderConfig,
    model: str = "gpt-4o",
    fixture_key: Optional[str] = None,
) -> tuple[RepresentativeExample, ...]:
    """Ask the model for examples; one corrective re-prompt on missing kinds."""
    req = ChatRequest(
        model=model,
        messages=(
            ChatMessage(Role.SYSTEM, EXAMPLES_INSTRUCTION),
            ChatMessage(Role.USER, f"Artifact ({artifact_kind.value}):\n{artifact}"),
        ),
        temperature=0.0,
        response_format=ResponseFormat.STRUCTURED_OBJECT,
        fixture_key=fixture_key,
    )
    examples = _parse_examples(complete_structured(cfg, req, "example_set")["examples"])
    missing = missing_example_kinds(artifact_kind, examples)
    if not missing:
        return examples
    retry = replace(
        req,
        messages=req.messages
        + (
            ChatMessage(Role.USER, _KIND_CORRECTIVE.format(missing=sorted(missing))),
        ),
    )
    examples = _parse_examples(
        complete_structured(cfg, retry, "example_set")["examples"]
    )
    missing = missing_example_kinds(artifact_kind, examples)
    if missing:
        raise MissingExampleKindError(missing)
    return examples


def generate_solution(
    state: SessionState, cfg: ProviderConfig, model: str = "gpt-4o"
) -> tuple[SessionState, FinalSolution]:
    """Finalize the session: generate the artifact and mark the session done.

    States are immutable, so the done-phase state is returned alongside the
    solution. Finalization adds no new timestamp; the result is a pure
    function of the session and the provider fixtures.
    """
    if state.phase is not Phase.FINALIZING:
        raise OpenAmbiguityError(
            f"cannot generate a solution in phase {state.phase.value}"
        )
    open_ids = [
        a.id
        for a in state.ambiguities.values()
        if a.status is AmbiguityStatus.OPEN
    ]
    if open_ids:
        raise OpenAmbiguityError(f"ambiguities still open: {open_ids}")

    prompt_text = build_disambiguated_prompt(state)
    obj = complete_structured(cfg, build_solve_request(state, model), "final_solution")
    artifact = obj["artifact"]
    artifact_kind = ArtifactKind(obj["artifact_kind"])
    examples = _parse_examples(obj.get("examples") or [])
    if missing_example_kinds(artifact_kind, examples):
        examples = generate_examples(
            artifact,
            artifact_kind,
            cfg,
            model=model,
            fixture_key=f"examples:{state.prompt.id}",
        )

    solution = FinalSolution(
        session_id=state.session_id,
        disambiguated_prompt=prompt_text,
        artifact=artifact,
        artifact_kind=artifact_kind,
        examples=examples,
    )
    for a in state.ambiguities.values():
        if a.status is AmbiguityStatus.RESOLVED and a.resolution not in prompt_text:
            raise InvariantViolation(
                f"resolution of {a.id} missing from disambiguated prompt"
            )
    return replace(state, phase=Phase.DONE), solution


REVISE_INSTRUCTION = """\
The user reviewed your deliverable and left feedback. Produce a revised
version of the full artifact and refreshed examples, keeping every
interpretation from the original request.

Reply with ONLY a JSON object:
{"artifact": "...", "artifact_kind": "sql|code|analysis|narrative",
 "examples": [{"kind": "selected|not_selected|edge",
   "input_description": "...", "expected_behavior": "..."}]}
"""


def revise_solution(
    state: SessionState,
    solution: FinalSolution,
    feedback: str,
    cfg: ProviderConfig,
    model: str = "gpt-4o",
) -> FinalSolution:
    """Apply one round of post-finalization feedback to the artifact.

    The service layer allows this exactly once per session; the function
    itself is stateless.
    """
    if state.phase is not Phase.DONE:
        raise OpenAmbiguityError(f"cannot revise in phase {state.phase.value}")
    if not feedback or not feedback.strip():
        raise InvariantViolation("feedback must be nonempty")
    req = ChatRequest(
        model=model,
        messages=(
            ChatMessage(Role.SYSTEM, REVISE_INSTRUCTION),
            ChatMessage(
                Role.USER,
                f"Original request:\n{solution.disambiguated_prompt}\n\n"
                f"Current artifact ({solution.artifact_kind.value}):\n"
                f"{solution.artifact}\n\nFeedback: {feedback}",
            ),
        ),
        temperature=_temperature_for(state.prompt.domain),
        response_format=ResponseFormat.STRUCTURED_OBJECT,
        fixture_key=f"revise:{state.prompt.id}",
    )
    obj = complete_structured(cfg, req, "final_solution")
    artifact_kind = ArtifactKind(obj["artifact_kind"])
    examples = _parse_examples(obj.get("examples") or [])
    if missing_example_kinds(artifact_kind, examples):
        examples = generate_examples(
            obj["artifact"],
            artifact_kind,
            cfg,
            model=model,
            fixture_key=f"examples:{state.prompt.id}",
        )
    return FinalSolution(
        session_id=solution.session_id,
        disambiguated_prompt=solution.disambiguated_prompt,
        artifact=obj["artifact"],
        artifact_kind=artifact_kind,
        examples=examples,
    )
