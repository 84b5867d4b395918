"""Ambiguity detection: turn a raw prompt into a ranked list of open ambiguities.

Detection quality is delegated entirely to the backing model; this module owns
the instruction, the output coercion, and the cleanup rules (duplicate merge,
impact cap). User-supplied context is forwarded so terms that are clear in
context do not get flagged.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any

from .gateway import (
    ChatMessage,
    ChatRequest,
    ProviderConfig,
    ResponseFormat,
    Role,
    SchemaViolationError,
    complete_structured_raw,
)
from .model import Ambiguity, AmbiguousPrompt, normalize_label

# Dataset prompts carry at most 5 reference ambiguities; capping the ranked
# model output at 8 bounds dialogue length without ever truncating them.
MAX_AMBIGUITIES = 8

DETECT_INSTRUCTION = """\
You analyze a natural-language task request and identify the ambiguities in it:
terms or phrases that admit multiple reasonable interpretations and would change
the produced result depending on which one is meant.

Rules:
- Report at most {cap} ambiguities, ranked by how much each one affects the result.
- Only flag genuinely ambiguous wording. If the provided context already pins a
  term down, do not flag that term.
- Give each ambiguity a short label and a one-sentence description of the
  competing interpretations.

Reply with ONLY a JSON object of the form:
{{"ambiguities": [{{"id": "A1", "label": "...", "description": "..."}}]}}
Use ids A1, A2, ... in rank order. Reply {{"ambiguities": []}} if nothing is ambiguous.
"""


@dataclass(frozen=True)
class DetectionResult:
    """Detected ambiguities for one prompt plus the raw model text for audit."""

    prompt_id: str
    ambiguities: tuple[Ambiguity, ...]
    raw_model_text: str

    def to_dict(self) -> dict[str, Any]:
        return {
            "prompt_id": self.prompt_id,
            "ambiguities": [a.to_dict() for a in self.ambiguities],
            "raw_model_text": self.raw_model_text,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "DetectionResult":
        return cls(
            prompt_id=data["prompt_id"],
            ambiguities=tuple(Ambiguity.from_dict(a) for a in data["ambiguities"]),
            raw_model_text=data.get("raw_model_text", ""),
        )


def build_detect_request(prompt: AmbiguousPrompt, model: str) -> ChatRequest:
    user_parts = [f"Task domain: {prompt.domain.value}"]
    if prompt.context:
        user_parts.append(
            "Context (terms explained here are NOT ambiguous):\n" + prompt.context
        )
    user_parts.append("Request:\n" + prompt.text)
    return ChatRequest(
        model=model,
        messages=(
            ChatMessage(Role.SYSTEM, DETECT_INSTRUCTION.format(cap=MAX_AMBIGUITIES)),
            ChatMessage(Role.USER, "\n\n".join(user_parts)),
        ),
        temperature=0.0,
        response_format=ResponseFormat.STRUCTURED_OBJECT,
        fixture_key=f"detect:{prompt.id}",
    )


def coerce_ambiguities(entries: list[dict[str, Any]]) -> tuple[Ambiguity, ...]:
    """Turn raw model entries into open ambiguities.

    Duplicates by normalized label are merged keeping the first description;
    missing ids are assigned positionally; the ranked list is capped.
    """
    seen_labels: set[str] = set()
    out: list[Ambiguity] = []
    for entry in entries:
        label = entry["label"].strip()
        norm = normalize_label(label)
        if not norm or norm in seen_labels:
            continue
        seen_labels.add(norm)
        out.append(
            Ambiguity(
                id=entry.get("id") or f"A{len(out) + 1}",
                label=label,
                description=entry.get("description", "").strip(),
                depends_on=tuple(tuple(p) for p in entry.get("depends_on") or ()),
            )
        )
        if len(out) == MAX_AMBIGUITIES:
            break
    ids = [a.id for a in out]
    if len(set(ids)) != len(ids):
        raise SchemaViolationError("ambiguity_list", f"duplicate ambiguity ids: {ids}")
    return tuple(out)


def detect(
    prompt: AmbiguousPrompt, cfg: ProviderConfig, model: str = "gpt-4o"
) -> DetectionResult:
    """Analyze one prompt and return its detected ambiguities, all open."""
    req = build_detect_request(prompt, model)
    obj, raw = complete_structured_raw(cfg, req, "ambiguity_list")
    return DetectionResult(
        prompt_id=prompt.id,
        ambiguities=coerce_ambiguities(obj["ambiguities"]),
        raw_model_text=raw,
    )
