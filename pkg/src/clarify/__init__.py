"""Interactive disambiguation of underspecified prompts.

Detect what a request leaves open, ask multi-option clarification questions
that cut the interpretation space, and compile the surviving interpretations
into a final artifact with representative examples.
"""

from .model import (
    Ambiguity,
    AmbiguityStatus,
    AmbiguousPrompt,
    Answer,
    ClarificationQuestion,
    Domain,
    Illustration,
    InvariantViolation,
    LifecycleViolationError,
    Option,
    Phase,
)
from .gateway import ChatMessage, ChatRequest, GatewayError, ProviderConfig
from .detector import DetectionResult, detect
from .dialogue import (
    QuestionPlan,
    SessionState,
    apply_answer,
    build_session,
    next_question,
    open_count,
    plan_questions,
    replay,
)
from .solution import (
    ArtifactKind,
    ExampleKind,
    FinalSolution,
    RepresentativeExample,
    build_disambiguated_prompt,
    generate_solution,
)
from .store import Dataset, DatasetRecord, SessionStore, StoredSession, load_dataset
from .evaluation import (
    Alignment,
    AlignmentMode,
    PrfMetrics,
    align,
    compute_prf,
    simulate_user,
)

__all__ = [
    "Ambiguity",
    "AmbiguityStatus",
    "AmbiguousPrompt",
    "Answer",
    "ClarificationQuestion",
    "Domain",
    "Illustration",
    "InvariantViolation",
    "LifecycleViolationError",
    "Option",
    "Phase",
    "ChatMessage",
    "ChatRequest",
    "GatewayError",
    "ProviderConfig",
    "DetectionResult",
    "detect",
    "QuestionPlan",
    "SessionState",
    "apply_answer",
    "build_session",
    "next_question",
    "open_count",
    "plan_questions",
    "replay",
    "ArtifactKind",
    "ExampleKind",
    "FinalSolution",
    "RepresentativeExample",
    "build_disambiguated_prompt",
    "generate_solution",
    "Dataset",
    "DatasetRecord",
    "SessionStore",
    "StoredSession",
    "load_dataset",
    "Alignment",
    "AlignmentMode",
    "PrfMetrics",
    "align",
    "compute_prf",
    "simulate_user",
]

__version__ = "0.1.0"
