"""Shared fixtures plus the acceptance-criteria summary hook."""

from __future__ import annotations

import random

import pytest

from clarify.cli import bundled_data
from clarify.detector import DetectionResult
from clarify.dialogue import QuestionPlan, SessionState, build_session
from clarify.gateway import ProviderConfig
from clarify.model import (
    Ambiguity,
    AmbiguousPrompt,
    ClarificationQuestion,
    Domain,
    Option,
)
from clarify.store import load_dataset


@pytest.fixture(scope="session")
def mock_cfg() -> ProviderConfig:
    return ProviderConfig.mock(str(bundled_data("mock_fixtures.json")))


@pytest.fixture(scope="session")
def corpus():
    return load_dataset(bundled_data("corpus.jsonl"))


def make_prompt(text: str = "do the thing", domain: Domain = Domain.CODING,
                prompt_id: str = "p1") -> AmbiguousPrompt:
    return AmbiguousPrompt(id=prompt_id, text=text, domain=domain)


def make_session(ambiguities: list[Ambiguity],
                 questions: list[ClarificationQuestion],
                 prompt: AmbiguousPrompt | None = None) -> SessionState:
    prompt = prompt or make_prompt()
    detection = DetectionResult(
        prompt_id=prompt.id, ambiguities=tuple(ambiguities), raw_model_text="[]"
    )
    return build_session(prompt, detection, QuestionPlan(tuple(questions)), "s1")


def random_plan(rng: random.Random) -> tuple[list[Ambiguity], list[ClarificationQuestion]]:
    """A random but well-formed plan for property testing.

    Base questions follow ambiguity order so dependency prerequisites are
    always answered before their dependents come up, matching how plans are
    authored. Follow-up questions (0-3, guarded on earlier answers) only
    target ambiguities no other ambiguity depends on, keeping "contradicted
    implies eliminated" assertable from the final state alone.
    """
    n = rng.randint(1, 5)
    ambiguities: list[Ambiguity] = []
    referenced: set[str] = set()
    for j in range(1, n + 1):
        depends: tuple[tuple[str, str], ...] = ()
        if j > 1 and rng.random() < 0.35:
            k = rng.randint(1, j - 1)
            ref = f"A{k}" if rng.random() < 0.5 else f"Q{k}"
            depends = ((ref, rng.choice(["A", "B"])),)
            referenced.add(f"A{k}")
        ambiguities.append(
            Ambiguity(id=f"A{j}", label=f"aspect {j}",
                      description=f"open point {j}", depends_on=depends)
        )

    def options() -> tuple[Option, ...]:
        return (
            Option(id="A", text="First reading.", resolves_to=f"reading a{rng.random():.3f}"),
            Option(id="B", text="Second reading.", resolves_to=f"reading b{rng.random():.3f}"),
        )

    questions = [
        ClarificationQuestion(
            id=f"Q{j}", targets=f"A{j}", text=f"which reading for aspect {j}?",
            options=options(), allows_free_text=rng.random() < 0.3,
        )
        for j in range(1, n + 1)
    ]
    followup_targets = [a.id for a in ambiguities if a.id not in referenced]
    for extra in range(rng.randint(0, 3)):
        if not followup_targets:
            break
        qid = f"Q{n + extra + 1}"
        anchor = rng.choice(questions)
        questions.append(
            ClarificationQuestion(
                id=qid,
                targets=rng.choice(followup_targets),
                text=f"refinement {qid}?",
                options=options(),
                guard=((anchor.id, rng.choice(["A", "B"])),),
                allows_free_text=rng.random() < 0.3,
            )
        )
    return ambiguities, questions


_CRITERIA: dict[str, str] = {}


def pytest_configure(config):
    config.addinivalue_line(
        "markers", "criterion(name): acceptance criterion this test verifies"
    )


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    name = marker.args[0]
    if report.when == "call":
        _CRITERIA[name] = "PASS" if report.passed else "FAIL"
    elif report.when == "setup" and (report.failed or report.skipped):
        _CRITERIA[name] = "FAIL"


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome in _CRITERIA.items():
        terminalreporter.write_line(f"[{outcome}] {name}")
