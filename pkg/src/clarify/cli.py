"""Command-line entry points: serve the API, run evaluations, replay sessions."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from importlib import resources
from pathlib import Path
from typing import Optional, Sequence

from . import dialogue, evaluation
from .evaluation import AlignmentMode
from .gateway import ProviderConfig
from .service import SessionService, create_app
from .store import SessionStore, StoredSession, load_dataset

logger = logging.getLogger(__name__)

ALIGN_CHOICES = {
    "exact": AlignmentMode.EXACT_LABEL,
    "overlap": AlignmentMode.TOKEN_OVERLAP,
    "judge": AlignmentMode.LLM_JUDGE,
}


def bundled_data(name: str) -> Path:
    """Path of a file shipped inside the package's data directory."""
    return Path(str(resources.files("clarify") / "data" / name))


def _provider_config(args: argparse.Namespace) -> ProviderConfig:
    if args.provider == "mock":
        fixtures = args.fixtures or str(bundled_data("mock_fixtures.json"))
        return ProviderConfig.mock(fixtures)
    if not args.base_url:
        raise SystemExit("--base-url is required with --provider http")
    return ProviderConfig.http(args.base_url, api_key_env=args.api_key_env)


def _add_provider_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--provider", choices=["mock", "http"], default="mock",
        help="chat backend (default: mock)",
    )
    parser.add_argument(
        "--fixtures", metavar="PATH",
        help="fixture file for the mock provider (default: bundled)",
    )
    parser.add_argument("--base-url", help="chat-completions base URL (http provider)")
    parser.add_argument(
        "--api-key-env", default="OPENAI_API_KEY", metavar="VAR",
        help="environment variable holding the API key (default: OPENAI_API_KEY)",
    )
    parser.add_argument("--model", default="gpt-4o", help="model name (default: gpt-4o)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="clarify",
        description="Interactive prompt disambiguation: serve, evaluate, replay.",
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    serve = sub.add_parser("serve", help="run the session API")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8000)
    serve.add_argument(
        "--store", metavar="DIR", default=".clarify-sessions",
        help="session persistence directory",
    )
    serve.add_argument(
        "--ui", metavar="DIR",
        help="serve a built frontend from this directory at /",
    )
    _add_provider_args(serve)

    ev = sub.add_parser("eval", help="run the measurement harness over a dataset")
    ev.add_argument("--dataset", metavar="PATH", required=True)
    ev.add_argument(
        "--mode", choices=["detect", "full", "efficiency"], default="detect"
    )
    ev.add_argument("--align", choices=sorted(ALIGN_CHOICES), default="exact")
    ev.add_argument("--out", metavar="PATH", help="write the report here (default: stdout)")
    ev.add_argument("--survey", metavar="PATH", help="survey responses CSV to aggregate")
    ev.add_argument("--workers", type=int, default=4)
    ev.add_argument(
        "--macro", action="store_true",
        help="macro-average instead of pooled counts",
    )
    _add_provider_args(ev)

    rp = sub.add_parser("replay", help="re-derive a stored session from its transcript")
    rp.add_argument("--session", metavar="FILE", required=True)

    return parser


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    service = SessionService(
        store=SessionStore(args.store),
        cfg=_provider_config(args),
        model=args.model,
    )
    app = create_app(service, ui_dir=args.ui)
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    dataset = load_dataset(args.dataset)
    report = evaluation.build_report(
        dataset,
        _provider_config(args),
        mode=args.mode,
        align_mode=ALIGN_CHOICES[args.align],
        model=args.model,
        workers=args.workers,
        macro=args.macro,
        survey_path=args.survey,
    )
    if args.out:
        evaluation.write_report(report, args.out)
        print(f"report written to {args.out}")
    else:
        print(json.dumps(report, indent=2, ensure_ascii=False))
    errors = evaluation.report_errors(report)
    if errors:
        print(f"{len(errors)} record(s) failed:", file=sys.stderr)
        for e in errors:
            print(f"  {e['record']}: {e['error']}", file=sys.stderr)
        return 1
    return 0


def cmd_replay(args: argparse.Namespace) -> int:
    data = json.loads(Path(args.session).read_text(encoding="utf-8"))
    doc = StoredSession.from_dict(data)
    rebuilt = dialogue.replay(doc.state)
    summary = dialogue.session_summary(rebuilt)
    print(
        f"session {rebuilt.session_id}: {len(rebuilt.transcript)} answers, "
        f"{summary['skipped']} skipped, phase {rebuilt.phase.value}, "
        f"{dialogue.open_count(rebuilt)} open"
    )
    if rebuilt.to_dict() == doc.state.to_dict():
        print("replay matches the stored state")
        return 0
    print("replay DIVERGES from the stored state", file=sys.stderr)
    return 1


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(asctime)s %(name)s %(levelname)s %(message)s",
    )
    handlers = {"serve": cmd_serve, "eval": cmd_eval, "replay": cmd_replay}
    return handlers[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
