"""Command-line entry points.

Exit status: 0 when the command's success predicate holds, 1 when it does
not (a plan failed its critics, a check found violations), 2 on usage or
input errors.  Data goes to stdout, diagnostics to stderr.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

from .critics import CRITIC_IDS, SELECTORS, catalog, critic_set, emit_extraction_prompt, run_critics
from .evaluator import (
    analytics_files,
    critic_cooccurrence,
    critic_frequency,
    evaluate_corpus,
    pass_by_iteration,
    render_report,
    write_report_files,
)
from .generators import GeneratorError, GreedyGenerator, LlmConfig, LlmGenerator, ScriptedGenerator
from .metacontroller import DEFAULT_MAX_ITERATIONS, SessionResult, load_traces, plan_json, run_session
from .plan import parse_plan_text
from .query import Query, QueryError, extract_query_fields, parse_query
from .sandbox import Sandbox, SandboxLoadError, load_sandbox
from .synthetic import synthetic_corpus, write_queries, write_synthetic_sandbox

logger = logging.getLogger("llm_modulo")

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    """Bad flags or unreadable inputs; reported with exit status 2."""


@dataclass(frozen=True)
class RunConfig:
    sandbox: Path
    generator: str = "greedy"
    selector: str = "all"
    max_iterations: int = DEFAULT_MAX_ITERATIONS
    out: Path = Path("out")
    jobs: int = 1
    seed: int = 0
    llm: LlmConfig = LlmConfig()

    def __post_init__(self):
        if self.jobs < 1:
            raise UsageError("--jobs must be >= 1")
        if self.max_iterations < 1:
            raise UsageError("--max-iters must be >= 1")
        if self.selector not in SELECTORS:
            raise UsageError(f"--critics must be one of {', '.join(SELECTORS)}")


# --- input helpers -------------------------------------------------------------


def _open_sandbox(path: Path) -> Sandbox:
    try:
        sb = load_sandbox(path)
    except SandboxLoadError as exc:
        raise UsageError(f"cannot load sandbox: {exc}") from exc
    for diag in sb.diagnostics:
        print(f"warning: {diag}", file=sys.stderr)
    return sb


def _read_script(path: str) -> list[str]:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise UsageError(f"cannot read script {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise UsageError(f"script {path} is not JSON: {exc}") from exc
    if not isinstance(doc, list) or not doc or not all(isinstance(x, str) for x in doc):
        raise UsageError(f"script {path} must be a nonempty JSON array of reply strings")
    return doc


def generator_factory(cfg: RunConfig, sb: Sandbox) -> Callable[[Query], object]:
    """A function building a fresh generator for each query."""
    spec = cfg.generator
    if spec == "greedy":
        return lambda q: GreedyGenerator(q, sb)
    if spec.startswith("scripted:"):
        replies = _read_script(spec.split(":", 1)[1])
        return lambda q: ScriptedGenerator(replies, description=spec)
    if spec == "llm":
        shared = LlmGenerator(cfg.llm)
        return lambda q: shared
    raise UsageError(f"unknown generator {spec!r}; expected llm, greedy or scripted:<file>")


def _query_from_text(text: str, nl: bool, cfg: RunConfig | None) -> Query:
    text = text.strip()
    if not nl:
        try:
            return Query.from_dict(json.loads(text))
        except json.JSONDecodeError as exc:
            raise UsageError(f"query is not a JSON object (use --nl for natural language): {exc}") from exc
    if text.startswith("{"):
        d = json.loads(text)
        text = d.get("query") or d.get("text") or ""
        if not text:
            return Query.from_dict(d)
    try:
        return parse_query(text)
    except QueryError as exc:
        if cfg is None or cfg.generator != "llm":
            raise
        logger.info("template parse failed (%s); asking the generator", exc)
        return extract_query_fields(text, LlmGenerator(cfg.llm))


def read_query_file(path: str | Path, nl: bool = False, cfg: RunConfig | None = None) -> list[Query]:
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise UsageError(f"cannot read queries {path}: {exc.strerror}") from exc
    out = []
    for n, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            q = _query_from_text(line, nl, cfg)
        except (QueryError, UsageError, json.JSONDecodeError) as exc:
            raise UsageError(f"{path}:{n}: {exc}") from exc
        if q.query_id is None:
            q = Query(**{**q.__dict__, "query_id": f"q{len(out) + 1:03d}"})
        out.append(q)
    return out


def _select_query(args, cfg: RunConfig | None) -> Query:
    if args.query:
        try:
            return _query_from_text(args.query, args.nl, cfg)
        except QueryError as exc:
            raise UsageError(f"bad query: {exc}") from exc
    if args.queries:
        queries = read_query_file(args.queries, args.nl, cfg)
        if not 0 <= args.index < len(queries):
            raise UsageError(f"--index {args.index} out of range for {len(queries)} queries")
        return queries[args.index]
    raise UsageError("give a query with --query or --queries")


def _run_config(args) -> RunConfig:
    if not args.sandbox:
        raise UsageError("--sandbox is required")
    llm = LlmConfig(
        **{k: v for k, v in (("endpoint", args.endpoint), ("model", args.model)) if v},
    )
    return RunConfig(
        sandbox=Path(args.sandbox),
        generator=args.generator,
        selector=args.critics.lower(),
        max_iterations=args.max_iters,
        out=Path(args.out),
        jobs=getattr(args, "jobs", 1),
        seed=args.seed,
        llm=llm,
    )


def _session(q: Query, make_gen, cfg: RunConfig, sb: Sandbox) -> SessionResult:
    return run_session(q, make_gen(q), cfg.selector, sb, cfg.max_iterations, seed=cfg.seed)


# --- commands ------------------------------------------------------------------


def cmd_plan(args) -> int:
    cfg = _run_config(args)
    sb = _open_sandbox(cfg.sandbox)
    q = _select_query(args, cfg)
    make_gen = generator_factory(cfg, sb)
    result = _session(q, make_gen, cfg, sb)
    cfg.out.mkdir(parents=True, exist_ok=True)
    result.write_trace(cfg.out / "session.jsonl")
    (cfg.out / "plan.json").write_text(plan_json(result) + "\n", encoding="utf-8")
    print(json.dumps({k: v for k, v in result.summary().items() if k in (
        "session_id", "delivered", "all_passed", "iterations_used", "error")}))
    if result.error:
        print(f"error: {result.error}", file=sys.stderr)
    return EXIT_OK if result.all_passed else EXIT_FAIL


def cmd_eval(args) -> int:
    cfg = _run_config(args)
    sb = _open_sandbox(cfg.sandbox)
    if not args.queries:
        raise UsageError("--queries is required")
    queries = read_query_file(args.queries, args.nl, cfg)
    if not queries:
        raise UsageError(f"query corpus {args.queries} is empty")
    make_gen = generator_factory(cfg, sb)
    with ThreadPoolExecutor(max_workers=cfg.jobs) as pool:
        sessions = list(pool.map(lambda q: _session(q, make_gen, cfg, sb), queries))
    cfg.out.mkdir(parents=True, exist_ok=True)
    with open(cfg.out / "sessions.jsonl", "w", encoding="utf-8") as fh:
        for s in sessions:
            for line in s.trace_lines():
                fh.write(line + "\n")
    report = evaluate_corpus(sessions, label=args.label or f"{cfg.generator} [{cfg.selector}]")
    for path in write_report_files(report, cfg.out):
        logger.info("wrote %s", path)
    sys.stdout.write(render_report(report, "markdown"))
    return EXIT_OK


def cmd_check(args) -> int:
    if not args.sandbox:
        raise UsageError("--sandbox is required")
    sb = _open_sandbox(Path(args.sandbox))
    q = _select_query(args, None)
    try:
        text = Path(args.plan).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read plan {args.plan}: {exc.strerror}") from exc
    try:
        cs = critic_set(args.critics)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    verdicts = run_critics(cs, parse_plan_text(text), q, sb)
    for v in verdicts:
        status = "PASS" if v.passed else "FAIL"
        detail = " ".join(v.backprompt.split("\n"))
        print(f"{v.critic_id}\t{v.group}\t{status}" + (f"\t{detail}" if detail else ""))
    return EXIT_OK if all(v.passed for v in verdicts) else EXIT_FAIL


def cmd_stats(args) -> int:
    sessions = []
    for path in args.traces:
        if not Path(path).is_file():
            raise UsageError(f"trace file not found: {path}")
        try:
            sessions += load_traces(path)
        except (json.JSONDecodeError, KeyError, ValueError) as exc:
            raise UsageError(f"cannot read traces {path}: {exc}") from exc
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    files = analytics_files(critic_frequency(sessions), critic_cooccurrence(sessions), pass_by_iteration(sessions))
    for name, text in files.items():
        (out / name).write_text(text, encoding="utf-8")
        print(out / name)
    return EXIT_OK


def cmd_extract_prompt(args) -> int:
    try:
        sys.stdout.write(emit_extraction_prompt(args.critic_id))
    except KeyError:
        raise UsageError(f"unknown critic id {args.critic_id!r}; valid ids: {', '.join(CRITIC_IDS)}") from None
    return EXIT_OK


def cmd_critics(args) -> int:
    rows = catalog()
    if args.json:
        print(json.dumps(rows, indent=2))
    else:
        for r in rows:
            print(f"{r['id']}\t{r['group']}\t{r['description']}")
    return EXIT_OK


def cmd_synth(args) -> int:
    root = write_synthetic_sandbox(Path(args.out) / "sandbox", args.seed)
    sb = load_sandbox(root)
    queries = synthetic_corpus(sb, args.n, args.seed)
    path = write_queries(queries, Path(args.out) / "queries.jsonl")
    print(root)
    print(path)
    return EXIT_OK


# --- parser --------------------------------------------------------------------


def _add_run_flags(p: argparse.ArgumentParser, batch: bool) -> None:
    p.add_argument("--sandbox", help="directory holding the five dataset CSV files")
    p.add_argument("--queries", help="JSON-lines query file")
    p.add_argument("--nl", action="store_true", help="queries are natural-language text")
    p.add_argument("--generator", default="greedy", help="llm | greedy | scripted:<file> (default greedy)")
    p.add_argument("--critics", default="all", help="all | common | hard | json (default all)")
    p.add_argument("--max-iters", type=int, default=DEFAULT_MAX_ITERATIONS)
    p.add_argument("--out", default="out", help="output directory")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--endpoint", help="chat-completion URL for --generator llm")
    p.add_argument("--model", help="model name for --generator llm")
    if batch:
        p.add_argument("--jobs", type=int, default=1, help="sessions run concurrently")
        p.add_argument("--label", help="row label in the report")
    else:
        p.add_argument("--query", help="inline query (JSON object, or text with --nl)")
        p.add_argument("--index", type=int, default=0, help="which line of --queries to plan")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="llm-modulo", description="Critic-driven travel planning.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("plan", help="run one planning session")
    _add_run_flags(p, batch=False)
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("eval", help="run sessions over a query corpus and report metrics")
    _add_run_flags(p, batch=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("check", help="run critics on a plan file")
    p.add_argument("plan", help="plan file (JSON, optionally inside prose)")
    p.add_argument("--sandbox")
    p.add_argument("--query", help="inline query (JSON object, or text with --nl)")
    p.add_argument("--queries", help="JSON-lines query file")
    p.add_argument("--index", type=int, default=0)
    p.add_argument("--nl", action="store_true")
    p.add_argument("--critics", default="all")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("stats", help="critic analytics from session traces")
    p.add_argument("traces", nargs="+", help="session JSON-lines files")
    p.add_argument("--out", default=".", help="directory for the CSV files")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("extract-prompt", help="print the critic-synthesis prompt for a critic id")
    p.add_argument("critic_id")
    p.set_defaults(func=cmd_extract_prompt)

    p = sub.add_parser("critics", help="critic catalog")
    p.add_argument("action", choices=["list"])
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_critics)

    p = sub.add_parser("synth", help="write a synthetic sandbox and a feasible query corpus")
    p.add_argument("--out", default="synthetic")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-n", type=int, default=20, help="number of queries")
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except GeneratorError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
