"""Critic-driven generate-test planning for travel itineraries.

A plan generator (remote LLM, scripted replies, or a greedy symbolic
planner) proposes an itinerary; deterministic critics grounded in a CSV
sandbox accept it or explain what is wrong; the loop feeds those
explanations back until every critic passes or the iteration budget runs
out.  The evaluator turns finished sessions into pass-rate metrics and
critic analytics.
"""

from .critics import (
    CATALOG,
    CRITIC_IDS,
    CriticConfig,
    CriticSet,
    CriticVerdict,
    critic_set,
    emit_extraction_prompt,
    evaluate_plan,
    get_total_cost,
    run_critics,
)
from .evaluator import EvalReport, evaluate_corpus, render_report, write_report_files
from .generators import (
    GeneratorError,
    GeneratorUnavailable,
    GreedyGenerator,
    LlmConfig,
    LlmGenerator,
    ScriptedGenerator,
    greedy_generate,
    llm_generate,
)
from .metacontroller import SessionResult, build_prompt, load_traces, run_session
from .plan import DayPlan, Itinerary, ReformatFailure, parse_plan_text, serialize_plan, validate_schema
from .query import LocalConstraint, Query, extract_query_fields, parse_query
from .sandbox import Sandbox, get_cost_of_transport, load_sandbox, mini_sandbox_path

__all__ = [
    "CATALOG", "CRITIC_IDS", "CriticConfig", "CriticSet", "CriticVerdict", "DayPlan", "EvalReport",
    "GeneratorError", "GeneratorUnavailable", "GreedyGenerator", "Itinerary", "LlmConfig", "LlmGenerator",
    "LocalConstraint", "Query", "ReformatFailure", "Sandbox", "ScriptedGenerator", "SessionResult",
    "build_prompt", "critic_set", "emit_extraction_prompt", "evaluate_corpus", "evaluate_plan",
    "extract_query_fields", "get_cost_of_transport", "get_total_cost", "greedy_generate", "llm_generate",
    "load_sandbox", "load_traces", "mini_sandbox_path", "parse_plan_text", "parse_query", "render_report",
    "run_critics", "run_session", "serialize_plan", "validate_schema", "write_report_files",
]
