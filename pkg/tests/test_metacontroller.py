import os
from pathlib import Path

import pytest

from llm_modulo.critics import CRITIC_IDS, CriticVerdict, evaluate_plan, run_critics
from llm_modulo.generators import GeneratorUnavailable, ScriptedGenerator
from llm_modulo.metacontroller import (
    build_prompt,
    consolidate_backprompts,
    load_traces,
    run_session,
    sessions_from_trace_lines,
)
from llm_modulo.plan import serialize_plan
from support import two_day_plan, two_day_query

GOLDEN = Path(__file__).parent / "golden"
FEEDBACK = "## Feedback on your previous plan\n"

PLAN = serialize_plan(two_day_plan())
OVER_BUDGET = two_day_query(budget="300")

SCRIPTS = {
    "one_iteration": (two_day_query(), [PLAN]),
    "format_then_success": (two_day_query(), ['{"day": 1, "oops"', PLAN]),
    "budget_exhaustion": (OVER_BUDGET, [PLAN]),
}


def scripted_session(name, sb):
    q, replies = SCRIPTS[name]
    return run_session(q, ScriptedGenerator(replies), "all", sb, seed=0, session_id=name)


def check_golden(name: str, text: str):
    path = GOLDEN / f"{name}.jsonl"
    if os.environ.get("REGEN_GOLDEN"):
        path.parent.mkdir(exist_ok=True)
        path.write_text(text, encoding="utf-8")
    assert text == path.read_text(encoding="utf-8"), f"trace drifted from {path.name}"


def trace_text(result) -> str:
    return "\n".join(result.trace_lines()) + "\n"


def test_one_iteration_success(mini):
    r = scripted_session("one_iteration", mini)
    assert r.all_passed and r.delivered and r.iterations_used == 1
    assert [v.critic_id for v in r.traces[0].verdicts] == list(CRITIC_IDS)
    assert FEEDBACK not in r.traces[0].prompt
    check_golden("one_iteration", trace_text(r))


def test_format_failure_then_success(mini):
    r = scripted_session("format_then_success", mini)
    first, second = r.traces
    assert r.iterations_used == 2 and r.all_passed
    assert first.plan is None and first.reformat is not None
    [v] = first.verdicts
    assert v.critic_id == "valid_format" and not v.passed
    assert FEEDBACK + v.backprompt in second.prompt
    check_golden("format_then_success", trace_text(r))


def test_budget_exhaustion(mini):
    r = scripted_session("budget_exhaustion", mini)
    assert r.iterations_used == 10 and not r.all_passed
    assert r.delivered and r.plan == two_day_plan()
    for t in r.traces:
        assert t.fired == ("valid_cost",)
    budget_bp = r.traces[0].verdicts[CRITIC_IDS.index("valid_cost")].backprompt
    assert all(t.prompt.count(budget_bp) == 1 for t in r.traces[1:])
    check_golden("budget_exhaustion", trace_text(r))


def test_ten_invalid_replies_never_deliver(mini):
    r = run_session(two_day_query(), ScriptedGenerator(["no plan"]), "all", mini)
    assert (r.delivered, r.all_passed, r.iterations_used, r.plan) == (False, False, 10, None)
    assert all(t.fired == ("valid_format",) for t in r.traces)


@pytest.mark.parametrize("name", sorted(SCRIPTS))
def test_replay_is_byte_identical(mini, name):
    assert trace_text(scripted_session(name, mini)) == trace_text(scripted_session(name, mini))


def test_max_iterations_respected(mini):
    r = run_session(OVER_BUDGET, ScriptedGenerator([PLAN]), "all", mini, max_iterations=3)
    assert r.iterations_used == 3
    with pytest.raises(ValueError):
        run_session(OVER_BUDGET, ScriptedGenerator([PLAN]), "all", mini, max_iterations=0)


def test_prompts_carry_only_latest_failures(mini):
    """Iteration k shows exactly the failing backprompts of iteration k-1."""
    dup = two_day_plan().with_day(1, lunch="Taco Terrace, CityB")
    replies = [serialize_plan(dup), "no json at all", PLAN]
    r = run_session(OVER_BUDGET, ScriptedGenerator(replies), "all", mini)
    for prev, cur in zip(r.traces, r.traces[1:]):
        expected = consolidate_backprompts(prev.verdicts)
        block = cur.prompt.split(FEEDBACK, 1)[1].rsplit("\n\n## Travel plan", 1)[0]
        assert block == "\n\n".join(expected)
    assert "Taco Terrace" not in r.traces[2].prompt.split(FEEDBACK, 1)[1]


def test_selector_pass_implies_disjoint_failures(mini):
    r = run_session(OVER_BUDGET, ScriptedGenerator([PLAN]), "common", mini)
    assert r.all_passed and r.iterations_used == 1
    failing_all = {v.critic_id for v in run_critics("all", r.plan, OVER_BUDGET, mini) if not v.passed}
    assert failing_all == {"valid_cost"}
    assert not any(v.passed for v in r.final_evaluation if v.critic_id == "valid_cost")


def test_generator_error_aborts_with_partial_trace(mini):
    class Flaky:
        description = "flaky"

        def __init__(self):
            self.calls = 0

        def generate(self, prompt):
            self.calls += 1
            if self.calls > 1:
                raise GeneratorUnavailable("endpoint down")
            return PLAN

    r = run_session(OVER_BUDGET, Flaky(), "all", mini)
    assert r.iterations_used == 1 and r.delivered and not r.all_passed
    assert "endpoint down" in r.error


def test_build_prompt(mini):
    bundle = build_prompt(two_day_query(), mini)
    assert bundle.backprompt_block == ""
    for number in ("F0001", "F0002", "F0003", "F0004", "F0005", "F0006"):
        assert number in bundle.context
    assert "Cedar Cabin" not in bundle.context
    assert bundle.render() == build_prompt(two_day_query(), mini).render()
    two = build_prompt(two_day_query(), mini, ["first problem", "second problem"]).render()
    assert two.index("first problem") < two.index("second problem")


def verdict(cid, passed, text=""):
    return CriticVerdict(cid, "hard", passed, "" if passed else text)


def test_consolidate_backprompts():
    assert consolidate_backprompts([verdict("a", True), verdict("b", True)]) == []
    three = [verdict("a", False, "x"), verdict("b", True), verdict("c", False, "y"), verdict("d", False, "z")]
    assert consolidate_backprompts(three) == ["x", "y", "z"]
    assert consolidate_backprompts([verdict("a", False, "same"), verdict("b", False, "same")]) == ["same"]


def test_trace_round_trip(mini, tmp_path):
    results = [scripted_session(name, mini) for name in sorted(SCRIPTS)]
    path = tmp_path / "all.jsonl"
    path.write_text("".join(trace_text(r) for r in results), encoding="utf-8")
    loaded = load_traces(path)
    assert [trace_text(r) for r in loaded] == [trace_text(r) for r in results]
    assert [(r.delivered, r.all_passed, r.iterations_used) for r in loaded] == [
        (r.delivered, r.all_passed, r.iterations_used) for r in results]
    assert sessions_from_trace_lines(["", "  "]) == []


def test_final_evaluation_uses_every_applicable_critic(mini):
    r = run_session(OVER_BUDGET, ScriptedGenerator([PLAN]), "json", mini)
    assert r.final_evaluation == tuple(evaluate_plan(two_day_plan(), OVER_BUDGET, mini))


def test_sessions_sharing_a_header_stay_apart(mini):
    same = [run_session(two_day_query(), ScriptedGenerator(r), "all", mini) for r in ([PLAN], ["x", PLAN])]
    lines = same[0].trace_lines() + same[1].trace_lines()
    assert [r.iterations_used for r in sessions_from_trace_lines(lines)] == [1, 2]
