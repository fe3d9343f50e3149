import json
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from llm_modulo.critics import CRITIC_IDS, CriticVerdict, applicable_critics, evaluate_plan
from llm_modulo.evaluator import (
    CooccurrenceMatrix,
    EvalReport,
    analytics_files,
    cooccurrence_csv,
    critic_cooccurrence,
    critic_frequency,
    evaluate_corpus,
    fmt_pct,
    frequency_csv,
    render_report,
)
from llm_modulo.metacontroller import IterationTrace, SessionResult
from llm_modulo.query import LocalConstraint
from support import two_day_plan, two_day_query

GROUP = {c.critic_id: c.group for c in applicable_critics(two_day_query(lc=LocalConstraint(
    "pets", {"Mexican"}, "entire room", "no flight")))}
GROUP["valid_format"] = "format"


def iteration(k, fired, evaluation=(), plan=True):
    """Trace whose loop verdicts fire exactly ``fired`` (a format failure stands alone)."""
    if "valid_format" in fired:
        verdicts = (CriticVerdict("valid_format", "format", False, "bad format"),)
    else:
        verdicts = tuple(CriticVerdict(cid, GROUP.get(cid, "hard"), cid not in fired,
                                       "" if cid not in fired else f"{cid} fired") for cid in CRITIC_IDS)
    return IterationTrace(k, f"prompt {k}", f"reply {k}", two_day_plan() if plan else None, None,
                          verdicts, tuple(evaluation))


def session(sid, firings, evaluation=(), delivered=True, max_iterations=10, query=None):
    traces = tuple(iteration(k, set(f), evaluation, delivered) for k, f in enumerate(firings, start=1))
    passed = delivered and not firings[-1]
    return SessionResult(query or two_day_query(), two_day_plan() if delivered else None, delivered, passed,
                         len(traces), traces, max_iterations=max_iterations, session_id=sid)


def synthetic_verdicts(common_fail=(), hard_fail=(), common=8, hard=2):
    return [CriticVerdict(f"cs_{i}", "commonsense", i not in common_fail, "" if i not in common_fail else "x")
            for i in range(1, common + 1)] + [
        CriticVerdict(f"hc_{i}", "hard", i not in hard_fail, "" if i not in hard_fail else "x")
        for i in range(1, hard + 1)]


def test_two_session_verdict_table():
    a = session("A", [()], synthetic_verdicts())
    b = session("B", [()], synthetic_verdicts(common_fail=(3,)))
    r = evaluate_corpus([a, b])
    assert (r.commonsense_micro, r.commonsense_macro, r.hard_micro, r.hard_macro, r.final_pass_rate) == (
        93.75, 50.0, 100.0, 100.0, 50.0)
    assert r.delivery_rate == 100.0


def test_all_undelivered_is_zero():
    r = evaluate_corpus([session(s, [("valid_format",)], delivered=False) for s in "ab"])
    assert all(v == 0 for v in r.metrics().values())


def test_single_passing_session_is_all_hundred(mini):
    evaluation = evaluate_plan(two_day_plan(), two_day_query(), mini)
    r = evaluate_corpus([session("ok", [()], evaluation)])
    assert all(v == 100 for v in r.metrics().values())
    assert r.pass_by_iteration == (100.0,) * 10


def test_empty_corpus_is_rejected():
    with pytest.raises(ValueError):
        evaluate_corpus([])


# --- hand-tallied analytics fixture -----------------------------------------------

TWO_SESSIONS = [
    session("s1", [("valid_cost", "diverse_restaurants"), ("valid_cost",)]),
    session("s2", [("valid_format",), ("valid_cost", "complete_information"), ()]),
]


def test_frequency_hand_tally():
    freq = critic_frequency(TWO_SESSIONS)
    assert list(freq) == list(CRITIC_IDS)
    expected = {cid: 0 for cid in CRITIC_IDS}
    expected.update(valid_format=1, complete_information=1, diverse_restaurants=1, valid_cost=3)
    assert freq == expected


def test_cooccurrence_hand_tally():
    m = critic_cooccurrence(TWO_SESSIONS)
    assert m.ids == ("valid_format", "complete_information", "diverse_restaurants", "valid_cost")
    assert m.counts == (
        (1, 0, 0, 0),
        (0, 1, 0, 1),
        (0, 0, 1, 1),
        (0, 1, 1, 3),
    )
    freq = critic_frequency(TWO_SESSIONS)
    for i, a in enumerate(m.ids):
        assert m.counts[i][i] == freq[a]
        for j in range(len(m.ids)):
            assert m.counts[i][j] == m.counts[j][i]
    assert m.conditional()[1][3] == 1.0


def test_analytics_files_hand_tally():
    files = analytics_files(critic_frequency(TWO_SESSIONS), critic_cooccurrence(TWO_SESSIONS), (50.0, 100.0))
    assert "valid_cost,3\n" in files["frequency.csv"]
    assert files["cooccurrence.csv"].splitlines()[-1] == "valid_cost,0,1,1,3"
    assert files["pass_by_iteration.csv"] == "iteration,final_pass_rate\n1,50\n2,100\n"


def test_small_cooccurrence_cases():
    single = critic_cooccurrence([session("x", [("valid_cost", "diverse_attractions")])])
    assert single.get("valid_cost", "diverse_attractions") == single.get("diverse_attractions", "valid_cost") == 1
    assert single.get("valid_cost", "valid_cost") == 1
    disjoint = critic_cooccurrence([session("y", [("valid_cost",), ("diverse_attractions",)])])
    assert disjoint.get("valid_cost", "diverse_attractions") == 0


def test_no_failures_gives_zero_frequency():
    freq = critic_frequency([session("ok", [()])])
    assert set(freq.values()) == {0} and list(freq) == list(CRITIC_IDS)
    assert critic_cooccurrence([session("ok", [()])]).ids == ()


def test_format_only_failures():
    freq = critic_frequency([session("f", [("valid_format",)] * 3, delivered=False)])
    assert {k: v for k, v in freq.items() if v} == {"valid_format": 3}


# --- rendering ---------------------------------------------------------------------

TABLE_ROW = EvalReport(corpus_size=180, delivery_rate=100.0, commonsense_micro=84.9, commonsense_macro=25.6,
                       hard_micro=51.9, hard_macro=24.4, final_pass_rate=4.4, label="Direct GPT-4-Turbo")


def test_markdown_row_order():
    md = render_report(TABLE_ROW, "markdown")
    header, _, row = md.splitlines()
    assert header.split(" | ")[1:4] == ["Delivery Rate", "Commonsense Micro", "Commonsense Macro"]
    assert row == "| Direct GPT-4-Turbo | 100 | 84.9 | 25.6 | 51.9 | 24.4 | 4.4 |"
    assert render_report(TABLE_ROW, "csv").splitlines()[1] == "Direct GPT-4-Turbo,180,100,84.9,25.6,51.9,24.4,4.4"
    with pytest.raises(ValueError):
        render_report(TABLE_ROW, "xml")


def test_empty_matrix_csv_is_header_only():
    assert cooccurrence_csv(CooccurrenceMatrix()) == "critic_id\n"
    assert frequency_csv({}) == "critic_id,count\n"


def test_json_round_trip():
    r = evaluate_corpus(TWO_SESSIONS, label="fixture")
    assert EvalReport.from_dict(json.loads(render_report(r, "json"))) == r
    assert EvalReport.from_dict(json.loads(render_report(TABLE_ROW, "json"))) == TABLE_ROW


def test_fmt_pct():
    assert [fmt_pct(x) for x in (100.0, 84.9, 93.75, 0.0, 33.333)] == ["100", "84.9", "93.75", "0", "33.33"]


# --- properties over random corpora -------------------------------------------------

HARD_CHOICES = [None, LocalConstraint(room_type="entire room"),
                LocalConstraint(cuisine={"Mexican"}, transportation="no flight")]


@st.composite
def corpora(draw):
    same_hard = draw(st.booleans())
    lc_fixed = draw(st.sampled_from(HARD_CHOICES))
    sessions = []
    for i in range(draw(st.integers(1, 8))):
        lc = lc_fixed if same_hard else draw(st.sampled_from(HARD_CHOICES))
        q = two_day_query(lc=lc)
        ids = [c for c in applicable_critics(q)]
        delivered = draw(st.booleans()) or draw(st.booleans())
        max_it = draw(st.integers(1, 10))
        used = draw(st.integers(1, max_it))
        fails = set(draw(st.lists(st.sampled_from([c.critic_id for c in ids]), max_size=3)))
        evaluation = [CriticVerdict(c.critic_id, c.group, c.critic_id not in fails,
                                    "" if c.critic_id not in fails else "x") for c in ids]
        firings = [tuple(draw(st.lists(st.sampled_from(CRITIC_IDS[1:]), min_size=1, max_size=3)))
                   for _ in range(used - 1)]
        firings.append(() if delivered and not fails else ("valid_cost",))
        sessions.append(session(f"q{i}", firings, evaluation, delivered, max_it, q))
    return sessions, same_hard


@settings(max_examples=1000, deadline=None)
@given(corpora(), st.randoms(use_true_random=False))
def test_metric_invariants(corpus, rnd):
    sessions, same_hard = corpus
    r = evaluate_corpus(sessions)
    m = r.metrics()
    assert all(0 <= v <= 100 for v in m.values())
    assert r.final_pass_rate <= min(r.commonsense_macro, r.hard_macro)
    assert r.delivery_rate >= r.final_pass_rate
    # every query has the same four commonsense critics
    assert r.commonsense_micro >= r.commonsense_macro
    if same_hard:
        assert r.hard_micro >= r.hard_macro
    curve = r.pass_by_iteration
    assert list(curve) == sorted(curve)
    assert curve[-1] == pytest.approx(r.final_pass_rate)
    shuffled = list(sessions)
    rnd.shuffle(shuffled)
    assert evaluate_corpus(shuffled) == r


def test_micro_can_fall_below_macro_with_uneven_counts():
    """Why the micro >= macro check needs equal per-query constraint counts."""
    light = session("light", [()], synthetic_verdicts(common=1, hard=1))
    heavy = session("heavy", [()], synthetic_verdicts(common_fail=tuple(range(1, 11)), common=10, hard=1))
    r = evaluate_corpus([light, heavy])
    assert r.commonsense_micro == pytest.approx(100 / 11)
    assert r.commonsense_macro == 50.0


def test_order_independence_on_fixture():
    shuffled = list(TWO_SESSIONS)
    random.Random(3).shuffle(shuffled)
    assert evaluate_corpus(shuffled) == evaluate_corpus(TWO_SESSIONS)
