"""Corpus metrics, critic ablations and firing analytics on synthetic data.

Each of 20 synthetic queries gets a repair generator whose first plan has
three planted faults.  The same generators run once without feedback
(one iteration) and then inside the loop under each critic selector.
Every row is scored on the final plan with all applicable critics.

Run: python3 demos/corpus_evaluation.py
"""

import random
import tempfile

from llm_modulo import evaluate_corpus, render_report, run_session
from llm_modulo.evaluator import cooccurrence_csv, frequency_csv
from llm_modulo.generators import greedy_plan
from llm_modulo.synthetic import CORRUPTIONS, RepairGenerator, corrupt_plan, synthetic_world


def sessions(sb, queries, selector, max_iterations):
    rng = random.Random(0)
    out = []
    for q in queries:
        reference = greedy_plan(q, sb)
        broken = corrupt_plan(reference, rng, tuple(rng.sample(CORRUPTIONS, 3)))
        out.append(run_session(q, RepairGenerator(reference, broken), selector, sb, max_iterations))
    return out


def main():
    with tempfile.TemporaryDirectory() as tmp:
        sb, queries = synthetic_world(tmp, seed=0, n=20)
    rows = [("single shot", "all", 1)] + [(f"loop [{s}]", s, 10) for s in ("all", "common", "hard", "json")]
    table = []
    loop_all = None
    for label, selector, iters in rows:
        runs = sessions(sb, queries, selector, iters)
        report = evaluate_corpus(runs, label=label)
        md = render_report(report, "markdown").splitlines()
        table = table or md[:2]
        table.append(md[2])
        if label == "loop [all]":
            loop_all = report
    print("\n".join(table))
    print("\npass rate by iteration, loop [all]:", [round(x, 1) for x in loop_all.pass_by_iteration])
    print("\ncritic firings across all iterations, loop [all]:")
    print(frequency_csv(loop_all.critic_frequency))
    print("co-occurrence (iterations where both fired):")
    print(cooccurrence_csv(loop_all.cooccurrence))


if __name__ == "__main__":
    main()
