"""Watch the critic loop steer a generator back to a valid plan.

A synthetic sandbox and feasible query corpus are generated into a temp
directory.  For one query a correct plan is broken in four places, and a
repair generator fixes only what the latest feedback points at.

Run: python3 demos/backprompt_repair_loop.py
"""

import random
import tempfile

from llm_modulo import run_session
from llm_modulo.generators import greedy_plan
from llm_modulo.synthetic import CORRUPTIONS, RepairGenerator, corrupt_plan, query_text, synthetic_world

FEEDBACK = "## Feedback on your previous plan\n"


def main():
    with tempfile.TemporaryDirectory() as tmp:
        sb, queries = synthetic_world(tmp, seed=0, n=20)
    q = max(queries, key=lambda q: q.days)
    print("query:", query_text(q))
    reference = greedy_plan(q, sb)
    rng = random.Random(1)
    broken = corrupt_plan(reference, rng, tuple(rng.sample(CORRUPTIONS, 4)))
    gen = RepairGenerator(reference, broken)
    result = run_session(q, gen, "all", sb)
    for t in result.traces:
        fired = ", ".join(t.fired) or "none"
        print(f"\niteration {t.iteration}: critics fired: {fired}")
        if FEEDBACK in t.prompt:
            first = t.prompt.split(FEEDBACK, 1)[1].splitlines()
            print("  feedback it was given:", next(line for line in first if line.startswith("- ")))
    print(f"\nall passed: {result.all_passed} after {result.iterations_used} iterations "
          f"(blind repairs: {gen.blind_repairs})")


if __name__ == "__main__":
    main()
