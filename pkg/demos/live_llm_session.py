"""Plan one mini-sandbox query with a real chat-completion endpoint.

Needs MODULO_API_KEY; MODULO_ENDPOINT and MODULO_MODEL override the
defaults.  Without a key it says so and exits.

Run: MODULO_API_KEY=... python3 demos/live_llm_session.py
"""

import os
import sys

from llm_modulo import LlmConfig, LlmGenerator, load_sandbox, mini_sandbox_path, parse_query, run_session

QUERY = ("Please plan a 2-day trip from CityA to CityB for 1 person, from March 13 to March 14, 2022, "
         "with a budget of $400.")


def main() -> int:
    if not os.environ.get("MODULO_API_KEY"):
        print("set MODULO_API_KEY to run this demo", file=sys.stderr)
        return 0
    overrides = {k: os.environ[e] for k, e in (("endpoint", "MODULO_ENDPOINT"), ("model", "MODULO_MODEL"))
                 if os.environ.get(e)}
    sb = load_sandbox(mini_sandbox_path())
    result = run_session(parse_query(QUERY), LlmGenerator(LlmConfig(**overrides)), "all", sb)
    for t in result.traces:
        print(f"iteration {t.iteration}: fired {', '.join(t.fired) or 'none'}; telemetry {t.telemetry}")
    result.write_trace("live_session.jsonl")
    print(f"delivered={result.delivered} all_passed={result.all_passed} error={result.error}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
