"""Check a hand-written plan against the mini sandbox and read the feedback.

Run: python3 demos/critics_on_a_plan.py
"""

from llm_modulo import get_total_cost, load_sandbox, mini_sandbox_path, parse_plan_text, parse_query, run_critics

QUERY = ("Please plan a 2-day trip from CityA to CityB for 1 person, from March 13 to March 14, 2022, "
         "with a budget of $300. We would like an entire room.")

REPLY = """Here is the plan you asked for:
```json
[
  {"day": 1, "people_number": 1, "current_city": "from CityA to CityB",
   "transportation": "Flight, from CityA to CityB, Flight Number: F0001, Departure Time: 07:00, Arrival Time: 09:10",
   "breakfast": "-", "attraction": "Lighthouse Point, CityB", "lunch": "Taco Terrace, CityB",
   "dinner": "Pasta Pier, CityB", "accommodation": "Harbor Room, CityB"},
  {"day": 2, "people_number": 1, "current_city": "from CityB to CityA",
   "transportation": "Flight, from CityB to CityA, Flight Number: F0004, Departure Time: 17:00, Arrival Time: 19:05",
   "breakfast": "Taco Terrace, CityB", "attraction": "Lighthouse Point, CityB", "lunch": "Curry Cove, CityB",
   "dinner": "-", "accommodation": "-"}
]
```"""


def main():
    sb = load_sandbox(mini_sandbox_path())
    print("sandbox rows:", sb.counts())
    q = parse_query(QUERY)
    print("query:", q.to_dict())
    plan = parse_plan_text(REPLY)
    print("total cost:", get_total_cost(plan, q, sb), "budget:", q.budget)
    print()
    for v in run_critics("all", plan, q, sb):
        print(f"{'PASS' if v.passed else 'FAIL'}  {v.critic_id}")
        if v.backprompt:
            print("      " + v.backprompt.replace("\n", "\n      "))


if __name__ == "__main__":
    main()
