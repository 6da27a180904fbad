"""Walk through one noisy trial of the halve-egg task, printing what the loop saw and did."""

import numpy as np

from tamploop.executor import run_task
from tamploop.perception import NoisyBackend
from tamploop.worldsim import read_scenario

SEED = 3

scenario = read_scenario("halve-egg")
world = scenario.make_world(np.random.default_rng(SEED))
backend = NoisyBackend(np.random.default_rng(SEED + 1), eps_p=0.1, eps_a=0.2)

result = run_task(world, scenario.domain, scenario.problem.goal, "Full", backend, table=scenario.table, log=True)

for rec in result.log:
    step, kind = rec["step"], rec["kind"]
    if kind == "plan":
        print(f"[{step}] plan: {' -> '.join(rec['plan'])}")
    elif kind == "verify":
        votes = "".join(str(int(v)) for v in rec["responses"])
        print(f"[{step}]   check {rec['atom']:<28} votes {votes}  -> {rec['value']}"
              + (f"  ({rec['viewpoints']} viewpoint moves)" if rec["viewpoints"] else ""))
    elif kind == "execute":
        what = "as intended" if rec["nominal"] else f"SITUATION: {rec['situation']}"
        print(f"[{step}] execute {rec['action']}: {what}")
    elif kind == "replan":
        print(f"[{step}] mismatch on {rec['reason']}; new plan: {' -> '.join(rec['plan'])}")
    elif kind == "end":
        print(f"[{step}] done: {rec['termination']}, success={rec['success']}")

print(f"\n{result.actions_executed} actions, {result.replans} replans, {result.queries} backend queries")
