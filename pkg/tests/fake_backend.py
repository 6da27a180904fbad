"""Minimal stdio model bridge for tests: answers every request from a fixed policy.

usage: fake_backend.py [yes|no|garbage|crash]
"""

import json
import sys

mode = sys.argv[1] if len(sys.argv) > 1 else "yes"
for line in sys.stdin:
    if mode == "crash":
        sys.exit(3)
    msg = json.loads(line)
    if mode == "garbage":
        print("not json", flush=True)
        continue
    kind = msg["type"]
    if kind == "predicate_query":
        reply = {"answer": "Yes." if mode == "yes" else "no"}
    elif kind == "sufficiency":
        reply = {"answer": "yes"}
    elif kind == "viewpoint":
        reply = {"directions": ["closer", "left"]}
    elif kind == "goal_parse":
        reply = {"goal": "inside(cup, cabinet)"}
    else:
        reply = {"error": f"unknown request {kind}"}
    print(json.dumps(reply), flush=True)
