"""End-to-end acceptance checks; each prints one PASS/FAIL line with its measurement.

Run alone with ``pytest tests/test_acceptance.py -v``; the lines appear in the
"acceptance criteria" section of the terminal summary.
"""

import math
import time

import numpy as np
import pytest

from tamploop.executor import run_task
from tamploop.harness import (
    ExperimentConfig,
    aggregate,
    compare_viewpoint_policies,
    emit_report,
    run_experiment,
)
from tamploop.pddl import (
    PlanningTask,
    load_domain,
    parse_domain,
    parse_problem,
    serialize_domain,
    serialize_problem,
    validate_plan,
)
from tamploop.perception import GroundTruthBackend, majority_vote, noisy_answer
from tamploop.worldsim import SituationTable, bundled_dir, bundled_scenarios, parse_scenario, read_scenario

from conftest import ACCEPTANCE_LINES
from oracles import binomial_tail, bfs_plan_length, random_household_problem

D = load_domain()
SCENARIOS = [p.stem for p in bundled_scenarios()]
NOISY = dict(backend="noisy", eps_p=0.1, eps_a=0.2, master_seed=2025)


def report(n: int, ok: bool, detail: str, seconds: float) -> None:
    line = f"{'PASS' if ok else 'FAIL'} criterion {n:2d}: {detail} [{seconds:.1f}s]"
    ACCEPTANCE_LINES.append(line)
    print(line)


def test_1_planner_sound_and_optimal():
    t0 = time.time()
    rng = np.random.default_rng(1)
    valid = compared = optimal = 0
    for _ in range(1000):
        prob = random_household_problem(D, rng, max_objects=8)
        task = PlanningTask(D, prob.objects)
        greedy = task.plan(prob.init, prob.goal)
        best = task.plan(prob.init, prob.goal, mode="optimal")
        valid += bool(validate_plan(D, prob.init, greedy.actions, prob.goal)) and bool(
            validate_plan(D, prob.init, best.actions, prob.goal)
        )
        oracle = bfs_plan_length(D, prob.objects, prob.init, prob.goal, max_states=100_000)
        if oracle is not None:
            compared += 1
            optimal += len(best) == oracle
    dt = time.time() - t0
    ok = valid == 1000 and optimal == compared and compared > 0 and dt < 120
    report(1, ok, f"{valid}/1000 plans valid; optimal length = BFS on {optimal}/{compared}", dt)
    assert ok


def test_2_majority_vote_calibration():
    t0 = time.time()
    rng = np.random.default_rng(2)
    n = 100_000
    wrong = sum(
        not majority_vote([noisy_answer(True, 1.0, 0.2, rng) for _ in range(5)]) for _ in range(n)
    )
    rate = wrong / n
    expected = binomial_tail(5, 3, 0.2)
    dt = time.time() - t0
    ok = abs(rate - expected) <= 0.005 and abs(expected - 0.05792) < 1e-5 and dt < 30
    report(2, ok, f"wrong-verdict rate {rate:.4f} vs binomial tail {expected:.5f} (tol 0.005)", dt)
    assert ok


CALIBRATION_SPEC = {
    "name": "calibration",
    "rooms": [{"name": "kitchen", "bounds": [0, 0, 0, 8, 8, 3], "viewpoint": [4, 0.5, 1.5]}],
    "objects": [
        {"id": "table", "type": "surface", "room": "kitchen", "centroid": [4, 4, 0.375], "size": [1.6, 1.0, 0.75]},
        {"id": "cup", "type": "item", "room": "kitchen", "centroid": [3.6, 4, 0.8], "size": [0.08, 0.08, 0.1]},
        {"id": "knife", "type": "tool", "room": "kitchen", "centroid": [4.0, 4, 0.76], "size": [0.2, 0.03, 0.02]},
        {"id": "egg", "type": "item", "room": "kitchen", "centroid": [4.4, 4, 0.785], "size": [0.05, 0.05, 0.07]},
        {"id": "bin", "type": "container", "room": "kitchen", "centroid": [1.5, 6, 0.3], "size": [0.6, 0.6, 0.6]},
        {"id": "cabinet", "type": "container", "room": "kitchen", "centroid": [6.5, 6, 0.5], "size": [0.8, 0.6, 1.0]},
        {"id": "microwave", "type": "appliance", "room": "kitchen", "centroid": [6.5, 2, 0.2], "size": [0.5, 0.4, 0.4]},
        {"id": "sink", "type": "sink", "room": "kitchen", "centroid": [1.5, 2, 0.45], "size": [0.8, 0.6, 0.9]},
    ],
    "articulation": {"bin": True, "cabinet": False, "microwave": True},
    "power": {"microwave": False},
    "robot": {"room": "kitchen"},
}
# action -> object held before executing it
CALIBRATED = {
    ("grasp", "cup", "table"): None,
    ("placein", "cup", "bin"): "cup",
    ("placeon", "cup", "table"): "cup",
    ("fill", "cup", "sink"): "cup",
    ("open", "cabinet"): None,
    ("close", "bin"): None,
    ("turnon", "microwave"): None,
    ("cut", "egg", "knife"): "knife",
    ("find", "egg"): "knife",
}


def test_3_injection_calibration():
    t0 = time.time()
    sc = parse_scenario(CALIBRATION_SPEC)
    table = SituationTable.default()
    n = 10_000
    seeds = np.random.SeedSequence(3).spawn(len(CALIBRATED))
    worst, checked, failures = 0.0, 0, []
    for ((name, *args), held), seed in zip(CALIBRATED.items(), seeds):
        rng = np.random.default_rng(seed)
        a = D.ground(name, *args)
        counts: dict = {}
        for _ in range(n):
            w = sc.make_world(rng)
            if held:
                w.robot.held = held
                w._dirty()
            label = w.execute(a, table).situation
            counts[label] = counts.get(label, 0) + 1
        for s in table.for_action(name):
            sigma = math.sqrt(s.probability * (1 - s.probability) / n)
            z = abs(counts.get(s.label, 0) / n - s.probability) / sigma
            worst = max(worst, z)
            checked += 1
            if z > 3:
                failures.append(f"{name}/{s.label}")
    dt = time.time() - t0
    ok = not failures and dt < 60
    report(3, ok, f"{checked} situations within 3 sigma (worst |z| = {worst:.2f}) {failures or ''}".rstrip(), dt)
    assert ok


def test_4_open_loop_product():
    t0 = time.time()
    sc = read_scenario("halve-egg")
    plan = [D.ground("grasp", "knife", "counter"), D.ground("find", "egg"), D.ground("cut", "egg", "knife")]
    task = PlanningTask(D, sc.make_world().types)
    seeds = np.random.SeedSequence(4).spawn(10_000)
    wins = sum(
        run_task(sc.make_world(np.random.default_rng(s)), D, sc.problem.goal, "NoVerification",
                 GroundTruthBackend(), table=sc.table, planner=task, plan=plan).success
        for s in seeds
    )
    rate = wins / 10_000
    expected = (
        sc.table.nominal_probability("grasp") * sc.table.nominal_probability("find") * sc.table.nominal_probability("cut")
    )
    dt = time.time() - t0
    ok = abs(rate - 0.225) <= 0.03 and abs(expected - 0.225) < 1e-12 and dt < 60
    report(4, ok, f"NoVerification success {rate:.4f} vs product {expected:.3f} (tol 0.03)", dt)
    assert ok


def test_5_closed_loop_recovery():
    t0 = time.time()
    recoverable = [s for s in SCENARIOS if read_scenario(s).extras.get("recoverable")]
    cfg = ExperimentConfig(scenarios=recoverable, strategies=["Full"], trials_per_cell=1000, backend="truth",
                           max_replans=20, master_seed=5)
    agg = aggregate(run_experiment(cfg).rows)
    rates = {c["scenario"]: c["rate"] for c in agg.cells}
    dt = time.time() - t0
    ok = len(rates) == len(recoverable) and min(rates.values()) >= 0.95 and dt < 300
    shown = ", ".join(f"{k} {v:.3f}" for k, v in rates.items())
    report(5, ok, f"Full, noise-free, 1000 trials each: {shown} (min 0.95)", dt)
    assert ok


def test_6_ablation_ordering():
    t0 = time.time()
    cfg = ExperimentConfig(scenarios=SCENARIOS, strategies=["Full", "EffectsOnly", "PreconditionsOnly", "NoVerification"],
                           trials_per_cell=200, **NOISY)
    m = aggregate(run_experiment(cfg).rows).strategy_means
    gap = 100 * (m["EffectsOnly"] - m["PreconditionsOnly"])
    dt = time.time() - t0
    ok = m["Full"] > m["EffectsOnly"] > m["PreconditionsOnly"] > m["NoVerification"] and gap >= 5 and dt < 900
    shown = " > ".join(f"{k} {100 * m[k]:.1f}" for k in ("Full", "EffectsOnly", "PreconditionsOnly", "NoVerification"))
    report(6, ok, f"{shown}; EffectsOnly - PreconditionsOnly = {gap:.1f} pts (min 5)", dt)
    assert ok


def test_7_strategy_comparison():
    # SucAffQA and SuccessQA sit about three points apart, so use enough trials to resolve them
    t0 = time.time()
    names = ["Full", "SucAffQA", "SuccessQA", "AffordanceQA", "NoVerification"]
    cfg = ExperimentConfig(scenarios=SCENARIOS, strategies=names, trials_per_cell=1000, **NOISY)
    m = aggregate(run_experiment(cfg).rows).strategy_means
    dt = time.time() - t0
    ok = m["Full"] >= m["SucAffQA"] >= max(m["SuccessQA"], m["AffordanceQA"]) >= m["NoVerification"]
    shown = ", ".join(f"{k} {100 * m[k]:.1f}" for k in names)
    report(7, ok, f"1000 trials/cell: {shown}", dt)
    assert ok


def test_8_viewpoint_efficiency():
    t0 = time.time()
    occluded = [p.stem for p in bundled_dir("fixtures").glob("occluded-*.json")]
    cfg = ExperimentConfig(fixtures=sorted(occluded), viewpoint_trials=5, **NOISY)
    rep = compare_viewpoint_policies(cfg)
    dt = time.time() - t0
    ok = len(rep.rows) >= 100 and rep.guided_mean <= rep.greedy_mean and dt < 120
    report(8, ok, f"{len(rep.rows)} paired trials: guided {rep.guided_mean:.2f} <= greedy {rep.greedy_mean:.2f} "
                  f"viewpoints per resolution", dt)
    assert ok


def test_9_determinism(tmp_path):
    t0 = time.time()
    base = dict(scenarios=["boil-water", "halve-egg", "gather-kindling"], strategies=["Full", "SucAffQA"],
                trials_per_cell=12, **NOISY)
    outputs = []
    for i, parallel in enumerate([1, 1, 2, 2]):
        out = tmp_path / f"run{i}"
        emit_report(run_experiment(ExperimentConfig(parallel=parallel, **base)), out, ["csv"])
        outputs.append({p.name: p.read_bytes() for p in sorted(out.glob("*.csv"))})
    dt = time.time() - t0
    ok = all(o == outputs[0] for o in outputs) and len(outputs[0]) == 5
    report(9, ok, "per-trial and aggregate CSVs byte-identical across 2 serial + 2 parallel runs", dt)
    assert ok


def test_10_parser_fixpoint():
    t0 = time.time()
    text = (bundled_dir("scenarios").parent / "domain.pddl").read_text()
    domain = parse_domain(text)
    ok = parse_domain(serialize_domain(domain)) == domain
    problems = sorted(bundled_dir("problems").glob("*.pddl"))
    for p in problems:
        prob = parse_problem(p.read_text(), domain)
        ok &= parse_problem(serialize_problem(prob), domain) == prob
    ok &= len(problems) == 5
    report(10, ok, f"domain + {len(problems)} problems survive parse -> serialize -> parse", time.time() - t0)
    assert ok


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-v"]))
