"""Small ablation: how much does each kind of verification buy? (50 trials per cell)"""

from tamploop.harness import ExperimentConfig, aggregate, run_experiment

STRATEGIES = ["Full", "EffectsOnly", "PreconditionsOnly", "SucAffQA", "SuccessQA", "AffordanceQA", "NoVerification"]

cfg = ExperimentConfig(strategies=STRATEGIES, trials_per_cell=50, master_seed=7, eps_p=0.1, eps_a=0.2)
agg = aggregate(run_experiment(cfg).rows)

scenarios = cfg.scenarios
print(f"{'strategy':<18}" + "".join(f"{s[:12]:>13}" for s in scenarios) + f"{'avg':>8}")
rates = {(c["scenario"], c["strategy"]): c["rate"] for c in agg.cells}
for name in STRATEGIES:
    cells = "".join(f"{100 * rates[(s, name)]:>13.0f}" for s in scenarios)
    print(f"{name:<18}{cells}{100 * agg.strategy_means[name]:>8.1f}")
