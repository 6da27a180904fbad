"""Guided vs greedy viewpoint search on the occluded fixtures.

Guided asks the backend which way to move; greedy walks the whole ring of
candidate poses and takes the majority.
"""

from tamploop.harness import ExperimentConfig, compare_viewpoint_policies
from tamploop.worldsim import bundled_dir

fixtures = sorted(p.stem for p in bundled_dir("fixtures").glob("occluded-*.json"))
report = compare_viewpoint_policies(ExperimentConfig(fixtures=fixtures, viewpoint_trials=5, master_seed=11))

print(f"{'fixture':<14}{'ring':>6}{'guided':>8}{'greedy':>8}")
for f in report.per_fixture():
    print(f"{f['fixture']:<14}{f['ring']:>6}{f['guided_mean']:>8.2f}{f['greedy_mean']:>8.2f}")

acc_g = sum(r["guided_correct"] for r in report.rows) / len(report.rows)
acc_r = sum(r["greedy_correct"] for r in report.rows) / len(report.rows)
print(f"\nmean viewpoints: guided {report.guided_mean:.2f}, greedy {report.greedy_mean:.2f}")
print(f"accuracy:        guided {acc_g:.2f}, greedy {acc_r:.2f}")
