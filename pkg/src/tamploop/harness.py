"""Seeded experiment campaigns: scenarios x strategies x trials, aggregation, and reports."""

from __future__ import annotations

import csv
import io
import json
import math
import zlib
from collections import Counter, defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .executor import ExecutionBudget, Strategy, run_task
from .pddl.planner import PlanningTask
from .perception.backends import GroundTruthBackend, NoisyBackend
from .perception.templates import N_PARAPHRASES, paraphrase
from .perception.verify import verify_predicate
from .perception.backends import Question
from .perception.voting import is_consistent, majority_vote
from .pddl.parser import parse_literals
from .worldsim.scenario import (
    Scenario,
    ScenarioError,
    bundled_fixtures,
    bundled_scenarios,
    read_scenario,
    resolve_scenario_path,
)

ROW_COLUMNS = (
    "scenario", "strategy", "trial", "success", "termination", "actions", "replans",
    "viewpoints", "verifications", "queries", "hard_failures", "failure_mode",
    "situations", "resolutions",
)
CELL_COLUMNS = (
    "scenario", "strategy", "trials", "successes", "rate", "ci_low", "ci_high",
    "mean_actions", "mean_replans", "mean_viewpoints",
)
SITUATION_COLUMNS = ("scenario", "situation", "count")
VIEWPOINT_COLUMNS = ("strategy", "resolutions", "mean", "sd", "histogram")
FAILURE_COLUMNS = ("strategy", "failure_mode", "count")


def trial_seed(master_seed: int, cell: str, trial: int) -> np.random.SeedSequence:
    """Seed by (master seed, cell name, trial index); independent of schedule and strategy."""
    return np.random.SeedSequence([master_seed, zlib.crc32(cell.encode()), trial])


def wilson_interval(successes: int, n: int, alpha: float = 0.05) -> tuple[float, float]:
    if n == 0:
        return (0.0, 1.0)
    from statsmodels.stats.proportion import proportion_confint

    lo, hi = proportion_confint(successes, n, alpha=alpha, method="wilson")
    return float(lo), float(hi)


@dataclass
class ExperimentConfig:
    scenarios: list[str] = field(default_factory=lambda: [p.stem for p in bundled_scenarios()])
    strategies: list[str] = field(default_factory=lambda: ["Full"])
    trials_per_cell: int = 200
    master_seed: int = 0
    backend: str = "noisy"  # noisy | truth
    eps_p: float = 0.1
    eps_a: float = 0.2
    sufficiency_threshold: float = 0.7
    max_replans: int = 20
    viewpoint_budget: int = 6
    max_actions: int = 200
    situation_scale: float | None = None
    scripted_events: bool = True
    parallel: int = 1
    fixtures: list[str] = field(default_factory=lambda: [p.stem for p in bundled_fixtures()])
    viewpoint_trials: int = 5  # per fixture

    def __post_init__(self):
        if self.trials_per_cell < 1:
            raise ValueError("trials_per_cell must be >= 1")
        if self.backend not in ("noisy", "truth"):
            raise ValueError(f"backend must be 'noisy' or 'truth', got {self.backend!r}")
        for s in self.strategies:
            Strategy.parse(s)
        self.budget  # validates

    @property
    def budget(self) -> ExecutionBudget:
        return ExecutionBudget(self.max_replans, self.viewpoint_budget, self.max_actions)

    @classmethod
    def from_dict(cls, d: Mapping) -> "ExperimentConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config keys {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def load(cls, path: str | Path) -> "ExperimentConfig":
        p = Path(path)
        if not p.exists():
            from importlib.resources import files

            bundled = Path(str(files("tamploop.data").joinpath("configs", p.name)))
            p = bundled if bundled.exists() else bundled.with_suffix(".json")
        cfg = cls.from_dict(json.loads(p.read_text()))
        # scenario paths in a config file are relative to that file
        base = p.parent
        cfg.scenarios = [str(base / s) if (base / s).exists() else s for s in cfg.scenarios]
        cfg.fixtures = [str(base / s) if (base / s).exists() else s for s in cfg.fixtures]
        return cfg

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class ExperimentReport:
    rows: list[dict]
    errors: dict[str, str] = field(default_factory=dict)

    def aggregate(self) -> "Aggregates":
        return aggregate(self.rows)


# -- trial execution ----------------------------------------------------------

_CACHE: dict[str, tuple[Scenario, PlanningTask]] = {}


def _scenario(ref: str) -> tuple[Scenario, PlanningTask]:
    hit = _CACHE.get(ref)
    if hit is None:
        sc = read_scenario(ref)
        hit = _CACHE[ref] = (sc, PlanningTask(sc.domain, sc.make_world().types))
    return hit


def _backend(cfg: Mapping, rng):
    if cfg["backend"] == "truth":
        return GroundTruthBackend(cfg["sufficiency_threshold"])
    return NoisyBackend(rng, cfg["eps_p"], cfg["eps_a"], cfg["sufficiency_threshold"])


def _run_chunk(job: tuple) -> list[dict]:
    ref, strategy, trials, cfg = job
    sc, planner = _scenario(ref)
    table = sc.table if cfg["situation_scale"] is None else sc.table.scaled(cfg["situation_scale"])
    budget = ExecutionBudget(cfg["max_replans"], cfg["viewpoint_budget"], cfg["max_actions"])
    rows = []
    for t in trials:
        world_seed, backend_seed = trial_seed(cfg["master_seed"], sc.name, t).spawn(2)
        world = sc.make_world(np.random.default_rng(world_seed))
        if not cfg["scripted_events"]:
            world.events = []
        backend = _backend(cfg, np.random.default_rng(backend_seed))
        r = run_task(world, sc.domain, sc.problem.goal, strategy, backend, budget, table, planner=planner)
        rows.append({
            "scenario": sc.name,
            "strategy": Strategy.parse(strategy).value,
            "trial": t,
            "success": int(r.success),
            "termination": r.termination,
            "actions": r.actions_executed,
            "replans": r.replans,
            "viewpoints": r.viewpoints_total,
            "verifications": r.verifications,
            "queries": r.queries,
            "hard_failures": r.hard_failures,
            "failure_mode": r.failure_mode or "",
            "situations": "|".join(f"{s}:{label}" for s, label in r.situations),
            "resolutions": ";".join(map(str, r.viewpoint_resolutions)),
        })
    return rows


def _chunks(n: int, size: int) -> list[range]:
    return [range(i, min(i + size, n)) for i in range(0, n, size)]


def run_experiment(config: ExperimentConfig) -> ExperimentReport:
    """Run every (scenario, strategy) cell; rows come back in a fixed order."""
    cfg = config.to_dict()
    errors: dict[str, str] = {}
    jobs = []
    chunk = max(1, math.ceil(config.trials_per_cell / max(1, 4 * config.parallel)))
    for ref in config.scenarios:
        try:
            resolve_scenario_path(ref)
            _scenario(ref)
        except (ScenarioError, OSError, ValueError) as e:
            errors[ref] = str(e)
            continue
        for strategy in config.strategies:
            jobs += [(ref, strategy, tr, cfg) for tr in _chunks(config.trials_per_cell, chunk)]
    if config.parallel > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=config.parallel) as pool:
            parts = list(pool.map(_run_chunk, jobs))
    else:
        parts = [_run_chunk(j) for j in jobs]
    return ExperimentReport([r for part in parts for r in part], errors)


# -- aggregation ----------------------------------------------------------------


@dataclass
class Aggregates:
    cells: list[dict]
    situations: list[dict]
    viewpoints: list[dict]
    failure_modes: list[dict]
    strategy_means: dict[str, float]


def _num(row: Mapping, key: str) -> float:
    return float(row[key])


def aggregate(rows: Sequence[Mapping]) -> Aggregates:
    """All report tables, recomputed from per-trial rows alone."""
    by_cell: dict[tuple[str, str], list] = defaultdict(list)
    for r in rows:
        by_cell[(r["scenario"], r["strategy"])].append(r)
    cells = []
    for (sc, st), rs in sorted(by_cell.items()):
        n = len(rs)
        k = int(sum(_num(r, "success") for r in rs))
        lo, hi = wilson_interval(k, n)
        cells.append({
            "scenario": sc, "strategy": st, "trials": n, "successes": k,
            "rate": round(k / n, 6), "ci_low": round(lo, 6), "ci_high": round(hi, 6),
            "mean_actions": round(sum(_num(r, "actions") for r in rs) / n, 6),
            "mean_replans": round(sum(_num(r, "replans") for r in rs) / n, 6),
            "mean_viewpoints": round(sum(_num(r, "viewpoints") for r in rs) / n, 6),
        })

    sits: Counter = Counter()
    for r in rows:
        for item in filter(None, str(r["situations"]).split("|")):
            sits[(r["scenario"], item.split(":", 1)[1])] += 1
    situations = [
        {"scenario": sc, "situation": lab, "count": c} for (sc, lab), c in sorted(sits.items())
    ]

    res: dict[str, list[int]] = defaultdict(list)
    for r in rows:
        res[r["strategy"]] += [int(x) for x in filter(None, str(r["resolutions"]).split(";"))]
    viewpoints = []
    for st in sorted({r["strategy"] for r in rows}):
        xs = np.array(res.get(st, []), dtype=float)
        hist = Counter(int(x) for x in xs)
        viewpoints.append({
            "strategy": st,
            "resolutions": len(xs),
            "mean": round(float(xs.mean()), 6) if len(xs) else 0.0,
            "sd": round(float(xs.std(ddof=1)), 6) if len(xs) > 1 else 0.0,
            "histogram": " ".join(f"{k}:{hist[k]}" for k in sorted(hist)),
        })

    fm: Counter = Counter(
        (r["strategy"], r["failure_mode"]) for r in rows if r["failure_mode"] not in ("", None)
    )
    failure_modes = [
        {"strategy": st, "failure_mode": m, "count": c} for (st, m), c in sorted(fm.items())
    ]

    per_strategy: dict[str, list[float]] = defaultdict(list)
    for c in cells:
        per_strategy[c["strategy"]].append(c["rate"])
    means = {st: round(float(np.mean(v)), 6) for st, v in sorted(per_strategy.items())}
    return Aggregates(cells, situations, viewpoints, failure_modes, means)


# -- output -----------------------------------------------------------------------


def _csv_text(columns: Sequence[str], records: Iterable[Mapping]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(columns), lineterminator="\n", extrasaction="ignore")
    w.writeheader()
    for rec in records:
        w.writerow(rec)
    return buf.getvalue()


def rows_csv(rows: Sequence[Mapping]) -> str:
    return _csv_text(ROW_COLUMNS, rows)


def read_rows(path: str | Path) -> list[dict]:
    with open(path, newline="") as f:
        return list(csv.DictReader(f))


def _markdown(agg: Aggregates) -> str:
    out = ["# Experiment summary", ""]
    strategies = list(agg.strategy_means)
    scenarios = sorted({c["scenario"] for c in agg.cells})
    rate = {(c["scenario"], c["strategy"]): c for c in agg.cells}
    out += ["## Success rate (%)", ""]
    out.append("| Strategy | " + " | ".join(scenarios) + " | Avg. |")
    out.append("|---" * (len(scenarios) + 2) + "|")
    for st in strategies:
        vals = [
            f"{100 * rate[(sc, st)]['rate']:.1f}" if (sc, st) in rate else "-" for sc in scenarios
        ]
        out.append(f"| {st} | " + " | ".join(vals) + f" | {100 * agg.strategy_means[st]:.1f} |")
    out += ["", "## Cells with 95% Wilson intervals", ""]
    out.append("| Scenario | Strategy | Successes | Rate | 95% CI |")
    out.append("|---|---|---|---|---|")
    for c in agg.cells:
        out.append(
            f"| {c['scenario']} | {c['strategy']} | {c['successes']}/{c['trials']} | "
            f"{c['rate']:.2f} | [{c['ci_low']:.2f}, {c['ci_high']:.2f}] |"
        )
    out += ["", "## Situations encountered", ""]
    out.append("| Scenario | Situation | Count |")
    out.append("|---|---|---|")
    out += [f"| {s['scenario']} | {s['situation']} | {s['count']} |" for s in agg.situations]
    out += ["", "## Viewpoints per uncertainty resolution", ""]
    out.append("| Strategy | Resolutions | Mean | SD | Histogram |")
    out.append("|---|---|---|---|---|")
    out += [
        f"| {v['strategy']} | {v['resolutions']} | {v['mean']:.2f} | {v['sd']:.2f} | {v['histogram']} |"
        for v in agg.viewpoints
    ]
    out += ["", "## Failure modes", ""]
    out.append("| Strategy | Failure mode | Count |")
    out.append("|---|---|---|")
    out += [f"| {f['strategy']} | {f['failure_mode']} | {f['count']} |" for f in agg.failure_modes]
    return "\n".join(out) + "\n"


def emit_report(
    rows: Sequence[Mapping] | ExperimentReport,
    out_dir: str | Path,
    formats: Sequence[str] = ("csv", "markdown"),
) -> list[Path]:
    """Write per-trial and aggregate CSVs and/or a markdown summary; returns written paths."""
    if isinstance(rows, ExperimentReport):
        rows = rows.rows
    bad = set(formats) - {"csv", "markdown"}
    if bad:
        raise ValueError(f"unknown report formats {sorted(bad)}")
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise OSError(f"cannot create report directory {out}: {e}") from None
    agg = aggregate(rows)
    files: dict[str, str] = {}
    if "csv" in formats:
        files["rows.csv"] = rows_csv(rows)
        files["cells.csv"] = _csv_text(CELL_COLUMNS, agg.cells)
        files["situations.csv"] = _csv_text(SITUATION_COLUMNS, agg.situations)
        files["viewpoints.csv"] = _csv_text(VIEWPOINT_COLUMNS, agg.viewpoints)
        files["failure_modes.csv"] = _csv_text(FAILURE_COLUMNS, agg.failure_modes)
    if "markdown" in formats:
        files["summary.md"] = _markdown(agg)
    written = []
    for name, text in files.items():
        p = out / name
        try:
            p.write_text(text)
        except OSError as e:
            raise OSError(f"cannot write {p}: {e}") from None
        written.append(p)
    return written


# -- viewpoint policies ------------------------------------------------------------


@dataclass
class ViewpointReport:
    rows: list[dict]

    def _mean(self, key: str, fixture: str | None = None) -> float:
        xs = [r[key] for r in self.rows if fixture is None or r["fixture"] == fixture]
        return float(np.mean(xs)) if xs else 0.0

    @property
    def guided_mean(self) -> float:
        return self._mean("guided")

    @property
    def greedy_mean(self) -> float:
        return self._mean("greedy")

    def per_fixture(self) -> list[dict]:
        out = []
        for fx in sorted({r["fixture"] for r in self.rows}):
            rs = [r for r in self.rows if r["fixture"] == fx]
            out.append({
                "fixture": fx, "trials": len(rs), "ring": rs[0]["ring"],
                "guided_mean": self._mean("guided", fx), "greedy_mean": self._mean("greedy", fx),
                "guided_accuracy": float(np.mean([r["guided_correct"] for r in rs])),
                "greedy_accuracy": float(np.mean([r["greedy_correct"] for r in rs])),
            })
        return out


def _fixture_setup(sc: Scenario, rng):
    spec = sc.extras.get("verify")
    if spec is None:
        raise ScenarioError(f"{sc.name}: fixture needs a 'verify' block")
    atom = parse_literals(spec["atom"])[0].atom
    world = sc.make_world(rng)
    world.navigate(world.robot.room)
    world.set_target(world.atom_target(atom))
    return world, atom, [np.asarray(p, float) for p in spec.get("greedy_ring", [])]


def greedy_verify(world, atom, backend, ring, n: int = N_PARAPHRASES) -> tuple[bool, int]:
    """Ask from the current view; on any doubt, sweep every ring pose and vote over all answers."""
    questions = paraphrase(atom, n).questions
    obs = world.observe()
    answers = [backend.answer(obs, Question(q, atom)) for q in questions]
    if is_consistent(answers) and backend.sufficiency(obs, atom):
        return majority_vote(answers), 0
    for pose in ring:
        world.set_camera(pose)
        obs = world.observe()
        answers += [backend.answer(obs, Question(q, atom)) for q in questions]
    return majority_vote(answers), len(ring)


def compare_viewpoint_policies(config: ExperimentConfig) -> ViewpointReport:
    """Guided (suggested directions) vs greedy (fixed ring sweep) on the same seeds."""
    rows = []
    for ref in config.fixtures:
        sc = read_scenario(ref)
        for t in range(config.viewpoint_trials):
            world_seed, backend_seed = trial_seed(config.master_seed, sc.name, t).spawn(2)

            def backend():
                if config.backend == "truth":
                    return GroundTruthBackend(config.sufficiency_threshold)
                return NoisyBackend(np.random.default_rng(backend_seed), config.eps_p,
                                    config.eps_a, config.sufficiency_threshold)

            world, atom, ring = _fixture_setup(sc, np.random.default_rng(world_seed))
            truth = world.ground_truth_eval(atom)
            verdict, _, _ = verify_predicate(
                world.observe(), atom, backend(), world.scene_graph(), config.viewpoint_budget, world
            )
            world, atom, ring = _fixture_setup(sc, np.random.default_rng(world_seed))
            value, used = greedy_verify(world, atom, backend(), ring)
            rows.append({
                "fixture": sc.name, "trial": t, "ring": len(ring),
                "guided": verdict.viewpoints_used, "greedy": used,
                "guided_correct": int(verdict.value == truth), "greedy_correct": int(value == truth),
            })
    return ViewpointReport(rows)
