"""Experiment harness: rule counts (experiment 1) and maximum uniform demand (experiment 2)."""
from __future__ import annotations

import csv
import io
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from statistics import mean
from typing import Callable, Optional, Sequence

from .baselines import greedy_shortest_path, solve_lp1_baseline
from .lp import build_lp1_max_scale
from .pipeline import InfeasibleError, solve_mptpt, theorem1_bound
from .rules import classifier_counts, compile_rules
from .simplex import OPTIMAL, UNBOUNDED, simplex_solve
from .topology import (
    Commodity,
    Topology,
    gen_fat_tree,
    gen_fig1,
    gen_geant,
    gen_random_commodities,
    load_topology,
    make_classes,
)

log = logging.getLogger(__name__)

ALGORITHMS = ("mptpt", "lp1", "greedy")


@dataclass
class ExperimentConfig:
    topologies: list[str] = field(default_factory=lambda: ["fig1"])
    classes: list[int] = field(default_factory=lambda: [3, 7])
    commodities: list[int] = field(default_factory=lambda: [10, 50, 100])
    demand: float = 0.2
    seeds: list[int] = field(default_factory=lambda: list(range(10)))
    algorithms: list[str] = field(default_factory=lambda: list(ALGORITHMS))
    class_cost: float = 1.0
    step: float = 0.1
    tol: float = 1e-3
    workers: int = 1

    def __post_init__(self):
        if not (self.topologies and self.classes and self.commodities and self.seeds and self.algorithms):
            raise ValueError("sweep lists must be nonempty")
        if not self.step > 0 or not self.tol > 0:
            raise ValueError("step and tol must be positive")
        unknown = set(self.algorithms) - set(ALGORITHMS)
        if unknown:
            raise ValueError(f"unknown algorithms {sorted(unknown)}")

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentConfig":
        doc = dict(doc)
        if "topology" in doc:
            doc["topologies"] = [doc.pop("topology")]
        if isinstance(doc.get("seeds"), int):
            doc["seeds"] = list(range(doc["seeds"]))
        return cls(**doc)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))


def get_topology(selector: str) -> Topology:
    if selector.startswith("file:"):
        return load_topology(selector[5:])
    try:
        return {"fig1": gen_fig1, "geant": gen_geant, "fattree": gen_fat_tree}[selector]()
    except KeyError:
        raise ValueError(f"unknown topology selector {selector!r}") from None


def _rule_stats(counts: dict[str, int]) -> dict:
    vals = list(counts.values())
    used = [r for r in vals if r > 0]
    return {
        "avg_rules": mean(used) if used else 0.0,
        "avg_rules_all": mean(vals) if vals else 0.0,
        "max_rules": max(vals, default=0),
    }


EXP1_FIELDS = [
    "algorithm", "topology", "C", "M", "seed", "feasible", "avg_rules", "avg_rules_all",
    "max_rules", "max_rules_with_classifiers", "trees", "bound",
]


def _exp1_job(args) -> list[dict]:
    selector, n_classes, m, seed, cfg = args
    topo = get_topology(selector)
    classes = make_classes(n_classes, cfg.class_cost)
    com = gen_random_commodities(topo, m, n_classes, cfg.demand, seed)
    bound = theorem1_bound(topo, n_classes)
    base = {"topology": selector, "C": n_classes, "M": m, "seed": seed, "bound": bound}
    rows = []
    for algo in cfg.algorithms:
        row = dict(base, algorithm=algo, feasible=True, trees="")
        if algo == "mptpt":
            try:
                sol = solve_mptpt(topo, com, classes)
            except InfeasibleError:
                row.update(feasible=False, avg_rules="", avg_rules_all="", max_rules="", max_rules_with_classifiers="")
                rows.append(row)
                continue
            counts = compile_rules(sol, topo).counts(topo)
            extra = classifier_counts(sol, topo)
            row.update(_rule_stats(counts), trees=len(sol.trees))
            row["max_rules_with_classifiers"] = max(counts[v] + extra[v] for v in counts)
        else:
            res = (
                solve_lp1_baseline(topo, com, classes)
                if algo == "lp1"
                else greedy_shortest_path(topo, com, classes)
            )
            row.update(_rule_stats(res.rules) if res.rules else {"avg_rules": "", "avg_rules_all": "", "max_rules": ""})
            row.update(feasible=res.feasible, max_rules_with_classifiers=row["max_rules"])
            row["trees"] = len(res.paths)
        rows.append(row)
    return rows


def _run(job: Callable, jobs: list, workers: int) -> list[dict]:
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            parts = list(pool.map(job, jobs))
    else:
        parts = [job(j) for j in jobs]
    return [row for part in parts for row in part]


def experiment1(cfg: ExperimentConfig) -> list[dict]:
    jobs = [
        (t, c, m, s, cfg)
        for t in cfg.topologies
        for c in cfg.classes
        for m in cfg.commodities
        for s in cfg.seeds
    ]
    return _run(_exp1_job, jobs, cfg.workers)


def search_max_demand(
    feasible: Callable[[float], bool], step: float, tol: float, ceiling: float
) -> float:
    """Grow the demand in steps of ``step * ceiling`` until infeasible, then
    bisect down to an absolute width of ``tol``.

    Nothing above ``ceiling`` is tried; a routing feasible there reports it.
    """
    lo, hi = 0.0, None
    k = 1
    while k * step < 1.0:
        x = k * step * ceiling
        if not feasible(x):
            hi = x
            break
        lo = x
        k += 1
    if hi is None:
        if feasible(ceiling):
            return ceiling
        hi = ceiling
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if feasible(mid):
            lo = mid
        else:
            hi = mid
    return lo


def lp1_max_demand(topo: Topology, com: Sequence[Commodity], classes) -> float:
    """Largest common per-commodity demand the relaxed commodity LP can carry."""
    if not com:
        return math.inf
    base = com[0].demand
    sol = simplex_solve(build_lp1_max_scale(topo, com, classes))
    if sol.status == UNBOUNDED:
        return math.inf
    if sol.status != OPTIMAL:
        return 0.0
    return float(sol.x[-1]) * base


def _with_demand(com: Sequence[Commodity], d: float) -> list[Commodity]:
    return [replace(c, demand=d) for c in com]


def mptpt_feasible(topo, com, classes, d: float) -> bool:
    try:
        solve_mptpt(topo, _with_demand(com, d), classes)
    except InfeasibleError:
        return False
    return True


def greedy_feasible(topo, com, classes, d: float) -> bool:
    return greedy_shortest_path(topo, _with_demand(com, d), classes).feasible


EXP2_FIELDS = ["algorithm", "topology", "C", "M", "seed", "max_uniform_demand", "unbounded"]


def max_uniform_demands(topo, com, classes, algorithms, step: float, tol: float) -> dict[str, float]:
    ceiling = lp1_max_demand(topo, com, classes)
    out = {}
    for algo in algorithms:
        if algo == "lp1" or not math.isfinite(ceiling):
            out[algo] = ceiling
        elif ceiling <= 0.0:
            out[algo] = 0.0
        else:
            test = mptpt_feasible if algo == "mptpt" else greedy_feasible
            out[algo] = search_max_demand(lambda d: test(topo, com, classes, d), step, tol, ceiling)
    return out


def _exp2_job(args) -> list[dict]:
    selector, n_classes, m, seed, cfg = args
    topo = get_topology(selector)
    classes = make_classes(n_classes, cfg.class_cost)
    com = gen_random_commodities(topo, m, n_classes, cfg.demand, seed) if m > 0 else []
    values = max_uniform_demands(topo, com, classes, cfg.algorithms, cfg.step, cfg.tol)
    return [
        {
            "algorithm": algo,
            "topology": selector,
            "C": n_classes,
            "M": m,
            "seed": seed,
            "max_uniform_demand": "" if math.isinf(v) else round(v, 9),
            "unbounded": math.isinf(v),
        }
        for algo, v in values.items()
    ]


def experiment2(cfg: ExperimentConfig) -> list[dict]:
    jobs = [
        (t, c, m, s, cfg)
        for t in cfg.topologies
        for c in cfg.classes
        for m in cfg.commodities
        for s in cfg.seeds
    ]
    return _run(_exp2_job, jobs, cfg.workers)


def rows_to_csv(rows: Sequence[dict], fields: Sequence[str]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(fields), lineterminator="\n", extrasaction="ignore")
    w.writeheader()
    for r in rows:
        w.writerow({k: (f"{v:.6f}" if isinstance(v, float) else v) for k, v in r.items()})
    return buf.getvalue()
