"""Comparison routings: relaxed commodity LP + path decomposition, and greedy shortest path."""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

from .lp import build_lp1_relaxed
from .rules import path_decompose_and_count, rule_counts_from_paths
from .simplex import BasicSolution, Solver, simplex_solve
from .topology import ClassSpec, Commodity, Topology

EPS = 1e-9


@dataclass
class BaselineResult:
    algorithm: str
    feasible: bool
    routed: float
    total_demand: float
    paths: list[tuple[int, list[str], float]] = field(default_factory=list)
    rules: dict[str, int] = field(default_factory=dict)
    objective: float = float("nan")
    lp: Optional[BasicSolution] = None
    model: object = None
    stopped_at: Optional[int] = None

    @property
    def routed_fraction(self) -> float:
        return self.routed / self.total_demand if self.total_demand else 1.0


def solve_lp1_baseline(
    topology: Topology,
    commodities: Sequence[Commodity],
    classes: Optional[Mapping[int, ClassSpec]] = None,
    scale: float = 1.0,
    solver: Optional[Solver] = None,
    decompose: bool = True,
) -> BaselineResult:
    classes = classes or topology.classes
    total = scale * sum(c.demand for c in commodities)
    model = build_lp1_relaxed(topology, commodities, classes, scale)
    sol = simplex_solve(model, solver=solver)
    if not sol.optimal:
        return BaselineResult("lp1", False, 0.0, total, lp=sol, model=model)
    paths, rules = [], {}
    if decompose:
        dec = path_decompose_and_count(model, sol.x, topology, commodities, scale=scale)
        paths, rules = dec.paths, dec.rules
    return BaselineResult("lp1", True, total, total, paths, rules, sol.objective, sol, model)


def lp1_feasible(topology, commodities, classes=None, scale: float = 1.0, solver=None) -> bool:
    model = build_lp1_relaxed(topology, commodities, classes or topology.classes, scale)
    if solver is not None:
        return simplex_solve(model, solver=solver).optimal
    return simplex_solve(model, feasibility_only=True).optimal


def _bfs(adj, order, src, dst, cap) -> Optional[list[str]]:
    """Hop-shortest path over edges with residual capacity; ties by node order."""
    if src == dst:
        return [src]
    prev = {src: None}
    q = deque([src])
    while q:
        u = q.popleft()
        for w in adj[u]:
            if w not in prev and cap[(u, w)] > EPS:
                prev[w] = u
                if w == dst:
                    path = [w]
                    while prev[path[-1]] is not None:
                        path.append(prev[path[-1]])
                    return path[::-1]
                q.append(w)
    return None


def greedy_shortest_path(
    topology: Topology,
    commodities: Sequence[Commodity],
    classes: Optional[Mapping[int, ClassSpec]] = None,
    scale: float = 1.0,
    skip_stuck: bool = False,
) -> BaselineResult:
    """Route commodities one by one, biggest PM requirement first.

    Each augmentation uses the PM minimising total hops source -> PM -> dest
    and sends as much as the path's links and the PM allow. When a commodity
    has residual demand but no path, the run stops (or, with ``skip_stuck``,
    moves on to the next commodity).
    """
    classes = classes or topology.classes
    order = topology.node_order()
    pm_set = set(topology.pms)
    cap = dict(topology.capacity)
    pm_left = dict(topology.pm_capacity)
    adj: dict[str, list[str]] = {v: [] for v in topology.nodes}
    for u, w in topology.capacity:
        if u not in pm_set and w not in pm_set:
            adj[u].append(w)
    for v in adj:
        adj[v].sort(key=order.__getitem__)
    hosts = list(topology.switch_pm().items())

    ranked = sorted(
        range(len(commodities)),
        key=lambda i: (-classes[commodities[i].class_id].unit_cost * commodities[i].demand, i),
    )
    paths: list[tuple[int, list[str], float]] = []
    routed_total, total = 0.0, scale * sum(c.demand for c in commodities)
    stopped_at = None
    for i in ranked:
        c = commodities[i]
        p = classes[c.class_id].unit_cost
        need = c.demand * scale
        while need > EPS:
            best = None
            for v, pm in hosts:
                if pm_left[pm] <= EPS or cap[(v, pm)] <= EPS or cap[(pm, v)] <= EPS:
                    continue
                leg1 = _bfs(adj, order, c.source, v, cap)
                if leg1 is None:
                    continue
                leg2 = _bfs(adj, order, v, c.dest, cap)
                if leg2 is None:
                    continue
                hops = len(leg1) + len(leg2)
                if best is None or hops < best[0]:
                    best = (hops, leg1 + [pm] + leg2)
            if best is None:
                break
            walk = best[1]
            uses: dict = {}
            for e in zip(walk, walk[1:]):
                uses[e] = uses.get(e, 0) + 1
            pm = next(x for x in walk if x in pm_set)
            amount = min([need, pm_left[pm] / p] + [cap[e] / k for e, k in uses.items()])
            if amount <= EPS:
                break
            for e, k in uses.items():
                cap[e] -= k * amount
                assert cap[e] >= -EPS, f"greedy overloaded {e}"
            pm_left[pm] -= p * amount
            assert pm_left[pm] >= -EPS, f"greedy overloaded {pm}"
            paths.append((i, walk, amount))
            need -= amount
            routed_total += amount
        if need > EPS:
            stopped_at = i if stopped_at is None else stopped_at
            if not skip_stuck:
                break
    feasible = stopped_at is None
    return BaselineResult(
        "greedy",
        feasible,
        routed_total,
        total,
        paths,
        rule_counts_from_paths(paths, topology),
        stopped_at=stopped_at,
    )
