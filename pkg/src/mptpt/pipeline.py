"""Two-step MPTPT routing: sources to PMs, then PMs to destinations."""
from __future__ import annotations

import dataclasses
import time
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

from . import lp
from .simplex import BasicSolution, Solver, simplex_solve
from .topology import ClassSpec, Commodity, Topology, destinations
from .transform import (
    ClassSink,
    StepDemand,
    build_g1,
    build_g2,
    group_split,
    step1_demands,
    step2_demands,
)
from .trees import MptpTree, flow2trees, remove_cycles

TOL = 1e-7


class InfeasibleError(RuntimeError):
    """A routing step has no feasible solution."""

    def __init__(self, stage: str, detail: str = ""):
        super().__init__(f"{stage} infeasible{': ' + detail if detail else ''}")
        self.stage = stage


@dataclass(frozen=True)
class Share:
    """Part of a commodity carried by one (step-1 tree, step-2 tree) pair.

    ``step2_tag`` is None when the PM switch is the destination itself.
    """

    commodity: int
    step1_tag: int
    step2_tag: Optional[int]
    handoff: str
    amount: float


@dataclass
class RoutingSolution:
    step1_trees: list[MptpTree]
    step2_trees: list[MptpTree]
    shares: list[Share]
    commodities: list[Commodity]
    step2_demands: list[StepDemand] = field(default_factory=list)
    stats: dict = field(default_factory=dict)

    @property
    def trees(self) -> list[MptpTree]:
        return self.step1_trees + self.step2_trees

    def tree_by_tag(self) -> dict[int, MptpTree]:
        return {t.tag: t for t in self.trees}

    def shares_of(self, i: int) -> list[Share]:
        return [s for s in self.shares if s.commodity == i]


def theorem1_bound(
    topology: Topology, n_classes: int, commodities: Optional[Sequence[Commodity]] = None
) -> int:
    """Worst-case total tree count C + 2|E0| + |V_T| - 2|V_pm|.

    Without commodities |V_T| is taken as |V_sw|, which makes the bound hold
    for any number of commodities.
    """
    n_dest = len(topology.switches) if commodities is None else len(destinations(commodities))
    return n_classes + 2 * len(topology.capacity) + n_dest - 2 * len(topology.pms)


def _solve(model: lp.LpModel, stage: str, solver: Optional[Solver]) -> BasicSolution:
    sol = simplex_solve(model, solver=solver)
    if not sol.optimal:
        raise InfeasibleError(stage, sol.status)
    return sol


def solve_mptpt(
    topology: Topology,
    commodities: Sequence[Commodity],
    classes: Optional[Mapping[int, ClassSpec]] = None,
    solver: Optional[Solver] = None,
) -> RoutingSolution:
    classes = dict(classes or topology.classes)
    if not commodities:
        raise ValueError("no commodities to route")
    n_classes = max(classes) if classes else max(c.class_id for c in commodities)
    stats: dict = {}
    t0 = time.perf_counter()

    g1 = build_g1(topology, n_classes)
    d1 = step1_demands(commodities)
    m2 = lp.build_lp2(g1, d1, topology, classes)
    s2 = _solve(m2, "step1", solver)
    order1 = g1.order()
    flows1 = lp.flows_by_destination(m2, s2.x)
    step1: list[MptpTree] = []
    for sink in g1.class_sinks:
        dem = {d.node: d.amount for d in d1 if d.sink == sink}
        if dem:
            step1 += flow2trees(order1, sink, remove_cycles(flows1.get(sink, {}), order1), dem)
    t1 = time.perf_counter()

    edge_flow: dict = defaultdict(float)
    for t, fl in flows1.items():
        for e, f in fl.items():
            if not isinstance(e[1], ClassSink):
                edge_flow[e] += f
    g2 = build_g2(topology, edge_flow)
    step1 = [dataclasses.replace(t, tag=k) for k, t in enumerate(step1, start=1)]
    d2 = step2_demands(step1, commodities)
    m3 = lp.build_lp3(g2, d2)
    s3 = _solve(m3, "step2", solver)
    order2 = g2.order()
    flows3 = lp.flows_by_destination(m3, s3.x)
    step2: list[MptpTree] = []
    for t in destinations(commodities):
        dem = {d.node: d.amount for d in d2 if d.sink == t and d.node != t}
        if dem:
            step2 += flow2trees(order2, t, remove_cycles(flows3.get(t, {}), order2), dem)
    base = len(step1)
    step2 = [dataclasses.replace(t, tag=base + k) for k, t in enumerate(step2, start=1)]
    t2 = time.perf_counter()

    shares = _commodity_shares(commodities, step1, step2)
    stats.update(
        step1_objective=s2.objective,
        step2_objective=s3.objective,
        step1_pivots=s2.iterations,
        step2_pivots=s3.iterations,
        step1_rows=m2.n_rows,
        step2_rows=m3.n_rows,
        step1_support=s2.positive_support(),
        step2_support=s3.positive_support(),
        step1_bundle_rows=m2.bundle_rows(),
        step2_bundle_rows=m3.bundle_rows(),
        step1_trees=len(step1),
        step2_trees=len(step2),
        bound=theorem1_bound(topology, n_classes, commodities),
        step1_seconds=t1 - t0,
        step2_seconds=t2 - t1,
    )
    return RoutingSolution(step1, step2, shares, list(commodities), d2, stats)


def _commodity_shares(commodities, step1, step2) -> list[Share]:
    """Map every commodity onto (step-1 tag, step-2 tag) pairs.

    Inside a step-1 tree a commodity gets its pro-rata part of the
    (source, class) amount; that part is spread over the step-2 trees in the
    proportions the step-2 peel split the (PM switch, destination) demand.
    """
    split = group_split(step1, commodities)
    tags1: dict = defaultdict(list)  # (source, class) -> step-1 tags in tree order
    for tree in step1:
        for s in tree.source_amounts:
            tags1[(s, tree.root.class_id)].append(tree.tag)
    by_handoff: dict = defaultdict(list)  # (handoff, dest) -> [(tag, amount)]
    for tree in step2:
        for v, a in tree.source_amounts.items():
            by_handoff[(v, tree.root)].append((tree.tag, a))
    group_dest: dict = defaultdict(float)
    for c in commodities:
        group_dest[(c.source, c.class_id, c.dest)] += c.demand

    shares = []
    for i, c in enumerate(commodities):
        key = (c.source, c.class_id)
        frac = c.demand / group_dest[key + (c.dest,)]
        for tag1, (handoff, dest_amounts) in zip(tags1[key], split[key]):
            part = dest_amounts.get(c.dest, 0.0) * frac
            if part <= 0.0:
                continue
            if handoff == c.dest:
                shares.append(Share(i, tag1, None, handoff, part))
                continue
            pieces = by_handoff[(handoff, c.dest)]
            total = sum(a for _, a in pieces)
            for tag2, a in pieces:
                shares.append(Share(i, tag1, tag2, handoff, part * a / total))
    return shares


def routing_paths(solution: RoutingSolution, topology: Topology) -> list[tuple[int, list[str], float]]:
    """Expand shares into G0 walks ``s .. v, v_hat, v .. t`` with their amounts."""
    trees = solution.tree_by_tag()
    pm_of = topology.switch_pm()
    out = []
    for sh in solution.shares:
        c = solution.commodities[sh.commodity]
        leg1 = trees[sh.step1_tag].path(c.source)[:-1]
        v = leg1[-1]
        leg2 = [v] if sh.step2_tag is None else trees[sh.step2_tag].path(v)
        out.append((sh.commodity, leg1 + [pm_of[v]] + leg2, sh.amount))
    return out


def _tree_json(tree: MptpTree) -> dict:
    return {
        "tag": tree.tag,
        "root": str(tree.root),
        "edges": [[str(u), str(w)] for u, w in tree.edges()],
        "sources": {str(s): a for s, a in tree.source_amounts.items()},
    }


def solution_to_dict(solution: RoutingSolution, topology: Topology) -> dict:
    return {
        "algorithm": "mptpt",
        "feasible": True,
        "step1_trees": [_tree_json(t) for t in solution.step1_trees],
        "step2_trees": [_tree_json(t) for t in solution.step2_trees],
        "shares": [
            {
                "commodity": s.commodity,
                "step1_tag": s.step1_tag,
                "step2_tag": s.step2_tag,
                "handoff": s.handoff,
                "amount": s.amount,
            }
            for s in solution.shares
        ],
        "paths": [
            {"commodity": i, "nodes": nodes, "amount": a}
            for i, nodes, a in routing_paths(solution, topology)
        ],
        "stats": {k: solution.stats[k] for k in sorted(solution.stats) if not k.endswith("seconds")},
    }


def solution_from_dict(doc: Mapping, commodities: Sequence[Commodity]) -> RoutingSolution:
    """Rebuild trees and shares from :func:`solution_to_dict` output."""

    def tree(d, step1):
        root = ClassSink(int(d["root"][1:])) if step1 else d["root"]
        parent = {}
        for u, w in d["edges"]:
            w = ClassSink(int(w[1:])) if step1 and w == d["root"] else w
            parent[u] = (u, w)
        return MptpTree(root, parent, dict(d["sources"]), d["tag"])

    s1 = [tree(d, True) for d in doc["step1_trees"]]
    s2 = [tree(d, False) for d in doc["step2_trees"]]
    shares = [
        Share(s["commodity"], s["step1_tag"], s["step2_tag"], s["handoff"], s["amount"])
        for s in doc["shares"]
    ]
    return RoutingSolution(s1, s2, shares, list(commodities), stats=dict(doc.get("stats", {})))
