"""Independent feasibility checker for any routing in per-commodity edge-flow form.

Every sum is recomputed from raw edge flows; nothing is taken from solver
residuals.
"""
from __future__ import annotations

import json
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

from .topology import ClassSpec, Commodity, Edge, Topology

VIOLATION_TOL = 1e-6

CHECKS = (
    "conservation",
    "link_capacity",
    "pm_capacity",
    "process_exactly_once",
    "class_correctness",
    "demand_satisfaction",
    "nonnegativity",
)


class MalformedSolution(ValueError):
    pass


@dataclass
class RoutedFlows:
    """f_i^0 / f_i^1 per commodity; optional per-(PM, class) VM loads claimed by the router."""

    unprocessed: list[dict[Edge, float]]
    processed: list[dict[Edge, float]]
    vm_loads: Optional[dict[tuple[str, int], float]] = None


@dataclass
class VerificationReport:
    worst: dict[str, float] = field(default_factory=lambda: {k: 0.0 for k in CHECKS})
    where: dict[str, str] = field(default_factory=dict)
    info: dict = field(default_factory=dict)

    def note(self, check: str, magnitude: float, where: str) -> None:
        if magnitude > self.worst[check]:
            self.worst[check] = float(magnitude)
            self.where[check] = where

    @property
    def status(self) -> dict[str, bool]:
        return {k: v <= VIOLATION_TOL for k, v in self.worst.items()}

    @property
    def passed(self) -> bool:
        return all(self.status.values())

    def failed(self) -> list[str]:
        return [k for k, ok in self.status.items() if not ok]

    def to_json(self) -> str:
        doc = {
            "passed": self.passed,
            "checks": {
                k: {"ok": self.status[k], "worst": self.worst[k], "where": self.where.get(k, "")}
                for k in CHECKS
            },
            "info": self.info,
        }
        return json.dumps(doc, indent=1, sort_keys=False)


def flows_from_paths(paths: Sequence[tuple[int, Sequence[str], float]], n_commodities: int, topology: Topology) -> RoutedFlows:
    """Walks ``s .. v, pm, v .. t`` -> edge flows; the flag flips at the first PM."""
    f0 = [defaultdict(float) for _ in range(n_commodities)]
    f1 = [defaultdict(float) for _ in range(n_commodities)]
    pm_set = set(topology.pms)
    for i, nodes, amount in paths:
        processed = False
        for u, w in zip(nodes, nodes[1:]):
            if (u, w) not in topology.capacity:
                raise MalformedSolution(f"path of commodity {i} uses missing edge ({u},{w})")
            (f1 if processed else f0)[i][(u, w)] += amount
            if w in pm_set:
                processed = True
    return RoutedFlows([dict(d) for d in f0], [dict(d) for d in f1])


def flows_from_lp1(model, x: np.ndarray, n_commodities: int) -> RoutedFlows:
    f0 = [dict() for _ in range(n_commodities)]
    f1 = [dict() for _ in range(n_commodities)]
    for j, (i, flag, e) in enumerate(model.var_keys):
        if x[j] != 0.0:
            (f1 if flag else f0)[i][e] = float(x[j])
    return RoutedFlows(f0, f1)


def verify_routing(
    flows: RoutedFlows,
    topology: Topology,
    commodities: Sequence[Commodity],
    classes: Optional[Mapping[int, ClassSpec]] = None,
    scale: float = 1.0,
) -> VerificationReport:
    classes = classes or topology.classes
    if len(flows.unprocessed) != len(commodities) or len(flows.processed) != len(commodities):
        raise MalformedSolution("flow lists do not match the commodity list")
    rep = VerificationReport()
    pm_host = topology.pm_switch()
    pm_set = set(topology.pms)
    link = defaultdict(float)
    pm_in = defaultdict(float)
    vm = defaultdict(float)
    for i, c in enumerate(commodities):
        d = c.demand * scale
        f0, f1 = flows.unprocessed[i], flows.processed[i]
        div0, div1 = defaultdict(float), defaultdict(float)
        for flag, f, div in ((0, f0, div0), (1, f1, div1)):
            for e, val in f.items():
                if e not in topology.capacity:
                    raise MalformedSolution(f"commodity {i} has flow on unknown edge {e}")
                rep.note("nonnegativity", -val, f"f{flag}[{i}]{e}")
                link[e] += val
                div[e[0]] += val
                div[e[1]] -= val
        for v in topology.switches:
            rep.note("conservation", abs(div0[v] - (d if v == c.source else 0.0)), f"1a[{i}]@{v}")
            if v != c.dest:
                rep.note("conservation", abs(div1[v]), f"1b[{i}]@{v}")
        rep.note("demand_satisfaction", abs(-div1[c.dest] - d), f"delivered[{i}]@{c.dest}")
        into_pms = 0.0
        for pm, v in pm_host.items():
            into = f0.get((v, pm), 0.0)
            into_pms += into
            rep.note("process_exactly_once", f1.get((v, pm), 0.0), f"1c[{i}]@{pm}")
            rep.note("process_exactly_once", abs(into - f1.get((pm, v), 0.0)), f"1d[{i}]@{pm}")
            rep.note("process_exactly_once", f0.get((pm, v), 0.0), f"unprocessed-exit[{i}]@{pm}")
            pm_in[pm] += classes[c.class_id].unit_cost * into
            vm[(pm, c.class_id)] += classes[c.class_id].unit_cost * into
        rep.note("process_exactly_once", abs(into_pms - d), f"processed-total[{i}]")
    for pm, load in pm_in.items():
        rep.note("pm_capacity", load - topology.pm_capacity[pm], f"1e@{pm}")
    for e, load in link.items():
        rep.note("link_capacity", load - topology.capacity[e], f"1f@{e}")
    if flows.vm_loads is not None:
        for key in set(vm) | set(flows.vm_loads):
            rep.note("class_correctness", abs(vm.get(key, 0.0) - flows.vm_loads.get(key, 0.0)), f"vm{key}")
    rep.info["pm_load"] = {pm: pm_in.get(pm, 0.0) for pm in topology.pms}
    rep.info["pm_nodes_seen"] = sorted(pm_set & {e[1] for e in link})
    return rep


def mptpt_flows(solution, topology: Topology, classes: Optional[Mapping[int, ClassSpec]] = None) -> RoutedFlows:
    """Edge flows of an MPTPT routing, with VM loads read off the step-1 trees."""
    from .pipeline import routing_paths
    from .transform import handoff_switch

    classes = classes or topology.classes
    flows = flows_from_paths(routing_paths(solution, topology), len(solution.commodities), topology)
    pm_of = topology.switch_pm()
    vm: dict = defaultdict(float)
    for tree in solution.step1_trees:
        k = tree.root.class_id
        for s, a in tree.source_amounts.items():
            vm[(pm_of[handoff_switch(tree, s)], k)] += classes[k].unit_cost * a
    flows.vm_loads = dict(vm)
    return flows
