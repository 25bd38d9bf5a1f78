"""Step graphs G1/G2 and the per-step demand sets."""
from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Hashable, Iterable, Mapping, Sequence

from .topology import Commodity, Edge, Topology

ABS_TOL = 1e-9
REL_TOL = 1e-6


@dataclass(frozen=True, order=True)
class ClassSink:
    """The artificial Step-1 root collecting all traffic of one class."""

    class_id: int

    def __str__(self) -> str:
        return f"P{self.class_id}"


Node = Hashable  # a switch id (str) or a ClassSink
StepEdge = tuple[Node, Node]


@dataclass
class StepGraph:
    nodes: list[Node]
    capacity: dict[StepEdge, float]  # math.inf on class-sink edges
    class_sinks: list[ClassSink] = field(default_factory=list)
    # (v, P_k) -> ((v, v_hat), (v_hat, v)); E0 edges map to themselves
    back_map: dict[StepEdge, tuple[Edge, ...]] = field(default_factory=dict)

    @property
    def edges(self) -> list[StepEdge]:
        return list(self.capacity)

    def order(self) -> dict[Node, int]:
        return {v: i for i, v in enumerate(self.nodes)}

    def in_edges(self) -> dict[Node, list[StepEdge]]:
        out: dict[Node, list[StepEdge]] = {v: [] for v in self.nodes}
        for e in self.capacity:
            out[e[1]].append(e)
        return out


@dataclass(frozen=True)
class StepDemand:
    node: str
    sink: Node
    amount: float


def build_g1(topology: Topology, n_classes: int) -> StepGraph:
    if n_classes < 1:
        raise ValueError("need at least one class")
    sinks = [ClassSink(k) for k in range(1, n_classes + 1)]
    cap: dict[StepEdge, float] = {}
    back: dict[StepEdge, tuple[Edge, ...]] = {}
    for e in topology.switch_edges():
        cap[e] = topology.capacity[e]
        back[e] = (e,)
    for v, pm in topology.switch_pm().items():
        for p in sinks:
            cap[(v, p)] = math.inf
            back[(v, p)] = ((v, pm), (pm, v))
    return StepGraph(list(topology.switches) + sinks, cap, sinks, back)


def step1_demands(commodities: Iterable[Commodity]) -> list[StepDemand]:
    """Aggregate demand per (source, class); the sink is the class node."""
    agg: dict[tuple[str, int], float] = defaultdict(float)
    for c in commodities:
        agg[(c.source, c.class_id)] += c.demand
    return [StepDemand(s, ClassSink(k), d) for (s, k), d in agg.items()]


def build_g2(topology: Topology, step1_edge_flow: Mapping[Edge, float]) -> StepGraph:
    """Switch-only graph with capacities reduced by the Step-1 load.

    ``step1_edge_flow`` is the total Step-1 flow per switch-switch edge.
    """
    cap: dict[StepEdge, float] = {}
    for e in topology.switch_edges():
        g = topology.capacity[e]
        used = step1_edge_flow.get(e, 0.0)
        rest = g - used
        if rest < -(ABS_TOL + REL_TOL * g):
            raise ValueError(f"Step-1 flow {used} exceeds capacity {g} on {e}")
        cap[e] = min(g, max(rest, 0.0))
    return StepGraph(list(topology.switches), cap, [], {e: (e,) for e in cap})


def distribute_by_destination(
    tree_amounts: Sequence[float], dest_demands: Mapping[Hashable, float]
) -> list[dict[Hashable, float]]:
    """Split each tree's (source, class) amount over destinations pro rata.

    >>> distribute_by_destination([40, 60], {"t1": 30, "t2": 70})
    [{'t1': 12.0, 't2': 28.0}, {'t1': 18.0, 't2': 42.0}]
    """
    if not dest_demands:
        raise ValueError("empty commodity group")
    total = float(sum(dest_demands.values()))
    carried = float(sum(tree_amounts))
    if total <= 0.0:
        return [{} for _ in tree_amounts]
    if abs(carried - total) > ABS_TOL + REL_TOL * total:
        raise ValueError(f"trees carry {carried} but the group demands {total}")
    return [{t: a * d / total for t, d in dest_demands.items()} for a in tree_amounts]


def step2_demands(
    step1_trees: Sequence, commodities: Sequence[Commodity]
) -> list[StepDemand]:
    """Traffic leaving each PM switch towards each destination.

    Every (source, class) amount carried by a Step-1 tree is handed off at the
    switch where the source's unique tree path enters the class node; it is
    then split over that group's destinations with
    :func:`distribute_by_destination`.
    """
    agg: dict[tuple[str, str], float] = defaultdict(float)
    for (s, k), parts in group_split(step1_trees, commodities).items():
        for handoff, shares in parts:
            for t, amount in shares.items():
                agg[(handoff, t)] += amount
    return [StepDemand(v, t, a) for (v, t), a in agg.items() if a > 0.0]


def group_split(step1_trees: Sequence, commodities: Sequence[Commodity]):
    """(source, class) -> [(handoff switch, {dest: amount}) per carrying tree]."""
    groups: dict[tuple[str, int], dict[str, float]] = defaultdict(lambda: defaultdict(float))
    for c in commodities:
        groups[(c.source, c.class_id)][c.dest] += c.demand
    carried: dict[tuple[str, int], list[tuple[str, float]]] = defaultdict(list)
    for tree in step1_trees:
        k = tree.root.class_id
        for s, amount in tree.source_amounts.items():
            carried[(s, k)].append((handoff_switch(tree, s), amount))
    out = {}
    for key, dests in groups.items():
        parts = carried.get(key, [])
        shares = distribute_by_destination([a for _, a in parts], dests)
        out[key] = [(v, sh) for (v, _), sh in zip(parts, shares)]
    return out


def handoff_switch(tree, source: str) -> str:
    """Last switch on the source's path before the class node."""
    path = tree.path(source)
    if len(path) < 2 or not isinstance(path[-1], ClassSink):
        raise ValueError(f"tree {tree.tag} path from {source} does not reach a class node")
    return path[-2]
