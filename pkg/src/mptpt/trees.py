"""Peeling a single-destination flow into multipoint-to-point trees."""
from __future__ import annotations

from collections import defaultdict, deque
from dataclasses import dataclass
from typing import Hashable, Mapping, Optional

ZERO = 1e-9
SLACK = 1e-7

Node = Hashable
Edge = tuple[Node, Node]


class FlowDecompositionError(ValueError):
    pass


@dataclass(frozen=True)
class MptpTree:
    """In-tree towards ``root``: every node maps to its edge towards the root."""

    root: Node
    parent_edge: Mapping[Node, Edge]
    source_amounts: Mapping[Node, float]
    tag: Optional[int] = None

    def path(self, source: Node) -> list[Node]:
        nodes = [source]
        v = source
        while v != self.root:
            e = self.parent_edge.get(v)
            if e is None or len(nodes) > len(self.parent_edge) + 1:
                raise FlowDecompositionError(f"{source} has no path to {self.root} in tree {self.tag}")
            v = e[1]
            nodes.append(v)
        return nodes

    def edges(self) -> list[Edge]:
        return list(self.parent_edge.values())

    def nodes(self) -> list[Node]:
        return list(self.parent_edge) + [self.root]

    def edge_loads(self) -> dict[Edge, float]:
        load: dict[Edge, float] = defaultdict(float)
        for s, a in self.source_amounts.items():
            v = s
            while v != self.root:
                e = self.parent_edge[v]
                load[e] += a
                v = e[1]
        return dict(load)

    @property
    def total(self) -> float:
        return float(sum(self.source_amounts.values()))


def flow2trees(
    graph_order: Mapping[Node, int],
    root: Node,
    flow: Mapping[Edge, float],
    demands: Mapping[Node, float],
) -> list[MptpTree]:
    """Decompose ``flow`` (all towards ``root``) into trees carrying ``demands``.

    Each round builds a reverse-BFS tree from the root over edges that still
    carry flow, keeping the first parent found (neighbours in ``graph_order``)
    and pruning branches without sources. All residual source demands are then
    scaled by the largest common factor the tree's edges can carry.
    """
    rest = {e: float(f) for e, f in flow.items() if f > ZERO}
    need = {s: float(d) for s, d in demands.items() if d > ZERO and s != root}
    key = graph_order.__getitem__
    trees: list[MptpTree] = []
    limit = len(rest) + len(need) + 1
    while need:
        if len(trees) >= limit:
            raise FlowDecompositionError(f"peel for {root} did not terminate")
        into: dict[Node, list[Node]] = defaultdict(list)
        for u, w in rest:
            into[w].append(u)
        parent: dict[Node, Edge] = {}
        seen = {root}
        queue = deque([root])
        while queue:
            w = queue.popleft()
            for u in sorted(into.get(w, ()), key=key):
                if u not in seen:
                    seen.add(u)
                    parent[u] = (u, w)
                    queue.append(u)
        lost = [s for s in need if s not in seen]
        if lost:
            if sum(need[s] for s in lost) > SLACK:
                raise FlowDecompositionError(
                    f"flow to {root} cannot carry the demand of {sorted(map(str, lost))}"
                )
            for s in lost:
                del need[s]
            if not need:
                break
        load: dict[Edge, float] = defaultdict(float)
        for s in sorted(need, key=key):
            v = s
            while v != root:
                e = parent[v]
                load[e] += need[s]
                v = e[1]
        lam = min(1.0, min(rest[e] / load[e] for e in load))
        if lam > 1.0 - ZERO:
            lam = 1.0
        amounts = {s: lam * need[s] for s in sorted(need, key=key)}
        used = {e[0]: e for e in load}
        trees.append(MptpTree(root, used, amounts))
        for e, l in load.items():
            left = rest[e] - lam * l
            if left > ZERO:
                rest[e] = left
            else:
                del rest[e]
        need = {s: d * (1.0 - lam) for s, d in need.items() if d * (1.0 - lam) > ZERO}
    return trees


def remove_cycles(flow: Mapping[Edge, float], order: Optional[Mapping[Node, int]] = None) -> dict[Edge, float]:
    """Cancel directed cycles in the positive support of a single-destination flow.

    Net divergence at each node is unchanged and total flow never grows.
    """
    rest = {e: float(f) for e, f in flow.items() if f > ZERO}
    nodes = {v for e in rest for v in e}
    key = (lambda v: order[v]) if order is not None else str

    def find_cycle():
        succ: dict[Node, list[Node]] = defaultdict(list)
        for u, w in rest:
            succ[u].append(w)
        for lst in succ.values():
            lst.sort(key=key)
        color: dict[Node, int] = {}
        for start in sorted(nodes, key=key):
            if start in color:
                continue
            stack = [(start, iter(succ[start]))]
            on_path = [start]
            color[start] = 1
            while stack:
                v, it = stack[-1]
                w = next(it, None)
                if w is None:
                    color[v] = 2
                    stack.pop()
                    on_path.pop()
                elif color.get(w) == 1:
                    cyc = on_path[on_path.index(w):] + [w]
                    return list(zip(cyc, cyc[1:]))
                elif w not in color:
                    color[w] = 1
                    stack.append((w, iter(succ[w])))
                    on_path.append(w)
        return None

    while True:
        cycle = find_cycle()
        if cycle is None:
            return rest
        delta = min(rest[e] for e in cycle)
        for e in cycle:
            left = rest[e] - delta
            if left > ZERO:
                rest[e] = left
            else:
                del rest[e]


def divergence(flow: Mapping[Edge, float]) -> dict[Node, float]:
    div: dict[Node, float] = defaultdict(float)
    for (u, w), f in flow.items():
        div[u] += f
        div[w] -= f
    return dict(div)

