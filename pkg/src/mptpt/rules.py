"""Per-switch rule tables, tag-forwarding simulation and path-based rule counts.

Packet convention: the source switch pushes both tags. Switches match the
step-1 tag until the PM; the PM strips it and the rest of the network matches
the step-2 tag. With ``pm_strips_tag=False`` the PM leaves the step-1 tag on
and the hand-off switch pops it when forwarding on the step-2 tree.

Source classification (raw flow -> tag pair) is not counted in r(v); those
entries are reported separately by :func:`classifier_counts`.
"""
from __future__ import annotations

import csv
import io
from collections import defaultdict, deque
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

from .lp import LpModel
from .pipeline import RoutingSolution
from .topology import ClassSpec, Commodity, Topology
from .transform import ClassSink

FORWARD = "forward"
SEND_TO_PM = "send_to_pm"
POP_FORWARD = "pop_tag1_forward"

TOL = 1e-7


class RuleCompileError(ValueError):
    pass


@dataclass(frozen=True)
class Rule:
    action: str
    arg: tuple  # out-edge, or (pm, class_id) for SEND_TO_PM


@dataclass
class RuleTable:
    rules: dict[str, dict[int, Rule]] = field(default_factory=lambda: defaultdict(dict))
    pm_strips_tag: bool = True

    def add(self, switch: str, tag: int, rule: Rule) -> None:
        if tag in self.rules[switch]:
            raise RuleCompileError(f"two rules for tag {tag} at {switch}")
        self.rules[switch][tag] = rule

    def count(self, switch: str) -> int:
        return len(self.rules.get(switch, ()))

    def counts(self, topology: Topology) -> dict[str, int]:
        return {v: self.count(v) for v in topology.switches}

    def to_csv(self, topology: Topology) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["switch", "tag", "action", "arg"])
        for v in topology.switches:
            for tag in sorted(self.rules.get(v, {})):
                r = self.rules[v][tag]
                w.writerow([v, tag, r.action, ":".join(map(str, r.arg))])
        return buf.getvalue()


def compile_rules(solution: RoutingSolution, topology: Topology, pm_strips_tag: bool = True) -> RuleTable:
    pm_of = topology.switch_pm()
    table = RuleTable(pm_strips_tag=pm_strips_tag)
    for tree in solution.step1_trees:
        _check_tree(tree)
        for u, (_, w) in tree.parent_edge.items():
            if isinstance(w, ClassSink):
                if u not in pm_of:
                    raise RuleCompileError(f"tree {tree.tag} enters class node from {u} without a PM")
                table.add(u, tree.tag, Rule(SEND_TO_PM, (pm_of[u], w.class_id)))
            else:
                table.add(u, tree.tag, Rule(FORWARD, (u, w)))
    for tree in solution.step2_trees:
        _check_tree(tree)
        for u, e in tree.parent_edge.items():
            pop = not pm_strips_tag and u in tree.source_amounts
            table.add(u, tree.tag, Rule(POP_FORWARD if pop else FORWARD, e))
    return table


def _check_tree(tree) -> None:
    for s in tree.source_amounts:
        try:
            tree.path(s)
        except ValueError as exc:
            raise RuleCompileError(f"dangling tag {tree.tag}: {exc}") from exc


def classifier_counts(solution: RoutingSolution, topology: Topology) -> dict[str, int]:
    """Source-switch entries mapping raw flows onto tag pairs."""
    pairs: dict[str, set] = defaultdict(set)
    for sh in solution.shares:
        c = solution.commodities[sh.commodity]
        pairs[c.source].add((c.dest, c.class_id, sh.step1_tag, sh.step2_tag))
    return {v: len(pairs.get(v, ())) for v in topology.switches}


@dataclass
class Trace:
    commodity: int
    tags: tuple
    amount: float
    nodes: list[str]
    delivered: bool
    pms: list[str]


@dataclass
class ForwardingReport:
    traces: list[Trace] = field(default_factory=list)
    violations: list[str] = field(default_factory=list)
    link_load: dict = field(default_factory=dict)
    pm_load: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return not self.violations


def simulate_forwarding(
    table: RuleTable,
    solution: RoutingSolution,
    topology: Topology,
    classes: Optional[Mapping[int, ClassSpec]] = None,
) -> ForwardingReport:
    """Push one abstract flow per share through the rule tables."""
    classes = classes or topology.classes
    report = ForwardingReport()
    link: dict = defaultdict(float)
    pm_load: dict = defaultdict(float)
    max_hops = 2 * len(topology.nodes) + 2
    for sh in solution.shares:
        c = solution.commodities[sh.commodity]
        tags = [sh.step1_tag] + ([] if sh.step2_tag is None else [sh.step2_tag])
        u, nodes, pms = c.source, [c.source], []
        from_pm = False
        delivered = False
        problem = None
        for _ in range(max_hops):
            if pms and u == c.dest:
                delivered = True
                break
            if not tags:
                problem = f"no tag left at {u}"
                break
            # a packet back from the PM still carrying tag 1 is matched on tag 2
            key = tags[1] if from_pm and len(tags) > 1 and not table.pm_strips_tag else tags[0]
            rule = table.rules.get(u, {}).get(key)
            if rule is None:
                problem = f"no rule for tag {key} at {u}"
                break
            if rule.action == SEND_TO_PM:
                pm, cls = rule.arg
                if (u, pm) not in topology.capacity:
                    problem = f"{u} has no link to {pm}"
                    break
                if cls != c.class_id:
                    report.violations.append(
                        f"commodity {sh.commodity}: class {c.class_id} sent to VM of class {cls} at {pm}"
                    )
                link[(u, pm)] += sh.amount
                link[(pm, u)] += sh.amount
                pm_load[pm] += classes[c.class_id].unit_cost * sh.amount
                pms.append(pm)
                nodes += [pm, u]
                if table.pm_strips_tag:
                    tags.pop(0)
                from_pm = True
                continue
            if rule.action == POP_FORWARD and from_pm and len(tags) > 1:
                tags.pop(0)
            from_pm = False
            e = rule.arg
            if e[0] != u or e not in topology.capacity:
                problem = f"rule at {u} forwards on foreign edge {e}"
                break
            link[e] += sh.amount
            u = e[1]
            nodes.append(u)
        else:
            problem = f"forwarding loop (>{max_hops} hops)"
        if problem:
            report.violations.append(f"commodity {sh.commodity} tags {tuple(tags)}: {problem}")
        elif len(pms) != 1:
            report.violations.append(f"commodity {sh.commodity}: visited {len(pms)} PMs")
        report.traces.append(Trace(sh.commodity, (sh.step1_tag, sh.step2_tag), sh.amount, nodes, delivered, pms))
    for e, load in link.items():
        g = topology.capacity.get(e, 0.0)
        if load > g + TOL * max(1.0, g):
            report.violations.append(f"link {e} carries {load:.6g} > {g:.6g}")
    for pm, load in pm_load.items():
        b = topology.pm_capacity[pm]
        if load > b + TOL * max(1.0, b):
            report.violations.append(f"PM {pm} load {load:.6g} > {b:.6g}")
    report.link_load, report.pm_load = dict(link), dict(pm_load)
    return report


@dataclass
class PathDecomposition:
    paths: list[tuple[int, list[str], float]]
    rules: dict[str, int]


def rule_counts_from_paths(paths: Sequence[tuple[int, list[str], float]], topology: Topology) -> dict[str, int]:
    """One rule per path in every switch that forwards it (the endpoint holds none)."""
    counts = {v: 0 for v in topology.switches}
    pm_set = set(topology.pms)
    for _, nodes, _ in paths:
        for v in set(nodes[:-1]) - pm_set - {nodes[-1]}:
            counts[v] += 1
    return counts


def path_decompose_and_count(
    model: LpModel,
    x: np.ndarray,
    topology: Topology,
    commodities: Sequence[Commodity],
    scale: float = 1.0,
    tol: float = 1e-9,
) -> PathDecomposition:
    """Greedy shortest-path peeling of a relaxed commodity-LP solution.

    Works on a layered copy of G0 per commodity: (v, 0) before processing,
    (v, 1) after, with each PM joining the layers.
    """
    order = topology.node_order()
    pm_set = set(topology.pms)
    per: dict[int, dict] = defaultdict(dict)
    for j, (i, xflag, (u, w)) in enumerate(model.var_keys):
        f = float(x[j])
        if f <= tol:
            continue
        if xflag == 0 and w in pm_set:
            per[i][((u, 0), (w, "pm"))] = f
        elif xflag == 1 and u in pm_set:
            per[i][((u, "pm"), (w, 1))] = f
        elif u not in pm_set and w not in pm_set:
            per[i][((u, xflag), (w, xflag))] = f
    paths = []
    for i, c in enumerate(commodities):
        rest = per.get(i, {})
        need = c.demand * scale
        src, dst = (c.source, 0), (c.dest, 1)
        while need > TOL:
            succ: dict = defaultdict(list)
            for (a, b_) in rest:
                succ[a].append(b_)
            prev = {src: None}
            q = deque([src])
            while q and dst not in prev:
                a = q.popleft()
                for b_ in sorted(succ[a], key=lambda n: (order[n[0]], str(n[1]))):
                    if b_ not in prev:
                        prev[b_] = a
                        q.append(b_)
            if dst not in prev:
                raise ValueError(f"commodity {i}: {need:.3g} of demand has no flow path left")
            layered = [dst]
            while prev[layered[-1]] is not None:
                layered.append(prev[layered[-1]])
            layered.reverse()
            arcs = list(zip(layered, layered[1:]))
            amount = min(need, min(rest[a] for a in arcs))
            for a in arcs:
                rest[a] -= amount
                if rest[a] <= tol:
                    del rest[a]
            need -= amount
            paths.append((i, [n[0] for n in layered], amount))
        left = sum(rest.values())
        if left > 1e-6 * max(1.0, c.demand * scale):
            raise ValueError(f"commodity {i}: {left:.3g} of flow left after decomposition")
    return PathDecomposition(paths, rule_counts_from_paths(paths, topology))
