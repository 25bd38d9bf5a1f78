"""Physical network, traffic classes and commodities.

Edges are directed everywhere. A PM hangs off exactly one switch through one
edge in each direction; that switch is the hand-off point between the two
routing steps.
"""
from __future__ import annotations

import csv
import json
import random
from dataclasses import dataclass, field
from functools import cached_property
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping, Sequence

Edge = tuple[str, str]


class NodeKind(str, Enum):
    SWITCH = "switch"
    PM = "pm"


class TopologyError(ValueError):
    """Raised when a topology or commodity file cannot be used."""

    def __init__(self, message: str, errors: Sequence[str] = ()):
        super().__init__(message if not errors else f"{message}: " + "; ".join(errors))
        self.errors = list(errors)


@dataclass(frozen=True)
class ClassSpec:
    class_id: int
    unit_cost: float = 1.0
    functions: tuple[str, ...] = ()


@dataclass(frozen=True)
class Commodity:
    source: str
    dest: str
    demand: float
    class_id: int


@dataclass(frozen=True)
class Topology:
    """Directed capacitated graph G0 with switch and PM nodes.

    ``capacity`` maps each directed edge to g(e); its insertion order is the
    canonical edge order used for tie-breaking. ``memory`` is m(v) (None for
    unlimited), ``pm_capacity`` is b(v).
    """

    switches: tuple[str, ...]
    pms: tuple[str, ...]
    capacity: Mapping[Edge, float]
    memory: Mapping[str, float | None] = field(default_factory=dict)
    pm_capacity: Mapping[str, float] = field(default_factory=dict)
    classes: Mapping[int, ClassSpec] = field(default_factory=dict)
    name: str = ""

    @property
    def edges(self) -> list[Edge]:
        return list(self.capacity)

    @property
    def nodes(self) -> tuple[str, ...]:
        return self.switches + self.pms

    def node_order(self) -> dict[str, int]:
        return {v: i for i, v in enumerate(self.nodes)}

    def is_pm(self, v: str) -> bool:
        return v in self._pm_set

    @cached_property
    def _pm_set(self) -> frozenset[str]:
        return frozenset(self.pms)

    def pm_switch(self) -> dict[str, str]:
        """PM -> the switch it is attached to."""
        pm_set = self._pm_set
        out: dict[str, str] = {}
        for u, v in self.capacity:
            if v in pm_set and u not in pm_set:
                out.setdefault(v, u)
        return out

    def switch_pm(self) -> dict[str, str]:
        """v -> v-hat for every switch in V_sw->pm, in switch order."""
        attached = {sw: pm for pm, sw in self.pm_switch().items()}
        return {sw: attached[sw] for sw in self.switches if sw in attached}

    def switch_edges(self) -> list[Edge]:
        """E0 minus the PM attachment edges (this is E2's edge set)."""
        pm_set = self._pm_set
        return [e for e in self.capacity if e[0] not in pm_set and e[1] not in pm_set]


def validate(topology: Topology) -> list[str]:
    """Return every violated topology invariant; an empty list means valid."""
    errors: list[str] = []
    sw, pm = set(topology.switches), set(topology.pms)
    if not topology.switches:
        errors.append("empty switch set")
    if len(sw) != len(topology.switches) or len(pm) != len(topology.pms):
        errors.append("duplicate node id")
    if sw & pm:
        errors.append(f"node(s) both switch and PM: {sorted(sw & pm)}")
    known = sw | pm
    outdeg: dict[str, list[str]] = {v: [] for v in pm}
    indeg: dict[str, list[str]] = {v: [] for v in pm}
    for (u, v), g in topology.capacity.items():
        if u not in known or v not in known:
            errors.append(f"edge ({u},{v}) references unknown node")
            continue
        if u == v:
            errors.append(f"self-loop at {u}")
        if not g > 0:
            errors.append(f"non-positive capacity on ({u},{v})")
        if u in pm and v in pm:
            errors.append(f"PM-PM edge ({u},{v})")
        if u in pm:
            outdeg[u].append(v)
        if v in pm:
            indeg[v].append(u)
    for v in topology.pms:
        ins, outs = indeg[v], outdeg[v]
        if len(ins) > 1 or len(outs) > 1:
            errors.append(f"PM degree > 1 at {v}")
        elif len(ins) == 0 or len(outs) == 0:
            errors.append(f"PM {v} lacks a bidirectional attachment")
        elif ins[0] != outs[0]:
            errors.append(f"PM {v} attached to two switches")
        b = topology.pm_capacity.get(v)
        if b is None or not b > 0:
            errors.append(f"non-positive PM capacity at {v}")
    hosts = [ins[0] for v, ins in indeg.items() if len(ins) == 1]
    for s in sorted(set(h for h in hosts if hosts.count(h) > 1)):
        errors.append(f"switch {s} hosts more than one PM")
    for v, m in topology.memory.items():
        if m is not None and m < 0:
            errors.append(f"negative memory at {v}")
    for k, spec in topology.classes.items():
        if not spec.unit_cost > 0:
            errors.append(f"class {k} has non-positive cost")
    if topology.classes and sorted(topology.classes) != list(range(1, len(topology.classes) + 1)):
        errors.append("class ids are not dense 1..C")
    return errors


def check(topology: Topology) -> Topology:
    errors = validate(topology)
    if errors:
        raise TopologyError("invalid topology", errors)
    return topology


def make_classes(n: int, cost: float | Sequence[float] = 1.0) -> dict[int, ClassSpec]:
    costs = [cost] * n if isinstance(cost, (int, float)) else list(cost)
    return {k: ClassSpec(k, float(costs[k - 1])) for k in range(1, n + 1)}


def _build(name, switches, pms, links, pm_cap, classes=None, memory=None) -> Topology:
    capacity: dict[Edge, float] = {}
    for u, v, g in links:
        capacity[(u, v)] = float(g)
        capacity[(v, u)] = float(g)
    return check(
        Topology(
            switches=tuple(switches),
            pms=tuple(pms),
            capacity=capacity,
            memory=dict(memory or {v: None for v in switches}),
            pm_capacity={p: float(pm_cap) for p in pms},
            classes=dict(classes or {}),
            name=name,
        )
    )


def gen_fat_tree(
    core_agg: float = 200.0, agg_edge: float = 10.0, pm_link: float = 100.0, pm_cap: float = 500.0
) -> Topology:
    """2 core, 4 aggregation, 16 edge switches; one PM on every core/agg switch."""
    core = [f"c{i}" for i in range(1, 3)]
    agg = [f"a{i}" for i in range(1, 5)]
    edge = [f"e{i}" for i in range(1, 17)]
    links = [(c, a, core_agg) for a in agg for c in core]
    links += [(agg[i // 4], e, agg_edge) for i, e in enumerate(edge)]
    pms = [f"pm_{v}" for v in core + agg]
    links += [(v, f"pm_{v}", pm_link) for v in core + agg]
    return _build("fattree", core + agg + edge, pms, links, pm_cap)


def gen_fig1(link: float = 100.0, pm_cap: float = 500.0) -> Topology:
    """Six-switch example network with PMs on sw1, sw2 and sw6.

    The switch links form a ring; that reproduces |E0| = 18, the edge count
    behind the published rule bound of 43 for seven classes.
    """
    sws = [f"sw{i}" for i in range(1, 7)]
    links = [(sws[i], sws[(i + 1) % 6], link) for i in range(6)]
    links += [("sw1", "pm1", link), ("sw2", "pm2", link), ("sw6", "pm3", link)]
    return _build("fig1", sws, ["pm1", "pm2", "pm3"], links, pm_cap)


def gen_geant() -> Topology:
    with resources.files("mptpt.data").joinpath("geant.json").open() as fh:
        return topology_from_dict(json.load(fh), name="geant")


def topology_from_dict(doc: Mapping, name: str = "") -> Topology:
    errors: list[str] = []
    nodes = doc.get("nodes")
    if not isinstance(nodes, list) or not nodes:
        raise TopologyError("invalid topology", ["field 'nodes': empty or missing"])
    switches, pms, memory, pm_cap = [], [], {}, {}
    for i, n in enumerate(nodes):
        try:
            nid, kind = str(n["id"]), NodeKind(n["kind"])
        except (KeyError, TypeError, ValueError) as exc:
            errors.append(f"nodes[{i}]: {exc!r}")
            continue
        if kind is NodeKind.SWITCH:
            switches.append(nid)
            mem = n.get("memory")
            memory[nid] = None if mem is None else float(mem)
        else:
            pms.append(nid)
            pm_cap[nid] = float(n.get("capacity", 0.0))
    capacity: dict[Edge, float] = {}
    for i, link in enumerate(doc.get("links", [])):
        try:
            u, v, g = str(link["from"]), str(link["to"]), float(link["capacity"])
        except (KeyError, TypeError, ValueError) as exc:
            errors.append(f"links[{i}]: {exc!r}")
            continue
        pairs = [(u, v), (v, u)] if link.get("bidirectional", False) else [(u, v)]
        for e in pairs:
            if e in capacity:
                errors.append(f"links[{i}]: duplicate directed edge {e}")
            capacity[e] = g
    classes = {}
    for i, c in enumerate(doc.get("classes", [])):
        try:
            k = int(c["id"])
            classes[k] = ClassSpec(k, float(c.get("cost", 1.0)), tuple(c.get("functions", ())))
        except (KeyError, TypeError, ValueError) as exc:
            errors.append(f"classes[{i}]: {exc!r}")
    if errors:
        raise TopologyError("cannot parse topology", errors)
    return check(
        Topology(tuple(switches), tuple(pms), capacity, memory, pm_cap, classes, doc.get("name", name))
    )


def topology_to_dict(topology: Topology) -> dict:
    nodes = [{"id": v, "kind": "switch", "memory": topology.memory.get(v)} for v in topology.switches]
    nodes += [{"id": v, "kind": "pm", "capacity": topology.pm_capacity[v]} for v in topology.pms]
    links, seen = [], set()
    for (u, v), g in topology.capacity.items():
        if (u, v) in seen:
            continue
        back = topology.capacity.get((v, u))
        bidir = back is not None and back == g
        links.append({"from": u, "to": v, "capacity": g, "bidirectional": bidir})
        seen.add((u, v))
        if bidir:
            seen.add((v, u))
    classes = [
        {"id": k, "cost": c.unit_cost, "functions": list(c.functions)}
        for k, c in sorted(topology.classes.items())
    ]
    return {"name": topology.name, "nodes": nodes, "links": links, "classes": classes}


def load_topology(path: str | Path) -> Topology:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise TopologyError(f"{path}: line {exc.lineno}: {exc.msg}") from exc
    return topology_from_dict(doc, name=path.stem)


def save_topology(topology: Topology, path: str | Path) -> None:
    Path(path).write_text(json.dumps(topology_to_dict(topology), indent=1) + "\n")


def load_commodities(path: str | Path, topology: Topology | None = None) -> list[Commodity]:
    out = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"source", "dest", "demand", "class"} <= set(reader.fieldnames):
            raise TopologyError(f"{path}: header must be source,dest,demand,class")
        for lineno, row in enumerate(reader, start=2):
            try:
                out.append(Commodity(row["source"], row["dest"], float(row["demand"]), int(row["class"])))
            except (TypeError, ValueError) as exc:
                raise TopologyError(f"{path}: line {lineno}: {exc}") from exc
    if topology is not None:
        errors = validate_commodities(out, topology)
        if errors:
            raise TopologyError("invalid commodities", errors)
    return out


def save_commodities(commodities: Iterable[Commodity], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["source", "dest", "demand", "class"])
        for c in commodities:
            w.writerow([c.source, c.dest, repr(c.demand), c.class_id])


def validate_commodities(commodities: Sequence[Commodity], topology: Topology) -> list[str]:
    sw = set(topology.switches)
    errors = []
    for i, c in enumerate(commodities):
        if c.source not in sw or c.dest not in sw:
            errors.append(f"commodity {i}: endpoints must be switches")
        if c.source == c.dest:
            errors.append(f"commodity {i}: source equals destination")
        if not c.demand > 0:
            errors.append(f"commodity {i}: non-positive demand")
        if topology.classes and c.class_id not in topology.classes:
            errors.append(f"commodity {i}: unknown class {c.class_id}")
    return errors


def gen_random_commodities(
    topology: Topology, m: int, n_classes: int, demand: float, seed: int
) -> list[Commodity]:
    """Uniform random sources, destinations (s != t) and classes, fixed demand."""
    if m < 1 or n_classes < 1 or not demand > 0 or len(topology.switches) < 2:
        raise ValueError("need m >= 1, C >= 1, demand > 0 and at least two switches")
    rng = random.Random(seed)
    sws = topology.switches
    out = []
    for _ in range(m):
        s, t = rng.sample(sws, 2)
        out.append(Commodity(s, t, demand, rng.randint(1, n_classes)))
    return out


def destinations(commodities: Iterable[Commodity]) -> list[str]:
    """V_T in first-appearance order."""
    return list(dict.fromkeys(c.dest for c in commodities))
