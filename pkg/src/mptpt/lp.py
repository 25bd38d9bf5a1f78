"""Sparse LP models for the relaxed commodity formulation and the two step LPs.

All models minimise total flow, every variable has lower bound 0 and no upper
bound, and rows are either ``<=`` or ``==``. Rows that couple flows of
different destinations (link and PM capacities) are tagged as bundle rows.
"""
from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from typing import Hashable, Iterable, Mapping, Sequence

import numpy as np
import scipy.sparse as sp

from .topology import ClassSpec, Commodity, Topology
from .transform import ClassSink, StepDemand, StepGraph

LE, EQ = "<=", "=="


@dataclass
class Row:
    cols: list[int]
    vals: list[float]
    sense: str
    rhs: float
    bundle: bool = False
    name: str = ""


@dataclass
class LpModel:
    var_keys: list[Hashable] = field(default_factory=list)
    cost: list[float] = field(default_factory=list)
    rows: list[Row] = field(default_factory=list)
    index: dict[Hashable, int] = field(default_factory=dict)
    name: str = ""

    @property
    def n_vars(self) -> int:
        return len(self.var_keys)

    @property
    def n_rows(self) -> int:
        return len(self.rows)

    def add_var(self, key: Hashable, cost: float = 1.0) -> int:
        if key in self.index:
            raise KeyError(f"duplicate variable {key!r}")
        self.index[key] = len(self.var_keys)
        self.var_keys.append(key)
        self.cost.append(cost)
        return self.index[key]

    def add_row(self, coefs: Mapping[int, float], sense: str, rhs: float, bundle=False, name=""):
        if sense not in (LE, EQ):
            raise ValueError(sense)
        cols = list(coefs)
        self.rows.append(Row(cols, [float(coefs[j]) for j in cols], sense, float(rhs), bundle, name))

    def bundle_rows(self) -> int:
        return sum(r.bundle for r in self.rows)

    def matrix(self) -> sp.csr_matrix:
        ri, ci, vv = [], [], []
        for i, r in enumerate(self.rows):
            ri += [i] * len(r.cols)
            ci += r.cols
            vv += r.vals
        return sp.csr_matrix((vv, (ri, ci)), shape=(self.n_rows, self.n_vars))

    def rhs(self) -> np.ndarray:
        return np.array([r.rhs for r in self.rows], dtype=float)

    def residuals(self, x: np.ndarray) -> np.ndarray:
        """Constraint violation per row (0 when satisfied)."""
        ax = self.matrix() @ x
        b = self.rhs()
        eq = np.array([r.sense == EQ for r in self.rows], dtype=bool)
        return np.where(eq, np.abs(ax - b), np.maximum(ax - b, 0.0))

    def dump(self) -> str:
        """One line per row, readable next to an external solver's LP file."""
        lines = [f"\\ {self.name or 'model'}: {self.n_vars} vars, {self.n_rows} rows", "min"]
        lines.append(" " + " + ".join(f"{c:g} x{j}" for j, c in enumerate(self.cost) if c))
        lines.append("s.t.")
        for i, r in enumerate(self.rows):
            terms = " ".join(f"{v:+g} x{j}" for j, v in zip(r.cols, r.vals))
            tag = " [bundle]" if r.bundle else ""
            lines.append(f" r{i} {r.name}{tag}: {terms or '0'} {r.sense} {r.rhs:g}")
        lines.append("vars")
        lines += [f" x{j} = {k!r} >= 0" for j, k in enumerate(self.var_keys)]
        return "\n".join(lines) + "\n"


def _conservation(model, nodes, edges, var_of, rhs_of, bundle=False, label=""):
    out_e: dict = defaultdict(list)
    in_e: dict = defaultdict(list)
    for e in edges:
        out_e[e[0]].append(e)
        in_e[e[1]].append(e)
    for v in nodes:
        coefs: dict[int, float] = {}
        for e in out_e[v]:
            coefs[var_of(e)] = coefs.get(var_of(e), 0.0) + 1.0
        for e in in_e[v]:
            coefs[var_of(e)] = coefs.get(var_of(e), 0.0) - 1.0
        model.add_row(coefs, EQ, rhs_of(v), bundle, f"{label}{v}")


def build_lp1_relaxed(
    topology: Topology,
    commodities: Sequence[Commodity],
    classes: Mapping[int, ClassSpec],
    scale: float = 1.0,
) -> LpModel:
    """Commodity formulation with the switch-memory rows dropped.

    Variables are keyed ``(i, x, edge)``: commodity index, processed flag and
    G0 edge. ``scale`` multiplies every demand (used by throughput search).
    """
    m = LpModel(name="lp1-relaxed")
    edges = topology.edges
    pm_of = topology.switch_pm()
    for i in range(len(commodities)):
        for x in (0, 1):
            for e in edges:
                m.add_var((i, x, e))
    for i, c in enumerate(commodities):
        d = c.demand * scale
        # (1a) unprocessed conservation at every switch
        _conservation(
            m, topology.switches, edges, lambda e: m.index[(i, 0, e)],
            lambda v: d if v == c.source else 0.0, label=f"1a[{i}]",
        )
        # (1b) processed conservation at switches other than the destination
        _conservation(
            m, [v for v in topology.switches if v != c.dest], edges,
            lambda e: m.index[(i, 1, e)], lambda v: 0.0, label=f"1b[{i}]",
        )
        for v, pm in pm_of.items():
            # (1c) processed traffic never enters a PM
            m.add_row({m.index[(i, 1, (v, pm))]: 1.0}, EQ, 0.0, name=f"1c[{i}]{pm}")
            # (1d) what enters unprocessed leaves processed
            m.add_row(
                {m.index[(i, 0, (v, pm))]: 1.0, m.index[(i, 1, (pm, v))]: -1.0},
                EQ, 0.0, name=f"1d[{i}]{pm}",
            )
    for v, pm in pm_of.items():  # (1e)
        coefs = {m.index[(i, 0, (v, pm))]: classes[c.class_id].unit_cost for i, c in enumerate(commodities)}
        m.add_row(coefs, LE, topology.pm_capacity[pm], bundle=True, name=f"1e{pm}")
    for e in edges:  # (1f)
        coefs = {m.index[(i, x, e)]: 1.0 for i in range(len(commodities)) for x in (0, 1)}
        m.add_row(coefs, LE, topology.capacity[e], bundle=True, name=f"1f{e}")
    return m


def _per_destination(model, graph: StepGraph, demands: Iterable[StepDemand], dests):
    dem: dict = defaultdict(float)
    for d in demands:
        dem[(d.node, d.sink)] += d.amount
    for t in dests:
        for e in graph.capacity:
            model.add_var((t, e))
    for t in dests:
        _conservation(
            model, [v for v in graph.nodes if v != t], graph.capacity,
            lambda e: model.index[(t, e)], lambda v: dem.get((v, t), 0.0), label=f"cons[{t}]",
        )
    return dem


def build_lp2(
    g1: StepGraph,
    demands: Sequence[StepDemand],
    topology: Topology,
    classes: Mapping[int, ClassSpec],
    all_sinks: bool = False,
) -> LpModel:
    """Step-1 LP on G1: sources to class nodes.

    Only class nodes with positive demand get flow variables unless
    ``all_sinks``; the others would be identically zero.
    """
    m = LpModel(name="lp2")
    wanted = {d.sink for d in demands if d.amount > 0}
    dests = [p for p in g1.class_sinks if all_sinks or p in wanted]
    _per_destination(m, g1, demands, dests)
    pm_of = topology.switch_pm()
    for e, g in g1.capacity.items():  # (2b)
        if not isinstance(e[1], ClassSink):
            m.add_row({m.index[(t, e)]: 1.0 for t in dests}, LE, g, bundle=True, name=f"2b{e}")
    for v, pm in pm_of.items():
        link = min(topology.capacity[(v, pm)], topology.capacity[(pm, v)])
        m.add_row({m.index[(t, (v, t))]: 1.0 for t in dests}, LE, link, bundle=True, name=f"2c{v}")
        m.add_row(
            {m.index[(t, (v, t))]: classes[t.class_id].unit_cost for t in dests},
            LE, topology.pm_capacity[pm], bundle=True, name=f"2d{v}",
        )
    return m


def build_lp3(g2: StepGraph, demands: Sequence[StepDemand]) -> LpModel:
    """Step-2 LP on G2: PM switches to destinations over residual capacity."""
    m = LpModel(name="lp3")
    dests = list(dict.fromkeys(d.sink for d in demands if d.amount > 0 and d.node != d.sink))
    routed = [d for d in demands if d.node != d.sink]
    _per_destination(m, g2, routed, dests)
    for e, g in g2.capacity.items():  # (3b)
        m.add_row({m.index[(t, e)]: 1.0 for t in dests}, LE, g, bundle=True, name=f"3b{e}")
    return m


def flows_by_destination(model: LpModel, x: np.ndarray, tol: float = 1e-9) -> dict:
    """Split a step-LP solution into {destination: {edge: flow}} (positive only)."""
    out: dict = defaultdict(dict)
    for j, (t, e) in enumerate(model.var_keys):
        if x[j] > tol:
            out[t][e] = float(x[j])
    return out


def build_lp1_max_scale(
    topology: Topology, commodities: Sequence[Commodity], classes: Mapping[int, ClassSpec]
) -> LpModel:
    """Relaxed commodity LP with a common demand multiplier to maximise.

    The multiplier is the last variable, keyed ``"scale"``; flows cost nothing.
    """
    m = build_lp1_relaxed(topology, commodities, classes, 1.0)
    lam = m.add_var("scale", cost=-1.0)
    m.cost = [0.0] * (m.n_vars - 1) + [-1.0]
    for i, c in enumerate(commodities):
        row = next(r for r in m.rows if r.name == f"1a[{i}]{c.source}")
        row.cols.append(lam)
        row.vals.append(-c.demand)
        row.rhs = 0.0
    return m
