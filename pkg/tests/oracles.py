"""Reference computations that share no code with the package solvers."""
import itertools

import networkx as nx
import numpy as np
from scipy.optimize import linprog


def simple_paths(adj, s, t):
    if s == t:
        yield [s]
        return
    stack = [(s, [s])]
    while stack:
        v, path = stack.pop()
        for w in adj.get(v, ()):
            if w in path:
                continue
            if w == t:
                yield path + [w]
            else:
                stack.append((w, path + [w]))


def path_lp_objective(topology, commodities, classes, scale=1.0):
    """Min total hops over explicit walks s..v, pm, v..t (both legs simple paths).

    Returns None when the path LP is infeasible.
    """
    pm_set = set(topology.pms)
    adj = {}
    for u, v in topology.capacity:
        if u not in pm_set and v not in pm_set:
            adj.setdefault(u, []).append(v)
    host = {pm: sw for (sw, pm) in topology.capacity if pm in pm_set and sw not in pm_set}
    cols, costs, owner = [], [], []
    for i, c in enumerate(commodities):
        for pm, v in host.items():
            for a, b in itertools.product(simple_paths(adj, c.source, v), simple_paths(adj, v, c.dest)):
                walk = a + [pm] + b
                cols.append(walk)
                costs.append(len(walk) - 1)
                owner.append(i)
    edges = list(topology.capacity)
    eidx = {e: k for k, e in enumerate(edges)}
    pms = list(host)
    a_ub = np.zeros((len(edges) + len(pms), len(cols)))
    b_ub = np.array([topology.capacity[e] for e in edges] + [topology.pm_capacity[p] for p in pms])
    a_eq = np.zeros((len(commodities), len(cols)))
    b_eq = np.array([c.demand * scale for c in commodities])
    for j, walk in enumerate(cols):
        for e in zip(walk, walk[1:]):
            a_ub[eidx[e], j] += 1
        pm = next(x for x in walk if x in pm_set)
        c = commodities[owner[j]]
        a_ub[len(edges) + pms.index(pm), j] += classes[c.class_id].unit_cost
        a_eq[owner[j], j] = 1
    if not cols:
        return None
    res = linprog(costs, A_ub=a_ub, b_ub=b_ub, A_eq=a_eq, b_eq=b_eq, bounds=(0, None), method="highs")
    return res.fun if res.status == 0 else None


def shortest_path_cost(topology, demands):
    """Sum of amount x hop distance over the switch graph (uncongested routing)."""
    g = nx.DiGraph()
    g.add_edges_from(topology.switch_edges())
    return sum(d.amount * nx.shortest_path_length(g, d.node, d.sink) for d in demands if d.node != d.sink)


def linprog_objective(model):
    """scipy/HiGHS value of an LpModel, or None if it has no optimum."""
    a = model.matrix().toarray()
    b = model.rhs()
    eq = np.array([r.sense == "==" for r in model.rows], dtype=bool)
    res = linprog(
        model.cost,
        A_ub=a[~eq] if (~eq).any() else None,
        b_ub=b[~eq] if (~eq).any() else None,
        A_eq=a[eq] if eq.any() else None,
        b_eq=b[eq] if eq.any() else None,
        bounds=(0, None),
        method="highs",
    )
    return res.fun if res.status == 0 else None
