import random
from collections import defaultdict

import networkx as nx
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mptpt.trees import FlowDecompositionError, divergence, flow2trees, remove_cycles


def dag_flow(seed, n=7, n_paths=6):
    """Random flow towards node n built from random increasing paths."""
    rng = random.Random(seed)
    flow, dem = defaultdict(float), defaultdict(float)
    for _ in range(n_paths):
        v = rng.randrange(n)
        amt = round(rng.uniform(0.1, 5), 3)
        dem[v] += amt
        while v != n:
            w = rng.randint(v + 1, n)
            flow[(v, w)] += amt
            v = w
    return dict(flow), dict(dem)


@given(st.integers(0, 100_000))
def test_trees_carry_every_demand(seed):
    flow, dem = dag_flow(seed)
    order = {v: v for v in range(8)}
    trees = flow2trees(order, 7, flow, dem)
    got = defaultdict(float)
    load = defaultdict(float)
    for t in trees:
        for s, a in t.source_amounts.items():
            got[s] += a
            assert t.path(s)[-1] == 7
        for e, l in t.edge_loads().items():
            load[e] += l
    for s, d in dem.items():
        assert got[s] == pytest.approx(d, abs=1e-9)
    for e, l in load.items():
        assert l <= flow[e] + 1e-9
    # each peel but the last empties an edge or a source
    support_nodes = {v for e in flow for v in e}
    assert len(trees) <= len(flow) - len(support_nodes) + 2


def test_single_path_one_tree():
    flow = {("a", "b"): 3.0, ("b", "r"): 5.0, ("c", "b"): 2.0}
    trees = flow2trees({"a": 0, "b": 1, "c": 2, "r": 3}, "r", flow, {"a": 3.0, "c": 2.0})
    assert len(trees) == 1
    assert trees[0].source_amounts == {"a": 3.0, "c": 2.0}
    assert trees[0].path("a") == ["a", "b", "r"]


def test_split_source_gives_two_trees():
    # the worked split: one source feeding two branches of 40 and 60
    flow = {("s", "v1"): 40.0, ("s", "v2"): 60.0, ("v1", "r"): 40.0, ("v2", "r"): 60.0}
    trees = flow2trees({"s": 0, "v1": 1, "v2": 2, "r": 3}, "r", flow, {"s": 100.0})
    assert [t.total for t in trees] == [40.0, 60.0]
    assert trees[0].path("s") == ["s", "v1", "r"]


def test_missing_flow_raises():
    with pytest.raises(FlowDecompositionError):
        flow2trees({"a": 0, "r": 1}, "r", {}, {"a": 1.0})


def test_tiny_leftover_is_dropped():
    trees = flow2trees({"a": 0, "r": 1}, "r", {("a", "r"): 1.0}, {"a": 1.0 + 5e-8})
    assert len(trees) == 1


@given(st.integers(0, 100_000), st.integers(1, 4))
def test_remove_cycles_keeps_divergence(seed, n_cycles):
    flow, _ = dag_flow(seed)
    rng = random.Random(seed)
    flow = dict(flow)
    for _ in range(n_cycles):
        cyc = rng.sample(range(8), rng.randint(2, 4))
        amt = rng.uniform(0.1, 3)
        for e in zip(cyc, cyc[1:] + cyc[:1]):
            flow[e] = flow.get(e, 0.0) + amt
    clean = remove_cycles(flow)
    before, after = divergence(flow), divergence(clean)
    for v in set(before) | set(after):
        assert after.get(v, 0.0) == pytest.approx(before.get(v, 0.0), abs=1e-9)
    assert sum(clean.values()) <= sum(flow.values()) + 1e-9
    assert nx.is_directed_acyclic_graph(nx.DiGraph(list(clean)))
