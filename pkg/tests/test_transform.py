import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from mptpt.topology import Commodity, make_classes
from mptpt.transform import (
    ClassSink,
    build_g1,
    build_g2,
    distribute_by_destination,
    step1_demands,
)
from tests.conftest import fig3_instance


def test_fig3_split_exact():
    out = distribute_by_destination([40, 60], {"t1": 30, "t2": 70})
    expect = [{"t1": 12, "t2": 28}, {"t1": 18, "t2": 42}]
    for got, want in zip(out, expect):
        for t in want:
            assert abs(got[t] - want[t]) <= 1e-12


@given(
    st.lists(st.floats(0.01, 100), min_size=1, max_size=6),
    st.lists(st.floats(0.01, 100), min_size=1, max_size=6),
)
def test_distribution_preserves_both_margins(trees, dests):
    total = sum(dests)
    trees = [a * total / sum(trees) for a in trees]
    dem = {f"t{i}": d for i, d in enumerate(dests)}
    out = distribute_by_destination(trees, dem)
    for a, row in zip(trees, out):
        assert math.isclose(sum(row.values()), a, rel_tol=1e-9)
    for t, d in dem.items():
        assert math.isclose(sum(row[t] for row in out), d, rel_tol=1e-9)


def test_distribution_errors():
    with pytest.raises(ValueError):
        distribute_by_destination([1.0], {})
    with pytest.raises(ValueError):
        distribute_by_destination([1.0], {"t": 2.0})
    assert distribute_by_destination([0.0, 0.0], {"t": 0.0}) == [{}, {}]


def test_g1_sinks(fig1):
    g1 = build_g1(fig1, 3)
    assert g1.class_sinks == [ClassSink(1), ClassSink(2), ClassSink(3)]
    assert g1.capacity[("sw1", ClassSink(2))] == math.inf
    assert g1.back_map[("sw6", ClassSink(1))] == (("sw6", "pm3"), ("pm3", "sw6"))
    assert not any(v in fig1.pms for e in g1.capacity for v in e)
    with pytest.raises(ValueError):
        build_g1(fig1, 0)


def test_g2_residual(fig1):
    g2 = build_g2(fig1, {("sw1", "sw2"): 30.0})
    assert g2.capacity[("sw1", "sw2")] == 70.0
    assert g2.capacity[("sw2", "sw1")] == 100.0
    with pytest.raises(ValueError, match="exceeds capacity"):
        build_g2(fig1, {("sw1", "sw2"): 101.0})


def test_step1_demands_aggregate():
    com = [Commodity("a", "b", 1, 1), Commodity("a", "c", 2, 1), Commodity("a", "c", 4, 2)]
    d = {(x.node, x.sink): x.amount for x in step1_demands(com)}
    assert d == {("a", ClassSink(1)): 3.0, ("a", ClassSink(2)): 4.0}


def test_fig3_step2_demands():
    from mptpt.pipeline import solve_mptpt

    topo, com = fig3_instance()
    sol = solve_mptpt(topo, com, make_classes(1))
    assert sorted(t.total for t in sol.step1_trees) == [40.0, 60.0]
    got = {(d.node, d.sink): d.amount for d in sol.step2_demands}
    want = {("v1", "t1"): 12, ("v1", "t2"): 28, ("v2", "t1"): 18, ("v2", "t2"): 42}
    assert got.keys() == want.keys()
    for k, v in want.items():
        assert abs(got[k] - v) <= 1e-9
