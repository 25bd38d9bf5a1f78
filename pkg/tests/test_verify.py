import json

import pytest

from mptpt.baselines import greedy_shortest_path, solve_lp1_baseline
from mptpt.topology import Commodity, _build, gen_random_commodities, make_classes
from mptpt.verify import (
    MalformedSolution,
    RoutedFlows,
    flows_from_lp1,
    flows_from_paths,
    verify_routing,
)


@pytest.fixture
def line():
    # s - v - t with a PM of capacity 3 on v; links carry at most 5
    return _build("line", ["s", "v", "t"], ["p"], [("s", "v", 5), ("v", "t", 5), ("v", "p", 5)], 3)


def check(topo, paths, demand, classes=None):
    com = [Commodity("s", "t", demand, 1)]
    return verify_routing(flows_from_paths(paths, 1, topo), topo, com, classes or make_classes(1))


def test_valid(line):
    rep = check(line, [(0, ["s", "v", "p", "v", "t"], 3.0)], 3.0)
    assert rep.passed
    assert rep.info["pm_load"] == {"p": 3.0}


def test_overloaded_pm(line):
    rep = check(line, [(0, ["s", "v", "p", "v", "t"], 4.0)], 4.0)
    assert rep.failed() == ["pm_capacity"]
    assert rep.worst["pm_capacity"] == pytest.approx(1.0)


def test_over_capacity_link(line):
    rep = check(line, [(0, ["s", "v", "p", "v", "t"], 6.0)], 6.0, make_classes(1, 0.1))
    assert rep.failed() == ["link_capacity"]
    assert rep.where["link_capacity"].startswith("1f@")


def test_skipped_pm(line):
    rep = check(line, [(0, ["s", "v", "t"], 1.0)], 1.0)
    assert "process_exactly_once" in rep.failed()


def test_partial_delivery(line):
    rep = check(line, [(0, ["s", "v", "p", "v", "t"], 0.5)], 1.0)
    assert {"conservation", "demand_satisfaction"} <= set(rep.failed())


def test_negative_flow(line):
    flows = RoutedFlows([{("s", "v"): -1.0}], [{}])
    rep = verify_routing(flows, line, [Commodity("s", "t", 1.0, 1)], make_classes(1))
    assert "nonnegativity" in rep.failed()


def test_class_loads(line):
    flows = flows_from_paths([(0, ["s", "v", "p", "v", "t"], 1.0)], 1, line)
    flows.vm_loads = {("p", 2): 1.0}
    rep = verify_routing(flows, line, [Commodity("s", "t", 1.0, 1)], make_classes(2))
    assert rep.failed() == ["class_correctness"]


def test_malformed(line):
    with pytest.raises(MalformedSolution):
        flows_from_paths([(0, ["s", "t"], 1.0)], 1, line)
    with pytest.raises(MalformedSolution):
        verify_routing(RoutedFlows([], []), line, [Commodity("s", "t", 1.0, 1)])


def test_report_json(line):
    doc = json.loads(check(line, [(0, ["s", "v", "t"], 1.0)], 1.0).to_json())
    assert doc["passed"] is False
    assert set(doc["checks"]) >= {"pm_capacity", "process_exactly_once"}


@pytest.mark.parametrize("name", ["fig1", "fattree", "geant"])
def test_baselines_verify(name, request):
    topo = request.getfixturevalue(name)
    classes = make_classes(3)
    com = gen_random_commodities(topo, 30, 3, 0.2, seed=4)
    lp = solve_lp1_baseline(topo, com, classes)
    assert verify_routing(flows_from_lp1(lp.model, lp.lp.x, len(com)), topo, com, classes).passed
    assert verify_routing(flows_from_paths(lp.paths, len(com), topo), topo, com, classes).passed
    gr = greedy_shortest_path(topo, com, classes)
    assert gr.feasible
    assert verify_routing(flows_from_paths(gr.paths, len(com), topo), topo, com, classes).passed
