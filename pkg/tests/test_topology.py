import json

import pytest

from mptpt.pipeline import theorem1_bound
from mptpt.topology import (
    Commodity,
    Topology,
    TopologyError,
    check,
    gen_random_commodities,
    load_commodities,
    load_topology,
    save_commodities,
    save_topology,
    topology_from_dict,
    topology_to_dict,
    validate,
)
from mptpt.transform import build_g1, build_g2


def test_fat_tree_shape(fattree):
    assert len(fattree.switches) == 22
    assert len(fattree.pms) == 6
    assert len(fattree.capacity) == 60
    assert fattree.switch_pm()["c1"] == "pm_c1"


def test_fig1_shape(fig1):
    assert len(fig1.switches) == 6 and len(fig1.capacity) == 18
    assert set(fig1.switch_pm()) == {"sw1", "sw2", "sw6"}


def test_geant_fixture(geant):
    assert len(geant.switches) == 41
    assert len(geant.pms) == 9
    assert len(geant.capacity) == 146
    assert validate(geant) == []


@pytest.mark.parametrize("c", [1, 3, 7])
def test_edge_count_identities(corpus, c):
    for topo in corpus:
        e0, npm = len(topo.capacity), len(topo.pms)
        assert len(build_g1(topo, c).capacity) == e0 + npm * (c - 2)
        assert len(build_g2(topo, {}).capacity) == e0 - 2 * npm


def test_bound_values(fig1, fattree, geant):
    assert theorem1_bound(fig1, 7) == 43
    assert theorem1_bound(fattree, 7) == 137
    assert theorem1_bound(geant, 7) == 7 + 2 * 146 + 41 - 18


def _doc():
    return {
        "nodes": [
            {"id": "a", "kind": "switch"},
            {"id": "b", "kind": "switch"},
            {"id": "p", "kind": "pm", "capacity": 5},
        ],
        "links": [
            {"from": "a", "to": "b", "capacity": 3, "bidirectional": True},
            {"from": "a", "to": "p", "capacity": 3, "bidirectional": True},
        ],
    }


def test_from_dict_ok():
    t = topology_from_dict(_doc())
    assert t.switch_pm() == {"a": "p"}
    assert len(t.capacity) == 4


def test_pm_degree_violation():
    doc = _doc()
    doc["links"].append({"from": "b", "to": "p", "capacity": 3, "bidirectional": True})
    with pytest.raises(TopologyError) as exc:
        topology_from_dict(doc)
    assert any("PM degree > 1 at p" in e for e in exc.value.errors)


def test_all_errors_reported():
    doc = _doc()
    doc["links"][0]["capacity"] = 0
    doc["nodes"][2]["capacity"] = -1
    with pytest.raises(TopologyError) as exc:
        topology_from_dict(doc)
    assert len(exc.value.errors) >= 3


def test_two_pms_on_one_switch():
    doc = _doc()
    doc["nodes"].append({"id": "q", "kind": "pm", "capacity": 5})
    doc["links"].append({"from": "a", "to": "q", "capacity": 3, "bidirectional": True})
    with pytest.raises(TopologyError, match="hosts more than one PM"):
        topology_from_dict(doc)


def test_empty_switch_set():
    errs = validate(Topology((), (), {}))
    assert "empty switch set" in errs
    with pytest.raises(TopologyError):
        check(Topology((), (), {}))


def test_malformed_json_line(tmp_path):
    p = tmp_path / "t.json"
    p.write_text('{\n "nodes": [\n oops\n]}')
    with pytest.raises(TopologyError, match="line 3"):
        load_topology(p)


def test_roundtrip(tmp_path, geant):
    p = tmp_path / "g.json"
    save_topology(geant, p)
    back = load_topology(p)
    assert back.capacity == geant.capacity
    assert back.switches == geant.switches and back.pm_capacity == geant.pm_capacity
    assert topology_to_dict(back) == json.loads(p.read_text())


def test_commodity_csv(tmp_path, fattree):
    com = gen_random_commodities(fattree, 25, 3, 0.2, seed=4)
    p = tmp_path / "c.csv"
    save_commodities(com, p)
    assert load_commodities(p, fattree) == com


def test_commodity_csv_errors(tmp_path, fig1):
    p = tmp_path / "c.csv"
    p.write_text("source,dest,demand,class\nsw1,sw1,1,1\n")
    with pytest.raises(TopologyError, match="source equals destination"):
        load_commodities(p, fig1)
    p.write_text("source,dest,demand,class\nsw1,sw2,abc,1\n")
    with pytest.raises(TopologyError, match="line 2"):
        load_commodities(p)
    p.write_text("src,dst\n")
    with pytest.raises(TopologyError, match="header"):
        load_commodities(p)


def test_random_commodities_seeded(fattree):
    a = gen_random_commodities(fattree, 50, 7, 0.2, seed=11)
    assert a == gen_random_commodities(fattree, 50, 7, 0.2, seed=11)
    assert a != gen_random_commodities(fattree, 50, 7, 0.2, seed=12)
    assert all(c.source != c.dest and 1 <= c.class_id <= 7 for c in a)
    assert all(isinstance(c, Commodity) and c.demand == 0.2 for c in a)
