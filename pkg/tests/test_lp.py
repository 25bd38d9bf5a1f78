import numpy as np
import pytest

from mptpt.lp import EQ, LE, LpModel, build_lp1_max_scale, build_lp1_relaxed, build_lp2, build_lp3
from mptpt.simplex import simplex_solve
from mptpt.topology import Commodity, _build, gen_random_commodities, make_classes
from mptpt.transform import StepDemand, build_g1, build_g2, step1_demands
from tests import oracles


def path_svt():
    return _build("svt", ["s", "v", "t"], ["pm"], [("s", "v", 5), ("v", "t", 5), ("v", "pm", 5)], 10)


def test_lp1_on_a_path():
    # s->v, v->pm, pm->v, v->t: four unit edges for one unit of demand
    topo = path_svt()
    m = build_lp1_relaxed(topo, [Commodity("s", "t", 1.0, 1)], make_classes(1))
    sol = simplex_solve(m)
    assert sol.optimal and abs(sol.objective - 4.0) < 1e-9


def test_lp1_scale_and_rows(fig1):
    com = gen_random_commodities(fig1, 4, 2, 1.0, seed=0)
    m = build_lp1_relaxed(fig1, com, make_classes(2), scale=2.0)
    assert m.n_vars == 4 * 2 * len(fig1.capacity)
    # per commodity: |V_sw| + |V_sw|-1 conservation rows, 2 rows per PM
    per = 6 + 5 + 2 * 3
    assert m.n_rows == 4 * per + 3 + len(fig1.capacity)
    assert m.bundle_rows() == 3 + len(fig1.capacity)
    assert abs(simplex_solve(m).objective - oracles.linprog_objective(m)) < 1e-7


def test_lp1_pm_capacity_binds():
    topo = path_svt()
    com = [Commodity("s", "t", 3.0, 1)]
    assert simplex_solve(build_lp1_relaxed(topo, com, make_classes(1, 3.0))).optimal
    assert not simplex_solve(build_lp1_relaxed(topo, com, make_classes(1, 4.0))).optimal


def test_lp2_only_demanded_sinks(fig1):
    g1 = build_g1(fig1, 5)
    d = step1_demands([Commodity("sw3", "sw4", 1, 2)])
    m = build_lp2(g1, d, fig1, make_classes(5))
    assert {k[0] for k in m.var_keys} == {g1.class_sinks[1]}
    full = build_lp2(g1, d, fig1, make_classes(5), all_sinks=True)
    assert len({k[0] for k in full.var_keys}) == 5
    # bundle rows: switch links plus link and PM rows per PM switch = |E0|
    assert m.bundle_rows() == len(fig1.capacity)
    assert simplex_solve(m).objective == pytest.approx(simplex_solve(full).objective)


def test_lp3_uncongested_equals_shortest_paths(geant):
    g2 = build_g2(geant, {})
    rng = np.random.default_rng(3)
    sw = list(geant.switches)
    demands = []
    for _ in range(12):
        a, b = rng.choice(len(sw), 2, replace=False)
        demands.append(StepDemand(sw[a], sw[b], float(rng.uniform(0.1, 2))))
    demands.append(StepDemand(sw[0], sw[0], 5.0))  # local hand-off, not routed
    sol = simplex_solve(build_lp3(g2, demands))
    assert sol.objective == pytest.approx(oracles.shortest_path_cost(geant, demands), abs=1e-7)


def test_max_scale(fig1):
    com = gen_random_commodities(fig1, 6, 2, 1.0, seed=5)
    m = build_lp1_max_scale(fig1, com, make_classes(2))
    sol = simplex_solve(m)
    lam = sol.x[-1]
    assert lam == pytest.approx(-oracles.linprog_objective(m), rel=1e-9)
    assert simplex_solve(build_lp1_relaxed(fig1, com, make_classes(2), lam * (1 - 1e-6))).optimal
    assert not simplex_solve(build_lp1_relaxed(fig1, com, make_classes(2), lam * (1 + 1e-4))).optimal


def test_model_helpers():
    m = LpModel(name="tiny")
    a, b = m.add_var("a"), m.add_var("b", 2.0)
    m.add_row({a: 1, b: 1}, EQ, 1.0)
    m.add_row({a: 1}, LE, 0.25, bundle=True, name="cap")
    with pytest.raises(KeyError):
        m.add_var("a")
    with pytest.raises(ValueError):
        m.add_row({a: 1}, ">=", 0)
    assert m.residuals(np.array([0.5, 0.5])).tolist() == [0.0, 0.25]
    text = m.dump()
    assert "cap [bundle]" in text and "x1 = 'b'" in text
