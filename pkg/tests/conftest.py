import random

import pytest
from hypothesis import settings

from mptpt.topology import Commodity, _build, gen_fat_tree, gen_fig1, gen_geant

settings.register_profile("repo", derandomize=True, deadline=None, max_examples=60)
settings.load_profile("repo")


@pytest.fixture(scope="session")
def fig1():
    return gen_fig1()


@pytest.fixture(scope="session")
def fattree():
    return gen_fat_tree()


@pytest.fixture(scope="session")
def geant():
    return gen_geant()


@pytest.fixture
def corpus(fig1, fattree, geant):
    return [fig1, fattree, geant]


def fig3_instance():
    """s feeds two PM switches v1 (b=40) and v2 (b=60); both reach t1 and t2."""
    links = [
        ("s", "v1", 1000), ("s", "v2", 1000),
        ("v1", "t1", 1000), ("v1", "t2", 1000), ("v2", "t1", 1000), ("v2", "t2", 1000),
        ("v1", "pm1", 1000), ("v2", "pm2", 1000),
    ]
    topo = _build("fig3", ["s", "v1", "v2", "t1", "t2"], ["pm1", "pm2"], links, 1.0)
    pm_cap = {"pm1": 40.0, "pm2": 60.0}
    topo = type(topo)(topo.switches, topo.pms, topo.capacity, topo.memory, pm_cap, topo.classes, "fig3")
    com = [Commodity("s", "t1", 30.0, 1), Commodity("s", "t2", 70.0, 1)]
    return topo, com


def random_small_topology(seed: int, n_sw: int = None, cap_range=(1.0, 10.0)):
    """Connected random graph on at most six switches with one to three PMs."""
    rng = random.Random(seed)
    n = n_sw or rng.randint(3, 6)
    sws = [f"s{i}" for i in range(n)]
    links = set()
    for i in range(1, n):
        links.add((sws[rng.randrange(i)], sws[i]))
    for _ in range(rng.randint(0, n)):
        u, v = rng.sample(sws, 2)
        if (v, u) not in links:
            links.add((u, v))
    hosts = rng.sample(sws, rng.randint(1, min(3, n)))
    spec = [(u, v, round(rng.uniform(*cap_range), 2)) for u, v in sorted(links)]
    spec += [(h, f"pm_{h}", round(rng.uniform(*cap_range), 2)) for h in hosts]
    topo = _build(f"rand{seed}", sws, [f"pm_{h}" for h in hosts], spec, 1.0)
    pm_cap = {f"pm_{h}": round(rng.uniform(*cap_range), 2) for h in hosts}
    return type(topo)(topo.switches, topo.pms, topo.capacity, topo.memory, pm_cap, {}, topo.name)


# every BasicSolution built by the simplex is logged so support <= rows can be
# checked over the whole run, not only where a test asks for it
import dataclasses

import mptpt.simplex as _simplex

LP_LOG: list[tuple[str, int, int]] = []
ACCEPTANCE: list[str] = []


@dataclasses.dataclass
class _LoggedSolution(_simplex.BasicSolution):
    def __post_init__(self):
        if self.optimal:
            LP_LOG.append((self.status, self.positive_support(), self.n_rows))


_simplex.BasicSolution = _LoggedSolution


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)
    bad = sum(s > r for _, s, r in LP_LOG)
    terminalreporter.write_line(f"optimal LPs solved this session: {len(LP_LOG)}, support > rows: {bad}")
