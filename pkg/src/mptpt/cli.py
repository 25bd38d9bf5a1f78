"""Command line entry point.

Exit codes: 0 ok, 1 infeasible, 2 invalid input, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .baselines import greedy_shortest_path, solve_lp1_baseline
from .experiments import EXP1_FIELDS, EXP2_FIELDS, ExperimentConfig, experiment1, experiment2, rows_to_csv
from .pipeline import InfeasibleError, solution_from_dict, solution_to_dict, solve_mptpt
from .rules import compile_rules, simulate_forwarding
from .simplex import SimplexError
from .topology import (
    TopologyError,
    gen_fat_tree,
    gen_fig1,
    gen_geant,
    gen_random_commodities,
    load_commodities,
    load_topology,
    make_classes,
    save_commodities,
    save_topology,
)
from .verify import MalformedSolution, flows_from_paths, mptpt_flows, verify_routing

OK, INFEASIBLE, BAD_INPUT, NUMERICAL = 0, 1, 2, 3

log = logging.getLogger("mptpt")


class _BadInput(Exception):
    pass


def _classes(topo, commodities, n_classes=None, cost=1.0):
    if topo.classes and n_classes is None:
        return dict(topo.classes)
    n = n_classes or max((c.class_id for c in commodities), default=1)
    return make_classes(n, cost)


def _load_instance(args):
    try:
        topo = load_topology(args.topology)
        com = load_commodities(args.commodities, topo)
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise _BadInput(str(exc)) from exc
    classes = _classes(topo, com, args.classes)
    missing = sorted({c.class_id for c in com} - set(classes))
    if missing:
        raise _BadInput(f"commodities use undefined classes {missing}")
    return topo, com, classes


def _write(path, text: str) -> None:
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def cmd_solve(args) -> int:
    topo, com, classes = _load_instance(args)
    if args.algo == "mptpt":
        try:
            sol = solve_mptpt(topo, com, classes)
        except InfeasibleError as exc:
            _write(args.out, json.dumps({"algorithm": "mptpt", "feasible": False, "stage": exc.stage}) + "\n")
            log.error("%s", exc)
            return INFEASIBLE
        doc = solution_to_dict(sol, topo)
        table = compile_rules(sol, topo)
        doc["rules"] = table.counts(topo)
        if args.rules:
            Path(args.rules).write_text(table.to_csv(topo))
    else:
        res = (
            solve_lp1_baseline(topo, com, classes)
            if args.algo == "lp1"
            else greedy_shortest_path(topo, com, classes)
        )
        doc = {
            "algorithm": res.algorithm,
            "feasible": res.feasible,
            "routed": res.routed,
            "total_demand": res.total_demand,
            "paths": [{"commodity": i, "nodes": n, "amount": a} for i, n, a in res.paths],
            "rules": res.rules,
        }
        if not res.feasible:
            _write(args.out, json.dumps(doc, indent=1) + "\n")
            return INFEASIBLE
    _write(args.out, json.dumps(doc, indent=1) + "\n")
    return OK


def cmd_verify(args) -> int:
    topo, com, classes = _load_instance(args)
    try:
        doc = json.loads(Path(args.solution).read_text())
        if not doc.get("feasible", True):
            raise _BadInput("solution file records an infeasible run")
        if "step1_trees" in doc:
            sol = solution_from_dict(doc, com)
            flows = mptpt_flows(sol, topo, classes)
            fwd = simulate_forwarding(compile_rules(sol, topo), sol, topo, classes)
        else:
            paths = [(p["commodity"], p["nodes"], p["amount"]) for p in doc["paths"]]
            flows, fwd = flows_from_paths(paths, len(com), topo), None
        report = verify_routing(flows, topo, com, classes)
    except (OSError, KeyError, TypeError, ValueError) as exc:
        raise _BadInput(f"malformed solution: {exc}") from exc
    if fwd is not None:
        report.info["forwarding_violations"] = fwd.violations
    _write(args.out, report.to_json() + "\n")
    return OK if report.passed and (fwd is None or fwd.ok) else INFEASIBLE


def _config(path) -> ExperimentConfig:
    try:
        return ExperimentConfig.load(path)
    except (OSError, ValueError, TypeError) as exc:
        raise _BadInput(f"{path}: {exc}") from exc


def cmd_exp1(args) -> int:
    _write(args.out, rows_to_csv(experiment1(_config(args.config)), EXP1_FIELDS))
    return OK


def cmd_exp2(args) -> int:
    _write(args.out, rows_to_csv(experiment2(_config(args.config)), EXP2_FIELDS))
    return OK


def cmd_gen(args) -> int:
    topo = {"fattree": gen_fat_tree, "fig1": gen_fig1, "geant": gen_geant}[args.kind]()
    save_topology(topo, args.out)
    if args.commodities:
        if not args.commodities_out:
            raise _BadInput("--commodities needs --commodities-out")
        try:
            com = gen_random_commodities(topo, args.commodities, args.classes or 1, args.demand, args.seed)
        except ValueError as exc:
            raise _BadInput(str(exc)) from exc
        save_commodities(com, args.commodities_out)
    return OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mptpt", description="Multi-PM tag-based routing for consolidated middleboxes")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def instance(sp):
        sp.add_argument("--topology", required=True)
        sp.add_argument("--commodities", required=True)
        sp.add_argument("--classes", type=int, help="number of classes when the topology defines none")

    s = sub.add_parser("solve", help="route one instance")
    instance(s)
    s.add_argument("--algo", choices=("mptpt", "lp1", "greedy"), default="mptpt")
    s.add_argument("--out", default="-")
    s.add_argument("--rules", help="write the MPTPT rule table as CSV")
    s.set_defaults(func=cmd_solve)

    v = sub.add_parser("verify", help="check a solution file")
    instance(v)
    v.add_argument("--solution", required=True)
    v.add_argument("--out", default="-")
    v.set_defaults(func=cmd_verify)

    for name, func, help_ in (("exp1", cmd_exp1, "rule-count sweep"), ("exp2", cmd_exp2, "max uniform demand sweep")):
        e = sub.add_parser(name, help=help_)
        e.add_argument("--config", required=True)
        e.add_argument("--out", default="-")
        e.set_defaults(func=func)

    g = sub.add_parser("gen", help="write a built-in topology (and optionally random commodities)")
    kind = g.add_mutually_exclusive_group(required=True)
    for k in ("fattree", "fig1", "geant"):
        kind.add_argument(f"--{k}", dest="kind", action="store_const", const=k)
    g.add_argument("--out", required=True)
    g.add_argument("--commodities", type=int, default=0)
    g.add_argument("--commodities-out")
    g.add_argument("--classes", type=int, default=1)
    g.add_argument("--demand", type=float, default=0.2)
    g.add_argument("--seed", type=int, default=0)
    g.set_defaults(func=cmd_gen)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (_BadInput, TopologyError, MalformedSolution) as exc:
        log.error("invalid input: %s", exc)
        return BAD_INPUT
    except (SimplexError, ArithmeticError, ValueError) as exc:
        log.error("numerical failure: %s", exc)
        return NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
