"""Run experiment 1 or 2 from a JSON config, write the CSV and print mean rows.

    python3 scripts/run_experiment.py exp1 scripts/configs/exp1_fattree.json results/exp1_fattree.csv
"""
import argparse
import logging
import time
from collections import defaultdict
from pathlib import Path
from statistics import mean

from mptpt.experiments import (
    EXP1_FIELDS,
    EXP2_FIELDS,
    ExperimentConfig,
    experiment1,
    experiment2,
    rows_to_csv,
)

RUNS = {
    "exp1": (experiment1, EXP1_FIELDS, ["avg_rules", "avg_rules_all", "max_rules"]),
    "exp2": (experiment2, EXP2_FIELDS, ["max_uniform_demand"]),
}


def summarise(rows, metrics):
    groups = defaultdict(list)
    for r in rows:
        groups[(r["topology"], r["C"], r["M"], r["algorithm"])].append(r)
    print("topology  C    M  algorithm  " + "  ".join(f"{m:>14}" for m in metrics))
    for (topo, c, m, algo), rs in groups.items():
        vals = []
        for key in metrics:
            xs = [r[key] for r in rs if isinstance(r[key], (int, float)) and not isinstance(r[key], bool)]
            vals.append(f"{mean(xs):14.3f}" if xs else f"{'-':>14}")
        print(f"{topo:<9} {c:>1} {m:>4}  {algo:<9}  " + "  ".join(vals))


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("experiment", choices=sorted(RUNS))
    ap.add_argument("config")
    ap.add_argument("out")
    ap.add_argument("--workers", type=int, help="override the config's worker count")
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(message)s")

    cfg = ExperimentConfig.load(args.config)
    if args.workers:
        cfg.workers = args.workers
    run, fields, metrics = RUNS[args.experiment]
    t0 = time.perf_counter()
    rows = run(cfg)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(rows_to_csv(rows, fields))
    logging.info("%d rows -> %s in %.1fs", len(rows), out, time.perf_counter() - t0)
    summarise(rows, metrics)


if __name__ == "__main__":
    main()
