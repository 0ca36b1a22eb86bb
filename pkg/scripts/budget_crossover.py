"""Tabulate the gradient budgets Kb of the first- and second-order SGD
schedules over a grid of accuracies and dataset sizes.

Rows where a schedule's validity window fails carry an empty budget.

    python scripts/budget_crossover.py --n 100 1000 10000 --f0 1e4
"""

import argparse
import csv
import sys

import numpy as np

from sgdlangevin.planner import Plan, candidate_plans
from sgdlangevin.potentials import make_isotropic_gaussian_target


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, nargs="+", default=[100, 1000, 10000])
    ap.add_argument("--p", type=int, default=1)
    ap.add_argument("--f0", type=float, default=1e4, help="f(theta0) - min f")
    ap.add_argument("--points", type=int, default=12)
    args = ap.parse_args(argv)

    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["n", "epsilon", "first_order_budget", "second_order_budget", "winner"])
    for n in args.n:
        target = make_isotropic_gaussian_target(args.p, n, 1.0, np.zeros((n, args.p)), L_g=1.0)
        S = np.sqrt(args.p * max(args.p, n))
        lo = min(3 * np.sqrt(args.p) / n, 8 * S / (n * (n - 1)))
        hi = max(2 * np.sqrt(args.p) / np.sqrt(n), 4 * S / n)
        for eps in np.geomspace(lo, hi, args.points):
            plans = candidate_plans(float(eps), target, args.f0)
            budgets = {k: v.budget if isinstance(v, Plan) else None for k, v in plans.items()}
            valid = {k: v for k, v in budgets.items() if v is not None}
            winner = min(valid, key=valid.get) if valid else ""
            w.writerow([n, f"{eps:.6g}", budgets["sgd_first_order"] or "", budgets["sgd_second_order"] or "", winner])


if __name__ == "__main__":
    main()
