#!/usr/bin/env python3
"""Sup of the weighted Hessian near the hyperplane x1 = 0 for the power example.

Prints sup g over B_0.5 against the smallest |x1| on the grid, with the exact
continuum value (bounded side) or the predicted log-slope (unbounded side).
"""

import argparse

import numpy as np

from plaplab.grid import BallRegion
from plaplab.hessian import lq_norm, weighted_hessian
from plaplab.oracles import PowerExample, oracle_case, power_example_sup
from plaplab.solver import PDEProblem, solve


def sup_g(p, k, eps, n, radius):
    case = oracle_case("power", p, eps, n)
    res = solve(PDEProblem(case.grid, p, eps, case.forcing, case.dirichlet, k=k))
    g = weighted_hessian(res.u, case.grid, eps, k)
    sup = lq_norm(g.aggregate, BallRegion((0.0, 0.0), radius), np.inf, case.grid, g.valid_mask).value
    return np.min(np.abs(case.grid.coords[0])), sup, res.converged


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--k", type=float, default=0.5)
    ap.add_argument("--p", type=float, nargs="+", default=[2.2, 2.4, 2.5, 2.6, 2.8, 3.0])
    ap.add_argument("--epsilon", type=float, default=0.0)
    ap.add_argument("--resolutions", type=int, nargs="+", default=[65, 129, 257])
    ap.add_argument("--radius", type=float, default=0.5)
    args = ap.parse_args()
    for p in args.p:
        ex = PowerExample(p, args.k)
        exact = power_example_sup(p, args.k, args.radius)
        label = f"exact sup {float(exact):.5f}" if ex.bounded else f"unbounded, rate {ex.blowup_exponent:.4f}"
        print(f"p = {p:g}, k = {args.k:g}: {label}")
        rows = [sup_g(p, args.k, args.epsilon, n, args.radius) for n in args.resolutions]
        for n, (hmin, sup, conv) in zip(args.resolutions, rows):
            print(f"  n={n:4d}  min|x1|={hmin:.3e}  sup g={sup:.5f}  converged={conv}")
        if len(rows) > 1:
            slope = np.polyfit(np.log([r[0] for r in rows]), np.log([r[1] for r in rows]), 1)[0]
            print(f"  log-slope of sup g vs min|x1|: {slope:.4f}")
        print()


if __name__ == "__main__":
    main()
