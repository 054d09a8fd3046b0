#!/usr/bin/env python3
"""Max-error convergence table for the sine Poisson case and a manufactured p-Laplace case."""

import argparse

import numpy as np

from plaplab.grid import build_grid
from plaplab.oracles import manufactured, oracle_case, poisson_sine, tilted_sine
from plaplab.solver import PDEProblem, solve


def poisson_errors(resolutions):
    out = []
    for n in resolutions:
        case = oracle_case("poisson-sine", 2.0, 0.0, n)
        res = solve(PDEProblem(case.grid, 2.0, 0.0, case.forcing, case.dirichlet))
        out.append(np.max(np.abs(res.u - poisson_sine().value(case.grid.coords))))
    return out


def manufactured_errors(resolutions, p, eps):
    u_star = tilted_sine()
    out = []
    for n in resolutions:
        grid = build_grid((0.0, 0.0), (1.0, 1.0), n, 2)
        f = manufactured(u_star, p, eps, grid)
        res = solve(PDEProblem(grid, p, eps, f, u_star.value(grid.coords)))
        out.append(np.max(np.abs(res.u - u_star.value(grid.coords))))
    return out


def print_table(title, resolutions, errs):
    print(title)
    print(f"{'n':>6} {'max error':>12} {'order':>7}")
    for i, (n, e) in enumerate(zip(resolutions, errs)):
        order = f"{np.log2(errs[i - 1] / e):7.3f}" if i else ""
        print(f"{n:6d} {e:12.4e} {order}")
    print()


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--resolutions", type=int, nargs="+", default=[33, 65, 129, 257])
    ap.add_argument("--p", type=float, default=2.5)
    ap.add_argument("--epsilon", type=float, default=0.0)
    args = ap.parse_args()
    print_table("p = 2, sine forcing", args.resolutions, poisson_errors(args.resolutions))
    print_table(f"manufactured tilted sine, p = {args.p:g}, eps = {args.epsilon:g}", args.resolutions,
                manufactured_errors(args.resolutions, args.p, args.epsilon))


if __name__ == "__main__":
    main()
