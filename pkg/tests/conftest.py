import numpy as np
import pytest

from plaplab.grid import build_grid
from plaplab.hessian import weighted_hessian
from plaplab.oracles import oracle_case
from plaplab.solver import PDEProblem, solve


def solve_case(name, p, eps, n, k=1.0, dim=2):
    case = oracle_case(name, p, eps, n, dim)
    problem = PDEProblem(case.grid, p, eps, case.forcing, case.dirichlet, k=k)
    result = solve(problem)
    return case, problem, result, weighted_hessian(result.u, case.grid, eps, k)


@pytest.fixture(scope="session")
def poisson_129():
    return solve_case("poisson-sine", 2.0, 1e-3, 129)


@pytest.fixture(scope="session")
def power3_129():
    # p = 3, k = 1: the weighted second derivative of the exact solution is 1/2
    return solve_case("power", 3.0, 0.0, 129)


@pytest.fixture
def unit_grid_33():
    return build_grid([0.0, 0.0], [1.0, 1.0], 33, 2)


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)
