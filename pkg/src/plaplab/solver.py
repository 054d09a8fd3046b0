"""Energy-minimizing solver for the regularized p-Laplace Dirichlet problem.

Discretization
--------------
The discrete energy is

    J(u) = h^n / 2^n * sum_cells sum_corners (1/p) (eps + |g_c|^2)^(p/2) - sum_nodes w f u

where ``g_c`` is the corner gradient of a cell: at each of the cell's 2^n corners,
the n edge differences leaving that corner. ``w`` are trapezoid weights. Every
interior edge carries total weight one, so for p = 2 the Euler-Lagrange equation
is exactly the (2n+1)-point Laplacian, and for general p it is the conservative
flux form ``-div_h(a grad_h u) = f`` with the face diffusivity ``a`` averaged
over the corner evaluations that share the face.

The energy is convex for p > 1, eps > 0 (or p >= 2), so Newton with an Armijo
backtracking line search is globally convergent in exact arithmetic.
"""

from __future__ import annotations

import itertools
import logging
import warnings
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Callable, Union

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import DidNotConverge, InvalidProblem, NonFiniteField, SingularLinearSystem
from .grid import GridDomain

log = logging.getLogger(__name__)

FieldLike = Union[np.ndarray, Callable, float]


def _as_field(value: FieldLike, grid: GridDomain, name: str) -> np.ndarray:
    if callable(value):
        arr = np.asarray(value(grid.coords), dtype=float)
    else:
        arr = np.asarray(value, dtype=float)
    arr = np.broadcast_to(arr, grid.shape).astype(float)
    return arr


@dataclass
class PDEProblem:
    """One instance of ``-div((eps + |grad u|^2)^((p-2)/2) grad u) = f`` with Dirichlet data.

    ``forcing`` and ``dirichlet`` may be arrays on the grid, scalars, or callables
    taking the coordinate tuple. Only boundary entries of ``dirichlet`` are used.
    ``k`` is not used by the solver; it travels with the problem to the analysis.
    """

    grid: GridDomain
    p: float
    epsilon: float
    forcing: FieldLike = 0.0
    dirichlet: FieldLike = 0.0
    k: float = 1.0

    def __post_init__(self):
        if not self.p > 1:
            raise InvalidProblem(f"p must exceed 1, got {self.p}")
        if not (0.0 <= self.epsilon < 1.0):
            raise InvalidProblem(f"epsilon must lie in [0, 1), got {self.epsilon}")
        if not self.k > 0:
            raise InvalidProblem(f"k must be positive, got {self.k}")
        self.forcing = _as_field(self.forcing, self.grid, "forcing")
        self.dirichlet = _as_field(self.dirichlet, self.grid, "dirichlet")
        if not np.all(np.isfinite(self.forcing)):
            raise InvalidProblem("forcing has non-finite values")
        if not np.all(np.isfinite(self.dirichlet[self.grid.boundary_mask])):
            raise InvalidProblem("dirichlet data has non-finite boundary values")


@dataclass
class SolverConfig:
    tol_residual: float = 1e-10
    max_iterations: int = 200
    ls_shrink: float = 0.5
    ls_sufficient_decrease: float = 1e-4
    ls_min_step: float = 1e-10
    fallback_fixed_point: bool = True
    fallback_switch_after: int = 20
    raise_on_failure: bool = False

    def __post_init__(self):
        if not self.tol_residual > 0:
            raise InvalidProblem("tol_residual must be positive")
        if self.max_iterations < 1:
            raise InvalidProblem("max_iterations must be >= 1")
        if not 0 < self.ls_shrink < 1:
            raise InvalidProblem("ls_shrink must lie in (0, 1)")


@dataclass
class IterationRecord:
    energy: float
    step: float
    residual: float
    method: str


@dataclass
class SolveResult:
    u: np.ndarray
    iterations: int
    final_energy: float
    residual_sup: float
    converged: bool
    history: list[IterationRecord] = field(default_factory=list)
    fallback_used: bool = False


class CornerStencil:
    """Index bookkeeping for corner gradients on one grid (cached per grid)."""

    def __init__(self, grid: GridDomain):
        self.grid = grid
        self.dim = grid.dim
        self.h = grid.spacing
        self.n = grid.nodes_per_axis
        self.corners = list(itertools.product((0, 1), repeat=self.dim))
        self.weight = 1.0 / 2 ** self.dim
        self.interior = ~grid.boundary_mask
        self.interior_idx = np.flatnonzero(self.interior)

    def edge_slice(self, corner, d):
        """Slice of the d-axis edge-difference array giving corner ``corner`` of every cell."""
        m = self.n - 1
        return tuple(slice(0, m) if e == d else slice(corner[e], corner[e] + m) for e in range(self.dim))

    def corner_gradients(self, u: np.ndarray):
        diffs = [np.diff(u, axis=d) / self.h for d in range(self.dim)]
        return [[diffs[d][self.edge_slice(c, d)] for d in range(self.dim)] for c in self.corners]

    def divergence(self, fluxes) -> np.ndarray:
        """Adjoint of the edge difference: node value ``-(sum_d D_d F_d)``."""
        out = np.zeros(self.grid.shape)
        for d, F in enumerate(fluxes):
            lower = tuple(slice(0, -1) if e == d else slice(None) for e in range(self.dim))
            upper = tuple(slice(1, None) if e == d else slice(None) for e in range(self.dim))
            out[lower] -= F / self.h
            out[upper] += F / self.h
        return out

    @property
    def selectors(self):
        """Sparse corner-gradient operators restricted to interior columns.

        ``selectors[c][d]`` maps interior nodal values to the d-th gradient
        component at corner c of every cell (boundary values enter separately).
        """
        if not hasattr(self, "_selectors"):
            self._selectors, self._boundary_selectors = self._build_selectors()
        return self._selectors

    @property
    def boundary_selectors(self):
        self.selectors
        return self._boundary_selectors

    def _build_selectors(self):
        m = self.n - 1
        cells = np.indices((m,) * self.dim).reshape(self.dim, -1)
        n_cells = cells.shape[1]
        rows = np.arange(n_cells)
        N = self.grid.n_nodes
        col_map = -np.ones(N, dtype=np.int64)
        col_map[self.interior_idx] = np.arange(self.interior_idx.size)
        bmask = self.grid.boundary_mask.ravel()
        inner, outer = [], []
        for c in self.corners:
            row_i, row_b = [], []
            for d in range(self.dim):
                lo = cells + np.asarray(c)[:, None]
                lo[d] = cells[d]
                hi = lo.copy()
                hi[d] += 1
                lo_flat = np.ravel_multi_index(tuple(lo), self.grid.shape)
                hi_flat = np.ravel_multi_index(tuple(hi), self.grid.shape)
                r = np.concatenate([rows, rows])
                cidx = np.concatenate([lo_flat, hi_flat])
                vals = np.concatenate([-np.ones(n_cells), np.ones(n_cells)]) / self.h
                full = sp.csr_matrix((vals, (r, cidx)), shape=(n_cells, N))
                keep_i = ~bmask[cidx]
                row_i.append(sp.csr_matrix((vals[keep_i], (r[keep_i], col_map[cidx[keep_i]])),
                                           shape=(n_cells, self.interior_idx.size)))
                row_b.append(full[:, np.flatnonzero(bmask)])
            inner.append(row_i)
            outer.append(row_b)
        return inner, outer


@lru_cache(maxsize=16)
def stencil_for(grid: GridDomain) -> CornerStencil:
    return CornerStencil(grid)


def _check_finite(u: np.ndarray):
    if not np.all(np.isfinite(u)):
        raise NonFiniteField("field contains non-finite values")


def trapezoid_weights(grid: GridDomain) -> np.ndarray:
    w1 = np.full(grid.nodes_per_axis, grid.spacing)
    w1[[0, -1]] *= 0.5
    w = w1
    for _ in range(grid.dim - 1):
        w = np.multiply.outer(w, w1)
    return w


def energy(problem: PDEProblem, u: np.ndarray) -> float:
    """Discrete p-Dirichlet energy minus the load term."""
    _check_finite(u)
    st = stencil_for(problem.grid)
    p, eps = problem.p, problem.epsilon
    total = 0.0
    for g in st.corner_gradients(u):
        s = eps + sum(gd * gd for gd in g)
        total += np.sum(s ** (p / 2.0))
    vol = problem.grid.cell_volume
    return vol * st.weight * total / p - float(np.sum(trapezoid_weights(problem.grid) * problem.forcing * u))


def _diffusivity(s: np.ndarray, p: float) -> np.ndarray:
    if p == 2.0:
        return np.ones_like(s)
    with np.errstate(divide="ignore"):
        return s ** ((p - 2.0) / 2.0)


def energy_gradient(problem: PDEProblem, u: np.ndarray) -> np.ndarray:
    """Discrete residual ``-div_h(a grad_h u) - f`` on interior nodes, zero on the boundary.

    Equals the energy gradient divided by the cell volume.
    """
    _check_finite(u)
    st = stencil_for(problem.grid)
    p, eps = problem.p, problem.epsilon
    fluxes = [np.zeros(np.diff(u, axis=d).shape) for d in range(st.dim)]
    for c, g in zip(st.corners, st.corner_gradients(u)):
        a = _diffusivity(eps + sum(gd * gd for gd in g), p)
        for d in range(st.dim):
            fluxes[d][st.edge_slice(c, d)] += st.weight * a * g[d]
    r = st.divergence(fluxes) - problem.forcing
    r[problem.grid.boundary_mask] = 0.0
    return r


def weak_residual(problem: PDEProblem, u: np.ndarray) -> float:
    """Largest mass-normalized defect of the discrete weak form over interior hat functions.

    Assembled with the sparse corner operators, i.e. by pairing the discrete flux
    with the gradient of each hat function cell by cell.
    """
    _check_finite(u)
    st = stencil_for(problem.grid)
    p, eps = problem.p, problem.epsilon
    u_flat = u.ravel()
    ui = u_flat[st.interior_idx]
    ub = u_flat[problem.grid.boundary_mask.ravel()]
    pairing = np.zeros(st.interior_idx.size)
    for S_c, B_c in zip(st.selectors, st.boundary_selectors):
        g = [S @ ui + B @ ub for S, B in zip(S_c, B_c)]
        a = _diffusivity(eps + sum(gd * gd for gd in g), p)
        for S, gd in zip(S_c, g):
            pairing += st.weight * (S.T @ (a * gd))
    # both integrals use cell-volume quadrature; hat mass is one cell volume
    load = problem.forcing.ravel()[st.interior_idx]
    return float(np.max(np.abs(pairing - load))) if pairing.size else 0.0


def _system_matrix(problem: PDEProblem, u: np.ndarray, newton: bool) -> sp.csc_matrix:
    """Energy Hessian (``newton``) or frozen-diffusivity matrix, interior block, per cell volume."""
    st = stencil_for(problem.grid)
    p, eps = problem.p, problem.epsilon
    grads = st.corner_gradients(u)
    total = None
    for S_c, g in zip(st.selectors, grads):
        s = (eps + sum(gd * gd for gd in g)).ravel()
        a = _diffusivity(s, p)
        blocks = [[None] * st.dim for _ in range(st.dim)]
        for d in range(st.dim):
            for e in range(st.dim):
                diag = a if d == e else np.zeros_like(a)
                if newton and p != 2.0:
                    with np.errstate(divide="ignore", invalid="ignore"):
                        curv = (p - 2.0) * s ** ((p - 4.0) / 2.0) * g[d].ravel() * g[e].ravel()
                    diag = diag + np.where(s > 0, curv, 0.0)
                blocks[d][e] = sp.diags(st.weight * diag)
        S = sp.vstack(S_c, format="csr")
        M = S.T @ sp.bmat(blocks, format="csr") @ S
        total = M if total is None else total + M
    return total.tocsc()


def transfinite_seed(grid: GridDomain, dirichlet: np.ndarray) -> np.ndarray:
    """Boolean-sum linear interpolation of boundary data into the interior.

    Reproduces the boundary values exactly, and reproduces exactly any data that
    is affine in each coordinate or depends on a single coordinate.
    """
    u0 = np.where(grid.boundary_mask, dirichlet, 0.0)
    t = np.linspace(0.0, 1.0, grid.nodes_per_axis)
    W = u0.copy()
    for d in range(grid.dim):
        first = np.take(W, [0], axis=d)
        last = np.take(W, [-1], axis=d)
        shape = [1] * grid.dim
        shape[d] = -1
        td = t.reshape(shape)
        W = W - ((1.0 - td) * first + td * last)
    seed = u0 - W
    seed[grid.boundary_mask] = dirichlet[grid.boundary_mask]
    return seed


def _descent_direction(problem, u, r_int, newton):
    A = _system_matrix(problem, u, newton)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("error", spla.MatrixRankWarning)
            d = spla.spsolve(A, -r_int)
    except (RuntimeError, ValueError, spla.MatrixRankWarning) as exc:  # SuperLU raises RuntimeError on exact singularity
        raise SingularLinearSystem(str(exc)) from exc
    if not np.all(np.isfinite(d)):
        raise SingularLinearSystem("linear solve returned non-finite values")
    return d


def _laplace_direction(problem, u, r_int):
    flat = replace(problem, p=2.0, epsilon=0.0)
    return _descent_direction(flat, u, r_int, newton=False)


def solve(problem: PDEProblem, config: SolverConfig | None = None,
          initial: np.ndarray | None = None) -> SolveResult:
    """Minimize the discrete energy by damped Newton with a lagged-diffusivity fallback."""
    config = config or SolverConfig()
    if problem.p < 2.0 and problem.epsilon <= 0.0:
        raise InvalidProblem("epsilon > 0 is required when p < 2")
    grid = problem.grid
    st = stencil_for(grid)
    interior = st.interior
    vol = grid.cell_volume

    if initial is None:
        u = transfinite_seed(grid, problem.dirichlet)
    else:
        u = np.array(initial, dtype=float)
        u[grid.boundary_mask] = problem.dirichlet[grid.boundary_mask]
    _check_finite(u)

    tol = config.tol_residual * (1.0 + float(np.max(np.abs(problem.forcing))))
    E = energy(problem, u)
    r = energy_gradient(problem, u)
    res = float(np.max(np.abs(r))) if r.size else 0.0
    history = [IterationRecord(E, 0.0, res, "init")]
    best = (res, u.copy(), E)
    newton = True
    fallback_used = False
    stalls = 0
    converged = False
    iterations = 0

    for it in range(1, config.max_iterations + 1):
        iterations = it
        if res <= tol:
            converged = True
            break
        r_int = r[interior]
        try:
            d_int = _descent_direction(problem, u, r_int, newton)
        except SingularLinearSystem:
            # degenerate diffusivity (e.g. flat start with p > 2, eps = 0):
            # take one step preconditioned by the plain Laplacian
            log.info("singular system at iteration %d; Laplacian-preconditioned step", it)
            d_int = _laplace_direction(problem, u, r_int)
        slope = vol * float(r_int @ d_int)
        if slope >= 0:
            # not a descent direction (can only come from round-off); use steepest descent
            d_int = -r_int
            slope = -vol * float(r_int @ r_int)

        step = 1.0
        accepted = False
        slack = 1e-13 * (1.0 + abs(E))
        while step >= config.ls_min_step:
            trial = u.copy()
            trial[interior] += step * d_int
            E_t = energy(problem, trial)
            if np.isfinite(E_t):
                if E_t <= E + config.ls_sufficient_decrease * step * slope:
                    accepted = True
                elif E_t <= E + slack:
                    # energy differences are below round-off; fall back to residual decrease
                    r_t = energy_gradient(problem, trial)
                    if np.max(np.abs(r_t)) < res:
                        accepted = True
            if accepted:
                break
            step *= config.ls_shrink

        if not accepted:
            if newton and config.fallback_fixed_point:
                log.info("line search failed at iteration %d; switching to lagged diffusivity", it)
                newton, fallback_used = False, True
                continue
            log.warning("line search failed at iteration %d (residual %.3e)", it, res)
            break

        u = trial
        E = E_t
        r = energy_gradient(problem, u)
        new_res = float(np.max(np.abs(r)))
        history.append(IterationRecord(E, step, new_res, "newton" if newton else "lagged"))
        if newton:
            stalls = stalls + 1 if new_res > 0.9 * res else 0
            if stalls >= config.fallback_switch_after and config.fallback_fixed_point:
                log.info("Newton stalled for %d iterations; switching to lagged diffusivity", stalls)
                newton, fallback_used = False, True
        res = new_res
        if res < best[0]:
            best = (res, u.copy(), E)
    else:
        converged = res <= tol

    if not converged and best[0] < res:
        res, u, E = best
    result = SolveResult(u=u, iterations=iterations, final_energy=E, residual_sup=res,
                         converged=converged, history=history, fallback_used=fallback_used)
    if not converged:
        msg = f"solver stopped after {iterations} iterations with residual {res:.3e} > {tol:.3e}"
        if config.raise_on_failure:
            raise DidNotConverge(msg, result)
        log.warning(msg)
    return result
