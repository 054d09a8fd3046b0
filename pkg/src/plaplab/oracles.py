"""Closed-form reference solutions.

The power example ``|x1|^a / a`` with ``a = p/(p-1)`` solves
``div(|grad u|^(p-2) grad u) = 1`` away from ``x1 = 0``. Its weighted second
derivative ``|u'|^k |u''| = |x1|^((k+2-p)/(p-1)) / (p-1)`` stays bounded near
the hyperplane exactly when ``p <= 2 + k``.

The solver uses the ``-div(...) = f`` convention, so the named ``"power"``
case uses the reflected field ``-|x1|^a / a`` with forcing ``f = 1``. The
weighted field is the same for both signs.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DegenerateGradient, DegeneratePoint, InvalidProblem
from .grid import GridDomain, build_grid, offset_grid

Coords = tuple  # tuple of same-shape coordinate arrays


@dataclass(frozen=True)
class ClosedForm:
    """A smooth function with exact first and second derivatives.

    ``gradient`` returns a list of ``dim`` arrays; ``hessian`` a ``dim x dim``
    nested list of arrays.
    """

    name: str
    value: Callable[[Coords], np.ndarray]
    gradient: Callable[[Coords], list]
    hessian: Callable[[Coords], list]


@dataclass(frozen=True)
class PowerExample:
    p: float
    k: float

    def __post_init__(self):
        if self.p <= 1:
            raise InvalidProblem("power example needs p > 1")

    @property
    def alpha(self) -> float:
        return self.p / (self.p - 1.0)

    @property
    def C_p(self) -> float:
        return 1.0 / (self.p - 1.0)

    @property
    def blowup_exponent(self) -> float:
        return (self.k + 2.0 - self.p) / (self.p - 1.0)

    @property
    def bounded(self) -> bool:
        return self.blowup_exponent >= 0


@dataclass(frozen=True)
class PowerValues:
    u: float
    du: float
    d2u: float
    g: float


@dataclass(frozen=True)
class Unbounded:
    """Supremum is infinite; ``rate`` is the (negative) exponent of |x1| in g."""

    rate: float

    def __float__(self):
        return float("inf")


def power_example_eval(p: float, k: float, x1: float) -> PowerValues:
    """Values of u, u', u'' and g = |u'|^k |u''| for the power example at ``x1``.

    At ``x1 = 0`` the limits are returned (``d2u`` may be ``inf`` for p > 2);
    a singular g raises :class:`DegeneratePoint`.
    """
    ex = PowerExample(p, k)
    a = ex.alpha
    ax = abs(float(x1))
    if ax > 0.0:
        d2u = (a - 1.0) * ax ** (a - 2.0)
        g = ex.C_p * ax ** ex.blowup_exponent
        return PowerValues(ax ** a / a, float(np.sign(x1)) * ax ** (a - 1.0), d2u, g)
    if ex.blowup_exponent < 0:
        raise DegeneratePoint(f"g is singular at x1 = 0 for p={p}, k={k}")
    d2u = {1: 0.0, 0: 1.0, -1: float("inf")}[int(np.sign(a - 2.0))]
    g = ex.C_p if ex.blowup_exponent == 0 else 0.0
    return PowerValues(0.0, 0.0, d2u, g)


def power_example_sup(p: float, k: float, interval_halfwidth: float):
    """Supremum of g over ``|x1| <= halfwidth``, or :class:`Unbounded`."""
    if interval_halfwidth <= 0:
        raise ValueError("halfwidth must be positive")
    ex = PowerExample(p, k)
    if ex.blowup_exponent < 0:
        return Unbounded(rate=ex.blowup_exponent)
    return ex.C_p * interval_halfwidth ** ex.blowup_exponent


def power_closed_form(p: float, sign: float = -1.0) -> ClosedForm:
    """``sign * |x1|^a / a`` as a :class:`ClosedForm` (default sign matches f = +1)."""
    a = p / (p - 1.0)

    def value(x):
        return sign * np.abs(x[0]) ** a / a

    def gradient(x):
        g = [np.zeros_like(x[0], dtype=float) for _ in x]
        g[0] = sign * np.sign(x[0]) * np.abs(x[0]) ** (a - 1.0)
        return g

    def hessian(x):
        H = [[np.zeros_like(x[0], dtype=float) for _ in x] for _ in x]
        with np.errstate(divide="ignore"):
            H[0][0] = sign * (a - 1.0) * np.abs(x[0]) ** (a - 2.0)
        return H

    return ClosedForm(f"power(p={p})", value, gradient, hessian)


def poisson_sine() -> ClosedForm:
    """``sin(pi x1) sin(pi x2) [sin(pi x3)]`` on the unit box."""

    def value(x):
        out = np.ones_like(x[0], dtype=float)
        for xi in x:
            out = out * np.sin(np.pi * xi)
        return out

    def gradient(x):
        s = [np.sin(np.pi * xi) for xi in x]
        c = [np.pi * np.cos(np.pi * xi) for xi in x]
        grads = []
        for d in range(len(x)):
            term = c[d]
            for e in range(len(x)):
                if e != d:
                    term = term * s[e]
            grads.append(term)
        return grads

    def hessian(x):
        n = len(x)
        s = [np.sin(np.pi * xi) for xi in x]
        c = [np.pi * np.cos(np.pi * xi) for xi in x]
        H = [[None] * n for _ in range(n)]
        for d in range(n):
            for e in range(n):
                term = np.ones_like(x[0], dtype=float)
                for m in range(n):
                    if m == d == e:
                        term = term * (-np.pi ** 2 * s[m])
                    elif m == d or m == e:
                        term = term * c[m]
                    else:
                        term = term * s[m]
                H[d][e] = term
        return H

    return ClosedForm("poisson-sine", value, gradient, hessian)


def radial_quadratic() -> ClosedForm:
    """``|x|^2 / 2``; gradient vanishes only at the origin."""

    def value(x):
        return 0.5 * sum(xi ** 2 for xi in x)

    def gradient(x):
        return [np.array(xi, dtype=float) for xi in x]

    def hessian(x):
        n = len(x)
        return [[np.full_like(x[0], 1.0 if d == e else 0.0, dtype=float) for e in range(n)] for d in range(n)]

    return ClosedForm("radial-quadratic", value, gradient, hessian)


def tilted_sine() -> ClosedForm:
    """``x1 + x2 + sin(pi x1) sin(pi x2) / 4`` (2D); |grad| >= 1 - pi/4 everywhere."""

    def value(x):
        return x[0] + x[1] + 0.25 * np.sin(np.pi * x[0]) * np.sin(np.pi * x[1])

    def gradient(x):
        s0, s1 = np.sin(np.pi * x[0]), np.sin(np.pi * x[1])
        c0, c1 = np.cos(np.pi * x[0]), np.cos(np.pi * x[1])
        return [1.0 + 0.25 * np.pi * c0 * s1, 1.0 + 0.25 * np.pi * s0 * c1]

    def hessian(x):
        s0, s1 = np.sin(np.pi * x[0]), np.sin(np.pi * x[1])
        c0, c1 = np.cos(np.pi * x[0]), np.cos(np.pi * x[1])
        q = 0.25 * np.pi ** 2
        h11 = -q * s0 * s1
        h12 = q * c0 * c1
        return [[h11, h12], [h12, h11.copy()]]

    return ClosedForm("tilted-sine", value, gradient, hessian)


def manufactured(u_star: ClosedForm, p: float, epsilon: float, grid: GridDomain) -> np.ndarray:
    """Forcing ``f = -div((eps + |grad u*|^2)^((p-2)/2) grad u*)`` on the grid nodes.

    Uses the chain rule on the exact derivatives:
    ``f = -w^((p-2)/2) [lap u* + (p-2) (grad u*^T D2u* grad u*) / w]`` with
    ``w = eps + |grad u*|^2``.
    """
    x = grid.coords
    grad = u_star.gradient(x)
    H = u_star.hessian(x)
    n = grid.dim
    w = epsilon + sum(gd ** 2 for gd in grad)
    lap = sum(H[d][d] for d in range(n))
    if p == 2.0:
        return -np.asarray(lap, dtype=float)
    if np.any(w <= 0):
        raise DegenerateGradient("eps + |grad u*|^2 vanishes at a grid node")
    quad = sum(grad[d] * H[d][e] * grad[e] for d in range(n) for e in range(n))
    return -w ** ((p - 2.0) / 2.0) * (lap + (p - 2.0) * quad / w)


@dataclass(frozen=True)
class OracleCase:
    """Everything needed to set up one solve for a named oracle."""

    name: str
    grid: GridDomain
    forcing: np.ndarray
    dirichlet: np.ndarray
    exact: ClosedForm | None  # exact solution of the discrete problem's continuum limit, if known


def oracle_case(name: str, p: float, epsilon: float, nodes_per_axis: int, dim: int = 2,
                grid: GridDomain | None = None) -> OracleCase:
    """Build forcing and boundary data for one of the named reference problems.

    ``poisson-sine``: f = d*pi^2 prod sin(pi x_i), zero boundary, unit box. Exact
    solution only for p = 2.
    ``power``: f = 1, boundary from ``-|x1|^a/a`` on a half-cell offset box
    ``[-1, 1]^d``. Exact for eps = 0.
    ``radial-quadratic`` and ``tilted-sine``: manufactured forcing, exact boundary.
    """
    if name == "poisson-sine":
        grid = grid or build_grid([0.0] * dim, [1.0] * dim, nodes_per_axis, dim)
        u = poisson_sine()
        f = dim * np.pi ** 2 * u.value(grid.coords)
        return OracleCase(name, grid, f, np.zeros(grid.shape), u if p == 2.0 else None)
    if name == "power":
        grid = grid or offset_grid(1.0, nodes_per_axis, dim)
        u = power_closed_form(p)
        return OracleCase(name, grid, np.ones(grid.shape), u.value(grid.coords),
                          u if epsilon == 0.0 else None)
    if name in ("radial-quadratic", "tilted-sine"):
        if name == "radial-quadratic":
            grid = grid or build_grid([-1.0] * dim, [1.0] * dim, nodes_per_axis, dim)
            u = radial_quadratic()
        else:
            if dim != 2:
                raise InvalidProblem("tilted-sine is two-dimensional")
            grid = grid or build_grid([0.0] * dim, [1.0] * dim, nodes_per_axis, dim)
            u = tilted_sine()
        f = manufactured(u, p, epsilon, grid)
        return OracleCase(name, grid, f, u.value(grid.coords), u)
    raise InvalidProblem(f"unknown oracle {name!r}")


ORACLE_NAMES = ("poisson-sine", "power", "radial-quadratic", "tilted-sine")


def identity_checks() -> list[tuple[str, bool, str]]:
    """Closed-form identities of the oracle family; each entry is (name, passed, detail)."""
    checks = []
    probe = build_grid([-1.0, -1.0], [1.0, 1.0], 10, 2)  # even count: no node on x1 = 0
    off_axis = np.abs(probe.coords[0]) > 0

    worst = 0.0
    for p in (1.5, 2.5, 3.0, 4.0):
        f = manufactured(power_closed_form(p), p, 0.0, probe)
        worst = max(worst, float(np.max(np.abs(f[off_axis] - 1.0))))
    checks.append(("power example solves -div(|grad u|^(p-2) grad u) = 1", worst < 1e-12, f"max dev {worst:.2e}"))

    worst = 0.0
    unit = build_grid([0.0, 0.0], [1.0, 1.0], 9, 2)
    for u in (poisson_sine(), tilted_sine()):
        lap = -(u.hessian(unit.coords)[0][0] + u.hessian(unit.coords)[1][1])
        for eps in (0.0, 0.3, 0.9):
            worst = max(worst, float(np.max(np.abs(manufactured(u, 2.0, eps, unit) - lap))))
    checks.append(("p = 2 forcing is -Laplacian for every eps", worst == 0.0, f"max dev {worst:.2e}"))

    ok = True
    for k in (0.5, 1.0, 1.5):
        for p in (1.5, 2.0, 2 + k - 0.1, 2 + k, 2 + k + 0.1, 2 + k + 1.0):
            finite = not isinstance(power_example_sup(p, k, 0.5), Unbounded)
            ok &= finite == (p <= 2 + k)
    checks.append(("sup of g is finite iff p <= 2 + k", ok, "k in {0.5, 1, 1.5}"))

    g3 = power_example_eval(3.0, 1.0, 0.5).g
    g25 = power_example_eval(2.5, 1.0, 0.5).g
    want = (1 / 1.5) * 0.5 ** (1 / 3)
    checks.append(("g values at x1 = 0.5", abs(g3 - 0.5) < 1e-15 and abs(g25 - want) < 1e-15,
                   f"p=3: {g3!r}, p=2.5: {g25!r}"))

    worst = 0.0
    for p in (1.5, 3.0):
        f = manufactured(radial_quadratic(), p, 0.0, probe)
        r = np.sqrt(probe.coords[0] ** 2 + probe.coords[1] ** 2)
        worst = max(worst, float(np.max(np.abs(f + p * r ** (p - 2)) / (p * r ** (p - 2)))))
    checks.append(("radial quadratic forcing is -p r^(p-2)", worst < 1e-12, f"max rel dev {worst:.2e}"))
    return checks
