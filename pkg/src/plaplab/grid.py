"""Uniform tensor grids on boxes and concentric-ball node masks."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np

from .errors import InvalidGeometry

# relative tolerance for the equal-spacing check and closed-ball membership
_SPACING_RTOL = 1e-10
_BALL_RTOL = 1e-12


@dataclass(frozen=True)
class GridDomain:
    """Uniform grid with ``nodes_per_axis`` nodes along every axis of ``[lo, hi]``.

    Spacing must be identical on all axes. Arrays on the grid use ``indexing='ij'``,
    so ``field[i, j]`` sits at ``(lo[0] + i*h, lo[1] + j*h)``.
    """

    dim: int
    lo: tuple[float, ...]
    hi: tuple[float, ...]
    nodes_per_axis: int

    def __post_init__(self):
        if self.dim not in (2, 3):
            raise InvalidGeometry(f"dim must be 2 or 3, got {self.dim}")
        if len(self.lo) != self.dim or len(self.hi) != self.dim:
            raise InvalidGeometry("lo and hi must have one entry per dimension")
        if int(self.nodes_per_axis) != self.nodes_per_axis or self.nodes_per_axis < 3:
            raise InvalidGeometry(f"nodes_per_axis must be an integer >= 3, got {self.nodes_per_axis}")
        lo = np.asarray(self.lo, dtype=float)
        hi = np.asarray(self.hi, dtype=float)
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
            raise InvalidGeometry("box corners must be finite")
        if np.any(hi <= lo):
            raise InvalidGeometry("lo < hi must hold componentwise")
        widths = hi - lo
        if np.ptp(widths) > _SPACING_RTOL * widths.max():
            raise InvalidGeometry("anisotropic grids are not supported: box edges differ in length")

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.nodes_per_axis,) * self.dim

    @property
    def spacing(self) -> float:
        return (self.hi[0] - self.lo[0]) / (self.nodes_per_axis - 1)

    @property
    def cell_volume(self) -> float:
        return self.spacing ** self.dim

    @property
    def n_nodes(self) -> int:
        return self.nodes_per_axis ** self.dim

    @cached_property
    def axes(self) -> tuple[np.ndarray, ...]:
        h = self.spacing
        idx = np.arange(self.nodes_per_axis)
        return tuple(self.lo[d] + h * idx for d in range(self.dim))

    @cached_property
    def coords(self) -> tuple[np.ndarray, ...]:
        return tuple(np.meshgrid(*self.axes, indexing="ij"))

    @cached_property
    def boundary_mask(self) -> np.ndarray:
        return ~self.collar_mask(1)

    def collar_mask(self, width: int) -> np.ndarray:
        """True at nodes at least ``width`` cells away from every box face."""
        n = self.nodes_per_axis
        mask = np.zeros(self.shape, dtype=bool)
        if n - 2 * width > 0:
            mask[(slice(width, n - width),) * self.dim] = True
        return mask

    def contains_box(self, lo: Sequence[float], hi: Sequence[float]) -> bool:
        return all(self.lo[d] <= lo[d] and hi[d] <= self.hi[d] for d in range(self.dim))


def build_grid(lo: Sequence[float], hi: Sequence[float], nodes_per_axis: int, dim: int) -> GridDomain:
    lo_t = tuple(float(v) for v in lo)
    hi_t = tuple(float(v) for v in hi)
    return GridDomain(dim=dim, lo=lo_t, hi=hi_t, nodes_per_axis=nodes_per_axis)


def offset_grid(halfwidth: float, nodes_per_axis: int, dim: int = 2, axis: int = 0) -> GridDomain:
    """Grid on ``[-halfwidth, halfwidth]^dim`` shifted by half a cell along ``axis``.

    Nodes on ``axis`` sit at odd multiples of h/2, so none lands on the hyperplane
    ``x[axis] = 0``; the nearest ones are at distance h/2.
    """
    h = 2.0 * halfwidth / (nodes_per_axis - 1)
    lo = [-halfwidth] * dim
    hi = [halfwidth] * dim
    lo[axis] -= 0.5 * h
    hi[axis] -= 0.5 * h
    return build_grid(lo, hi, nodes_per_axis, dim)


@dataclass(frozen=True)
class BallRegion:
    center: tuple[float, ...]
    radius: float

    def __post_init__(self):
        if not (np.isfinite(self.radius) and self.radius > 0):
            raise InvalidGeometry(f"ball radius must be positive, got {self.radius}")
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))

    def inside_box(self, grid: GridDomain) -> bool:
        lo = [c - self.radius for c in self.center]
        hi = [c + self.radius for c in self.center]
        return grid.contains_box(lo, hi)

    def volume(self, dim: int) -> float:
        if dim == 2:
            return np.pi * self.radius ** 2
        return 4.0 / 3.0 * np.pi * self.radius ** 3


def ball_mask(grid: GridDomain, region: BallRegion) -> np.ndarray:
    """Boolean mask of nodes in the closed ball."""
    if len(region.center) != grid.dim:
        raise InvalidGeometry("ball center dimension does not match the grid")
    r2 = np.zeros(grid.shape)
    for x, c in zip(grid.coords, region.center):
        r2 += (x - c) ** 2
    return r2 <= region.radius ** 2 * (1.0 + _BALL_RTOL) + _BALL_RTOL * grid.spacing ** 2


def ball_nodes(grid: GridDomain, region: BallRegion) -> np.ndarray:
    """Flat (C-order) indices of nodes in the closed ball."""
    return np.flatnonzero(ball_mask(grid, region))


def shrinking_radius(R_prime: float, i: int) -> float:
    """Radius ``R'(1 + 2^-i)`` of the i-th ball in the iteration."""
    if R_prime <= 0 or i < 0:
        raise ValueError("need R_prime > 0 and i >= 0")
    return R_prime * (1.0 + 2.0 ** (-i))
