"""Gradient/Hessian reconstruction, the weighted field g, and localized L^q norms."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EmptyRegion
from .grid import BallRegion, GridDomain, ball_mask

# nodes closer than this many cells to a face are excluded from the analysis
VALID_COLLAR = 2
# above this exponent L^q sums are evaluated relative to the field maximum
_LOG_SPACE_Q = 64.0


def gradient_field(u: np.ndarray, grid: GridDomain) -> np.ndarray:
    """Centered differences inside, second-order one-sided at the faces.

    Returns an array of shape ``(dim, *grid.shape)``.
    """
    return np.stack(np.gradient(u, grid.spacing, edge_order=2))


def hessian_field(u: np.ndarray, grid: GridDomain) -> np.ndarray:
    """Symmetric Hessian of shape ``(dim, dim, *grid.shape)``.

    Interior diagonal entries use the compact three-point second difference and
    off-diagonal entries the four-point cross difference. Values near the faces
    are filled by second-order one-sided rules and are not trusted downstream.
    """
    h = grid.spacing
    dim = grid.dim
    grad = np.gradient(u, h, edge_order=2)
    H = np.empty((dim, dim) + grid.shape)
    for i in range(dim):
        second = np.gradient(grad[i], h, edge_order=2)
        for j in range(dim):
            H[i, j] = second[j]
    inner = (slice(1, -1),) * dim
    for i in range(dim):
        plus = tuple(slice(2, None) if e == i else slice(1, -1) for e in range(dim))
        minus = tuple(slice(None, -2) if e == i else slice(1, -1) for e in range(dim))
        H[i, i][inner] = (u[plus] - 2.0 * u[inner] + u[minus]) / h ** 2
    for i in range(dim):
        for j in range(i + 1, dim):
            sym = 0.5 * (H[i, j] + H[j, i])
            H[i, j] = sym
            H[j, i] = sym
    return H


def valid_mask(grid: GridDomain) -> np.ndarray:
    return grid.collar_mask(VALID_COLLAR)


@dataclass
class WeightedHessianField:
    """``g^(i,j) = (eps + |grad u|^2)^(k/2) |u_ij|`` for every pair, plus the aggregate.

    ``per_pair`` has shape ``(dim, dim, *grid.shape)`` and is symmetric in its
    first two axes. ``aggregate`` is the max over pairs, or the Frobenius-weighted
    field when ``matrix_norm == "frobenius"``.
    """

    per_pair: np.ndarray
    aggregate: np.ndarray
    k: float
    epsilon: float
    valid_mask: np.ndarray
    matrix_norm: str = "entrywise"

    def pair(self, i: int, j: int) -> np.ndarray:
        return self.per_pair[i, j]

    def scaled(self, factor: float) -> "WeightedHessianField":
        return WeightedHessianField(self.per_pair * factor, self.aggregate * factor, self.k,
                                    self.epsilon, self.valid_mask, self.matrix_norm)

    @classmethod
    def from_aggregate(cls, values: np.ndarray, mask: np.ndarray, k: float = 1.0,
                       epsilon: float = 0.0) -> "WeightedHessianField":
        """Wrap a bare scalar field (e.g. a synthetic or reloaded g) for the ladder."""
        values = np.asarray(values, dtype=float)
        return cls(values[None, None], values, k, epsilon, np.asarray(mask, dtype=bool), "aggregate")


def weighted_hessian(u: np.ndarray, grid: GridDomain, epsilon: float, k: float,
                     matrix_norm: str = "entrywise") -> WeightedHessianField:
    if epsilon < 0 or k <= 0:
        raise ValueError("need epsilon >= 0 and k > 0")
    grad = np.gradient(u, grid.spacing, edge_order=2)
    H = hessian_field(u, grid)
    weight = (epsilon + sum(gd * gd for gd in grad)) ** (k / 2.0)
    per_pair = weight * np.abs(H)
    if matrix_norm == "entrywise":
        aggregate = per_pair.max(axis=(0, 1))
    elif matrix_norm == "frobenius":
        aggregate = weight * np.sqrt(np.sum(H * H, axis=(0, 1)))
    else:
        raise ValueError(f"unknown matrix_norm {matrix_norm!r}")
    return WeightedHessianField(per_pair, aggregate, k, epsilon, valid_mask(grid), matrix_norm)


@dataclass(frozen=True)
class NormValue:
    q: float  # math.inf for the sup norm
    region: BallRegion
    value: float


def region_values(field: np.ndarray, region: BallRegion, grid: GridDomain,
                  mask: np.ndarray | None = None) -> np.ndarray:
    sel = ball_mask(grid, region)
    if mask is not None:
        sel &= mask
    if not sel.any():
        raise EmptyRegion(f"no valid nodes in ball of radius {region.radius} at {region.center}")
    vals = np.abs(np.asarray(field, dtype=float)[sel])
    if not np.all(np.isfinite(vals)):
        raise ValueError("field is not finite on the region")
    return vals


def log_power_sum(vals: np.ndarray, q: float, cell_volume: float) -> float:
    """``log(sum |v|^q * cell_volume) / q`` evaluated without overflow; ``-inf`` if all zero."""
    m = float(vals.max())
    if m == 0.0:
        return -np.inf
    if q > _LOG_SPACE_Q:
        s = np.sum((vals / m) ** q) * cell_volume
        return np.log(m) + np.log(s) / q
    return np.log(np.sum(vals ** q) * cell_volume) / q


def lq_norm(field: np.ndarray, region: BallRegion, q: float, grid: GridDomain,
            mask: np.ndarray | None = None) -> NormValue:
    """``(sum over ball nodes of |field|^q * cell volume)^(1/q)``, or the max for ``q = inf``.

    ``mask`` restricts the nodes further (normally the field's valid mask).
    """
    if not (q >= 1):
        raise ValueError(f"exponent must be >= 1 or inf, got {q}")
    vals = region_values(field, region, grid, mask)
    if np.isinf(q):
        return NormValue(np.inf, region, float(vals.max()))
    lv = log_power_sum(vals, q, grid.cell_volume)
    return NormValue(float(q), region, float(np.exp(lv)))
