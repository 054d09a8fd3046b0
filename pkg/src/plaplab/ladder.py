"""Moser-type norm ladder on shrinking concentric balls.

Schedule (s = 1/k, S = Sobolev exponent, or r when n = 2):

    q_0 = s,  q_{i+1} = (S/nu) q_i + s,  h_i = R'(1 + 2^-i),  p_{i+1} = S q_i = nu (q_{i+1} - s)

Each step compares ||g||_{L^{S q}(B_h')} ^ q against
(q / (h - h')) ||g||_{L^{nu(q - s)}(B_h)} ^ (q - s); the ratio is the measured
effective constant.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import DegenerateStep, InvalidConfig, RegionOutsideMask
from .grid import BallRegion, GridDomain, ball_mask, shrinking_radius
from .hessian import WeightedHessianField, log_power_sum, region_values

DEFAULT_P_CAP = 512.0
_IDENTITY_RTOL = 1e-12


@dataclass(frozen=True)
class LadderConfig:
    k: float
    nu: float
    sobolev_exponent: float
    R_prime: float
    steps: int
    center: tuple[float, ...]
    p_cap: float = DEFAULT_P_CAP

    def __post_init__(self):
        if not self.k > 0:
            raise InvalidConfig("k must be positive")
        if not self.nu < self.sobolev_exponent:
            raise InvalidConfig(f"nu={self.nu} must be below the Sobolev exponent {self.sobolev_exponent}")
        if not self.nu > 0:
            raise InvalidConfig("nu must be positive")
        if not self.R_prime > 0:
            raise InvalidConfig("R_prime must be positive")
        if self.steps < 1:
            raise InvalidConfig("steps must be >= 1")
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))

    @property
    def s_hat(self) -> float:
        return 1.0 / self.k

    @property
    def ratio(self) -> float:
        return self.sobolev_exponent / self.nu


@dataclass(frozen=True)
class LadderStep:
    i: int
    q: float
    h: float
    p: float  # p_i = nu (q_i - s); zero at i = 0


def ladder_sequences(config: LadderConfig) -> list[LadderStep]:
    """Schedule entries for i = 0..steps, checked against the closed form."""
    s = config.s_hat
    ratio = config.ratio
    out = []
    q = s
    for i in range(config.steps + 1):
        if i > 0:
            q_prev = q
            q = ratio * q_prev + s
        closed = s * sum(ratio ** j for j in range(i + 1))
        if not math.isclose(q, closed, rel_tol=_IDENTITY_RTOL):
            raise ArithmeticError(f"recurrence {q!r} and closed form {closed!r} disagree at i={i}")
        p = config.nu * (q - s)
        if i > 0 and not math.isclose(p, config.sobolev_exponent * q_prev, rel_tol=_IDENTITY_RTOL):
            raise ArithmeticError(f"p_{i} identity violated")
        out.append(LadderStep(i, q, shrinking_radius(config.R_prime, i), p))
    return out


def _field_of(g: WeightedHessianField, pair) -> np.ndarray:
    return g.aggregate if pair is None else g.pair(*pair)


def _check_inside(region: BallRegion, g: WeightedHessianField, grid: GridDomain):
    inside = ball_mask(grid, region)
    if np.any(inside & ~g.valid_mask) or not region.inside_box(grid):
        raise RegionOutsideMask(f"ball of radius {region.radius} at {region.center} leaves the valid region")


def _log_norm(values, region, exponent, grid, g):
    vals = region_values(values, region, grid, g.valid_mask)
    return log_power_sum(vals, exponent, grid.cell_volume)


def verify_step(g: WeightedHessianField, q: float, h: float, h_prime: float, config: LadderConfig,
                grid: GridDomain, pair=None) -> float:
    """Effective constant of one ladder step.

    C = ||g||_{S q, B_h'}^q (h - h') / (q ||g||_{nu (q - s), B_h}^(q - s)),
    with the convention x^0 = 1 for the base step q = s.
    """
    s = config.s_hat
    if not h_prime < h:
        raise ValueError("need h' < h")
    if q < s * (1 - 1e-12):
        raise ValueError(f"q={q} below s={s}")
    inner = BallRegion(config.center, h_prime)
    outer = BallRegion(config.center, h)
    _check_inside(outer, g, grid)
    values = _field_of(g, pair)
    log_num = q * _log_norm(values, inner, config.sobolev_exponent * q, grid, g)
    power = q - s
    if power <= 1e-12 * q:
        log_den = 0.0
    else:
        log_den = power * _log_norm(values, outer, config.nu * power, grid, g)
    if np.isneginf(log_num):
        if np.isneginf(log_den) or log_den == 0.0:
            return 0.0
    if np.isneginf(log_den):
        raise DegenerateStep("denominator norm vanishes while the numerator does not")
    return float(np.exp(log_num - log_den + math.log(h - h_prime) - math.log(q)))


@dataclass
class StepRecord:
    i: int
    q: float
    h: float
    h_next: float
    p_next: float
    norm_next: float  # ||g||_{L^{p_next}(B_{h_next})}
    c_eff: float


@dataclass
class LadderReport:
    steps: list[StepRecord]
    ladder_limit: float
    direct_sup: float
    gap: float
    truncated: bool
    config: dict = field(default_factory=dict)

    @property
    def max_c_eff(self) -> float:
        return max((s.c_eff for s in self.steps), default=float("nan"))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["max_c_eff"] = self.max_c_eff
        return d


def run_ladder(g: WeightedHessianField, config: LadderConfig, grid: GridDomain, pair=None) -> LadderReport:
    """Walk the schedule until ``steps`` or until p would exceed ``p_cap``."""
    _check_inside(BallRegion(config.center, 2.0 * config.R_prime), g, grid)
    values = _field_of(g, pair)
    schedule = ladder_sequences(config)
    records = []
    truncated = False
    for cur, nxt in zip(schedule[:-1], schedule[1:]):
        if nxt.p > config.p_cap:
            truncated = True
            break
        c_eff = verify_step(g, cur.q, cur.h, nxt.h, config, grid, pair)
        norm = math.exp(_log_norm(values, BallRegion(config.center, nxt.h), nxt.p, grid, g))
        records.append(StepRecord(cur.i, cur.q, cur.h, nxt.h, nxt.p, norm, c_eff))
    sup = float(region_values(values, BallRegion(config.center, config.R_prime), grid, g.valid_mask).max())
    limit = records[-1].norm_next if records else float("nan")
    gap = abs(limit - sup) / sup if sup > 0 else (0.0 if limit == 0 else float("inf"))
    return LadderReport(records, limit, sup, gap, truncated, asdict(config))
