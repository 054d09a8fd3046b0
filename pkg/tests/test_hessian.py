import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from plaplab.errors import EmptyRegion
from plaplab.grid import BallRegion, build_grid
from plaplab.hessian import (VALID_COLLAR, gradient_field, hessian_field, lq_norm, valid_mask,
                             weighted_hessian)
from plaplab.oracles import oracle_case, poisson_sine, tilted_sine

GRID = build_grid((-1.5, -1.5), (1.5, 1.5), 129, 2)


def test_affine_has_zero_hessian():
    g = build_grid((0, 0), (1, 1), 17, 2)
    u = 3 * g.coords[0] - 2 * g.coords[1] + 0.5
    w = weighted_hessian(u, g, 0.1, 1.0)
    assert np.max(np.abs(hessian_field(u, g))) < 1e-10
    assert np.max(w.aggregate) < 1e-10
    np.testing.assert_allclose(gradient_field(u, g)[0], 3.0)


def test_quadratic_examples():
    g = build_grid((-1, -1), (1, 1), 21, 2)
    x1, x2 = g.coords
    H = hessian_field(x1 ** 2, g)
    np.testing.assert_allclose(H[0, 0], 2.0, atol=1e-9)
    np.testing.assert_allclose(H[0, 1], 0.0, atol=1e-9)
    H = hessian_field(x1 * x2, g)
    np.testing.assert_allclose(H[0, 1], 1.0, atol=1e-9)
    np.testing.assert_allclose(H[1, 0], 1.0, atol=1e-9)
    np.testing.assert_allclose(H[0, 0], 0.0, atol=1e-9)
    w = weighted_hessian(x1 ** 2, g, 0.25, 2.0)
    np.testing.assert_allclose(w.aggregate, 2 * (0.25 + 4 * x1 ** 2), atol=1e-8)


@pytest.mark.parametrize("oracle", [poisson_sine, tilted_sine])
def test_hessian_second_order(oracle):
    errs = []
    for n in (33, 65, 129):
        g = build_grid((0, 0), (1, 1), n, 2)
        u = oracle()
        diff = hessian_field(u.value(g.coords), g) - u.hessian(g.coords)
        errs.append(np.max(np.abs(diff[:, :, valid_mask(g)])))
    orders = np.log2(np.array(errs[:-1]) / errs[1:])
    assert np.all(orders > 1.8), orders


def test_power_oracle_weighted_value():
    """p = 3, k = 1: (eps + u'^2)^(1/2) |u''| = 1/2 for the exact profile."""
    case = oracle_case("power", 3.0, 0.0, 129)
    w = weighted_hessian(case.exact.value(case.grid.coords), case.grid, 0.0, 1.0)
    away = (np.abs(case.grid.coords[0]) > 0.1) & w.valid_mask
    np.testing.assert_allclose(w.aggregate[away], 0.5, rtol=1e-2)


def test_power_solution_weighted_value(power3_129):
    case, _, result, w = power3_129
    assert result.converged
    away = (np.abs(case.grid.coords[0]) > 0.1) & w.valid_mask
    np.testing.assert_allclose(w.aggregate[away], 0.5, rtol=2e-2)


def test_frobenius_dominates_entrywise():
    g = build_grid((0, 0), (1, 1), 33, 2)
    u = tilted_sine().value(g.coords)
    a = weighted_hessian(u, g, 1e-3, 1.0).aggregate
    b = weighted_hessian(u, g, 1e-3, 1.0, matrix_norm="frobenius").aggregate
    assert np.all(b >= a - 1e-14)
    assert np.all(b <= 2 * a + 1e-14)
    with pytest.raises(ValueError):
        weighted_hessian(u, g, 1e-3, 1.0, matrix_norm="spectral")


def test_valid_mask_collar():
    g = build_grid((0, 0), (1, 1), 17, 2)
    m = valid_mask(g)
    assert not m[:VALID_COLLAR].any() and not m[:, -VALID_COLLAR:].any()
    assert m.sum() == (17 - 2 * VALID_COLLAR) ** 2


def test_lq_norm_of_constant():
    unit = BallRegion((0.0, 0.0), 1.0)
    val = lq_norm(np.full(GRID.shape, 2.0), unit, 2.0, GRID).value
    assert val == pytest.approx(2 * np.sqrt(np.pi), rel=0.03)
    assert lq_norm(np.full(GRID.shape, 2.0), unit, np.inf, GRID).value == 2.0


def test_lq_norm_against_quadrature():
    unit = BallRegion((0.0, 0.0), 1.0)
    exact, _ = integrate.dblquad(lambda y, x: abs(x), -1, 1, lambda x: -np.sqrt(1 - x * x),
                                 lambda x: np.sqrt(1 - x * x))
    assert exact == pytest.approx(4 / 3, rel=1e-8)
    assert lq_norm(np.abs(GRID.coords[0]), unit, 1.0, GRID).value == pytest.approx(exact, rel=0.03)


def test_sup_norm_is_max_over_ball():
    unit = BallRegion((0.0, 0.0), 1.0)
    f = GRID.coords[0] + 2 * GRID.coords[1]
    inside = GRID.coords[0] ** 2 + GRID.coords[1] ** 2 <= 1
    assert lq_norm(f, unit, np.inf, GRID).value == np.max(np.abs(f[inside]))


def test_empty_region():
    with pytest.raises(EmptyRegion):
        lq_norm(np.ones(GRID.shape), BallRegion((0.01, 0.01), 1e-4), 2.0, GRID)
    with pytest.raises(EmptyRegion):
        lq_norm(np.ones(GRID.shape), BallRegion((0.0, 0.0), 1.0), 2.0, GRID,
                mask=np.zeros(GRID.shape, bool))
    with pytest.raises(ValueError):
        lq_norm(np.ones(GRID.shape), BallRegion((0.0, 0.0), 1.0), 0.5, GRID)


def test_large_exponent_does_not_overflow():
    f = np.full(GRID.shape, 1e200)
    val = lq_norm(f, BallRegion((0.0, 0.0), 1.0), 400.0, GRID).value
    assert np.isfinite(val) and val == pytest.approx(1e200, rel=0.01)


fields = st.sampled_from(["sine", "gauss", "abs"])


def _field(kind):
    x1, x2 = GRID.coords
    if kind == "sine":
        return np.sin(3 * x1) * np.cos(2 * x2)
    if kind == "gauss":
        return np.exp(-(x1 - 0.2) ** 2 - 3 * x2 ** 2)
    return np.abs(x1 * x2) + 0.1


@settings(max_examples=25, deadline=None)
@given(fields, st.floats(0.2, 0.6), st.floats(0.05, 0.6), st.floats(1.0, 40.0))
def test_norm_monotone_in_region(kind, r1, dr, q):
    f = _field(kind)
    small = lq_norm(f, BallRegion((0.1, -0.1), r1), q, GRID).value
    large = lq_norm(f, BallRegion((0.1, -0.1), r1 + dr), q, GRID).value
    assert small <= large * (1 + 1e-12)


@settings(max_examples=25, deadline=None)
@given(fields, st.floats(0.3, 1.0), st.floats(1.0, 20.0), st.floats(1.0, 20.0))
def test_jensen_normalized_norms(kind, radius, q1, q2):
    q1, q2 = sorted((q1, q2))
    ball = BallRegion((0.0, 0.0), radius)
    f = _field(kind)
    inside = (GRID.coords[0] ** 2 + GRID.coords[1] ** 2 <= radius ** 2 * (1 + 1e-12))
    vol = inside.sum() * GRID.cell_volume
    a = lq_norm(f, ball, q1, GRID).value / vol ** (1 / q1)
    b = lq_norm(f, ball, q2, GRID).value / vol ** (1 / q2)
    assert a <= b * (1 + 1e-10)


def _blocks(values):
    """Piecewise-constant field on a 3 x 3 partition of [-1, 1]^2."""
    idx = [np.clip(np.floor((c + 1) * 1.5).astype(int), 0, 2) for c in GRID.coords]
    return np.asarray(values).reshape(3, 3)[idx[0], idx[1]]


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(0.1, 10.0), min_size=9, max_size=9), st.floats(200.0, 2000.0))
def test_large_q_approaches_sup(values, q):
    ball = BallRegion((0.0, 0.0), 1.0)
    f = _blocks(values)
    sup = lq_norm(f, ball, np.inf, GRID).value
    assert abs(lq_norm(f, ball, q, GRID).value - sup) <= 0.02 * sup


@settings(max_examples=20, deadline=None)
@given(st.floats(0.0, 0.5), st.floats(0.0, 0.5), st.floats(0.25, 3.0))
def test_weight_monotone_in_epsilon(e1, e2, k):
    e1, e2 = sorted((e1, e2))
    g = build_grid((0, 0), (1, 1), 33, 2)
    u = tilted_sine().value(g.coords)
    a = weighted_hessian(u, g, e1, k).aggregate
    b = weighted_hessian(u, g, e2, k).aggregate
    assert np.all(a <= b * (1 + 1e-12))


@settings(max_examples=20, deadline=None)
@given(st.floats(0.0, 0.5), st.floats(0.25, 3.0), st.floats(0.25, 3.0))
def test_k_identity(eps, k1, k2):
    g = build_grid((0, 0), (1, 1), 33, 2)
    u = poisson_sine().value(g.coords) + 0.3 * g.coords[0]
    grad = gradient_field(u, g)
    w1 = weighted_hessian(u, g, eps, k1)
    w2 = weighted_hessian(u, g, eps, k2)
    factor = (eps + np.sum(grad ** 2, axis=0)) ** ((k2 - k1) / 2)
    np.testing.assert_allclose(w2.per_pair, w1.per_pair * factor, rtol=1e-10, atol=1e-300)


def test_half_square_examples():
    g = build_grid((-1, -1), (1, 1), 41, 2)
    u = 0.5 * g.coords[0] ** 2
    H = hessian_field(u, g)
    np.testing.assert_allclose(H[0, 0], 1.0, atol=1e-9)
    np.testing.assert_allclose(H[1, 1], 0.0, atol=1e-9)
    np.testing.assert_allclose(gradient_field(u, g)[0][1:-1], g.coords[0][1:-1], atol=1e-12)
    w = weighted_hessian(u, g, 0.0, 1.0)
    np.testing.assert_allclose(w.pair(0, 0), np.abs(g.coords[0]), atol=1e-9)
    assert np.max(weighted_hessian(np.full(g.shape, 3.0), g, 0.2, 1.0).per_pair) == 0.0


def test_fractional_power_second_derivative():
    """(alpha - 1)|x1|^(alpha - 2) at x1 = 0.5 with alpha = 1.5."""
    errs = []
    for n in (33, 65, 129):
        g = build_grid((0, 0), (1, 1), n, 2)
        H = hessian_field(np.abs(g.coords[0]) ** 1.5 / 1.5, g)
        errs.append(abs(H[0, 0][(n - 1) // 2, 4] - 0.5 * 0.5 ** -0.5))
    assert errs[-1] < 1e-4
    assert 1.8 < np.log2(errs[0] / errs[1]) < 2.2


def test_sine_gradient_second_order():
    errs = []
    for n in (33, 65, 129):
        g = build_grid((0, 0), (1, 1), n, 2)
        d = gradient_field(np.sin(np.pi * g.coords[0]), g)[0]
        errs.append(np.max(np.abs(d - np.pi * np.cos(np.pi * g.coords[0]))))
    assert np.all(np.log2(np.array(errs[:-1]) / errs[1:]) > 1.8)


@settings(max_examples=15, deadline=None)
@given(st.floats(0.0, 0.5), st.floats(0.25, 3.0), st.sampled_from(["tilted", "sine"]))
def test_weighted_field_invariants(eps, k, kind):
    g = build_grid((0, 0, 0), (1, 1, 1), 9, 3) if kind == "sine" else build_grid((0, 0), (1, 1), 33, 2)
    u = (poisson_sine() if kind == "sine" else tilted_sine()).value(g.coords)
    w = weighted_hessian(u, g, eps, k)
    assert np.all(w.per_pair >= 0)
    np.testing.assert_array_equal(w.per_pair, np.swapaxes(w.per_pair, 0, 1))
    assert np.all(w.aggregate >= w.per_pair)
