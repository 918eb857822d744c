import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pinwheel.errors import ConfigurationError
from pinwheel.grid import (ComponentField, PolarGrid, RadialGrid, build_grid,
                           inner_product_V, integrate, laplacian, sphere_area)
from pinwheel.potential import RadialPotential
from pinwheel.symmetry import PinwheelConfig


def gaussian(grid, a=1.0):
    return ComponentField.from_function(grid, lambda x, y: np.exp(-a * (x**2 + y**2)))


def test_build_grid_shape():
    g = build_grid(64, 12, 12.0, PinwheelConfig())
    assert g.shape == (64, 12) and g.weights.size == 64 * 12


@pytest.mark.parametrize("args", [(64, 13, 12.0), (0, 12, 12.0), (64, 0, 12.0), (4, 12, 12.0),
                                  (64, 12, -1.0)])
def test_build_grid_rejects(args):
    with pytest.raises(ConfigurationError):
        build_grid(*args, PinwheelConfig())


def test_disk_area():
    g = PolarGrid(256, 12, 2.0)
    assert integrate(ComponentField(np.ones(g.shape), g)) == pytest.approx(4 * np.pi, rel=1e-2)


def test_gaussian_integral():
    g = PolarGrid(8192, 4, 8.0)
    assert integrate(gaussian(g)) == pytest.approx(np.pi, abs=1e-6)


def test_gaussian_integral_cylindrical():
    # int_{R^4} exp(-|x|^2) = pi^2
    g = PolarGrid(256, 4, 8.0, dim=4, Ns=256, S_max=8.0)
    f = ComponentField.from_function(g, lambda x, y, s: np.exp(-(x**2 + y**2 + s**2)))
    assert integrate(f) == pytest.approx(np.pi**2, rel=3e-4)


def test_integrate_zero_and_linearity(rng):
    g = PolarGrid(32, 12, 6.0)
    assert integrate(ComponentField.zeros(g)) == 0.0
    f = gaussian(g, 0.5)
    assert integrate(f * 2.0) == pytest.approx(2 * integrate(f), rel=1e-15)


def test_integrate_invariant_under_angular_shift(rng):
    g = PolarGrid(32, 12, 6.0)
    u = rng.standard_normal(g.shape)
    a = integrate(ComponentField(u, g))
    for k in range(1, 12):
        b = integrate(ComponentField(np.roll(u, k, axis=1), g))
        assert abs(a - b) <= 1e-13 * np.sum(np.abs(u) * g.weights)


def test_laplacian_of_constant_vanishes_inside():
    g = PolarGrid(64, 12, 6.0)
    L = laplacian(ComponentField(np.ones(g.shape), g)).values
    assert np.max(np.abs(L[:-1])) < 1e-10


def _laplacian_error(Nr, M):
    g = PolarGrid(Nr, M, 8.0)
    f = ComponentField.from_function(g, lambda x, y: np.exp(-(x**2 + y**2) / 2))
    r2 = g.node_radius**2
    exact = (r2 - 2) * np.exp(-r2 / 2)
    inner = g.r < 6.0
    return np.max(np.abs(laplacian(f).values - exact)[inner])


def test_laplacian_of_gaussian_second_order():
    e1, e2 = _laplacian_error(64, 8), _laplacian_error(128, 8)
    assert e1 < 2e-2
    assert 3.5 < e1 / e2 < 4.5


def _harmonic_errors(Nr, M, n):
    g = PolarGrid(Nr, M, 2.0, n=1)
    x, y = g.cartesian
    L = np.abs(laplacian(ComponentField(((x + 1j * y) ** n).real, g)).values)
    return np.max(L[g.r < 1.5]), np.max(L[(g.r > 0.5) & (g.r < 1.5)])


@pytest.mark.parametrize("n", [1, 2, 3])
def test_laplacian_harmonic_refinement(n):
    # refine r and theta together: second order away from the pole; the first
    # ring sees an O(dtheta^2 / r) angular error, so first order there
    coarse = _harmonic_errors(64, 32, n)
    fine = _harmonic_errors(128, 64, n)
    assert coarse[1] / fine[1] > 3.5
    assert coarse[0] / fine[0] > 1.8
    assert fine[1] < 0.1


def test_integration_by_parts_exact():
    g = PolarGrid(128, 24, 8.0)
    x, y = g.cartesian
    u = np.exp(-((x - 1) ** 2 + y**2))
    v = np.exp(-(x**2 + (y - 0.5) ** 2) / 2) * (1 + 0.3 * x)
    lhs = float(np.sum(g.weights * (-laplacian(ComponentField(u, g)).values) * v))
    rhs = g.dirichlet_form(u, v)
    assert abs(lhs - rhs) <= 1e-2 * abs(rhs)
    assert abs(lhs - rhs) <= 1e-12 * abs(rhs)


def test_inner_product_examples(rng):
    g = PolarGrid(32, 12, 6.0)
    V = RadialPotential.default(2, 1)
    u = ComponentField(rng.standard_normal(g.shape), g)
    v = ComponentField(rng.standard_normal(g.shape), g)
    assert inner_product_V(ComponentField.zeros(g), v, V) == 0.0
    assert inner_product_V(u, u, V) > 0
    assert inner_product_V(u, v, V) == inner_product_V(v, u, V)


@settings(max_examples=25, deadline=None)
@given(c=st.floats(-50, 50, allow_nan=False).filter(lambda c: abs(c) > 1e-3),
       seed=st.integers(0, 2**16))
def test_norm_is_two_homogeneous(c, seed):
    g = PolarGrid(16, 8, 5.0)
    V = RadialPotential.default(2, 1)
    u = np.random.default_rng(seed).standard_normal(g.shape)
    a = inner_product_V(ComponentField(u, g), ComponentField(u, g), V)
    b = inner_product_V(ComponentField(c * u, g), ComponentField(c * u, g), V)
    assert b == pytest.approx(c * c * a, rel=1e-13)


def test_radial_and_polar_agree_on_radial_fields():
    rg, pg = RadialGrid(64, 10.0), PolarGrid(64, 12, 10.0)
    prof = np.exp(-rg.r**2) * (1 + rg.r)
    up = np.repeat(prof[:, None], 12, axis=1)
    assert pg.dirichlet_form(up) == pytest.approx(rg.dirichlet_form(prof), rel=1e-13)
    assert np.sum(pg.weights) == pytest.approx(np.sum(rg.weights), rel=1e-13)


def test_sphere_area():
    assert sphere_area(0) == pytest.approx(2)
    assert sphere_area(1) == pytest.approx(2 * np.pi)
    assert sphere_area(2) == pytest.approx(4 * np.pi)


def test_field_validation(rng):
    g = PolarGrid(16, 8, 5.0)
    with pytest.raises(ConfigurationError):
        ComponentField(np.zeros((3, 3)), g)
    bad = np.zeros(g.shape)
    bad[0, 0] = np.nan
    with pytest.raises(ValueError):
        ComponentField(bad, g)


def test_stiffness_symmetric():
    g = PolarGrid(16, 8, 5.0, dim=4, Ns=8, S_max=5.0)
    A = g.stiffness
    assert abs(A - A.T).max() == 0
