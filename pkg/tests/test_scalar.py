import functools

import numpy as np
import pytest
from scipy.integrate import quad, solve_ivp

from conftest import c_inf_fine, c_inf_grid, gn_state, problem
from pinwheel.errors import ConfigurationError, NonpositiveDenominator, OverlapError
from pinwheel.functional import PinwheelEnergy
from pinwheel.grid import ComponentField, PolarGrid, RadialGrid
from pinwheel.potential import RadialPotential
from pinwheel.scalar import (_scalar_config, build_test_tuple, cutoff, decay_fit, gap_table,
                             ground_state_Gn, ground_state_radial, truncate)
from pinwheel.solver import minimize
from pinwheel.symmetry import PinwheelConfig


def soliton(x):
    return np.sqrt(2.0) / np.cosh(np.clip(x, -700, 700))


@functools.lru_cache(maxsize=None)
def townes():
    """Shooting for the positive decaying solution of w'' + w'/r - w + w^3 = 0."""

    def rhs(r, y):
        return [y[1], -y[1] / r + y[0] - y[0] ** 3]

    def shoot(a, r_end=12.0):
        r0 = 1e-6
        y0 = [a + (a - a**3) * r0**2 / 4, (a - a**3) * r0 / 2]
        crossed = lambda r, y: y[0]
        crossed.terminal = True
        turned = lambda r, y: y[1]
        turned.terminal, turned.direction = True, 1
        return solve_ivp(rhs, (r0, r_end), y0, events=(crossed, turned), rtol=1e-12,
                         atol=1e-14, dense_output=True)

    lo, hi = 2.0, 2.4
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        sol = shoot(mid)
        if sol.t_events[0].size:
            hi = mid
        else:
            lo = mid
    sol = shoot(lo)
    # integrate up to the turning point; the remaining tail is below 1e-9
    r_stop = sol.t[-1]
    energy = 0.25 * 2 * np.pi * quad(lambda r: sol.sol(r)[0] ** 4 * r, 1e-6, r_stop,
                                     limit=400)[0]
    return lo, energy


@functools.lru_cache(maxsize=None)
def soliton_1d():
    return ground_state_radial(1, 1.0, 2.0, 1024, 20.0)


def test_soliton_oracle_value():
    val = quad(lambda x: soliton(x) ** 4 / 4, -np.inf, np.inf)[0]
    assert val == pytest.approx(4 / 3, abs=1e-12)


def test_soliton_energy():
    gs = soliton_1d()
    assert gs.energy == pytest.approx(4 / 3, abs=1e-3)
    assert gs.energy == pytest.approx(4 / 3, rel=1e-4)


def test_soliton_profile_and_ode():
    gs = soliton_1d()
    r = gs.r
    assert np.max(np.abs(gs.profile - soliton(r))) < 1e-3
    exact = soliton(r)
    res = gs.grid.apply_stiffness(exact) / gs.grid.weights + exact - exact**3
    # the analytic profile solves the discrete equation up to truncation error
    assert np.max(np.abs(res[r < 15])) < 1e-3
    w = gs.profile
    own = gs.grid.apply_stiffness(w) / gs.grid.weights + w - w**3
    assert np.max(np.abs(own)) < 1e-6


def test_townes_oracle():
    a, energy = townes()
    assert a == pytest.approx(2.2062, abs=1e-3)
    gs = c_inf_fine()
    assert gs.profile[0] == pytest.approx(a, rel=1e-3)
    assert gs.energy == pytest.approx(energy, rel=1e-3)


def test_refinement_2d():
    coarse, fine = (ground_state_radial(2, 1.0, 2.0, N, 14.0) for N in (256, 512))
    assert abs(coarse.energy - fine.energy) / fine.energy < 1e-3


def test_ground_state_invariants():
    gs = c_inf_fine()
    w = gs.profile
    assert np.all(w > 0)
    tail = gs.r > 2
    assert np.all(np.diff(w[tail]) < 0)
    Q, P = gs.quadratic(), gs.self_term()
    assert abs(Q - P) / Q < 1e-9
    assert gs.energy == pytest.approx(0.25 * Q, rel=1e-12)
    assert np.allclose(gs(gs.r), w, rtol=0, atol=1e-14)
    assert gs(25.0) == 0.0


def test_zero_guess_raises():
    with pytest.raises(NonpositiveDenominator):
        ground_state_radial(2, 1.0, 2.0, 64, 10.0, initial=np.zeros(64))


def test_bad_parameters():
    with pytest.raises(ConfigurationError):
        ground_state_radial(3, 1.0, 3.0, 64, 10.0)
    with pytest.raises(ConfigurationError):
        ground_state_radial(2, 1.0, 1.0, 64, 10.0)
    with pytest.raises(ConfigurationError):
        ground_state_radial(2, 0.0, 2.0, 64, 10.0)


def test_amplitude_does_not_matter():
    g = RadialGrid(96, 12.0)
    V = RadialPotential(V_inf=1.0, profile="constant")
    u = np.exp(-g.r**2)
    e = [minimize(_scalar_config(2.0), V, g, ComponentField(s * u, g), tol=1e-8).energy
         for s in (1.0, 2.0)]
    assert e[0] == pytest.approx(e[1], rel=1e-9)


def test_constant_potential_gn_matches_radial():
    # coarse angular grids under-resolve off-centre bumps far from the pole and
    # produce spuriously low energies, so the default angular resolution is used
    grid = PolarGrid(128, 128, 14.0, n=1, ell=1)
    V = RadialPotential(V_inf=1.0, profile="constant")
    gs = ground_state_Gn(V, 1, 2.0, grid, tol=1e-7, ring_radii=(2.0,), max_iter=1500)
    assert gs.energy == pytest.approx(c_inf_grid().energy, rel=1e-3)
    for s in gs.extra["starts"]:
        assert s["energy"] == pytest.approx(c_inf_grid().energy, rel=1e-3)
    assert {s["start"] for s in gs.extra["starts"]} == {"centred", "ring R=2"}


def test_gn_grid_checks():
    V = RadialPotential.default(2, 1)
    with pytest.raises(ConfigurationError):
        ground_state_Gn(V, 2, 2.0, PolarGrid(32, 16, 8.0, n=1))
    with pytest.raises(ConfigurationError):
        ground_state_Gn(V, 1, 2.0, RadialGrid(32, 8.0))


@pytest.mark.parametrize("n", [1, 2])
def test_well_lowers_invariant_energy(n):
    gs = gn_state(n)
    assert gs.report.converged
    assert gs.energy < n * c_inf_grid().energy


def test_cutoff_shape():
    t = np.linspace(0, 1.2, 241)
    c = cutoff(t, 0.25)
    assert np.all(c[t <= 0.75] == 1.0) and np.all(c[t >= 1.0] == 0.0)
    assert np.all(np.diff(c) <= 0)


def test_truncate_examples():
    om = c_inf_fine()
    r, eps = 6.0, 0.3
    t = truncate(om, r, eps).values
    assert np.all(t[om.r >= r] == 0.0)
    inside = om.r <= (1 - eps) * r
    assert np.array_equal(t[inside], om.profile[inside])
    far = truncate(om, 19.0, eps).values
    W = om.grid.weights
    assert np.sum(W * (far - om.profile) ** 2) < 1e-8 * np.sum(W * om.profile**2)
    with pytest.raises(ValueError):
        truncate(om, r, 1.0)
    with pytest.raises(ValueError):
        truncate(om, 0.0, eps)


def test_truncate_monotone_in_radius():
    om = c_inf_fine()
    W = om.grid.weights
    errs = [np.sum(W * (truncate(om, r, 0.25).values - om.profile) ** 2) for r in (3, 5, 8, 12)]
    assert all(a >= b for a, b in zip(errs, errs[1:]))


def test_test_tuple_is_weak_partition():
    cfg, V, g = problem(1)
    tt = build_test_tuple(7.0, cfg, c_inf_fine(), V, grid=g)
    off = tt.overlap - np.diag(np.diag(tt.overlap))
    assert np.all(off == 0.0)
    E = PinwheelEnergy.from_config(g, V, cfg)
    Q, P = E.quadratic(tt.field.values), E.self_term(tt.field.values)
    assert abs(Q - P) / Q < 1e-12
    assert tt.grid_energy == pytest.approx(cfg.ell * 0.25 * Q, rel=1e-12)


def test_t_R_tends_to_one():
    cfg, V, _ = problem(1)
    dev = [abs(build_test_tuple(R, cfg, c_inf_fine(), V).t_R - 1) for R in (8, 10, 12)]
    assert dev[0] > dev[1] > dev[2]


def test_test_tuple_errors():
    cfg, V, _ = problem(1)
    with pytest.raises(OverlapError):
        build_test_tuple(0.0, cfg, c_inf_fine(), V)


def test_gap_table_rows():
    cfg, V, _ = problem(1)
    rows = gap_table([8.0, 10.0], cfg, c_inf_fine(), V)
    c = c_inf_fine().energy
    for R, E, gap, t in rows:
        assert gap == pytest.approx(2 * c - E)


def test_decay_fit_synthetic():
    cfg = PinwheelConfig(2, 1, 2, 2.0, -1.0)
    c = 5.0
    samples = [(R, 2 * c - np.exp(-0.7 * R)) for R in (8.0, 10.0, 12.0, 14.0)]
    assert decay_fit(samples, c, cfg) == pytest.approx(0.7, abs=1e-6)
    with pytest.raises(ValueError):
        decay_fit(samples[:2], c, cfg)
    with pytest.raises(ValueError, match="R=10"):
        decay_fit([samples[0], (10.0, 2 * c + 1e-3), samples[2]], c, cfg)
