"""Scalar ground states and the truncated test tuple.

The limit problem ``-Lap w + V_inf w = |w|^{2p-2} w`` is solved on a radial
grid; the invariant scalar problem with the trapping potential is the
``ell = 1`` instance of the pinwheel minimiser on a polar grid.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from math import pi
from types import SimpleNamespace

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import ConfigurationError, ConvergenceError, NonpositiveDenominator, OverlapError
from .functional import PinwheelEnergy
from .grid import ComponentField, PolarGrid, RadialGrid, sphere_area
from .potential import RadialPotential
from .solver import gaussian_bumps, minimize
from .symmetry import check_subcritical, chord, orbit_points


def _scalar_config(p, n=1):
    return SimpleNamespace(ell=1, n=n, p=float(p), beta=0.0)


def nehari_level(Q, P, p):
    """Energy ``(p-1)/(2p) t^2 Q`` of the Nehari rescaling ``t^{2p-2} = Q/P``."""
    return (p - 1) / (2 * p) * Q ** (p / (p - 1)) / P ** (1 / (p - 1))


@dataclass
class GroundState:
    """Least-energy scalar solution together with its energy.

    On a radial grid the profile can be evaluated at any radius through an
    even cubic spline (zero beyond ``R_max``).
    """

    field: ComponentField
    energy: float
    dim: int
    potential: object
    p: float
    report: object = None
    extra: dict = field(default_factory=dict)

    @property
    def grid(self):
        return self.field.grid

    @property
    def profile(self):
        return self.field.values

    @property
    def r(self):
        return self.grid.r

    def quadratic(self):
        E = PinwheelEnergy(self.grid, self.potential, self.p, 0.0, ell=1)
        return E.quadratic(self.profile)

    def self_term(self):
        return float(np.sum(self.grid.weights * np.abs(self.profile) ** (2 * self.p)))

    def _spline(self):
        if not isinstance(self.grid, RadialGrid):
            raise TypeError("only radial ground states can be evaluated off-grid")
        if "spline" not in self.extra:
            r = self.grid.r
            x = np.concatenate([-r[::-1], r, [self.grid.R_max]])
            y = np.concatenate([self.profile[::-1], self.profile, [0.0]])
            self.extra["spline"] = CubicSpline(x, y)
        return self.extra["spline"]

    def __call__(self, r):
        r = np.abs(np.asarray(r, dtype=float))
        out = self._spline()(np.minimum(r, self.grid.R_max))
        return np.where(r >= self.grid.R_max, 0.0, out)


def ground_state_radial(dim=2, V_const=1.0, p=2.0, Nr=1024, R_max=20.0, tol=1e-9,
                        max_iter=5000, initial=None):
    """Radial least-energy solution of ``-Lap w + V_const w = |w|^{2p-2} w``.

    Solved by Nehari-projected descent on a radial grid with measure
    ``|S^{dim-1}| r^{dim-1} dr``; ``dim = 1`` gives the even solution on the line.
    Raises ConvergenceError on budget exhaustion and NonpositiveDenominator
    for a zero initial guess.
    """
    if dim >= 3:
        check_subcritical(p, dim)
    elif not p > 1:
        raise ConfigurationError(f"p must exceed 1, got {p}")
    if not V_const > 0:
        raise ConfigurationError(f"V_const must be positive, got {V_const}")
    grid = RadialGrid(Nr, R_max, dim)
    V = RadialPotential(V_inf=V_const, profile="constant")
    if initial is None:
        initial = ComponentField(np.exp(-V_const * grid.r**2 / 2), grid)
    elif not isinstance(initial, ComponentField):
        initial = ComponentField(initial, grid)
    rep = minimize(_scalar_config(p), V, grid, initial, tol=tol, max_iter=max_iter, strict=True)
    return GroundState(rep.field, rep.energy, dim, V, float(p), rep)


def ground_state_Gn(V, n, p, grid, tol=None, max_iter=5000, ring_radii=(1.0, 2.0, 4.0),
                    c_inf=None):
    """Least-energy ``Z_n``-invariant solution of ``-Lap u + V u = |u|^{2p-2} u``.

    The ``ell = 1`` instance of :func:`minimize` on ``grid``, started from a
    centred bump and from n-bump rings at ``ring_radii``; the lowest converged
    energy wins. The starts tried are listed in ``extra['starts']``.
    """
    if not isinstance(grid, PolarGrid):
        raise ConfigurationError("ground_state_Gn needs a polar grid")
    if grid.n != n:
        raise ConfigurationError(f"grid period n={grid.n} does not match n={n}")
    cfg = _scalar_config(p, n)
    width = 1.0 / np.sqrt(V.V_inf)
    starts = [("centred", gaussian_bumps(grid, np.zeros((1, 2)), width))]
    for R in ring_radii:
        pts = orbit_points(R, 1, n)[0]
        starts.append((f"ring R={R:g}", gaussian_bumps(grid, pts, width)))
    best, tried = None, []
    for name, u0 in starts:
        rep = minimize(cfg, V, grid, ComponentField(u0, grid), tol=tol, max_iter=max_iter,
                       c_inf=c_inf)
        tried.append({"start": name, "energy": rep.energy, "status": rep.status})
        if rep.converged and (best is None or rep.energy < best[1].energy):
            best = (name, rep)
    if best is None:
        raise ConvergenceError("no start of the invariant scalar problem converged")
    name, rep = best
    return GroundState(rep.field, rep.energy, grid.dim, V, float(p), rep,
                       {"start": name, "starts": tried})


def cutoff(t, eps):
    """Quintic smoothstep: 1 on ``t <= 1 - eps``, 0 on ``t >= 1``, C^2 in between."""
    t = np.asarray(t, dtype=float)
    s = np.clip((1.0 - t) / eps, 0.0, 1.0)
    return s**3 * (10.0 - 15.0 * s + 6.0 * s**2)


def _radii(grid):
    return grid.r if isinstance(grid, RadialGrid) else grid.node_radius


def truncate(omega, r, eps, grid=None, center=None):
    """``omega_r(x) = chi(|x - center| / r) omega(|x - center|)`` on ``grid``.

    Vanishes for ``|x - center| >= r`` and equals ``omega`` for
    ``|x - center| <= (1 - eps) r``.
    """
    if not 0 < eps < 1:
        raise ValueError(f"eps must lie in (0, 1), got {eps}")
    if not r > 0:
        raise ValueError(f"r must be positive, got {r}")
    grid = grid or omega.grid
    if center is None:
        rho = _radii(grid)
        base = omega.profile if grid == omega.grid else omega(rho)
    else:
        x, y = grid.cartesian
        d2 = (x - center[0]) ** 2 + (y - center[1]) ** 2
        if grid.cylindrical:
            d2 = d2 + np.broadcast_to(grid._expand(grid.s, 2), grid.shape) ** 2
        rho = np.sqrt(d2)
        base = omega(rho)
    vals = np.where(rho >= r, 0.0, cutoff(rho / r, eps) * base)
    return ComponentField(vals, grid)


def default_eps(config, V):
    d = chord(config.ell * config.n)
    return (d - V.lam) / (2 * (d + V.lam))


def bump_radius_factor(config, V):
    """``rho = (d + lam) / 4`` with ``d = 2 sin(pi/(ell n))``."""
    return (chord(config.ell * config.n) + V.lam) / 4


def _shell_average(V, rho, R, dim, nphi=513):
    """Mean of ``V_inf - V(|x + R e|)`` over the sphere ``|x| = rho``."""
    phi = np.linspace(0.0, pi, nphi)
    wts = np.full(nphi, phi[1] - phi[0])
    wts[[0, -1]] *= 0.5
    wts *= np.sin(phi) ** (dim - 2)
    wts *= sphere_area(dim - 2) / sphere_area(dim - 1)
    dist = np.sqrt(np.maximum(rho[:, None] ** 2 + R**2 + 2 * R * rho[:, None] * np.cos(phi), 0.0))
    deficit = V.V_inf - np.asarray(V.evaluate(dist))
    return deficit @ wts


@dataclass
class TestTuple:
    """Truncated, Nehari-normalised pinwheel tuple of translated ground states."""

    __test__ = False

    R: float
    energy: float
    t_R: float
    radius: float
    eps: float
    field: ComponentField | None = None
    grid_energy: float | None = None
    overlap: np.ndarray | None = None


def build_test_tuple(R, config, omega, V, grid=None, eps=None):
    """Component 1 is ``t_R sum_j omega_{rho R}(. - R xi_j)`` over its n pinwheel points.

    The energy ``ell (p-1)/(2p) ||w_1||_V^2`` is evaluated in coordinates
    centred at each bump: on the radial grid of ``omega`` (the same
    discretisation as its energy) with the potential averaged over spheres.
    When ``grid`` is given the field is also sampled there; its grid energy and
    overlap matrix are reported and any nonzero coupling raises OverlapError.
    """
    if not R > 0:
        raise OverlapError(f"R must be positive, got {R}")
    p = omega.p
    eps = default_eps(config, V) if eps is None else eps
    radius = bump_radius_factor(config, V) * R
    if 2 * radius >= chord(config.ell * config.n) * R:
        raise OverlapError(f"balls of radius {radius:.4g} around the orbit points intersect")
    rg = omega.grid
    w = truncate(omega, radius, eps).values
    Einf = PinwheelEnergy(rg, V.V_inf * np.ones(rg.shape), p, 0.0, ell=1)
    deficit = float(np.sum(rg.weights * w**2 * _shell_average(V, rg.r, R, omega.dim)))
    Q = Einf.quadratic(w) - deficit
    P = Einf.self_term(w)
    if not P > 0:
        raise NonpositiveDenominator(P, "truncated profile vanishes")
    t_R = (Q / P) ** (1 / (2 * p - 2))
    energy = config.ell * config.n * nehari_level(Q, P, p)
    tt = TestTuple(float(R), float(energy), float(t_R), float(radius), float(eps))
    if grid is not None:
        u = np.zeros(grid.shape)
        for c in orbit_points(R, config.ell, config.n)[0]:
            u += truncate(omega, radius, eps, grid, center=c).values
        E = PinwheelEnergy.from_config(grid, V, config)
        O = E.overlap_matrix(u)
        if np.any(O != 0):
            raise OverlapError(f"test tuple components overlap on the grid at R={R}")
        Qg, Dg = E.nehari_terms(u)
        if not Dg > 0:
            raise OverlapError(f"test tuple does not fit on the grid at R={R}")
        u = u * (Qg / Dg) ** (1 / (2 * p - 2))
        tt.field = ComponentField(u, grid)
        tt.grid_energy = E.total(u)
        tt.overlap = O
    return tt


def gap_table(Rs, config, omega, V, c_inf=None):
    """Rows ``(R, E_R, gap, t_R)`` with ``gap = ell n c_inf - E_R``."""
    c_inf = omega.energy if c_inf is None else c_inf
    rows = []
    for R in Rs:
        tt = build_test_tuple(R, config, omega, V)
        rows.append((tt.R, tt.energy, config.ell * config.n * c_inf - tt.energy, tt.t_R))
    return rows


def decay_fit(samples, c_inf, config):
    """Least-squares decay rate of ``ell n c_inf - E_R`` against ``R``.

    ``samples`` holds ``(R, E_R)`` pairs. Raises ValueError with fewer than
    three samples or when some gap is not positive.
    """
    samples = [(float(a), float(b)) for a, b, *_ in samples]
    if len(samples) < 3:
        raise ValueError(f"decay_fit needs at least 3 samples, got {len(samples)}")
    R = np.array([s[0] for s in samples])
    gap = config.ell * config.n * c_inf - np.array([s[1] for s in samples])
    bad = np.flatnonzero(gap <= 0)
    if bad.size:
        raise ValueError(f"energy bound fails at R={R[bad[0]]:g} (gap {gap[bad[0]]:.3g})")
    slope, _ = np.polyfit(R, np.log(gap), 1)
    return float(-slope)
