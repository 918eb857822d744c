"""Nehari-projected gradient descent for the pinwheel energy."""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .errors import ConfigurationError, ConvergenceError, NonpositiveDenominator
from .functional import PinwheelEnergy, _arr
from .grid import ComponentField, PolarGrid
from .symmetry import orbit_points, shift_field

logger = logging.getLogger(__name__)

MAX_BACKTRACKS = 30
ARMIJO = 1e-4
SPLIT_FRACTION = 1e-2


@dataclass
class SolveReport:
    field: ComponentField
    energy: float
    nehari_residual: float
    grad_norm: float
    iterations: int
    energy_trace: list
    boundary_trace: list
    grad_trace: list
    radiality: float
    wall_time: float
    converged: bool
    status: str
    ell: int
    n: int
    p: float
    beta: float
    breakdown: object = None
    c_inf: float | None = None
    extra: dict = field(default_factory=dict)

    @property
    def component_energy(self):
        return self.energy / self.ell

    @property
    def threshold(self):
        """Splitting level ``ell * n * c_inf``."""
        return None if self.c_inf is None else self.ell * self.n * self.c_inf

    @property
    def margin(self):
        return None if self.c_inf is None else self.threshold - self.energy

    @property
    def certificate(self):
        """True when the energy is strictly below ``ell * n * c_inf``."""
        return None if self.c_inf is None else bool(self.energy < self.threshold)

    def to_dict(self):
        return {
            "status": self.status,
            "converged": self.converged,
            "ell": self.ell,
            "n": self.n,
            "p": self.p,
            "beta": self.beta,
            "energy": self.energy,
            "component_energy": self.component_energy,
            "nehari_residual": self.nehari_residual,
            "grad_norm": self.grad_norm,
            "iterations": self.iterations,
            "radiality": self.radiality,
            "wall_time": self.wall_time,
            "c_inf": self.c_inf,
            "threshold": self.threshold,
            "margin": self.margin,
            "certificate": self.certificate,
            "final_boundary_fraction": self.boundary_trace[-1] if self.boundary_trace else None,
            "breakdown": self.breakdown.to_dict() if self.breakdown is not None else None,
            **self.extra,
        }


def splitting_monitor(u1, grid=None, fraction_radius=None, p=2.0):
    """Fraction of ``int |u1|^{2p}`` carried by ``|x| > fraction_radius``."""
    grid = grid or u1.grid
    if fraction_radius is None:
        fraction_radius = 0.8 * grid.R_max
    if not 0 < fraction_radius < grid.R_max:
        raise ValueError("fraction_radius must lie in (0, R_max)")
    dens = grid.weights * np.abs(_arr(u1)) ** (2 * p)
    total = float(np.sum(dens))
    if total == 0:
        return 0.0
    return float(np.sum(dens[grid.node_radius > fraction_radius])) / total


def radiality_score(u1, grid=None):
    """Max over rings of the angular variance, normalised by ``max(u1)**2``.

    Zero iff ``u1`` is independent of the angle on the grid.
    """
    grid = grid or u1.grid
    u = _arr(u1)
    peak = float(np.max(np.abs(u)))
    if peak == 0 or u.ndim < 2:
        return 0.0
    return float(np.max(np.var(u, axis=1))) / peak**2


def gaussian_bumps(grid, centers, width=1.0):
    """Sum of Gaussians ``exp(-|x - c|^2 / (2 width^2))`` at planar centers."""
    x, y = grid.cartesian
    u = np.zeros(grid.shape)
    extra = 0.0
    if grid.cylindrical:
        extra = np.broadcast_to(grid._expand(grid.s, 2), grid.shape) ** 2
    for cx, cy in np.asarray(centers).reshape(-1, 2):
        u += np.exp(-((x - cx) ** 2 + (y - cy) ** 2 + extra) / (2 * width**2))
    return u


def initial_guess(config, V, grid, R_init=None, noise=0.0, seed=0):
    """Gaussian bumps of width ``1/sqrt(V_inf)`` at the component-1 pinwheel points.

    ``R_init`` defaults to ``R_max / 2``; ``R_init = 0`` gives a single centred
    (radial) bump. ``noise`` adds a seeded uniform perturbation relative to the
    bump height.
    """
    R_init = 0.5 * grid.R_max if R_init is None else R_init
    if R_init > 0:
        centers = orbit_points(R_init, config.ell, config.n)[0]
    else:
        centers = np.zeros((1, 2))
    u = gaussian_bumps(grid, centers, 1.0 / np.sqrt(V.V_inf))
    if noise:
        rng = np.random.default_rng(seed)
        u = u * (1.0 + noise * rng.uniform(-1.0, 1.0, size=u.shape))
    return ComponentField(u, grid)


class _Preconditioner:
    """Riesz map of the metric used for descent directions.

    ``"H1"``: ``<.,.>_V`` plus, for coupled problems, the frozen coupling
    potential ``|beta| sum_k |u_k|^p |u_1|^{p-2}`` (refreshed every
    ``refresh`` iterations); this keeps the step near 1 for large ``|beta|``.
    ``"L2"``: identity with the explicit step bound ``1/(max V + 4/dr^2)``.
    """

    def __init__(self, energy, metric, refresh=25):
        self.energy = energy
        self.metric = metric
        self.refresh = refresh
        grid = energy.grid
        self.shape = grid.shape
        self.W = grid.weights
        self.lu = None
        self.age = 0
        if metric == "H1":
            self.K0 = (grid.stiffness + sp.diags((grid.weights * energy.Vn).ravel())).tocsc()
            self.tau0 = 1.0
        elif metric == "L2":
            self.tau0 = 1.0 / (float(np.max(energy.Vn)) + 4.0 / grid.dr**2)
        else:
            raise ConfigurationError(f"unknown metric {metric!r}")

    def update(self, u, force=False):
        if self.metric != "H1":
            return
        E = self.energy
        coupled = E.ell > 1 and E.beta != 0
        if self.lu is not None and not force and (not coupled or self.age < self.refresh):
            self.age += 1
            return
        K = self.K0
        if coupled:
            up = np.abs(u) ** E.p
            others = sum(shift_field(up, j, E.ell) for j in range(1, E.ell))
            floor = 1e-3 * max(float(np.max(np.abs(u))), 1e-300)
            c = abs(E.beta) * others * np.maximum(np.abs(u), floor) ** (E.p - 2)
            K = (K + sp.diags((self.W * c).ravel())).tocsc()
        self.lu = splu(K)
        self.age = 0

    def __call__(self, g):
        if self.lu is None:
            return g
        return self.lu.solve((self.W * g).ravel()).reshape(self.shape)


def _cfg(config):
    return (config.ell, getattr(config, "n", 1), config.p, config.beta)


def minimize(config, V, grid, initial, tol=None, max_iter=5000, clamp=True,
             metric="H1", c_inf=None, fraction_radius=None, strict=False,
             energy=None, adaptive_step=True, callback=None):
    """Minimise the pinwheel energy over its Nehari set.

    Iterates ``u <- s_v v`` with ``v = clamp(u - tau d)``, where ``d`` is the
    gradient in the chosen metric (``"H1"``: Riesz representer for
    ``<.,.>_V``; ``"L2"``: nodal representer) and ``tau`` is found by halving
    until the Armijo test holds (plain nonincrease once the predicted decrease
    is at rounding level). Stops once the nodal gradient max norm
    drops below ``tol`` (default ``1e-6 sqrt(c_inf)``).

    ``callback(iteration, u)`` is called on every accepted iterate.

    Returns a :class:`SolveReport`. Raises NonpositiveDenominator if the initial
    field cannot be projected, and ConvergenceError on failure when ``strict``.
    """
    ell, n, p, beta = _cfg(config)
    E = energy or PinwheelEnergy(grid, V, p, beta, ell)
    u0 = _arr(initial).astype(float)
    if clamp:
        u0 = np.maximum(u0, 0.0)
    u = E.project(u0)
    scale = c_inf if c_inf is not None else max(E.component_energy(u), 1e-300)
    tol = 1e-6 * np.sqrt(scale) if tol is None else tol
    if fraction_radius is None:
        fraction_radius = 0.8 * grid.R_max
    P = _Preconditioner(E, metric)
    t0 = time.perf_counter()

    J = E.total(u)
    energies, boundary, grads = [J], [splitting_monitor(u, grid, fraction_radius, p)], []
    taus = []
    status, converged = "budget", False
    tau_prev = P.tau0
    it = 0
    while True:
        g = E.gradient(u)
        gmax = float(np.max(np.abs(g)))
        grads.append(gmax)
        if gmax < tol:
            status, converged = "converged", True
            break
        if it >= max_iter:
            break
        P.update(u)
        d = P(g)
        slope = E.pairing(g, d)
        tau = min(P.tau0, 2.0 * tau_prev) if adaptive_step else P.tau0
        accepted = False
        for _ in range(MAX_BACKTRACKS):
            v = u - tau * d
            if clamp:
                np.maximum(v, 0.0, out=v)
            try:
                w = E.project(v)
            except NonpositiveDenominator:
                tau *= 0.5
                continue
            Jw = E.total(w)
            # below ~1e-10 |J| the energy difference is rounding noise; fall back
            # to plain nonincrease within the line-search tolerance
            unresolved = tau * slope < 1e-10 * abs(J)
            if Jw <= J - ARMIJO * tau * slope or (unresolved and Jw <= J + 1e-12 * abs(J)):
                accepted = True
                break
            tau *= 0.5
        if not accepted:
            status = "stalled"
            break
        u, J, tau_prev = w, Jw, tau
        taus.append(tau)
        it += 1
        energies.append(J)
        boundary.append(splitting_monitor(u, grid, fraction_radius, p))
        if callback is not None:
            callback(it, u)

    if not converged and boundary[-1] > SPLIT_FRACTION:
        status = "splitting"
    report = SolveReport(
        field=ComponentField(u, grid),
        energy=J,
        nehari_residual=E.nehari_residual(u),
        grad_norm=grads[-1],
        iterations=it,
        energy_trace=energies,
        boundary_trace=boundary,
        grad_trace=grads,
        radiality=radiality_score(u, grid) if isinstance(grid, PolarGrid) else 0.0,
        wall_time=time.perf_counter() - t0,
        converged=converged,
        status=status,
        ell=ell, n=n, p=p, beta=beta,
        breakdown=E.breakdown(u),
        c_inf=c_inf,
        extra={"tol": tol, "metric": metric, "clamp": clamp, "tau_trace": taus},
    )
    logger.info("minimize beta=%g: %s after %d iterations, energy %.10g, |g|=%.3e",
                beta, status, it, J, gmax)
    if strict and not converged:
        raise ConvergenceError(f"minimize did not converge ({status})", report, beta)
    return report


def minimize_multistart(config, V, grid, R_inits, **kwargs):
    """Run :func:`minimize` from several initial radii and keep the best report.

    Converged runs beat unconverged ones; ties are broken by lower energy.

    Starts whose initial projection fails are skipped; the kept report lists
    the energies of all starts under ``extra['multistart']``.
    """
    noise = kwargs.pop("noise", 0.0)
    seed = kwargs.pop("seed", 0)
    best, tried = None, []
    for R0 in R_inits:
        init = initial_guess(config, V, grid, R0, noise=noise, seed=seed)
        try:
            rep = minimize(config, V, grid, init, **kwargs)
        except NonpositiveDenominator:
            tried.append({"R_init": R0, "energy": None})
            continue
        tried.append({"R_init": R0, "energy": rep.energy, "status": rep.status})
        if best is None or (rep.converged, -rep.energy) > (best.converged, -best.energy):
            best = rep
            best.extra["R_init"] = R0
    if best is None:
        raise NonpositiveDenominator(0.0, "no initial radius admits a Nehari projection")
    best.extra["multistart"] = tried
    return best


def continuation(config, V, grid, beta_schedule, tol=None, initial=None,
                 R_init=None, **kwargs):
    """Solve along a strictly monotone schedule of negative couplings.

    Each solve starts from the previous solution, re-projected onto the Nehari
    set of the new coupling. Errors carry the failing ``beta``.
    """
    betas = [float(b) for b in beta_schedule]
    if any(b >= 0 for b in betas):
        raise ConfigurationError("all couplings in the schedule must be negative")
    steps = np.diff(betas)
    if len(betas) > 1 and not (np.all(steps > 0) or np.all(steps < 0)):
        raise ConfigurationError("beta schedule must be strictly monotone")
    reports = []
    u = initial
    for b in betas:
        cfg = config.with_beta(b)
        if u is None:
            u = initial_guess(cfg, V, grid, R_init)
        try:
            rep = minimize(cfg, V, grid, u, tol=tol, **kwargs)
        except NonpositiveDenominator as exc:
            raise ConvergenceError(f"cannot project warm start at beta={b}: {exc}",
                                   beta=b) from exc
        except ConvergenceError as exc:
            exc.beta = b
            raise
        reports.append(rep)
        u = rep.field
    return reports
