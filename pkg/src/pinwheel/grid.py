"""Cell-centred polar (and cylindrical) grids with a finite-volume Laplacian.

Radial nodes sit at ``r_i = (i + 1/2) dr`` so no node lies on the pole; the
Dirichlet ghost node sits exactly at ``R_max``. The discrete Dirichlet form is
a sum over faces of ``c_f * (u_a - u_b)**2`` and the discrete Laplacian is
``-W^{-1} A u`` with ``A`` the matrix of that form, so discrete integration by
parts holds to rounding.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from math import gamma, pi

import numpy as np
import scipy.sparse as sp

from .errors import ConfigurationError


def sphere_area(m):
    """Surface measure of the unit sphere S^m in R^{m+1}."""
    return 2.0 * pi ** ((m + 1) / 2) / gamma((m + 1) / 2)


def _dirichlet_diff(N):
    # (D u)_i = u_{i+1} - u_i with the ghost value u_N = 0
    return sp.diags([-np.ones(N), np.ones(N - 1)], [0, 1], shape=(N, N), format="csr")


def _periodic_diff(N):
    D = sp.diags([-np.ones(N), np.ones(N - 1)], [0, 1], shape=(N, N), format="lil")
    D[N - 1, 0] += 1.0
    return D.tocsr()


class _FaceGrid:
    """Shared machinery: weights, faces, stiffness matrix."""

    shape: tuple

    @property
    def size(self):
        return int(np.prod(self.shape))

    def _faces(self):
        """List of ``(axis, coeff, kind)`` with kind 'dirichlet' or 'periodic'."""
        raise NotImplementedError

    def differences(self, u):
        for axis, coeff, kind in self._faces():
            if kind == "periodic":
                du = np.roll(u, -1, axis=axis) - u
            else:
                du = np.diff(u, axis=axis, append=np.zeros_like(np.take(u, [0], axis=axis)))
            yield coeff, du

    def dirichlet_form(self, u, v=None):
        """Sum over faces of ``c * du * dv`` (the discrete ``int grad u . grad v``)."""
        total = 0.0
        if v is None:
            for c, du in self.differences(u):
                total += float(np.sum(c * (du * du)))
            return total
        for (c, du), (_, dv) in zip(self.differences(u), self.differences(v)):
            total += float(np.sum(c * (du * dv)))
        return total

    @cached_property
    def stiffness(self):
        """Sparse symmetric matrix of the Dirichlet form on C-ordered node vectors."""
        A = sp.csr_matrix((self.size, self.size))
        for axis, coeff, kind in self._faces():
            mats = [sp.identity(k, format="csr") for k in self.shape]
            N = self.shape[axis]
            mats[axis] = _periodic_diff(N) if kind == "periodic" else _dirichlet_diff(N)
            D = mats[0]
            for m in mats[1:]:
                D = sp.kron(D, m, format="csr")
            A = A + D.T @ sp.diags(np.broadcast_to(coeff, self.shape).ravel()) @ D
        return A.tocsr()

    def apply_stiffness(self, u):
        return (self.stiffness @ u.ravel()).reshape(self.shape)

    @cached_property
    def measure(self):
        """Measure of the truncated domain (sum of weights)."""
        return float(np.sum(self.weights))


@dataclass(frozen=True, eq=True)
class RadialGrid(_FaceGrid):
    """Radial grid on [0, R_max) with measure ``|S^{dim-1}| r^{dim-1} dr``."""

    Nr: int
    R_max: float
    dim: int = 2

    def __post_init__(self):
        if self.Nr < 8:
            raise ConfigurationError(f"Nr must be >= 8, got {self.Nr}")
        if not self.R_max > 0:
            raise ConfigurationError(f"R_max must be positive, got {self.R_max}")
        if self.dim < 1:
            raise ConfigurationError(f"dim must be >= 1, got {self.dim}")

    @property
    def shape(self):
        return (self.Nr,)

    @property
    def dr(self):
        return self.R_max / (self.Nr + 0.5)

    @cached_property
    def r(self):
        return (np.arange(self.Nr) + 0.5) * self.dr

    @property
    def node_radius(self):
        return self.r

    @cached_property
    def weights(self):
        return sphere_area(self.dim - 1) * self.r ** (self.dim - 1) * self.dr

    def _faces(self):
        r_face = self.r + 0.5 * self.dr
        coeff = sphere_area(self.dim - 1) * r_face ** (self.dim - 1) / self.dr
        return [(0, coeff, "dirichlet")]


@dataclass(frozen=True, eq=True)
class PolarGrid(_FaceGrid):
    """Polar grid over one angular period ``[0, 2 pi/n)`` with ``M`` nodes.

    For ``dim >= 4`` a third axis ``s = |y|``, ``y in R^{dim-2}``, is added on
    ``[0, S_max)`` with measure ``|S^{dim-3}| s^{dim-3} ds``. Weights carry the
    full-circle multiplicity ``n``, so they integrate over all of R^dim.
    """

    Nr: int
    M: int
    R_max: float
    n: int = 1
    ell: int = 2
    dim: int = 2
    Ns: int = 0
    S_max: float = 0.0

    def __post_init__(self):
        if self.Nr < 8:
            raise ConfigurationError(f"Nr must be >= 8, got {self.Nr}")
        if self.M < 1:
            raise ConfigurationError(f"M must be positive, got {self.M}")
        if self.ell >= 1 and self.M % self.ell:
            raise ConfigurationError(f"M={self.M} is not divisible by ell={self.ell}")
        if not self.R_max > 0:
            raise ConfigurationError(f"R_max must be positive, got {self.R_max}")
        if self.n < 1:
            raise ConfigurationError(f"n must be >= 1, got {self.n}")
        if self.dim == 2:
            if self.Ns:
                raise ConfigurationError("the s-axis is only used for dim >= 4")
        elif self.dim >= 4:
            if self.Ns < 4 or not self.S_max > 0:
                raise ConfigurationError("dim >= 4 needs Ns >= 4 and S_max > 0")
        else:
            raise ConfigurationError(f"dim must be 2 or >= 4, got {self.dim}")

    @property
    def cylindrical(self):
        return self.dim >= 4

    @property
    def shape(self):
        if self.cylindrical:
            return (self.Nr, self.M, self.Ns)
        return (self.Nr, self.M)

    @property
    def dr(self):
        return self.R_max / (self.Nr + 0.5)

    @property
    def dtheta(self):
        return 2.0 * pi / (self.n * self.M)

    @property
    def ds(self):
        return self.S_max / (self.Ns + 0.5) if self.cylindrical else 0.0

    @cached_property
    def r(self):
        return (np.arange(self.Nr) + 0.5) * self.dr

    @cached_property
    def theta(self):
        return np.arange(self.M) * self.dtheta

    @cached_property
    def s(self):
        if not self.cylindrical:
            return None
        return (np.arange(self.Ns) + 0.5) * self.ds

    def _expand(self, a, axis):
        idx = [None] * len(self.shape)
        idx[axis] = slice(None)
        return a[tuple(idx)]

    @cached_property
    def _s_measure(self):
        if not self.cylindrical:
            return 1.0
        m = self.dim - 3
        return self._expand(sphere_area(m) * self.s**m * self.ds, 2)

    @cached_property
    def weights(self):
        w = self.n * self.dtheta * self._expand(self.r, 0) * self.dr * self._s_measure
        return np.broadcast_to(w, self.shape).copy()

    def _faces(self):
        r = self._expand(self.r, 0)
        r_face = r + 0.5 * self.dr
        faces = [(0, self.n * self.dtheta * r_face / self.dr * self._s_measure, "dirichlet")]
        if self.M > 1:
            faces.append((1, self.n * self.dr / (r * self.dtheta) * self._s_measure, "periodic"))
        if self.cylindrical:
            m = self.dim - 3
            s_face = self._expand(self.s + 0.5 * self.ds, 2)
            coeff = self.n * self.dtheta * r * self.dr * sphere_area(m) * s_face**m / self.ds
            faces.append((2, coeff, "dirichlet"))
        return faces

    @cached_property
    def cartesian(self):
        """Node coordinates ``(x1, x2)`` in the rotation plane, full shape."""
        r = self._expand(self.r, 0)
        th = self._expand(self.theta, 1)
        x = np.broadcast_to(r * np.cos(th), self.shape).copy()
        y = np.broadcast_to(r * np.sin(th), self.shape).copy()
        return x, y

    @cached_property
    def node_radius(self):
        """Euclidean norm ``|x|`` at every node."""
        r = np.broadcast_to(self._expand(self.r, 0), self.shape)
        if self.cylindrical:
            return np.sqrt(r**2 + self._expand(self.s, 2) ** 2)
        return r.copy()

    @property
    def rho(self):
        """Planar radius ``|z|`` at every node."""
        return np.broadcast_to(self._expand(self.r, 0), self.shape)


def build_grid(Nr, M, R_max, config, Ns=0, S_max=0.0):
    """Polar grid for a PinwheelConfig (cylindrical when ``config.dim >= 4``)."""
    if Nr <= 0 or M <= 0:
        raise ConfigurationError("grid sizes must be positive")
    if config.dim >= 4 and not Ns:
        Ns, S_max = Nr // 2, S_max or R_max
    return PolarGrid(Nr=Nr, M=M, R_max=R_max, n=config.n, ell=config.ell,
                     dim=config.dim, Ns=Ns, S_max=S_max)


@dataclass
class ComponentField:
    """Nodal values of one component on a grid."""

    values: np.ndarray
    grid: object

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != tuple(self.grid.shape):
            raise ConfigurationError(
                f"field shape {self.values.shape} does not match grid {self.grid.shape}"
            )
        if not np.all(np.isfinite(self.values)):
            raise ValueError("field has non-finite values")

    def __mul__(self, c):
        return ComponentField(self.values * c, self.grid)

    __rmul__ = __mul__

    @classmethod
    def zeros(cls, grid):
        return cls(np.zeros(grid.shape), grid)

    @classmethod
    def from_function(cls, grid, fn):
        """Sample ``fn(x1, x2[, s])`` (polar grid) or ``fn(r)`` (radial grid)."""
        if isinstance(grid, RadialGrid):
            return cls(fn(grid.r), grid)
        x, y = grid.cartesian
        if grid.cylindrical:
            s = np.broadcast_to(grid._expand(grid.s, 2), grid.shape)
            return cls(fn(x, y, s), grid)
        return cls(fn(x, y), grid)


def _values(f):
    return f.values if isinstance(f, ComponentField) else np.asarray(f, dtype=float)


def integrate(f, grid=None):
    """Quadrature of a field over R^dim (truncated at R_max)."""
    grid = grid or f.grid
    return float(np.sum(grid.weights * _values(f)))


def laplacian(f, grid=None):
    """Second-order finite-volume Laplacian with Dirichlet data at R_max."""
    grid = grid or f.grid
    vals = -grid.apply_stiffness(_values(f)) / grid.weights
    return ComponentField(vals, grid)


def inner_product_V(u, v, V, grid=None):
    """Discrete ``<u, v>_V = int grad u . grad v + V u v``.

    Bitwise symmetric in ``(u, v)``: each face contributes ``c * (du * dv)``.
    """
    grid = grid or u.grid
    uu, vv = _values(u), _values(v)
    Vn = V.evaluate(grid.node_radius) if hasattr(V, "evaluate") else np.asarray(V)
    return grid.dirichlet_form(uu, vv) + float(np.sum(grid.weights * Vn * (uu * vv)))
