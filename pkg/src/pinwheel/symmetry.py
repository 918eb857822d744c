"""Pinwheel group action: Z_{ln} rotations in the (x1, x2) plane.

Only the first component is ever stored. Component ``j + 1`` is the first
one composed with the rotation by ``2*pi*j/(l*n)``; on a uniform angular grid
covering one period ``[0, 2*pi/n)`` with ``M`` nodes that rotation is the index
shift ``j*M/l``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError


@dataclass(frozen=True)
class PinwheelConfig:
    """Problem instance: ``ell`` components, invariance order ``n``,
    ambient dimension ``dim``, exponent ``p`` and coupling ``beta``."""

    ell: int = 2
    n: int = 1
    dim: int = 2
    p: float = 2.0
    beta: float = -1.0

    def __post_init__(self):
        if int(self.ell) != self.ell or self.ell < 2:
            raise ConfigurationError(f"ell must be an integer >= 2, got {self.ell}")
        if int(self.n) != self.n or self.n < 1:
            raise ConfigurationError(f"n must be an integer >= 1, got {self.n}")
        if self.dim != 2 and (int(self.dim) != self.dim or self.dim < 4):
            raise ConfigurationError(f"dim must be 2 or an integer >= 4, got {self.dim}")
        if not self.beta < 0:
            raise ConfigurationError(f"beta must be negative, got {self.beta}")
        check_subcritical(self.p, self.dim)

    def with_beta(self, beta):
        return PinwheelConfig(self.ell, self.n, self.dim, self.p, beta)


def check_subcritical(p, dim):
    if not p > 1:
        raise ConfigurationError(f"p must exceed 1, got {p}")
    if dim >= 3 and not p < dim / (dim - 2):
        raise ConfigurationError(
            f"p={p} is not subcritical in dimension {dim} (need p < {dim / (dim - 2):.6g})"
        )


def chord(m):
    """Minimal chord ``2 sin(pi/m)`` between adjacent m-th roots of unity."""
    return 2.0 * np.sin(np.pi / m)


def component_shift(j, M, ell):
    """Angular index shift realizing the rotation that maps component 1 to j+1.

    >>> component_shift(1, 12, 2)
    6
    """
    if M % ell:
        raise ConfigurationError(f"angular node count M={M} is not divisible by ell={ell}")
    return (j * (M // ell)) % M


def shift_field(values, j, ell, axis=1):
    """Values of component ``j + 1`` given the values of component 1."""
    M = values.shape[axis]
    return np.roll(values, -component_shift(j, M, ell), axis=axis)


def all_components(values, ell, axis=1):
    return [shift_field(values, j, ell, axis) for j in range(ell)]


def orbit_points(R, ell, n):
    """The ``ell*n`` points ``R exp(2 pi i (i + ell j)/(ell n))`` grouped by component.

    Returns an array of shape ``(ell, n, 2)``; row ``i`` holds the n points
    attached to component ``i + 1``.
    """
    if not R > 0:
        raise ValueError(f"R must be positive, got {R}")
    i = np.arange(ell)[:, None]
    j = np.arange(n)[None, :]
    angles = 2.0 * np.pi * (i + ell * j) / (ell * n)
    return R * np.stack([np.cos(angles), np.sin(angles)], axis=-1)


def check_equivariance(fields):
    """Max deviation of a stored l-tuple from the pinwheel symmetry.

    ``fields`` is a sequence of ComponentField sharing one grid. The result is
    ``max_j max |u_{j+1} - u_1(rotated)|`` with the rotation applied as an
    exact index shift.
    """
    fields = list(fields)
    grid = fields[0].grid
    for f in fields[1:]:
        if f.grid is not grid and f.grid != grid:
            raise ConfigurationError("fields live on different grids")
    ell = len(fields)
    u1 = fields[0].values
    dev = 0.0
    for j in range(1, ell):
        dev = max(dev, float(np.max(np.abs(fields[j].values - shift_field(u1, j, ell)))))
    return dev
