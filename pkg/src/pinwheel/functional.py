"""Equivariant energy, its gradient and the Nehari scaling.

Every l-fold sum is evaluated through the first component: the quadratic and
self terms of all components are equal, and

    sum_{i != j} int |u_i|^p |u_j|^p = l * sum_{k != 1} int |u_1|^p |u_k|^p

because the quadrature weights are invariant under angular index shifts.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NonpositiveDenominator
from .grid import ComponentField
from .symmetry import shift_field


def _powabs(u, a):
    if a == 2:
        return u * u
    if a == 4:
        u2 = u * u
        return u2 * u2
    if a == 1:
        return np.abs(u)
    return np.abs(u) ** a


def _signed_pow(u, a):
    # |u|^{a-1} u, continuous at 0 for a > 0
    if a == 1:
        return u.copy()
    if a == 3:
        return u * u * u
    return np.sign(u) * np.abs(u) ** a


@dataclass
class EnergyBreakdown:
    total: float
    quadratic: list
    self_terms: list
    coupling: np.ndarray

    def to_dict(self):
        return {
            "total": self.total,
            "quadratic": list(map(float, self.quadratic)),
            "self_terms": list(map(float, self.self_terms)),
            "coupling": np.asarray(self.coupling).tolist(),
        }


class PinwheelEnergy:
    """Energy of the l-tuple generated by ``u1`` on a polar (or radial) grid.

    ``ell = 1`` gives the scalar functional ``J(u) = ||u||^2/2 - |u|_{2p}^{2p}/(2p)``.
    Methods take raw nodal arrays of ``grid.shape``.
    """

    def __init__(self, grid, V, p=2.0, beta=-1.0, ell=2):
        self.grid = grid
        self.p = float(p)
        self.beta = float(beta)
        self.ell = int(ell)
        self.V = V
        self.Vn = np.asarray(V.evaluate(grid.node_radius) if hasattr(V, "evaluate") else V,
                             dtype=float)
        self.Vn = np.broadcast_to(self.Vn, grid.shape)
        self.W = grid.weights

    @classmethod
    def from_config(cls, grid, V, config):
        return cls(grid, V, config.p, config.beta, config.ell)

    def components(self, u):
        if self.ell == 1:
            return [u]
        return [shift_field(u, j, self.ell) for j in range(self.ell)]

    def quadratic(self, u):
        """``||u||_V^2``."""
        return self.grid.dirichlet_form(u) + float(np.sum(self.W * self.Vn * (u * u)))

    def self_term(self, u):
        return float(np.sum(self.W * _powabs(u, 2 * self.p)))

    def coupling_row(self, u):
        """``[int |u_1|^p |u_k|^p for k = 2..l]``."""
        if self.ell == 1:
            return np.zeros(0)
        up = _powabs(u, self.p)
        return np.array([float(np.sum(self.W * up * shift_field(up, j, self.ell)))
                         for j in range(1, self.ell)])

    def coupling_sum(self, u):
        return float(np.sum(self.coupling_row(u)))

    def total(self, u):
        p = self.p
        return self.ell * (0.5 * self.quadratic(u) - self.self_term(u) / (2 * p)
                           - self.beta * self.coupling_sum(u) / (2 * p))

    __call__ = total

    def overlap_matrix(self, u):
        up = [_powabs(c, self.p) for c in self.components(u)]
        O = np.zeros((self.ell, self.ell))
        for i in range(self.ell):
            for j in range(i + 1, self.ell):
                O[i, j] = O[j, i] = float(np.sum(self.W * (up[i] * up[j])))
        return O

    def breakdown(self, u):
        Q, S = self.quadratic(u), self.self_term(u)
        return EnergyBreakdown(
            total=self.total(u),
            quadratic=[Q] * self.ell,
            self_terms=[S] * self.ell,
            coupling=self.overlap_matrix(u),
        )

    def gradient(self, u):
        """L2 representer of the partial derivative in the first component.

        ``(-Lap + V) u1 - |u1|^{2p-2} u1 - beta sum_{k != 1} |u_k|^p |u1|^{p-2} u1``.
        The derivative of the full energy along an equivariant direction ``v``
        is ``ell * sum(W * g * v)``.
        """
        p = self.p
        g = self.grid.apply_stiffness(u) / self.W + self.Vn * u - _signed_pow(u, 2 * p - 1)
        if self.ell > 1:
            up = _powabs(u, p)
            others = sum(shift_field(up, j, self.ell) for j in range(1, self.ell))
            g = g - self.beta * others * _signed_pow(u, p - 1)
        return g

    def pairing(self, g, v):
        """Derivative of the full energy along ``v`` given the representer ``g``."""
        return self.ell * float(np.sum(self.W * g * v))

    def nehari_terms(self, u):
        Q = self.quadratic(u)
        D = self.self_term(u) + self.beta * self.coupling_sum(u)
        return Q, D

    def nehari_scalar(self, u):
        if not np.any(u):
            raise NonpositiveDenominator(0.0, "the zero field has no Nehari scaling")
        Q = self.quadratic(u)
        P, C = self.self_term(u), self.coupling_sum(u)
        D = P + self.beta * C
        # a denominator at rounding level of its own terms counts as zero
        if not D > 1e-12 * (P + abs(self.beta) * C):
            raise NonpositiveDenominator(D)
        return (Q / D) ** (1.0 / (2 * self.p - 2))

    def project(self, u):
        return self.nehari_scalar(u) * u

    def nehari_residual(self, u):
        Q, D = self.nehari_terms(u)
        return abs(Q - D)

    def component_energy(self, u):
        return (self.p - 1) / (2 * self.p) * self.quadratic(u)


def _arr(u1):
    return u1.values if isinstance(u1, ComponentField) else np.asarray(u1, dtype=float)


def _energy(u1, config, V):
    return PinwheelEnergy.from_config(u1.grid, V, config)


def energy_J(u1, config, V):
    """Energy breakdown of the tuple generated by the ComponentField ``u1``."""
    return _energy(u1, config, V).breakdown(_arr(u1))


def gradient_J(u1, config, V):
    return ComponentField(_energy(u1, config, V).gradient(_arr(u1)), u1.grid)


def nehari_scalar(u1, config, V):
    """``s_u = (||u1||^2 / (int|u1|^{2p} + beta sum_k int |u1|^p |u_k|^p))^{1/(2p-2)}``.

    Raises NonpositiveDenominator when the bracketed denominator is <= 0.
    """
    return _energy(u1, config, V).nehari_scalar(_arr(u1))


def nehari_residual(u1, config, V):
    return _energy(u1, config, V).nehari_residual(_arr(u1))


def component_energy(u1, V, p=2.0):
    """``(p-1)/(2p) ||u1||_V^2``."""
    return PinwheelEnergy(u1.grid, V, p=p, ell=1).component_energy(_arr(u1))


def overlap(u1, config):
    """Overlap matrix ``O_ij = int |u_i|^p |u_j|^p`` and ``beta * O``."""
    E = PinwheelEnergy(u1.grid, np.zeros(u1.grid.shape), config.p, config.beta, config.ell)
    O = E.overlap_matrix(_arr(u1))
    return O, config.beta * O
