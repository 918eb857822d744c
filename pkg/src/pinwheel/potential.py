"""Radial trapping potentials below their limit at infinity."""
from __future__ import annotations

from dataclasses import dataclass, field
from math import pi, sin

import numpy as np

from .symmetry import chord

PROFILES = ("exponential-well", "constant", "tabulated")


@dataclass(frozen=True)
class RadialPotential:
    """``V(|x|)`` with limit ``V_inf``.

    ``exponential-well``: ``V(r) = V_inf - C0 exp(-lam sqrt(V_inf) r)``.
    ``constant``: ``V = V_inf``.
    ``tabulated``: linear interpolation of ``samples = ((r0, V0), (r1, V1), ...)``,
    extended by ``V_inf`` beyond the last radius.
    ``C0``, ``lam`` and ``R0`` are the constants of the decay bound and are used
    by :func:`validate` for every profile.
    """

    V_inf: float = 1.0
    C0: float = 0.5
    lam: float = 1.0
    profile: str = "exponential-well"
    R0: float = 0.0
    samples: tuple = field(default=(), compare=True)

    def __post_init__(self):
        if self.profile not in PROFILES:
            raise ValueError(f"unknown profile {self.profile!r}; expected one of {PROFILES}")
        if self.profile == "tabulated" and len(self.samples) < 2:
            raise ValueError("tabulated profile needs at least two (r, V) samples")

    @classmethod
    def default(cls, ell, n, V_inf=1.0, C0=0.5):
        """Exponential well with ``lam = sin(pi/(ell n))``, half the admissible maximum."""
        return cls(V_inf=V_inf, C0=C0, lam=sin(pi / (ell * n)))

    @property
    def rate(self):
        """Decay rate ``lam * sqrt(V_inf)`` of ``V_inf - V``."""
        return self.lam * np.sqrt(self.V_inf)

    def evaluate(self, r):
        r = np.asarray(r, dtype=float)
        if np.any(r < 0):
            raise ValueError("potential evaluated at negative radius")
        if self.profile == "constant":
            out = np.full_like(r, self.V_inf)
        elif self.profile == "exponential-well":
            out = self.V_inf - self.C0 * np.exp(-self.rate * r)
        else:
            rs, vs = np.asarray(self.samples, dtype=float).T
            out = np.interp(r, rs, vs, right=self.V_inf)
        return out if out.ndim else float(out)

    __call__ = evaluate

    def bound(self, r):
        """The decay bound ``V_inf - C0 exp(-lam sqrt(V_inf) r)``."""
        return self.V_inf - self.C0 * np.exp(-self.rate * np.asarray(r, dtype=float))


def evaluate(V, r):
    return V.evaluate(r)


@dataclass
class Validation:
    ok: bool
    reasons: list

    def __bool__(self):
        return self.ok


def validate(V, ell, n, r_max=None, num=2001):
    """Check positivity, the exponential decay bound and the range of ``lam``.

    Returns a :class:`Validation` (truthy when every check passes) listing the
    failed conditions.
    """
    if not V.V_inf > 0:
        return Validation(False, [f"V_inf must be positive (got {V.V_inf})"])
    reasons = []
    r_max = r_max or max(50.0, 40.0 / max(V.rate, 1e-3))
    r = np.linspace(0.0, r_max, num)
    if V.profile == "tabulated":
        r = np.union1d(r, np.asarray(V.samples, dtype=float)[:, 0])
    vals = np.asarray(V.evaluate(r))
    if not np.min(vals) > 0:
        reasons.append(f"inf V = {np.min(vals):.6g} is not positive")
    if not V.C0 > 0:
        reasons.append(f"C0 must be positive (got {V.C0})")
    lam_max = chord(ell * n)
    if not 0 < V.lam < lam_max:
        reasons.append(f"lam = {V.lam:.6g} is outside (0, 2 sin(pi/(ell n))) = (0, {lam_max:.6g})")
    far = r >= V.R0
    excess = vals[far] - V.bound(r[far])
    if np.any(excess > 1e-12 * max(1.0, V.V_inf)):
        k = int(np.argmax(excess))
        reasons.append(
            f"V exceeds V_inf - C0 exp(-lam sqrt(V_inf) r) at r = {r[far][k]:.4g} "
            f"(by {excess[k]:.3g})"
        )
    return Validation(not reasons, reasons)
