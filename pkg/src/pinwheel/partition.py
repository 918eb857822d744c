"""Segregation diagnostics: support partitions, interfaces, sign-changing map."""
from __future__ import annotations

from dataclasses import dataclass, field
from types import SimpleNamespace

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .errors import ConfigurationError
from .functional import PinwheelEnergy, _arr, _signed_pow
from .grid import ComponentField
from .symmetry import shift_field


@dataclass
class PartitionResult:
    """Support masks of the components and their per-set energies.

    ``labels`` is 0 off the partition and ``j + 1`` on the mask of component
    ``j + 1``. ``contested`` counts nodes where two components both exceed
    the threshold; such nodes go to the larger component.
    """

    masks: list
    labels: np.ndarray
    coverage: float
    violations: int
    contested: int
    energies: list
    interface: np.ndarray
    threshold: float

    def to_dict(self):
        return {
            "coverage": self.coverage,
            "violations": self.violations,
            "contested": self.contested,
            "energies": list(map(float, self.energies)),
            "interface_nodes": int(np.sum(self.interface)),
            "threshold": self.threshold,
        }


def _neighbours(a, grid, fill):
    """Yield ``(axis, direction, shifted)`` with ``shifted[x] = a[x + direction e_axis]``."""
    periodic = {1} if a.ndim >= 2 else set()
    for axis in range(a.ndim):
        for step in (1, -1):
            if axis in periodic:
                yield axis, step, np.roll(a, -step, axis=axis)
                continue
            b = np.full_like(a, fill)
            src = [slice(None)] * a.ndim
            dst = [slice(None)] * a.ndim
            if step == 1:
                src[axis], dst[axis] = slice(1, None), slice(None, -1)
            else:
                src[axis], dst[axis] = slice(None, -1), slice(1, None)
            b[tuple(dst)] = a[tuple(src)]
            yield axis, step, b


def _spacing(grid, axis):
    if axis == 0:
        return grid.dr
    if axis == 1:
        return grid.rho * grid.dtheta
    return grid.ds


def extract_partition(u1, config, threshold=1e-3, V=None):
    """Partition of the grid into the supports ``{u_j > threshold * max u_1}``.

    Nodes claimed by several components go to the strictly largest one (and
    to none on exact ties), so the masks are pairwise disjoint and are exact
    index rotations of the first. ``energies`` holds the Nehari level of
    ``u_1`` restricted to its mask (needs ``V``; NaN otherwise).
    """
    if not threshold > 0:
        raise ValueError(f"threshold must be positive, got {threshold}")
    u = _arr(u1)
    grid = u1.grid
    ell = config.ell
    peak = float(np.max(u))
    if not peak > 0 or threshold >= 1:
        raise ValueError(f"empty support: threshold {threshold} is not below max u1")
    cut = threshold * peak
    comps = [shift_field(u, j, ell) for j in range(ell)]
    others = np.max(comps[1:], axis=0)
    raw1 = u > cut
    mask1 = raw1 & (u > others)
    if not mask1.any():
        raise ValueError("empty support for the first component")
    masks = [shift_field(mask1, j, ell) for j in range(ell)]
    raw = [shift_field(raw1, j, ell) for j in range(ell)]
    claimed = np.sum(raw, axis=0)
    contested = int(np.sum(claimed >= 2))
    count = np.sum(masks, axis=0)
    violations = int(np.sum(count >= 2))
    labels = np.zeros(u.shape, dtype=np.int64)
    for j, m in enumerate(masks):
        labels[m] = j + 1
    union = count > 0
    coverage = float(np.sum(grid.weights[union]) / grid.measure)

    energies = [float("nan")] * ell
    if V is not None:
        E = PinwheelEnergy(grid, V, config.p, 0.0, ell=1)
        v = np.where(mask1, u, 0.0)
        Q, P = E.quadratic(v), E.self_term(v)
        level = (config.p - 1) / (2 * config.p) * Q ** (config.p / (config.p - 1)) \
            / P ** (1 / (config.p - 1))
        energies = [level] * ell

    interface = _interface_nodes(labels, grid)
    return PartitionResult(masks, labels, coverage, violations, contested, energies,
                           interface, float(threshold))


def _interface_nodes(labels, grid):
    """Nodes whose closed neighbourhood meets at least two distinct labels."""
    ell_max = int(labels.max())
    seen = np.zeros((ell_max,) + labels.shape, dtype=bool)
    for j in range(1, ell_max + 1):
        seen[j - 1] |= labels == j
        for _, _, nb in _neighbours(labels, grid, 0):
            seen[j - 1] |= nb == j
    return np.sum(seen, axis=0) >= 2


@dataclass
class InterfaceReport:
    """Per-interface-node one-sided gradient magnitudes.

    ``grad_a``/``grad_b`` are the gradients of the two dominant neighbouring
    components, each estimated with first-order differences into its own
    support; ``mismatch = |grad_a - grad_b|``.
    """

    nodes: np.ndarray
    labels: np.ndarray
    grad_a: np.ndarray
    grad_b: np.ndarray
    mismatch: np.ndarray
    summary: dict = field(default_factory=dict)

    def to_rows(self):
        return [
            (*map(int, idx), int(la), int(lb), float(ga), float(gb), float(m))
            for idx, (la, lb), ga, gb, m in zip(self.nodes, self.labels, self.grad_a,
                                                 self.grad_b, self.mismatch)
        ]


def _one_sided_gradient(comp, mask, grid):
    """Magnitude of the gradient of ``comp`` using differences into ``mask``.

    Along each axis the forward neighbour is used when it lies in ``mask``,
    otherwise the backward one; axes with no neighbour in ``mask`` contribute 0.
    """
    vals = {(a, s): b for a, s, b in _neighbours(comp, grid, 0.0)}
    sq = np.zeros(comp.shape)
    for axis in range(comp.ndim):
        h = _spacing(grid, axis)
        comp_sq = np.zeros(comp.shape)
        found = np.zeros(comp.shape, dtype=bool)
        for a, s, nb_mask in _neighbours(mask, grid, False):
            if a != axis:
                continue
            use = nb_mask & ~found
            comp_sq = np.where(use, ((vals[(a, s)] - comp) / h) ** 2, comp_sq)
            found |= nb_mask
        sq += comp_sq
    return np.sqrt(sq)


def interface_diagnostics(u1, config, result):
    """One-sided gradient magnitudes on both sides of every interface node."""
    grid = u1.grid
    u = _arr(u1)
    comps = [shift_field(u, j, config.ell) for j in range(config.ell)]
    nodes = np.argwhere(result.interface)
    if nodes.size == 0:
        empty = np.zeros(0)
        return InterfaceReport(nodes, np.zeros((0, 2), dtype=int), empty, empty, empty,
                               {"count": 0})
    grads = np.array([_one_sided_gradient(c, m, grid) for c, m in zip(comps, result.masks)])
    # the two components present in each node's neighbourhood with the largest values
    present = np.zeros((config.ell,) + u.shape, dtype=bool)
    for j in range(config.ell):
        present[j] = result.labels == j + 1
        for _, _, nb in _neighbours(result.labels, grid, 0):
            present[j] |= nb == j + 1
    vals = np.where(present, np.array(comps), -np.inf)
    order = np.argsort(-vals, axis=0)
    idx = tuple(nodes.T)
    la, lb = order[0][idx], order[1][idx]
    ga = np.take_along_axis(grads, order[:1], 0)[0][idx]
    gb = np.take_along_axis(grads, order[1:2], 0)[0][idx]
    mismatch = np.abs(ga - gb)
    gall = np.concatenate([ga, gb])
    summary = {
        "count": int(len(nodes)),
        "median_gradient": float(np.median(gall)),
        "median_mismatch": float(np.median(mismatch)),
        "q90_mismatch": float(np.quantile(mismatch, 0.9)),
        "relative_median_mismatch": float(np.median(mismatch) / max(np.median(gall), 1e-300)),
    }
    return InterfaceReport(nodes, np.stack([la + 1, lb + 1], axis=1), ga, gb, mismatch, summary)


def segregation_trace(reports, threshold=1e-3):
    """Overlap and scaled overlap along a coupling schedule.

    Returns ``{"rows": [...], "overlap_decreasing": ..., "scaled_decreasing": ...}``
    with one row per report; the trend flags are None for a single report.
    """
    rows = []
    for rep in reports:
        cfg = SimpleNamespace(ell=rep.ell, n=rep.n, p=rep.p, beta=rep.beta)
        u = rep.field.values
        E = PinwheelEnergy(rep.field.grid, np.zeros(u.shape), rep.p, rep.beta, rep.ell)
        O = E.overlap_matrix(u)
        o12 = float(O[0, 1])
        part = extract_partition(rep.field, cfg, threshold)
        comps = [shift_field(u, j, rep.ell) for j in range(rep.ell)]
        prod = comps[0] * comps[1]
        on_iface = prod[part.interface]
        rows.append({
            "beta": rep.beta,
            "overlap": o12,
            "beta_overlap": rep.beta * o12,
            "interface_product_min": float(on_iface.min()) if on_iface.size else 0.0,
            "interface_product_max": float(on_iface.max()) if on_iface.size else 0.0,
        })
    out = {"rows": rows, "overlap_decreasing": None, "scaled_decreasing": None}
    if len(rows) >= 2:
        o = np.array([r["overlap"] for r in rows])
        s = np.abs([r["beta_overlap"] for r in rows])
        out["overlap_decreasing"] = bool(np.all(np.diff(o) < 0))
        out["scaled_decreasing"] = bool(s[-1] < s[-2])
    return out


@dataclass
class SignChanging:
    field: ComponentField
    residual: float
    residual_dual: float
    antisymmetry: float
    energy_components: float
    energy_w: float

    @property
    def identity_error(self):
        return abs(self.energy_components - self.energy_w) / max(abs(self.energy_components), 1e-300)

    def to_dict(self):
        return {
            "residual": self.residual,
            "residual_dual": self.residual_dual,
            "antisymmetry": self.antisymmetry,
            "energy_components": self.energy_components,
            "energy_w": self.energy_w,
            "identity_error": self.identity_error,
        }


def sign_changing(u1, config, V):
    """``w = u_1 - u_2`` for two-component tuples.

    Reports the nodal max norm of ``-Lap w + V w - |w|^{2p-2} w``, the same
    residual in the dual norm of ``<.,.>_V``, the deviation
    ``max |w(rotated by pi/n) + w|`` and both sides of the energy identity
    ``(p-1)/(2p) (||u_1||^2 + ||u_2||^2) = J(w)``.
    """
    if config.ell != 2:
        raise ConfigurationError(f"the sign-changing map needs ell = 2, got {config.ell}")
    grid = u1.grid
    u = _arr(u1)
    p = config.p
    u2 = shift_field(u, 1, 2)
    w = u - u2
    E = PinwheelEnergy(grid, V, p, 0.0, ell=1)
    res = grid.apply_stiffness(w) / grid.weights + E.Vn * w - _signed_pow(w, 2 * p - 1)
    K = (grid.stiffness + sp.diags((grid.weights * E.Vn).ravel())).tocsc()
    f = (grid.weights * res).ravel()
    dual = float(np.sqrt(max(f @ splu(K).solve(f), 0.0))) if np.any(f) else 0.0
    # rotation by pi/n is half the angular period
    anti = float(np.max(np.abs(shift_field(w, 1, 2) + w)))
    lhs = (p - 1) / (2 * p) * (E.quadratic(u) + E.quadratic(u2))
    rhs = 0.5 * E.quadratic(w) - E.self_term(w) / (2 * p)
    return SignChanging(ComponentField(w, grid), float(np.max(np.abs(res))), dual, anti,
                        float(lhs), float(rhs))
