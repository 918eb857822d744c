"""Command line interface.

    pinwheel {scalar,solve,sweep-beta,testfn,partition} [--config FILE] [--set KEY=VALUE ...]

Exit status: 0 success, 1 nonconvergence, 2 invalid configuration.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from . import io
from .errors import ConfigurationError, ConvergenceError, NonpositiveDenominator
from .grid import PolarGrid, build_grid
from .potential import RadialPotential, validate
from .symmetry import PinwheelConfig, check_subcritical

logger = logging.getLogger("pinwheel")

SWEEP_SCHEDULE = (-1.0, -0.3, -0.1, -0.03, -0.01, -0.003, -0.001)
SEGREGATION_SCHEDULE = (-1.0, -10.0, -100.0, -1000.0, -10000.0)


@dataclass
class RunConfig:
    """Flat run configuration; every key may appear in the JSON config file."""

    ell: int = 2
    n: int = 1
    dim: int = 2
    p: float = 2.0
    beta: float = -1.0
    V_inf: float = 1.0
    C0: float = 0.5
    lam: float | None = None
    profile: str = "exponential-well"
    R0: float = 0.0
    samples: list | None = None
    Nr: int = 128
    M: int | None = None
    R_max: float = 14.0
    Ns: int = 0
    S_max: float = 0.0
    radial_Nr: int = 1024
    radial_R_max: float = 20.0
    tol: float | None = None
    max_iter: int = 5000
    metric: str = "H1"
    clamp: bool = True
    R_inits: list | None = None
    beta_schedule: list | None = None
    R_sweep: list | None = None
    threshold: float = 1e-3
    seed: int = 0
    noise: float = 0.0
    workers: int = 1
    image_size: int = 256
    out: str = "pinwheel-out"

    @classmethod
    def keys(cls):
        return [f.name for f in fields(cls)]

    @classmethod
    def from_mapping(cls, mapping):
        unknown = sorted(set(mapping) - set(cls.keys()))
        if unknown:
            raise ConfigurationError(f"unknown configuration keys: {', '.join(unknown)}")
        cfg = cls(**mapping)
        cfg._coerce()
        return cfg

    def _coerce(self):
        ints = ("ell", "n", "dim", "Nr", "Ns", "radial_Nr", "max_iter", "seed", "workers",
                "image_size")
        floats = ("p", "beta", "V_inf", "C0", "R0", "R_max", "S_max", "radial_R_max",
                  "threshold", "noise")
        try:
            for k in ints:
                v = getattr(self, k)
                if isinstance(v, bool) or int(v) != v:
                    raise ConfigurationError(f"{k} must be an integer, got {v!r}")
                setattr(self, k, int(v))
            for k in floats:
                setattr(self, k, float(getattr(self, k)))
            for k in ("lam", "tol"):
                if getattr(self, k) is not None:
                    setattr(self, k, float(getattr(self, k)))
            if self.M is not None:
                self.M = int(self.M)
            for k in ("R_inits", "beta_schedule", "R_sweep"):
                v = getattr(self, k)
                if v is not None:
                    setattr(self, k, [float(x) for x in (v if isinstance(v, list) else [v])])
        except (TypeError, ValueError) as exc:
            raise ConfigurationError(str(exc)) from exc
        if not isinstance(self.clamp, bool):
            raise ConfigurationError(f"clamp must be true or false, got {self.clamp!r}")
        if self.metric not in ("H1", "L2"):
            raise ConfigurationError(f"metric must be 'H1' or 'L2', got {self.metric!r}")
        if self.max_iter < 0 or self.workers < 1:
            raise ConfigurationError("max_iter must be >= 0 and workers >= 1")

    def with_beta(self, beta):
        return RunConfig.from_mapping({**asdict(self), "beta": beta})

    # derived objects --------------------------------------------------------

    def pinwheel(self, beta=None):
        return PinwheelConfig(self.ell, self.n, self.dim, self.p,
                              self.beta if beta is None else beta)

    def potential(self):
        lam = self.lam if self.lam is not None else float(np.sin(np.pi / (self.ell * self.n)))
        samples = tuple(tuple(s) for s in (self.samples or ()))
        try:
            return RadialPotential(self.V_inf, self.C0, lam, self.profile, self.R0, samples)
        except ValueError as exc:
            raise ConfigurationError(str(exc)) from exc

    def angular_nodes(self):
        if self.M is not None:
            return self.M
        return max(self.ell, (128 // self.n) // self.ell * self.ell)

    def grid(self):
        return build_grid(self.Nr, self.angular_nodes(), self.R_max, self.pinwheel(),
                          self.Ns, self.S_max)

    def start_radii(self):
        return self.R_inits or [1.0, 2.0, self.R_max / 2]

    def validate(self, scalar_only=False):
        """Joint validation; raises ConfigurationError."""
        if scalar_only and self.dim == 1:
            if not self.p > 1:
                raise ConfigurationError(f"p must exceed 1, got {self.p}")
            if not self.V_inf > 0:
                raise ConfigurationError(f"V_inf must be positive, got {self.V_inf}")
            return
        self.pinwheel()
        check_subcritical(self.p, self.dim)
        V = self.potential()
        result = validate(V, self.ell, self.n)
        if not result:
            raise ConfigurationError("invalid potential: " + "; ".join(result.reasons))
        self.grid()


def _parse_value(text):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def load_config(path=None, overrides=()):
    data = {}
    if path is not None:
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigurationError("the config file must hold a flat JSON object")
    for key, value in overrides:
        data[key] = value
    return RunConfig.from_mapping(data)


# shared computations ---------------------------------------------------------


def _c_inf(cfg):
    from .scalar import ground_state_radial

    fine = ground_state_radial(cfg.dim, cfg.V_inf, cfg.p, cfg.radial_Nr, cfg.radial_R_max)
    same = ground_state_radial(cfg.dim, cfg.V_inf, cfg.p, cfg.Nr, cfg.R_max)
    return fine, same


def _solve_kwargs(cfg):
    return {"tol": cfg.tol, "max_iter": cfg.max_iter, "metric": cfg.metric, "clamp": cfg.clamp}


def _write_report(outdir, stem, rep, grid, files, image_size, meta):
    files.append(io.write_json(outdir / f"{stem}.json", rep.to_dict()))
    rows = []
    for k, J in enumerate(rep.energy_trace):
        rows.append((k, J, rep.boundary_trace[k],
                     rep.grad_trace[k] if k < len(rep.grad_trace) else float("nan")))
    files.append(io.write_csv(outdir / f"{stem}_trace.csv",
                              ["iteration", "energy", "boundary_fraction", "grad_norm"], rows))
    files.append(io.write_field(outdir / f"{stem}_u1.bin", rep.field, meta))
    if isinstance(grid, PolarGrid):
        from .symmetry import shift_field

        u = rep.field.values
        hi = float(np.max(u))
        for j in range(rep.ell):
            img = io.cartesian_image(shift_field(u, j, rep.ell), grid, image_size)
            files.append(io.write_pgm(outdir / f"{stem}_component{j + 1}.pgm", img, 0.0, hi))


def _meta(cfg, beta=None):
    return {"ell": cfg.ell, "n": cfg.n, "p": cfg.p, "dim": cfg.dim,
            "beta": cfg.beta if beta is None else beta}


# subcommands ------------------------------------------------------------------


def run_scalar(cfg, outdir):
    from .scalar import ground_state_Gn, ground_state_radial

    files = []
    omega = ground_state_radial(cfg.dim, cfg.V_inf, cfg.p, cfg.radial_Nr, cfg.radial_R_max)
    summary = {"c_inf": omega.energy, "dim": cfg.dim, "p": cfg.p, "V_inf": cfg.V_inf,
               "omega_iterations": omega.report.iterations}
    files.append(io.write_field(outdir / "omega.bin", omega.field, {"c_inf": omega.energy}))
    if cfg.dim != 1:
        grid = cfg.grid()
        V = cfg.potential()
        gs = ground_state_Gn(V, cfg.n, cfg.p, grid, tol=cfg.tol, max_iter=cfg.max_iter,
                             c_inf=omega.energy)
        summary.update({
            "c_Gn": gs.energy,
            "n": cfg.n,
            "n_c_inf": cfg.n * omega.energy,
            "c_Gn_below_n_c_inf": bool(gs.energy <= cfg.n * omega.energy + gs.report.extra["tol"]),
            "Gn_start": gs.extra["start"],
            "Gn_starts": gs.extra["starts"],
        })
        files.append(io.write_field(outdir / "ground_state_Gn.bin", gs.field, {"c_Gn": gs.energy}))
    files.append(io.write_json(outdir / "summary.json", summary))
    return 0, summary, files


def _multistart_point(args):
    cfg_dict, R0 = args
    from .solver import initial_guess, minimize

    cfg = RunConfig.from_mapping(cfg_dict)
    grid, V, pc = cfg.grid(), cfg.potential(), cfg.pinwheel()
    init = initial_guess(pc, V, grid, R0, noise=cfg.noise, seed=cfg.seed)
    try:
        return minimize(pc, V, grid, init, **_solve_kwargs(cfg))
    except NonpositiveDenominator:
        return None


def _multistart(cfg, c_inf):
    cfg_dict = asdict(cfg)
    if cfg.tol is None:
        cfg_dict["tol"] = 1e-6 * np.sqrt(c_inf)
    jobs = [(cfg_dict, R0) for R0 in cfg.start_radii()]
    if cfg.workers > 1:
        with ProcessPoolExecutor(cfg.workers) as pool:
            reports = list(pool.map(_multistart_point, jobs))
    else:
        reports = [_multistart_point(j) for j in jobs]
    best, tried = None, []
    for (_, R0), rep in zip(jobs, reports):
        if rep is None:
            tried.append({"R_init": R0, "energy": None})
            continue
        tried.append({"R_init": R0, "energy": rep.energy, "status": rep.status})
        if best is None or (rep.converged, -rep.energy) > (best.converged, -best.energy):
            best = rep
            best.extra["R_init"] = R0
    if best is None:
        raise NonpositiveDenominator(0.0, "no initial radius admits a Nehari projection")
    best.extra["multistart"] = tried
    best.c_inf = c_inf
    return best


def run_solve(cfg, outdir):
    files = []
    fine, same = _c_inf(cfg)
    rep = _multistart(cfg, same.energy)
    rep.extra["c_inf_fine"] = fine.energy
    _write_report(outdir, "solve", rep, cfg.grid(), files, cfg.image_size, _meta(cfg))
    return (0 if rep.converged else 1), rep.to_dict(), files


def _sweep(cfg, schedule, c_inf):
    """Warm-started solves along ``schedule``; failures are recorded and skipped."""
    from .solver import minimize

    grid, V = cfg.grid(), cfg.potential()
    first = cfg.with_beta(schedule[0])
    start = _multistart(first, c_inf)
    reports, failures = [start], []
    u = start.field
    for b in schedule[1:]:
        try:
            rep = minimize(cfg.pinwheel(b), V, grid, u, c_inf=c_inf,
                           **{**_solve_kwargs(cfg), "tol": cfg.tol or 1e-6 * np.sqrt(c_inf)})
        except (NonpositiveDenominator, ConvergenceError) as exc:
            failures.append({"beta": b, "error": str(exc)})
            continue
        reports.append(rep)
        if rep.converged:
            u = rep.field
        else:
            failures.append({"beta": b, "error": f"not converged ({rep.status})"})
    return reports, failures


def _check_schedule(schedule):
    if any(b >= 0 for b in schedule):
        raise ConfigurationError("all couplings in the schedule must be negative")
    d = np.diff(schedule)
    if len(schedule) > 1 and not (np.all(d > 0) or np.all(d < 0)):
        raise ConfigurationError("beta schedule must be strictly monotone")


def run_sweep_beta(cfg, outdir):
    from .scalar import ground_state_Gn

    schedule = cfg.beta_schedule or list(SWEEP_SCHEDULE)
    files = []
    fine, same = _c_inf(cfg)
    reports, failures = _sweep(cfg, schedule, same.energy)
    gs = ground_state_Gn(cfg.potential(), cfg.n, cfg.p, cfg.grid(), c_inf=same.energy)
    rows = []
    for k, rep in enumerate(reports):
        stem = f"point{k:02d}"
        files.append(io.write_json(outdir / f"{stem}.json", rep.to_dict()))
        files.append(io.write_field(outdir / f"{stem}_u1.bin", rep.field, _meta(cfg, rep.beta)))
        O = rep.breakdown.coupling
        rows.append((rep.beta, rep.energy, rep.component_energy, float(O[0, 1]),
                     rep.iterations, rep.status))
    files.append(io.write_csv(outdir / "sweep.csv",
                              ["beta", "energy", "component_energy", "overlap", "iterations",
                               "status"], rows))
    tail = reports[-1]
    summary = {
        "schedule": schedule,
        "c_inf": same.energy,
        "c_inf_fine": fine.energy,
        "c_Gn": gs.energy,
        "tail_beta": tail.beta,
        "tail_component_energy": tail.component_energy,
        "tail_relative_gap": abs(tail.component_energy - gs.energy) / gs.energy,
        "failures": failures,
    }
    files.append(io.write_json(outdir / "summary.json", summary))
    status = 0 if not failures and all(r.converged for r in reports) else 1
    return status, summary, files


def _testfn_point(args):
    cfg_dict, R = args
    from .scalar import build_test_tuple, ground_state_radial

    cfg = RunConfig.from_mapping(cfg_dict)
    omega = ground_state_radial(cfg.dim, cfg.V_inf, cfg.p, cfg.radial_Nr, cfg.radial_R_max)
    try:
        tt = build_test_tuple(R, cfg.pinwheel(), omega, cfg.potential())
    except (ValueError, ArithmeticError) as exc:
        return {"R": R, "error": str(exc)}
    return {"R": tt.R, "energy": tt.energy, "t_R": tt.t_R, "c_inf": omega.energy}


def run_testfn(cfg, outdir):
    from .scalar import decay_fit

    Rs = cfg.R_sweep or [8.0, 10.0, 12.0, 14.0]
    jobs = [(asdict(cfg), R) for R in Rs]
    if cfg.workers > 1:
        with ProcessPoolExecutor(cfg.workers) as pool:
            points = list(pool.map(_testfn_point, jobs))
    else:
        points = [_testfn_point(j) for j in jobs]
    good = [pt for pt in points if "error" not in pt]
    failures = [pt for pt in points if "error" in pt]
    level = cfg.ell * cfg.n
    rows, summary = [], {"R_sweep": Rs, "failures": failures}
    if good:
        c_inf = good[0]["c_inf"]
        rows = [(pt["R"], pt["energy"], level * c_inf - pt["energy"], pt["t_R"]) for pt in good]
        summary.update({"c_inf": c_inf, "threshold": level * c_inf,
                        "all_below_threshold": bool(all(r[2] > 0 for r in rows)),
                        "target_rate": cfg.potential().rate})
        try:
            rate = decay_fit([(r[0], r[1]) for r in rows], c_inf, cfg.pinwheel())
            summary.update({"fitted_rate": rate,
                            "relative_error": abs(rate - summary["target_rate"])
                            / summary["target_rate"]})
        except ValueError as exc:
            summary["fit_error"] = str(exc)
    files = [io.write_csv(outdir / "testfn.csv", ["R", "E_R", "gap", "t_R"], rows),
             io.write_json(outdir / "summary.json", summary)]
    return 0, summary, files


def run_partition(cfg, outdir):
    from .partition import extract_partition, interface_diagnostics, segregation_trace, sign_changing
    from .symmetry import shift_field

    schedule = cfg.beta_schedule or list(SEGREGATION_SCHEDULE)
    files = []
    fine, same = _c_inf(cfg)
    reports, failures = _sweep(cfg, schedule, same.energy)
    final = reports[-1]
    pc = cfg.pinwheel(final.beta)
    V = cfg.potential()
    grid = cfg.grid()
    part = extract_partition(final.field, pc, cfg.threshold, V)
    iface = interface_diagnostics(final.field, pc, part)
    summary = {
        "beta": final.beta,
        "partition": part.to_dict(),
        "interface": iface.summary,
        "segregation": segregation_trace(reports, cfg.threshold),
        "failures": failures,
    }
    if cfg.ell == 2:
        summary["sign_changing"] = sign_changing(final.field, pc, V).to_dict()
    files.append(io.write_json(outdir / "partition.json", summary))
    files.append(io.write_field(outdir / "u1.bin", final.field, _meta(cfg, final.beta)))
    nodes = iface.to_rows()
    cols = ["i_r", "i_theta"] + (["i_s"] if grid.cylindrical else [])
    files.append(io.write_csv(outdir / "interface.csv",
                              cols + ["label_a", "label_b", "grad_a", "grad_b", "mismatch"], nodes))
    files.append(io.write_pgm(outdir / "labels.pgm",
                              io.cartesian_image(part.labels, grid, cfg.image_size), 0, cfg.ell))
    for j, m in enumerate(part.masks):
        img = io.cartesian_image(m.astype(float), grid, cfg.image_size)
        files.append(io.write_pgm(outdir / f"mask{j + 1}.pgm", img, 0.0, 1.0))
    status = 0 if not failures and final.converged else 1
    return status, summary, files


COMMANDS = {
    "scalar": run_scalar,
    "solve": run_solve,
    "sweep-beta": run_sweep_beta,
    "testfn": run_testfn,
    "partition": run_partition,
}


def build_parser():
    ap = argparse.ArgumentParser(prog="pinwheel", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("--config", help="flat JSON configuration file")
    ap.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                    help="override a configuration key (value parsed as JSON when possible)")
    ap.add_argument("--out", help="output directory")
    ap.add_argument("--seed", type=int)
    ap.add_argument("--budget", type=int, help="iteration budget per solve (max_iter)")
    ap.add_argument("--beta", type=float)
    ap.add_argument("--workers", type=int)
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    overrides = []
    try:
        for item in args.set:
            if "=" not in item:
                raise ConfigurationError(f"--set expects KEY=VALUE, got {item!r}")
            k, v = item.split("=", 1)
            overrides.append((k.strip(), _parse_value(v)))
        for key, val in (("out", args.out), ("seed", args.seed), ("max_iter", args.budget),
                         ("beta", args.beta), ("workers", args.workers)):
            if val is not None:
                overrides.append((key, val))
        cfg = load_config(args.config, overrides)
        cfg.validate(scalar_only=args.command == "scalar")
        if args.command in ("sweep-beta", "partition") and cfg.beta_schedule:
            _check_schedule(cfg.beta_schedule)
    except ConfigurationError as exc:
        print(f"pinwheel: invalid configuration: {exc}", file=sys.stderr)
        return 2

    outdir = Path(cfg.out)
    outdir.mkdir(parents=True, exist_ok=True)
    try:
        status, summary, files = COMMANDS[args.command](cfg, outdir)
    except ConvergenceError as exc:
        print(f"pinwheel: {exc}", file=sys.stderr)
        return 1
    except NonpositiveDenominator as exc:
        print(f"pinwheel: {exc}", file=sys.stderr)
        return 2
    io.write_manifest(outdir, {"command": args.command, **asdict(cfg)}, files)
    print(json.dumps({"command": args.command, "status": status, "out": str(outdir)}))
    return status


if __name__ == "__main__":
    sys.exit(main())
