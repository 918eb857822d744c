"""File formats: binary field dumps, PGM heatmaps, CSV tables, JSON, manifests."""
from __future__ import annotations

import csv
import hashlib
import json
import os
from pathlib import Path

import numpy as np

from .grid import ComponentField, PolarGrid, RadialGrid

FORMAT = "pinwheel-field"


def _jsonable(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    if isinstance(obj, Path):
        return str(obj)
    raise TypeError(f"{type(obj).__name__} is not JSON serialisable")


def write_json(path, obj):
    path = Path(path)
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, default=_jsonable) + "\n")
    return path


def read_json(path):
    return json.loads(Path(path).read_text())


def grid_header(grid):
    if isinstance(grid, RadialGrid):
        return {"kind": "radial", "Nr": grid.Nr, "R_max": grid.R_max, "dim": grid.dim}
    return {"kind": "polar", "Nr": grid.Nr, "M": grid.M, "R_max": grid.R_max, "n": grid.n,
            "ell": grid.ell, "dim": grid.dim, "Ns": grid.Ns, "S_max": grid.S_max}


def grid_from_header(h):
    if h["kind"] == "radial":
        return RadialGrid(h["Nr"], h["R_max"], h["dim"])
    return PolarGrid(h["Nr"], h["M"], h["R_max"], h["n"], h["ell"], h["dim"], h["Ns"], h["S_max"])


def write_field(path, field, meta=None):
    """One JSON header line, a newline, then row-major little-endian float64 values."""
    values = np.ascontiguousarray(field.values, dtype="<f8")
    header = {
        "format": FORMAT,
        "version": 1,
        "shape": list(values.shape),
        "dtype": "float64",
        "endianness": "little",
        "order": "C",
        "grid": grid_header(field.grid),
        "meta": meta or {},
    }
    path = Path(path)
    with open(path, "wb") as fh:
        fh.write(json.dumps(header, sort_keys=True, default=_jsonable).encode() + b"\n")
        fh.write(values.tobytes(order="C"))
    return path


def read_field(path):
    """Return ``(ComponentField, header)`` from a dump written by :func:`write_field`."""
    raw = Path(path).read_bytes()
    nl = raw.index(b"\n")
    header = json.loads(raw[:nl])
    if header.get("format") != FORMAT:
        raise ValueError(f"{path} is not a {FORMAT} dump")
    dt = np.dtype("<f8" if header["endianness"] == "little" else ">f8")
    values = np.frombuffer(raw[nl + 1:], dtype=dt).reshape(header["shape"])
    return ComponentField(values.astype(float), grid_from_header(header["grid"])), header


def write_pgm(path, image, lo=None, hi=None):
    """16-bit binary PGM (maxval 65535) of a 2D array, linearly scaled to [lo, hi]."""
    img = np.asarray(image, dtype=float)
    lo = float(np.min(img)) if lo is None else lo
    hi = float(np.max(img)) if hi is None else hi
    scaled = np.zeros(img.shape) if hi <= lo else (img - lo) / (hi - lo)
    data = np.round(np.clip(scaled, 0.0, 1.0) * 65535).astype(">u2")
    h, w = data.shape
    path = Path(path)
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n65535\n".encode())
        fh.write(data.tobytes())
    return path


def read_pgm(path):
    raw = Path(path).read_bytes()
    parts = raw.split(maxsplit=4)
    if parts[0] != b"P5":
        raise ValueError("not a binary PGM")
    w, h, maxval = int(parts[1]), int(parts[2]), int(parts[3])
    return np.frombuffer(parts[4], dtype=">u2").reshape(h, w), maxval


def cartesian_image(values, grid, size=256, fill=0.0):
    """Nearest-node sampling of a polar field on a ``size x size`` square.

    The square spans ``[-R_max, R_max]^2`` in the rotation plane; for the
    cylindrical grid the slice ``s = 0`` (first s-node) is shown.
    """
    values = np.asarray(values)
    if grid.cylindrical:
        values = values[:, :, 0]
    xs = np.linspace(-grid.R_max, grid.R_max, size)
    X, Y = np.meshgrid(xs, -xs)
    R = np.hypot(X, Y)
    period = 2 * np.pi / grid.n
    th = np.mod(np.arctan2(Y, X), period)
    i = np.clip(np.floor(R / grid.dr).astype(int), 0, grid.Nr - 1)
    j = np.mod(np.rint(th / grid.dtheta).astype(int), grid.M)
    img = values[i, j].astype(float)
    img[R >= grid.R_max] = fill
    return img


def write_csv(path, header, rows):
    path = Path(path)
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(header)
        for row in rows:
            wr.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in row])
    return path


def read_csv(path):
    with open(path, newline="") as fh:
        rd = csv.reader(fh)
        header = next(rd)
        return header, [row for row in rd]


def sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(outdir, config, files, extra=None):
    """``manifest.json`` with the config echo and a SHA-256 per output file."""
    from . import __version__

    outdir = Path(outdir)
    entries = {}
    for f in files:
        f = Path(f)
        entries[os.path.relpath(f, outdir)] = sha256(f)
    manifest = {"package": "pinwheel", "version": __version__, "config": config,
                "files": dict(sorted(entries.items()))}
    if extra:
        manifest.update(extra)
    return write_json(outdir / "manifest.json", manifest)
