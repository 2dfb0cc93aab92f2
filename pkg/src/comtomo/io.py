"""Dataset files: a JSON header next to a long-format CSV.

A tomogram stored at ``t.csv`` has columns ``frame_index,X,w`` and a header
``t.json`` holding the layout, frames, X grid and flags. Files are written to
a temporary name in the target directory and renamed into place, so readers
never see a partial file. Floats are printed with 17 significant digits,
which makes output byte-identical across runs.
"""
from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from pathlib import Path

import numpy as np

from .core import (
    AxisGrid,
    CartesianFrames,
    ComTomogram,
    DensityMatrixGrid,
    FockMatrix,
    Frame,
    ModeLayout,
    SymplecticTomogram,
    WignerGrid,
)

SCHEMA_VERSION = 1


def atomic_write_text(path: str | os.PathLike, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"{type(obj).__name__} is not JSON serializable")


def write_json(path, data) -> None:
    atomic_write_text(path, json.dumps(data, indent=2, sort_keys=True, default=_default) + "\n")


def read_json(path) -> dict:
    with open(path) as fh:
        return json.load(fh)


def header_path(csv_path) -> Path:
    return Path(csv_path).with_suffix(".json")


def tomogram_header(t: ComTomogram) -> dict:
    return {
        "kind": "com_tomogram",
        "schema_version": SCHEMA_VERSION,
        "layout": t.layout.to_dict(),
        "frames": [f.to_dict() for f in t.frames],
        "xgrid": t.xgrid.to_dict(),
        "cartesian": None if t.cartesian is None else t.cartesian.to_dict(),
        "signed": t.signed,
        "tolerance": t.tolerance,
        "columns": ["frame_index", "X", "w"],
    }


def _fmt(values) -> list:
    return [format(v, ".17g") for v in np.ravel(values).tolist()]


def write_tomogram(t: ComTomogram, csv_path) -> tuple[Path, Path]:
    """Write ``csv_path`` and its JSON header; returns both paths."""
    xs = [x + "," for x in _fmt(t.xgrid.points)]
    chunks = ["frame_index,X,w\n"]
    for f, row in enumerate(t.values):
        pre = f"{f},"
        chunks.append("".join([pre + x + v + "\n" for x, v in zip(xs, _fmt(row))]))
    csv_path = Path(csv_path)
    atomic_write_text(csv_path, "".join(chunks))
    hdr = header_path(csv_path)
    write_json(hdr, tomogram_header(t))
    return csv_path, hdr


def read_tomogram(csv_path) -> ComTomogram:
    hdr = read_json(header_path(csv_path))
    if hdr.get("kind") != "com_tomogram":
        raise ValueError(f"{header_path(csv_path)} does not describe a tomogram")
    if hdr.get("schema_version") != SCHEMA_VERSION:
        raise ValueError(f"unsupported schema_version {hdr.get('schema_version')!r}")
    layout = ModeLayout.from_dict(hdr["layout"])
    frames = [Frame.from_dict(f) for f in hdr["frames"]]
    xgrid = AxisGrid.from_dict(hdr["xgrid"])
    values = np.zeros((len(frames), xgrid.n))
    with open(csv_path, newline="") as fh:
        r = csv.reader(fh)
        if next(r) != ["frame_index", "X", "w"]:
            raise ValueError("unexpected CSV columns")
        counts = np.zeros(len(frames), dtype=int)
        for row in r:
            f = int(row[0])
            values[f, counts[f]] = float(row[2])
            counts[f] += 1
    if np.any(counts != xgrid.n):
        raise ValueError("CSV does not hold one value per frame and X point")
    cart = hdr.get("cartesian")
    return ComTomogram(
        layout,
        frames,
        xgrid,
        values,
        hdr.get("tolerance", 1e-4),
        None if cart is None else CartesianFrames.from_dict(cart),
        hdr.get("signed", False),
    )


def fock_matrix_to_dict(A: FockMatrix) -> dict:
    return {
        "kind": "fock_matrix",
        "schema_version": SCHEMA_VERSION,
        "truncation": A.truncation,
        "nmodes": A.nmodes,
        "real": A.values.real.tolist(),
        "imag": A.values.imag.tolist(),
    }


def fock_matrix_from_dict(data: dict) -> FockMatrix:
    vals = np.asarray(data["real"], dtype=float) + 1j * np.asarray(data["imag"], dtype=float)
    return FockMatrix(data["truncation"], vals, data.get("nmodes", 1))


def write_grid_csv(path, columns: dict) -> None:
    """Plot-ready CSV from equal-length 1-D columns."""
    names = list(columns)
    cols = [np.ravel(np.asarray(columns[n])) for n in names]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(names)
    for row in zip(*cols):
        w.writerow([f"{v:.17g}" if isinstance(v, (float, np.floating)) else v for v in row])
    atomic_write_text(path, buf.getvalue())


# ----------------------------------------------------------------------------
# grid datasets: coordinate columns in row-major order, then value columns


def _grid_rows(grids, values: np.ndarray, names, value_names) -> str:
    mesh = np.meshgrid(*[g.points for g in grids], indexing="ij")
    cols = [m.ravel() for m in mesh]
    if np.iscomplexobj(values):
        cols += [values.real.ravel(), values.imag.ravel()]
    else:
        cols.append(values.ravel())
    lines = map(",".join, zip(*[_fmt(c) for c in cols]))
    return ",".join(list(names) + list(value_names)) + "\n" + "".join([line + "\n" for line in lines])


def _read_values(csv_path, columns, shape, complex_values=False) -> np.ndarray:
    data = np.loadtxt(csv_path, delimiter=",", skiprows=1, ndmin=2)
    with open(csv_path) as fh:
        if next(csv.reader(fh)) != columns:
            raise ValueError("unexpected CSV columns")
    if data.shape[0] != int(np.prod(shape)):
        raise ValueError("CSV row count does not match the grid")
    if complex_values:
        return (data[:, -2] + 1j * data[:, -1]).reshape(shape)
    return data[:, -1].reshape(shape)


def _check_header(hdr: dict, kind: str, path) -> None:
    if hdr.get("kind") != kind:
        raise ValueError(f"{path} does not describe a {kind}")
    if hdr.get("schema_version") != SCHEMA_VERSION:
        raise ValueError(f"unsupported schema_version {hdr.get('schema_version')!r}")


def write_wigner(w: WignerGrid, csv_path) -> tuple[Path, Path]:
    """Columns ``q_1..q_Nd, p_1..p_Nd, W``."""
    nd = w.layout.nd
    names = [f"q_{j + 1}" for j in range(nd)] + [f"p_{j + 1}" for j in range(nd)]
    csv_path = Path(csv_path)
    atomic_write_text(csv_path, _grid_rows(w.grids, w.values, names, ["W"]))
    hdr = {
        "kind": "wigner_grid",
        "schema_version": SCHEMA_VERSION,
        "layout": w.layout.to_dict(),
        "qgrids": [g.to_dict() for g in w.qgrids],
        "pgrids": [g.to_dict() for g in w.pgrids],
        "columns": names + ["W"],
    }
    write_json(header_path(csv_path), hdr)
    return csv_path, header_path(csv_path)


def read_wigner(csv_path) -> WignerGrid:
    hdr = read_json(header_path(csv_path))
    _check_header(hdr, "wigner_grid", csv_path)
    qg = [AxisGrid.from_dict(g) for g in hdr["qgrids"]]
    pg = [AxisGrid.from_dict(g) for g in hdr["pgrids"]]
    vals = _read_values(csv_path, hdr["columns"], tuple(g.n for g in qg + pg))
    return WignerGrid(ModeLayout.from_dict(hdr["layout"]), qg, pg, vals)


def write_density(rho: DensityMatrixGrid, csv_path) -> tuple[Path, Path]:
    """Columns ``q1_1..q1_Nd`` (row), ``q2_1..q2_Nd`` (column), ``re, im``."""
    nd = rho.layout.nd
    names = [f"q1_{j + 1}" for j in range(nd)] + [f"q2_{j + 1}" for j in range(nd)]
    csv_path = Path(csv_path)
    atomic_write_text(csv_path, _grid_rows(rho.qgrids * 2, rho.values, names, ["re", "im"]))
    hdr = {
        "kind": "density_grid",
        "schema_version": SCHEMA_VERSION,
        "layout": rho.layout.to_dict(),
        "qgrids": [g.to_dict() for g in rho.qgrids],
        "columns": names + ["re", "im"],
    }
    write_json(header_path(csv_path), hdr)
    return csv_path, header_path(csv_path)


def read_density(csv_path) -> DensityMatrixGrid:
    hdr = read_json(header_path(csv_path))
    _check_header(hdr, "density_grid", csv_path)
    qg = [AxisGrid.from_dict(g) for g in hdr["qgrids"]]
    shape = tuple(g.n for g in qg) * 2
    vals = _read_values(csv_path, hdr["columns"], shape, complex_values=True)
    return DensityMatrixGrid(ModeLayout.from_dict(hdr["layout"]), qg, vals)


def write_symplectic(ws: SymplecticTomogram, csv_path) -> tuple[Path, Path]:
    """Columns ``frame_index, Y_1..Y_Nd, w``."""
    nd = ws.layout.nd
    names = ["frame_index"] + [f"Y_{j + 1}" for j in range(nd)]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(names + ["w"])
    mesh = np.meshgrid(*[g.points for g in ws.ygrids], indexing="ij")
    coords = [m.ravel() for m in mesh]
    for f, vals in enumerate(ws.values):
        for row in zip(*coords, vals.ravel()):
            w.writerow([f] + [f"{v:.17g}" for v in row])
    csv_path = Path(csv_path)
    atomic_write_text(csv_path, buf.getvalue())
    hdr = {
        "kind": "symplectic_tomogram",
        "schema_version": SCHEMA_VERSION,
        "layout": ws.layout.to_dict(),
        "frames": [f.to_dict() for f in ws.frames],
        "ygrids": [g.to_dict() for g in ws.ygrids],
        "signed": ws.signed,
        "columns": names + ["w"],
    }
    write_json(header_path(csv_path), hdr)
    return csv_path, header_path(csv_path)


def read_symplectic(csv_path) -> SymplecticTomogram:
    hdr = read_json(header_path(csv_path))
    _check_header(hdr, "symplectic_tomogram", csv_path)
    frames = [Frame.from_dict(f) for f in hdr["frames"]]
    yg = [AxisGrid.from_dict(g) for g in hdr["ygrids"]]
    vals = _read_values(csv_path, hdr["columns"], (len(frames),) + tuple(g.n for g in yg))
    return SymplecticTomogram(ModeLayout.from_dict(hdr["layout"]), frames, yg, vals, hdr.get("signed", False))


READERS = {"com": read_tomogram, "wigner": read_wigner, "density": read_density, "symplectic": read_symplectic}
WRITERS = {"com": write_tomogram, "wigner": write_wigner, "density": write_density, "symplectic": write_symplectic}
