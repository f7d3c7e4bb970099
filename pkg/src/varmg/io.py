"""File formats: Matrix Market matrices, vectors, CSV grids, JSON reports and hierarchy dumps."""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np
import scipy.io
import scipy.sparse as sp

from .linalg import SparseMatrix, SpectralEstimate
from .problems import GridSpec

__all__ = [
    "SCHEMA_VERSION",
    "write_matrix_market",
    "read_matrix_market",
    "write_vector_text",
    "read_vector_text",
    "write_vector_binary",
    "read_vector_binary",
    "format_float",
    "write_grid_csv",
    "read_grid_csv",
    "write_rows_csv",
    "write_json",
    "jsonable",
    "dump_hierarchy",
    "load_hierarchy",
]

SCHEMA_VERSION = 1


def write_matrix_market(path, A, symmetric=None):
    """Write ``A`` in coordinate format; symmetric matrices store the lower triangle."""
    if symmetric is None:
        symmetric = A.symmetric if isinstance(A, SparseMatrix) else False
    csr = A.tocsr() if isinstance(A, SparseMatrix) else sp.csr_matrix(A)
    scipy.io.mmwrite(str(path), csr, symmetry="symmetric" if symmetric else "general",
                     precision=17)


def read_matrix_market(path):
    """Read a coordinate Matrix Market file into a :class:`SparseMatrix`."""
    info = scipy.io.mminfo(str(path))
    if info[3] != "coordinate":
        raise ValueError(f"{path}: only coordinate Matrix Market files are supported")
    M = scipy.io.mmread(str(path))
    symmetric = True if info[5] == "symmetric" else None
    return SparseMatrix.from_scipy(sp.csr_matrix(M), symmetric=symmetric)


def write_vector_text(path, v):
    """One value per line, 17 significant digits."""
    np.savetxt(path, np.asarray(v, dtype=np.float64), fmt="%.17g")


def read_vector_text(path):
    return np.atleast_1d(np.loadtxt(path, dtype=np.float64))


def write_vector_binary(path, v):
    """Raw little-endian float64, no header."""
    np.asarray(v, dtype="<f8").tofile(path)


def read_vector_binary(path):
    return np.fromfile(path, dtype="<f8").astype(np.float64)


def format_float(x):
    return f"{x:.17g}"


def write_grid_csv(path, v, grid):
    """Write an unknown vector as an ``(N-1) x (N-1)`` CSV grid, one row per ``y``."""
    values = grid.as_grid(v)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        for row in values:
            writer.writerow([format_float(x) for x in row])


def read_grid_csv(path):
    return np.loadtxt(path, delimiter=",", dtype=np.float64, ndmin=2)


def write_rows_csv(path, header, rows):
    """CSV with a header line; floats get 17 significant digits."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_float(x) if isinstance(x, float) else x for x in row])


def jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if hasattr(obj, "to_dict"):
        return jsonable(obj.to_dict())
    return obj


def write_json(path, payload):
    """Write ``payload`` with a leading ``"schema"`` version; non-finite floats become null."""
    doc = {"schema": SCHEMA_VERSION}
    doc.update(jsonable(payload))
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def dump_hierarchy(hier, directory):
    """Write per-level operators/transfers as Matrix Market plus ``manifest.json``."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    files = []
    for lvl in hier:
        entry = {"operator": f"level{lvl.index:02d}_operator.mtx"}
        write_matrix_market(directory / entry["operator"], lvl.operator)
        if lvl.prolongation_to_here is not None:
            entry["prolongation"] = f"level{lvl.index:02d}_prolongation.mtx"
            entry["restriction"] = f"level{lvl.index:02d}_restriction.mtx"
            write_matrix_market(directory / entry["prolongation"], lvl.prolongation_to_here)
            write_matrix_market(directory / entry["restriction"], lvl.restriction_from_here)
        files.append(entry)
    manifest = hier.manifest()
    manifest["spectral"] = [lvl.spectral.to_dict() for lvl in hier]
    manifest["files"] = files
    write_json(directory / "manifest.json", manifest)


def load_hierarchy(directory):
    """Inverse of :func:`dump_hierarchy`; spectral estimates come from the manifest."""
    from .transfer import Hierarchy, Level

    directory = Path(directory)
    manifest = json.loads((directory / "manifest.json").read_text())
    levels = []
    for i, (N, files, est) in enumerate(zip(manifest["N"], manifest["files"],
                                             manifest["spectral"])):
        A = read_matrix_market(directory / files["operator"])
        P = R = None
        if "prolongation" in files:
            P = read_matrix_market(directory / files["prolongation"])
            R = read_matrix_market(directory / files["restriction"])
        spectral = SpectralEstimate(est["lambda_max"], est["iterations_used"],
                                    est["residual_tol_achieved"] if est["residual_tol_achieved"]
                                    is not None else math.inf, est["method"])
        levels.append(Level(i, GridSpec(N), A, spectral, P, R, manifest["alpha"]))
    return Hierarchy(tuple(levels), manifest["alpha"])
