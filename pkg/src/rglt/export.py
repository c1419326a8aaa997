"""Plain-text triplet export of assembled matrices."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import scipy.sparse as sp


def fmt(x: float) -> str:
    return f"{x:.17g}"


def write_triplets(path: str | Path, A, meta: dict | None = None) -> Path:
    """Write lines ``row col value`` (1-based) and a JSON sidecar ``<path>.json``.

    Complex entries get a fourth column with the imaginary part.
    """
    path = Path(path)
    C = sp.coo_matrix(A)
    order = np.lexsort((C.col, C.row))
    r, c, v = C.row[order] + 1, C.col[order] + 1, C.data[order]
    cplx = np.iscomplexobj(v) and np.any(v.imag)
    with path.open("w") as fh:
        for i, j, x in zip(r, c, v):
            if cplx:
                fh.write(f"{i} {j} {fmt(x.real)} {fmt(x.imag)}\n")
            else:
                fh.write(f"{i} {j} {fmt(float(np.real(x)))}\n")
    sidecar = {"size": int(C.shape[0])}
    sidecar.update(meta or {})
    Path(str(path) + ".json").write_text(json.dumps(sidecar, indent=2, sort_keys=True))
    return path


def read_triplets(path: str | Path) -> sp.csr_matrix:
    path = Path(path)
    side = json.loads(Path(str(path) + ".json").read_text())
    size = side["size"]
    rows, cols, vals = [], [], []
    for line in path.read_text().splitlines():
        parts = line.split()
        if not parts:
            continue
        rows.append(int(parts[0]) - 1)
        cols.append(int(parts[1]) - 1)
        vals.append(complex(float(parts[2]), float(parts[3])) if len(parts) > 3 else float(parts[2]))
    return sp.csr_matrix((vals, (rows, cols)), shape=(size, size))
