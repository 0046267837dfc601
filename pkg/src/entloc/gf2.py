"""Linear algebra over GF(2) on bit-packed rows.

The public functions take and return numpy 0/1 arrays; internally each row is
a Python int whose bit ``j`` is column ``j``.
"""

from __future__ import annotations

import numpy as np


def pack_rows(m) -> list[int]:
    arr = np.asarray(m, dtype=np.int64) & 1
    if arr.ndim != 2:
        raise ValueError(f"expected a 2-D bit matrix, got shape {arr.shape}")
    return [sum(int(b) << j for j, b in enumerate(row)) for row in arr]


def unpack(bits: int, width: int) -> np.ndarray:
    return np.array([(bits >> j) & 1 for j in range(width)], dtype=np.uint8)


def _eliminate(rows: list[int], n_cols: int, rhs: list[int] | None = None):
    """Row-reduce in place; returns pivot columns in row order."""
    rows = list(rows)
    rhs = list(rhs) if rhs is not None else None
    pivots = []
    r = 0
    for col in range(n_cols):
        mask = 1 << col
        hit = next((i for i in range(r, len(rows)) if rows[i] & mask), None)
        if hit is None:
            continue
        rows[r], rows[hit] = rows[hit], rows[r]
        if rhs is not None:
            rhs[r], rhs[hit] = rhs[hit], rhs[r]
        for i in range(len(rows)):
            if i != r and rows[i] & mask:
                rows[i] ^= rows[r]
                if rhs is not None:
                    rhs[i] ^= rhs[r]
        pivots.append(col)
        r += 1
        if r == len(rows):
            break
    return rows, rhs, pivots


def f2_rank(m) -> int:
    arr = np.asarray(m)
    if arr.size == 0:
        return 0
    _, _, pivots = _eliminate(pack_rows(arr), arr.shape[1])
    return len(pivots)


def f2_solve(m, rhs) -> np.ndarray | None:
    """A solution ``x`` of ``m x = rhs`` (mod 2), or ``None`` if there is none.

    Free variables are set to 0.
    """
    arr = np.asarray(m, dtype=np.int64)
    b = np.asarray(rhs, dtype=np.int64).reshape(-1) & 1
    if arr.ndim != 2 or arr.shape[0] != b.size:
        raise ValueError(f"shape mismatch: matrix {arr.shape}, rhs {b.shape}")
    n_rows, n_cols = arr.shape
    if n_cols == 0:
        return np.zeros(0, dtype=np.uint8) if not b.any() else None
    rows, out, pivots = _eliminate(pack_rows(arr), n_cols, [int(v) for v in b])
    for i in range(len(pivots), n_rows):
        if out[i]:
            return None
    x = np.zeros(n_cols, dtype=np.uint8)
    for i, col in enumerate(pivots):
        x[col] = out[i]
    return x


def f2_matvec(m, x) -> np.ndarray:
    return (np.asarray(m, dtype=np.int64) @ np.asarray(x, dtype=np.int64)) % 2
