"""Structure of Boolean query matrices.

Covers recognition of Equality matrices (``M(i, j) = [a(i) == b(j)]``), exact
VC dimension for small widths, the embedding of an arbitrary Boolean matrix
into a conjunction of NAND queries, and bounded membership tests for the
closure of a base matrix under submatrices, permutations and duplication.

Matrices are 2-D numpy arrays (or anything ``np.asarray`` accepts) with
entries in {0, 1}. The text format is one row per line, cells written as
``0``/``1`` with optional whitespace; blank lines and ``#`` comments are
skipped.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import EqQueryLabeling, Table
from .errors import FeasibilityError, InputDomainError

NAND = ((1, 1), (1, 0))  # NAND[u - 1][v - 1] for labels u, v in {1, 2}

VC_MAX_WIDTH = 24


def as_matrix(m) -> np.ndarray:
    arr = np.asarray(m)
    if arr.ndim != 2:
        raise InputDomainError(f"expected a 2-D matrix, got shape {arr.shape}")
    if arr.size and not np.isin(arr, (0, 1)).all():
        raise InputDomainError("query matrices must be 0/1 valued")
    return arr.astype(np.uint8)


@dataclass(frozen=True)
class BlockyResult:
    """Outcome of :func:`is_blocky`.

    ``witness`` reproduces the matrix when blocky. Otherwise ``conflict`` names
    two rows whose supports overlap without being equal.
    """

    blocky: bool
    witness: EqQueryLabeling | None = None
    conflict: tuple[int, int] | None = None

    def __bool__(self) -> bool:
        return self.blocky


def is_blocky(m) -> BlockyResult:
    """Decide whether ``m`` is an Equality matrix, constructively.

    Row ``i`` gets the label of its support; column ``j`` the label of the
    unique support containing it. Empty rows get a label no column uses.
    """
    mat = as_matrix(m)
    rows, cols = mat.shape
    support_id: dict[bytes, int] = {}
    row_label = [0] * rows
    col_owner = [-1] * cols
    for i in range(rows):
        row = mat[i]
        if not row.any():
            continue
        key = row.tobytes()
        sid = support_id.get(key)
        if sid is None:
            sid = len(support_id) + 1
            support_id[key] = sid
        row_label[i] = sid
        for j in np.flatnonzero(row):
            owner = col_owner[j]
            if owner == -1:
                col_owner[j] = i
            elif row_label[owner] != sid:
                return BlockyResult(False, conflict=(int(owner), i))
    unused = len(support_id) + 1
    col_label = [row_label[o] if o >= 0 else unused for o in col_owner]
    return BlockyResult(True, witness=EqQueryLabeling(Table(tuple(row_label)), Table(tuple(col_label))))


def labeling_matrix(lab: EqQueryLabeling, rows: int, cols: int) -> np.ndarray:
    """Materialize ``[a(i) == b(j)]`` over ``rows x cols`` integer indices."""
    a = np.array([lab.a(i) for i in range(rows)])
    b = np.array([lab.b(j) for j in range(cols)])
    return (a[:, None] == b[None, :]).astype(np.uint8)


def vc_dimension(m) -> int:
    """Largest number of columns shattered by the rows, by exhaustive search."""
    mat = as_matrix(m)
    rows, cols = mat.shape
    if cols > VC_MAX_WIDTH:
        raise FeasibilityError(f"width {cols} exceeds the brute-force limit of {VC_MAX_WIDTH}")
    distinct = np.unique(mat, axis=0) if rows else mat
    best = 0
    for d in range(1, cols + 1):
        if (1 << d) > len(distinct):
            break
        weights = 1 << np.arange(d)
        found = False
        for subset in itertools.combinations(range(cols), d):
            codes = distinct[:, subset].astype(np.int64) @ weights
            if np.unique(codes).size == (1 << d):
                found = True
                break
        if not found:
            # subsets of a shattered set are shattered, so larger d cannot succeed
            break
        best = d
    return best


def nand_embed(m) -> tuple[list[tuple[int, ...]], list[tuple[int, ...]]]:
    """Label vectors in ``{1, 2}^N`` whose coordinatewise NAND conjunction is ``m``.

    ``v(x)_j = 1`` when ``m[x, j] == 1`` and ``2`` otherwise; ``w(y)_j = 2``
    exactly when ``j == y``. Coordinate ``y`` then evaluates ``m[x, y]`` and
    every other coordinate evaluates to 1.
    """
    mat = as_matrix(m)
    rows, cols = mat.shape
    v = [tuple(1 if mat[x, j] else 2 for j in range(cols)) for x in range(rows)]
    w = [tuple(2 if j == y else 1 for j in range(cols)) for y in range(cols)]
    return v, w


def conjunction_matrix(v, w) -> np.ndarray:
    """Evaluate ``AND_i NAND(v(x)_i, w(y)_i)`` on every pair of label vectors."""
    va = np.asarray(v, dtype=np.int64) - 1
    wa = np.asarray(w, dtype=np.int64) - 1
    if va.ndim != 2 or wa.ndim != 2 or va.shape[1] != wa.shape[1]:
        raise InputDomainError("label vectors must share one length")
    if ((va < 0) | (va > 1)).any() or ((wa < 0) | (wa > 1)).any():
        raise InputDomainError("labels must lie in {1, 2}")
    table = np.array(NAND, dtype=np.uint8)
    cells = table[va[:, None, :], wa[None, :, :]]
    return cells.all(axis=2).astype(np.uint8)


def verify_embedding(m, v, w) -> bool:
    return bool(np.array_equal(conjunction_matrix(v, w), as_matrix(m)))


def closure_member(m, base, max_base: tuple[int, int] = (4, 4), max_m: tuple[int, int] = (6, 6)) -> bool:
    """Whether ``m`` arises from ``base`` by submatrices, permutations and duplication.

    Equivalent to the existence of maps ``f`` on rows and ``g`` on columns with
    ``m[i, j] == base[f(i), g(j)]``. Row maps are enumerated; each column then
    needs some base column consistent with the chosen rows.
    """
    mat, bas = as_matrix(m), as_matrix(base)
    if bas.shape[0] > max_base[0] or bas.shape[1] > max_base[1]:
        raise FeasibilityError(f"base of shape {bas.shape} exceeds limit {max_base}")
    if mat.shape[0] > max_m[0] or mat.shape[1] > max_m[1]:
        raise FeasibilityError(f"matrix of shape {mat.shape} exceeds limit {max_m}")
    rows, cols = mat.shape
    if rows == 0 or cols == 0:
        return True
    if bas.size == 0:
        return False
    for f in itertools.product(range(bas.shape[0]), repeat=rows):
        sub = bas[list(f)]  # rows x base_cols
        # column j is matched by base column c iff sub[:, c] equals mat[:, j]
        match = (sub[:, None, :] == mat[:, :, None]).all(axis=0)
        if match.any(axis=1).all():
            return True
    return False


def read_grid(source) -> np.ndarray:
    """Parse a 0/1 grid from text or from a path."""
    if isinstance(source, Path) or (isinstance(source, str) and "\n" not in source and Path(source).exists()):
        text = Path(source).read_text()
    else:
        text = source
    rows = []
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].replace(" ", "").replace("\t", "").replace(",", "")
        if not line:
            continue
        if set(line) - {"0", "1"}:
            raise InputDomainError(f"grid row {raw!r} contains characters other than 0/1")
        rows.append([int(c) for c in line])
    if not rows:
        raise InputDomainError("empty grid")
    if len({len(r) for r in rows}) != 1:
        raise InputDomainError("grid rows have different lengths")
    return np.array(rows, dtype=np.uint8)


def write_grid(m) -> str:
    mat = as_matrix(m)
    return "".join("".join(str(int(c)) for c in row) + "\n" for row in mat)
