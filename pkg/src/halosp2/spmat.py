"""Symmetric sparse matrices, thresholding, trace and Matrix Market I/O.

Only the upper triangle (``i <= j``) is stored. Every diagonal entry is
always present, possibly as an explicit structural zero, so that every
vertex of the sparsity graph carries a self-loop.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .errors import (
    DuplicateEntryError,
    IndexOutOfRangeError,
    MalformedHeaderError,
    NotSymmetricError,
    ParseError,
)

__all__ = [
    "SymSparseMatrix",
    "threshold",
    "trace",
    "load_matrix_market",
    "save_matrix_market",
]


class SymSparseMatrix:
    """Real symmetric sparse matrix with a fully stored diagonal.

    Entries are kept as three parallel arrays ``rows``, ``cols``, ``values``
    in row-major order with ``rows <= cols``. Instances are treated as
    immutable; the full (both triangles) CSR form is built lazily and cached.
    """

    __slots__ = ("n", "rows", "cols", "values", "structural_diagonal", "_csr")

    def __init__(self, n, rows, cols, values, structural_diagonal=None):
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        values = np.asarray(values, dtype=np.float64)
        if not (rows.shape == cols.shape == values.shape):
            raise ValueError("rows, cols and values must have equal length")
        if rows.size and (rows.min() < 0 or cols.max() >= n):
            raise IndexOutOfRangeError(f"entry index outside 0..{n - 1}")
        if np.any(rows > cols):
            raise ValueError("only upper-triangle entries (i <= j) may be stored")
        order = np.lexsort((cols, rows))
        rows, cols, values = rows[order], cols[order], values[order]
        if rows.size > 1:
            dup = (rows[1:] == rows[:-1]) & (cols[1:] == cols[:-1])
            if dup.any():
                k = int(np.flatnonzero(dup)[0])
                raise DuplicateEntryError(f"duplicate entry ({rows[k]}, {cols[k]})")
        on_diag = rows == cols
        if np.count_nonzero(on_diag) != n:
            raise ValueError("every diagonal entry must be stored explicitly")
        self.n = int(n)
        self.rows = rows
        self.cols = cols
        self.values = values
        if structural_diagonal is None:
            structural_diagonal = np.zeros(n, dtype=bool)
        self.structural_diagonal = np.asarray(structural_diagonal, dtype=bool)
        self._csr = None

    # construction -----------------------------------------------------

    @classmethod
    def from_entries(cls, n, entries):
        """Build from ``(i, j, value)`` triples, in either triangle.

        Missing diagonal entries are inserted as structural zeros.
        """
        seen = {}
        for i, j, v in entries:
            i, j = int(i), int(j)
            if not (0 <= i < n and 0 <= j < n):
                raise IndexOutOfRangeError(f"entry ({i}, {j}) outside a {n}x{n} matrix")
            key = (i, j) if i <= j else (j, i)
            if key in seen:
                raise DuplicateEntryError(f"duplicate entry {key}")
            seen[key] = float(v)
        structural = np.ones(n, dtype=bool)
        for (i, j) in seen:
            if i == j:
                structural[i] = False
        for i in np.flatnonzero(structural):
            seen[(int(i), int(i))] = 0.0
        if seen:
            keys = np.array(list(seen.keys()), dtype=np.int64)
            vals = np.fromiter(seen.values(), dtype=np.float64, count=len(seen))
        else:
            keys = np.empty((0, 2), dtype=np.int64)
            vals = np.empty(0)
        return cls(n, keys[:, 0], keys[:, 1], vals, structural)

    @classmethod
    def from_scipy(cls, S, drop_zeros=True):
        """Build from a symmetric scipy sparse matrix (upper triangle is read)."""
        S = sp.coo_matrix(S)
        n = S.shape[0]
        if S.shape != (n, n):
            raise ValueError("matrix must be square")
        keep = S.row <= S.col
        r, c, v = S.row[keep], S.col[keep], S.data[keep]
        if drop_zeros:
            nz = (v != 0) | (r == c)
            r, c, v = r[nz], c[nz], v[nz]
        return cls._with_diagonal(n, r, c, v)

    @classmethod
    def from_dense(cls, a):
        """Build from a dense symmetric array; zero off-diagonals are not stored."""
        a = np.asarray(a, dtype=np.float64)
        n = a.shape[0]
        r, c = np.nonzero(np.triu(a, 1))
        d = np.arange(n)
        rows = np.concatenate([d, r])
        cols = np.concatenate([d, c])
        return cls(n, rows, cols, a[rows, cols])

    @classmethod
    def identity(cls, n, scale=1.0):
        d = np.arange(n)
        return cls(n, d, d, np.full(n, float(scale)))

    @classmethod
    def _with_diagonal(cls, n, r, c, v):
        r = np.asarray(r, dtype=np.int64)
        c = np.asarray(c, dtype=np.int64)
        v = np.asarray(v, dtype=np.float64)
        has = np.zeros(n, dtype=bool)
        has[r[r == c]] = True
        missing = np.flatnonzero(~has)
        if missing.size:
            r = np.concatenate([r, missing])
            c = np.concatenate([c, missing])
            v = np.concatenate([v, np.zeros(missing.size)])
        return cls(n, r, c, v, ~has)

    # views ------------------------------------------------------------

    @property
    def nnz(self):
        """Number of stored upper-triangle entries (diagonal included)."""
        return int(self.values.size)

    def diagonal(self):
        d = np.zeros(self.n)
        on = self.rows == self.cols
        d[self.rows[on]] = self.values[on]
        return d

    def entries(self):
        """Iterate over stored ``(i, j, value)`` with ``i <= j``."""
        for i, j, v in zip(self.rows.tolist(), self.cols.tolist(), self.values.tolist()):
            yield i, j, v

    def to_scipy(self):
        """Full symmetric CSR matrix, explicit diagonal zeros preserved."""
        if self._csr is None:
            off = self.rows != self.cols
            r = np.concatenate([self.rows, self.cols[off]])
            c = np.concatenate([self.cols, self.rows[off]])
            v = np.concatenate([self.values, self.values[off]])
            order = np.lexsort((c, r))
            r, c, v = r[order], c[order], v[order]
            indptr = np.zeros(self.n + 1, dtype=np.int64)
            np.add.at(indptr, r + 1, 1)
            indptr = np.cumsum(indptr)
            m = sp.csr_matrix((v, c, indptr), shape=(self.n, self.n))
            m.has_sorted_indices = True
            self._csr = m
        return self._csr

    def to_dense(self):
        a = np.zeros((self.n, self.n))
        a[self.rows, self.cols] = self.values
        a[self.cols, self.rows] = self.values
        return a

    def row(self, i):
        """Column indices and values of row ``i`` (both triangles)."""
        m = self.to_scipy()
        lo, hi = m.indptr[i], m.indptr[i + 1]
        return m.indices[lo:hi], m.data[lo:hi]

    def __eq__(self, other):
        if not isinstance(other, SymSparseMatrix):
            return NotImplemented
        return (
            self.n == other.n
            and np.array_equal(self.rows, other.rows)
            and np.array_equal(self.cols, other.cols)
            and np.array_equal(self.values, other.values)
        )

    __hash__ = None

    def __repr__(self):
        return f"SymSparseMatrix(n={self.n}, nnz={self.nnz})"


def threshold(M, tau):
    """Drop off-diagonal entries with ``|value| < tau``.

    Diagonal entries are never removed, so ``tau = 0`` is the identity.
    """
    if tau < 0:
        raise ValueError(f"threshold must be non-negative, got {tau}")
    keep = (M.rows == M.cols) | (np.abs(M.values) >= tau)
    if keep.all():
        return M
    return SymSparseMatrix(
        M.n, M.rows[keep], M.cols[keep], M.values[keep], M.structural_diagonal
    )


def trace(M):
    """Sum of the diagonal of a SymSparseMatrix or a dense array."""
    if isinstance(M, SymSparseMatrix):
        return float(M.diagonal().sum())
    return float(np.trace(np.asarray(M)))


# Matrix Market -----------------------------------------------------------

_BANNER = "%%matrixmarket"


def save_matrix_market(M, path, comment=None):
    """Write ``M`` in coordinate real symmetric format (lower triangle, 1-based).

    Values are written with 17 significant digits so a reload is exact.
    """
    path = Path(path)
    with path.open("w") as fh:
        fh.write("%%MatrixMarket matrix coordinate real symmetric\n")
        if comment:
            for line in str(comment).splitlines():
                fh.write(f"% {line}\n")
        fh.write(f"{M.n} {M.n} {M.nnz}\n")
        # stored (i <= j) is written as (row=j, col=i): lower triangle
        order = np.lexsort((M.rows, M.cols))
        for k in order:
            fh.write(f"{M.cols[k] + 1} {M.rows[k] + 1} {M.values[k]:.17g}\n")


def load_matrix_market(path):
    """Read a coordinate real symmetric Matrix Market file."""
    path = Path(path)
    with path.open() as fh:
        header = fh.readline()
        tokens = header.strip().lower().split()
        if len(tokens) != 5 or tokens[0] != _BANNER or tokens[1] != "matrix":
            raise MalformedHeaderError(f"{path}: not a Matrix Market header: {header.strip()!r}")
        if tokens[2] != "coordinate":
            raise MalformedHeaderError(f"{path}: only coordinate format is supported")
        if tokens[3] not in ("real", "integer"):
            raise MalformedHeaderError(f"{path}: unsupported field {tokens[3]!r}")
        if tokens[4] != "symmetric":
            raise NotSymmetricError(f"{path}: matrix declared {tokens[4]!r}, expected symmetric")

        line = fh.readline()
        while line and line.lstrip().startswith("%"):
            line = fh.readline()
        size = line.split()
        try:
            nr, nc, nnz = (int(t) for t in size)
        except ValueError:
            raise MalformedHeaderError(f"{path}: bad size line {line.strip()!r}") from None
        if nr != nc:
            raise MalformedHeaderError(f"{path}: symmetric matrix must be square, got {nr}x{nc}")

        entries = []
        for lineno, line in enumerate(fh, start=1):
            parts = line.split()
            if not parts or parts[0].startswith("%"):
                continue
            if len(parts) != 3:
                raise ParseError(f"{path}: entry line {lineno} malformed: {line.strip()!r}")
            i, j = int(parts[0]) - 1, int(parts[1]) - 1
            if not (0 <= i < nr and 0 <= j < nr):
                raise IndexOutOfRangeError(
                    f"{path}: entry ({i + 1}, {j + 1}) outside a {nr}x{nr} matrix"
                )
            entries.append((i, j, float(parts[2])))
    if len(entries) != nnz:
        raise ParseError(f"{path}: header announces {nnz} entries, found {len(entries)}")
    return SymSparseMatrix.from_entries(nr, entries)
