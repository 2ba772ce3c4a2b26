"""Sparsity graphs, neighborhoods, distance closures and CH-partitions.

A ``SparsityGraph`` keeps sorted adjacency in CSR arrays without self-loops;
every vertex nevertheless carries an implicit loop (nonzero diagonal), so a
neighborhood ``N(U, G)`` always contains ``U`` itself.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .errors import IndexOutOfRangeError, ParseError

__all__ = [
    "SparsityGraph",
    "CHPartition",
    "PartitionMetrics",
    "sparsity_graph",
    "neighborhood",
    "structural_polynomial_graph",
    "build_ch_partition",
    "objective_sum_cubes",
    "partition_metrics",
    "communication_volume",
    "read_metis_graph",
    "write_metis_graph",
]


class SparsityGraph:
    """Undirected graph on vertices ``0..n-1`` with implicit self-loops."""

    __slots__ = ("n", "indptr", "indices", "_fingerprint", "_csr")

    def __init__(self, n, indptr, indices):
        self.n = int(n)
        self.indptr = np.asarray(indptr, dtype=np.int64)
        self.indices = np.asarray(indices, dtype=np.int64)
        self._fingerprint = None
        self._csr = None

    @classmethod
    def from_edges(cls, n, edges):
        """Build from an iterable of ``(i, j)`` pairs; loops and repeats are ignored."""
        e = np.asarray(list(edges), dtype=np.int64).reshape(-1, 2)
        if e.size and (e.min() < 0 or e.max() >= n):
            raise IndexOutOfRangeError(f"edge endpoint outside 0..{n - 1}")
        e = e[e[:, 0] != e[:, 1]]
        r = np.concatenate([e[:, 0], e[:, 1]])
        c = np.concatenate([e[:, 1], e[:, 0]])
        return cls._from_pairs(n, r, c)

    @classmethod
    def from_scipy(cls, S):
        """Graph of the off-diagonal structural pattern of ``S``."""
        S = sp.coo_matrix(S)
        keep = S.row != S.col
        r, c = S.row[keep], S.col[keep]
        return cls._from_pairs(S.shape[0], np.concatenate([r, c]), np.concatenate([c, r]))

    @classmethod
    def _from_pairs(cls, n, r, c):
        m = sp.csr_matrix((np.ones(r.size, dtype=np.int8), (r, c)), shape=(n, n))
        m.sum_duplicates()
        m.sort_indices()
        return cls(n, m.indptr, m.indices)

    @property
    def n_edges(self):
        """Number of undirected non-loop edges."""
        return int(self.indices.size // 2)

    def neighbors(self, v):
        """Sorted neighbors of ``v`` excluding ``v`` itself."""
        return self.indices[self.indptr[v]:self.indptr[v + 1]]

    def degrees(self):
        return np.diff(self.indptr)

    def edges(self):
        """Array of ``(i, j)`` with ``i < j``."""
        r = np.repeat(np.arange(self.n), self.degrees())
        keep = r < self.indices
        return np.column_stack([r[keep], self.indices[keep]])

    def to_scipy(self, loops=False):
        """Boolean adjacency matrix, optionally with the implicit loops added."""
        if self._csr is None:
            data = np.ones(self.indices.size, dtype=bool)
            self._csr = sp.csr_matrix((data, self.indices, self.indptr), shape=(self.n, self.n))
        if loops:
            return (self._csr + sp.identity(self.n, dtype=bool, format="csr")).tocsr()
        return self._csr

    @property
    def fingerprint(self):
        """Short digest identifying the edge set."""
        if self._fingerprint is None:
            h = hashlib.sha1()
            h.update(np.int64(self.n).tobytes())
            h.update(self.indptr.tobytes())
            h.update(self.indices.tobytes())
            self._fingerprint = h.hexdigest()[:16]
        return self._fingerprint

    def is_subgraph_of(self, other):
        if self.n != other.n:
            return False
        a = self.to_scipy().astype(np.int8)
        b = other.to_scipy().astype(np.int8)
        return (a - a.multiply(b)).nnz == 0

    def __eq__(self, other):
        if not isinstance(other, SparsityGraph):
            return NotImplemented
        return (
            self.n == other.n
            and np.array_equal(self.indptr, other.indptr)
            and np.array_equal(self.indices, other.indices)
        )

    __hash__ = None

    def __repr__(self):
        return f"SparsityGraph(n={self.n}, edges={self.n_edges})"


def sparsity_graph(M):
    """Edge ``(i, j)``, ``i != j``, wherever ``M`` stores a nonzero value."""
    keep = (M.rows != M.cols) & (M.values != 0)
    r, c = M.rows[keep], M.cols[keep]
    return SparsityGraph._from_pairs(M.n, np.concatenate([r, c]), np.concatenate([c, r]))


def neighborhood(G, U):
    """Union of closed neighborhoods of the vertices in ``U`` (sorted array)."""
    U = np.unique(np.asarray(list(U) if not isinstance(U, np.ndarray) else U, dtype=np.int64))
    if U.size and (U[0] < 0 or U[-1] >= G.n):
        raise IndexOutOfRangeError(f"vertex outside 0..{G.n - 1}")
    if U.size == 0:
        return U
    starts, ends = G.indptr[U], G.indptr[U + 1]
    lens = ends - starts
    idx = np.repeat(starts - np.cumsum(lens) + lens, lens) + np.arange(lens.sum())
    return np.union1d(U, G.indices[idx])


def structural_polynomial_graph(G, s):
    """Distance-``2**s`` closure of ``G``: worst-case pattern of a degree-``2**s`` polynomial.

    Computed as a level-synchronous BFS from every vertex at once, stopping
    early once no frontier remains.
    """
    if s < 0:
        raise ValueError("s must be non-negative")
    if s == 0:
        return G
    adj = G.to_scipy().astype(np.int32)
    visited = sp.identity(G.n, dtype=np.int32, format="csr")
    frontier = visited
    for _ in range(2 ** s):
        reached = frontier @ adj
        reached.data[:] = 1
        new = reached - reached.multiply(visited)
        new.eliminate_zeros()
        if new.nnz == 0:
            break
        visited = visited + new
        frontier = new
    return SparsityGraph.from_scipy(visited)


@dataclass(frozen=True, eq=False)
class CHPartition:
    """Disjoint cores covering the vertex set plus their halos in a graph H."""

    n: int
    cores: tuple
    halos: tuple
    halo_graph_id: str
    owner: np.ndarray = field(repr=False, compare=False)

    @property
    def q(self):
        return len(self.cores)

    @property
    def core_sizes(self):
        return np.array([c.size for c in self.cores], dtype=np.int64)

    @property
    def halo_sizes(self):
        return np.array([h.size for h in self.halos], dtype=np.int64)

    @property
    def part_sizes(self):
        return self.core_sizes + self.halo_sizes

    def __eq__(self, other):
        if not isinstance(other, CHPartition):
            return NotImplemented
        return (
            self.n == other.n
            and self.halo_graph_id == other.halo_graph_id
            and self.q == other.q
            and all(np.array_equal(a, b) for a, b in zip(self.cores, other.cores))
            and all(np.array_equal(a, b) for a, b in zip(self.halos, other.halos))
        )

    __hash__ = None

    def local_vertices(self, i):
        """Core vertices (ascending) followed by halo vertices (ascending)."""
        return np.concatenate([self.cores[i], self.halos[i]])


def build_ch_partition(H, cores):
    """Attach halos ``N(U_i, H) \\ U_i`` to validated cores."""
    from .partition import raise_for_violation, validate_cores

    cores = tuple(np.unique(np.asarray(list(c), dtype=np.int64)) for c in cores)
    raise_for_violation(validate_cores(H, cores))
    halos = tuple(np.setdiff1d(neighborhood(H, U), U, assume_unique=True) for U in cores)
    owner = np.empty(H.n, dtype=np.int64)
    for i, U in enumerate(cores):
        owner[U] = i
    owner.setflags(write=False)
    return CHPartition(H.n, cores, halos, H.fingerprint, owner)


def objective_sum_cubes(P):
    """Exact integer sum of ``(c_i + h_i)**3`` over parts."""
    return sum(int(s) ** 3 for s in P.part_sizes)


@dataclass(frozen=True)
class PartitionMetrics:
    sum_cubes: int
    min_part: int
    max_part: int
    nno: float
    mmpn: float
    wall_time_s: float

    def as_row(self):
        return {
            "sum": self.sum_cubes,
            "min": self.min_part,
            "max": self.max_part,
            "time_s": self.wall_time_s,
            "nno": self.nno,
            "mmpn": self.mmpn,
        }


def partition_metrics(P, elapsed=0.0):
    sizes = P.part_sizes
    total = objective_sum_cubes(P)
    lo, hi = int(sizes.min()), int(sizes.max())
    return PartitionMetrics(
        sum_cubes=total,
        min_part=lo,
        max_part=hi,
        nno=total / P.n ** 3,
        mmpn=(hi - lo) / P.n,
        wall_time_s=float(elapsed),
    )


def communication_volume(G, owner):
    """Sum over vertices of the number of foreign parts holding a neighbor.

    ``owner[v]`` is the part index of vertex ``v``.
    """
    owner = np.asarray(owner)
    total = 0
    for v in range(G.n):
        parts = np.unique(owner[G.neighbors(v)])
        total += int(np.count_nonzero(parts != owner[v]))
    return total


# METIS graph format ------------------------------------------------------

def write_metis_graph(G, path):
    """Unweighted METIS graph file: header ``n m`` then 1-based adjacency lines."""
    path = Path(path)
    with path.open("w") as fh:
        fh.write(f"{G.n} {G.n_edges}\n")
        for v in range(G.n):
            fh.write(" ".join(str(int(w) + 1) for w in G.neighbors(v)))
            fh.write("\n")


def read_metis_graph(path):
    path = Path(path)
    with path.open() as fh:
        lines = [ln for ln in fh.read().splitlines() if not ln.lstrip().startswith("%")]
    if not lines:
        raise ParseError(f"{path}: empty graph file")
    head = lines[0].split()
    try:
        n, m = int(head[0]), int(head[1])
    except (ValueError, IndexError):
        raise ParseError(f"{path}: bad header {lines[0]!r}") from None
    if len(head) > 2 and int(head[2]) != 0:
        raise ParseError(f"{path}: weighted METIS graphs are not supported")
    body = lines[1:]
    # trailing blank lines beyond n are tolerated
    while len(body) > n and not body[-1].strip():
        body.pop()
    if len(body) != n:
        raise ParseError(f"{path}: expected {n} adjacency lines, found {len(body)}")
    rows, cols = [], []
    for v, line in enumerate(body):
        for tok in line.split():
            w = int(tok) - 1
            if not 0 <= w < n:
                raise IndexOutOfRangeError(f"{path}: vertex {v + 1} lists neighbor {w + 1}")
            if w == v:
                raise ParseError(f"{path}: self-loop on vertex {v + 1}")
            rows.append(v)
            cols.append(w)
    r = np.asarray(rows, dtype=np.int64)
    c = np.asarray(cols, dtype=np.int64)
    G = SparsityGraph._from_pairs(n, r, c)
    if G.indices.size != r.size:
        raise ParseError(f"{path}: duplicate neighbor entries")
    if not (G.to_scipy() != G.to_scipy().T).nnz == 0:
        raise ParseError(f"{path}: adjacency is not symmetric")
    if G.n_edges != m:
        raise ParseError(f"{path}: header announces {m} edges, found {G.n_edges}")
    return G
