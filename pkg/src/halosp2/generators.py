"""Deterministic synthetic test systems.

Each generator returns a SymSparseMatrix with a nonzero diagonal. ``chain``
with ``bandwidth=24`` and ``n=12288`` has the size and edge density of a
long, almost one-dimensional polymer chain (about 24 neighbors per side).
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp
from scipy.spatial import cKDTree

from .spmat import SymSparseMatrix

__all__ = [
    "KINDS",
    "gen_system",
    "chain",
    "grid2d",
    "random_geometric",
    "banded",
    "random_symmetric",
    "gapped_hamiltonian",
]

KINDS = ("chain", "grid2d", "random-geometric", "banded")


def _onsite(rng, n):
    # alternating sign keeps the diagonal away from zero
    sign = np.where(np.arange(n) % 2 == 0, 1.0, -1.0)
    return sign * (0.5 + 0.1 * rng.random(n))


def _from_pairs(n, r, c, v, diag):
    d = np.arange(n)
    return SymSparseMatrix(
        n,
        np.concatenate([d, r]),
        np.concatenate([d, c]),
        np.concatenate([diag, v]),
    )


def chain(n, bandwidth=1, seed=0):
    """Banded chain: every vertex couples to the ``bandwidth`` vertices on each side."""
    if n < 1 or bandwidth < 1:
        raise ValueError("chain needs n >= 1 and bandwidth >= 1")
    rng = np.random.default_rng(seed)
    rs, cs, vs = [], [], []
    for d in range(1, min(bandwidth, n - 1) + 1):
        i = np.arange(n - d)
        rs.append(i)
        cs.append(i + d)
        vs.append(-(0.25 / d) * (1.0 + 0.05 * rng.standard_normal(n - d)))
    if rs:
        r, c, v = np.concatenate(rs), np.concatenate(cs), np.concatenate(vs)
    else:
        r = c = np.empty(0, dtype=np.int64)
        v = np.empty(0)
    return _from_pairs(n, r, c, v, _onsite(rng, n))


def grid2d(nx, ny=None, seed=0):
    """Nearest-neighbor square lattice with ``nx * ny`` sites."""
    ny = nx if ny is None else ny
    if nx < 1 or ny < 1:
        raise ValueError("grid2d needs positive dimensions")
    rng = np.random.default_rng(seed)
    idx = np.arange(nx * ny).reshape(nx, ny)
    r = np.concatenate([idx[:-1, :].ravel(), idx[:, :-1].ravel()])
    c = np.concatenate([idx[1:, :].ravel(), idx[:, 1:].ravel()])
    v = -0.25 * (1.0 + 0.05 * rng.standard_normal(r.size))
    return _from_pairs(nx * ny, r, c, v, _onsite(rng, nx * ny))


def random_geometric(n, radius=None, dim=2, seed=0):
    """Points uniform in the unit cube, coupled when closer than ``radius``."""
    if n < 1:
        raise ValueError("random-geometric needs n >= 1")
    rng = np.random.default_rng(seed)
    if radius is None:
        # about eight neighbors on average in two dimensions
        radius = float(np.sqrt(8.0 / (np.pi * n)))
    pts = rng.random((n, dim))
    pairs = cKDTree(pts).query_pairs(radius, output_type="ndarray")
    pairs = pairs[np.lexsort((pairs[:, 1], pairs[:, 0]))]
    r, c = pairs[:, 0].astype(np.int64), pairs[:, 1].astype(np.int64)
    dist = np.linalg.norm(pts[r] - pts[c], axis=1)
    v = -0.25 * np.exp(-dist / radius)
    return _from_pairs(n, r, c, v, _onsite(rng, n))


def banded(n, bandwidth=3, density=1.0, seed=0):
    """Random symmetric band matrix; each in-band entry kept with probability ``density``."""
    if n < 1 or bandwidth < 0 or not 0 < density <= 1:
        raise ValueError("banded needs n >= 1, bandwidth >= 0 and 0 < density <= 1")
    rng = np.random.default_rng(seed)
    rs, cs = [], []
    for d in range(1, min(bandwidth, n - 1) + 1):
        i = np.arange(n - d)
        keep = rng.random(n - d) < density
        rs.append(i[keep])
        cs.append(i[keep] + d)
    r = np.concatenate(rs) if rs else np.empty(0, dtype=np.int64)
    c = np.concatenate(cs) if cs else np.empty(0, dtype=np.int64)
    v = 0.1 * rng.standard_normal(r.size)
    return _from_pairs(n, r, c, v, _onsite(rng, n))


def gen_system(kind, n, seed=0, **params):
    """Dispatch on ``kind``; ``grid2d`` takes ``nx``/``ny`` or a square ``n``."""
    if kind == "chain":
        return chain(n, params.get("bandwidth", 1), seed)
    if kind == "grid2d":
        nx, ny = params.get("nx"), params.get("ny")
        if nx is None:
            side = int(round(np.sqrt(n)))
            if side * side != n:
                raise ValueError(f"grid2d needs a square n or explicit nx/ny, got n={n}")
            nx = ny = side
        return grid2d(nx, ny if ny is not None else nx, seed)
    if kind == "random-geometric":
        return random_geometric(n, params.get("radius"), params.get("dim", 2), seed)
    if kind == "banded":
        return banded(n, params.get("bandwidth", 3), params.get("density", 1.0), seed)
    raise ValueError(f"unknown system kind {kind!r}; choose from {', '.join(KINDS)}")


def random_symmetric(n, density, seed=0, scale=1.0):
    """Random sparse symmetric matrix with a nonzero diagonal.

    About ``density * n * n`` off-diagonal positions are filled; the
    diagonal is drawn away from zero.
    """
    rng = np.random.default_rng(seed)
    m = sp.random(n, n, density=density / 2.0, random_state=rng, format="coo",
                  data_rvs=lambda k: rng.uniform(-1.0, 1.0, k))
    m = sp.triu(m + m.T, k=1, format="coo")
    m.sum_duplicates()
    diag = rng.uniform(0.5, 1.5, n) * rng.choice([-1.0, 1.0], n)
    return _from_pairs(n, m.row.astype(np.int64), m.col.astype(np.int64),
                       scale * m.data, scale * diag)


def gapped_hamiltonian(n, nocc, gap=0.5, seed=0):
    """Dense symmetric matrix whose ``nocc`` lowest eigenvalues lie below ``-gap/2``.

    Returns ``(H, eigenvalues, eigenvectors)``; eigenvalues ascend within [-1, 1].
    """
    rng = np.random.default_rng(seed)
    low = -rng.uniform(gap / 2.0, 1.0, nocc)
    high = rng.uniform(gap / 2.0, 1.0, n - nocc)
    evals = np.sort(np.concatenate([low, high]))
    Q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    H = (Q * evals) @ Q.T
    H = 0.5 * (H + H.T)
    return SymSparseMatrix.from_dense(H), evals, Q
