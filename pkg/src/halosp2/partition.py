"""Initial core assignments: BFS block growth and METIS ``.part`` files."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .sgraph import neighborhood
from .errors import CoreOverlapError, CoverageError, EmptyCoreError, PartitionFileError

__all__ = [
    "Violation",
    "validate_cores",
    "raise_for_violation",
    "bfs_block_partition",
    "cores_from_owner",
    "owner_from_cores",
    "import_partition",
    "export_partition",
]


@dataclass(frozen=True)
class Violation:
    kind: str  # "overlap", "coverage", "empty" or "range"
    vertex: int | None
    part: int | None
    message: str


def validate_cores(G, cores):
    """Return ``None`` if ``cores`` is a disjoint cover of ``V(G)``, else the first Violation."""
    owner = np.full(G.n, -1, dtype=np.int64)
    for p, U in enumerate(cores):
        U = np.asarray(list(U) if not isinstance(U, np.ndarray) else U, dtype=np.int64)
        if U.size == 0:
            return Violation("empty", None, p, f"core {p} is empty")
        bad = U[(U < 0) | (U >= G.n)]
        if bad.size:
            v = int(bad[0])
            return Violation("range", v, p, f"vertex {v} of core {p} outside 0..{G.n - 1}")
        for v in U.tolist():
            if owner[v] != -1:
                return Violation(
                    "overlap", v, p, f"vertex {v} is in core {owner[v]} and core {p}"
                )
            owner[v] = p
    missing = np.flatnonzero(owner < 0)
    if missing.size:
        v = int(missing[0])
        return Violation("coverage", v, None, f"vertex {v} is not in any core")
    return None


_ERRORS = {
    "overlap": CoreOverlapError,
    "coverage": CoverageError,
    "empty": EmptyCoreError,
    "range": CoverageError,
}


def raise_for_violation(violation):
    if violation is not None:
        raise _ERRORS[violation.kind](violation.message, violation.vertex, violation.part)


def owner_from_cores(n, cores):
    owner = np.full(n, -1, dtype=np.int64)
    for p, U in enumerate(cores):
        owner[np.asarray(U, dtype=np.int64)] = p
    return owner


def cores_from_owner(owner):
    owner = np.asarray(owner, dtype=np.int64)
    q = int(owner.max()) + 1 if owner.size else 0
    order = np.argsort(owner, kind="stable")
    bounds = np.searchsorted(owner[order], np.arange(q + 1))
    return [order[bounds[p]:bounds[p + 1]] for p in range(q)]


def _farthest_unassigned(G, start, owner):
    """Lowest-numbered vertex in the last BFS level from ``start`` over unassigned vertices."""
    free = owner < 0
    seen = np.zeros(G.n, dtype=bool)
    seen[start] = True
    level = np.array([start], dtype=np.int64)
    while True:
        nxt = neighborhood(G, level)
        nxt = nxt[free[nxt] & ~seen[nxt]]
        if nxt.size == 0:
            return int(level.min())
        seen[nxt] = True
        level = nxt


def bfs_block_partition(G, q, seed=0):
    """Grow ``q`` balanced cores by breadth-first search.

    Part ``p`` targets ``ceil(n/q)`` vertices for the first ``n mod q`` parts
    and ``floor(n/q)`` for the rest. Each part starts from a pseudo-peripheral
    vertex of the unassigned region containing a random unassigned vertex.
    If that region is used up before the target is met, growth restarts from
    a fresh seed, so every core has exactly its target size and no vertex is
    left over. On a banded chain the cores are contiguous index intervals.
    """
    n = G.n
    if q < 2:
        raise ValueError(f"q must be at least 2, got {q}")
    if q > n:
        raise ValueError(f"q={q} exceeds the number of vertices n={n}")
    rng = np.random.default_rng(seed)
    order = rng.permutation(n)
    owner = np.full(n, -1, dtype=np.int64)
    sizes = np.zeros(q, dtype=np.int64)
    base, extra = divmod(n, q)
    targets = [base + 1 if p < extra else base for p in range(q)]

    cursor = 0
    for p in range(q):
        while sizes[p] < targets[p]:
            # (re)seed: the current region is exhausted or the part is new
            while owner[order[cursor]] >= 0:
                cursor += 1
            # double sweep for a pseudo-peripheral start; keep the lower end
            end1 = _farthest_unassigned(G, int(order[cursor]), owner)
            end2 = _farthest_unassigned(G, end1, owner)
            start = min(end1, end2)
            owner[start] = p
            sizes[p] += 1
            queue = deque([start])
            while queue and sizes[p] < targets[p]:
                v = queue.popleft()
                for w in G.neighbors(v).tolist():
                    if owner[w] < 0:
                        owner[w] = p
                        sizes[p] += 1
                        queue.append(w)
                        if sizes[p] == targets[p]:
                            break

    return cores_from_owner(owner)


def export_partition(cores, n, path):
    """Write a METIS-style ``.part`` file: line ``i`` holds the part id of vertex ``i``."""
    owner = owner_from_cores(n, cores)
    if (owner < 0).any():
        raise CoverageError("cannot export a partition that does not cover every vertex")
    Path(path).write_text("".join(f"{p}\n" for p in owner.tolist()))


def import_partition(path, G):
    """Read a ``.part`` file and group vertices into cores by part id."""
    path = Path(path)
    lines = path.read_text().splitlines()
    while lines and not lines[-1].strip():
        lines.pop()
    if len(lines) != G.n:
        raise PartitionFileError(f"{path}: expected {G.n} lines, found {len(lines)}")
    try:
        owner = np.array([int(ln) for ln in lines], dtype=np.int64)
    except ValueError as exc:
        raise PartitionFileError(f"{path}: non-integer part id ({exc})") from None
    if owner.min() < 0:
        raise PartitionFileError(f"{path}: negative part id")
    used = np.unique(owner)
    if used.size != owner.max() + 1:
        gap = int(np.setdiff1d(np.arange(owner.max() + 1), used)[0])
        raise PartitionFileError(f"{path}: part id {gap} is never used")
    return cores_from_owner(owner)
