"""Simulated-annealing refinement of CH-partitions for the sum-of-cubes cost.

A move takes a halo vertex ``w`` of part ``b`` that is joined to one of
``b``'s core vertices, and transfers ``w`` from the core of its current part
``a`` into the core of ``b``. Only the halos of ``a`` and ``b`` can change,
because a halo depends on its own core alone.
"""

from __future__ import annotations

import csv
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import IllegalMoveError
from .partition import cores_from_owner
from .sgraph import build_ch_partition, objective_sum_cubes

__all__ = [
    "SAConfig",
    "SAStep",
    "SAResult",
    "reciprocal_temperature",
    "accept_probability",
    "sa_delta",
    "sa_refine",
    "write_trace_csv",
]

TRACE_COLUMNS = [
    "iteration", "part", "vertex", "delta", "temperature",
    "accepted", "objective", "best_objective",
]


def reciprocal_temperature(i):
    return 1.0 / i


_SCHEDULES = {"reciprocal": reciprocal_temperature}


@dataclass(frozen=True)
class SAConfig:
    iterations: int = 100
    seed: int = 0
    temperature: object = "reciprocal"
    max_resample: int = 64
    check: bool = False

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError("iterations must be at least 1")
        if not callable(self.temperature) and self.temperature not in _SCHEDULES:
            raise ValueError(f"unknown temperature schedule {self.temperature!r}")


@dataclass(frozen=True)
class SAStep:
    iteration: int
    part: int
    vertex: int
    delta: int
    temperature: float
    accepted: bool
    objective: int
    best_objective: int


@dataclass
class SAResult:
    partition: object
    trace: list
    final_partition: object = None
    initial_objective: int = 0
    best_objective: int = 0
    elapsed_s: float = 0.0
    extra: dict = field(default_factory=dict)

    def __iter__(self):
        return iter((self.partition, self.trace))


def accept_probability(delta, temperature):
    """``min(1, exp(-delta / temperature))``."""
    if delta < 0:
        return 1.0
    return math.exp(-delta / temperature)


class _State:
    """Mutable owner array plus per-part core-neighbor counts.

    ``count[p, x]`` is the number of neighbors of ``x`` (loops excluded)
    whose core is ``p``; ``x`` is a halo vertex of ``p`` exactly when the
    count is positive and ``owner[x] != p``.
    """

    def __init__(self, G, owner, q):
        self.G = G
        self.q = q
        self.owner = np.array(owner, dtype=np.int64)
        self.core = np.bincount(self.owner, minlength=q).astype(np.int64)
        src = np.repeat(np.arange(G.n), G.degrees())
        self.count = np.zeros((q, G.n), dtype=np.int32)
        np.add.at(self.count, (self.owner[src], G.indices), 1)
        halo = (self.count > 0) & (self.owner[None, :] != np.arange(q)[:, None])
        self.halo = halo.sum(axis=1).astype(np.int64)
        self.objective = int(sum(int(c + h) ** 3 for c, h in zip(self.core, self.halo)))

    def halo_vertices(self, p):
        return np.flatnonzero((self.count[p] > 0) & (self.owner != p))

    def check_move(self, b, w):
        if not 0 <= b < self.q or not 0 <= w < self.G.n:
            raise IllegalMoveError(f"move ({b}, {w}) out of range")
        a = int(self.owner[w])
        if a == b:
            raise IllegalMoveError(f"vertex {w} is already in core {b}")
        if self.count[b, w] == 0:
            raise IllegalMoveError(f"vertex {w} is not in the halo of part {b}")
        if self.core[a] == 1:
            raise IllegalMoveError(f"moving vertex {w} would empty core {a}")
        return a

    def new_sizes(self, b, w):
        """``(a, h_a', h_b')`` after moving ``w`` into the core of ``b``."""
        a = self.check_move(b, w)
        nb = self.G.neighbors(w)
        others = self.owner[nb]
        lose_a = np.count_nonzero((self.count[a, nb] == 1) & (others != a))
        h_a = self.halo[a] - lose_a + (1 if self.count[a, w] > 0 else 0)
        gain_b = np.count_nonzero((self.count[b, nb] == 0) & (others != b))
        h_b = self.halo[b] - 1 + gain_b
        return a, int(h_a), int(h_b)

    def delta(self, b, w):
        a, h_a, h_b = self.new_sizes(b, w)
        c_a, c_b = int(self.core[a]), int(self.core[b])
        before = (c_a + int(self.halo[a])) ** 3 + (c_b + int(self.halo[b])) ** 3
        after = (c_a - 1 + h_a) ** 3 + (c_b + 1 + h_b) ** 3
        return after - before

    def apply(self, b, w):
        a, h_a, h_b = self.new_sizes(b, w)
        d = self.delta(b, w)
        nb = self.G.neighbors(w)
        self.count[a, nb] -= 1
        self.count[b, nb] += 1
        self.owner[w] = b
        self.core[a] -= 1
        self.core[b] += 1
        self.halo[a] = h_a
        self.halo[b] = h_b
        self.objective += d
        return d


def sa_delta(P, move, G_halo):
    """Change of the sum-of-cubes objective for ``move = (part, w)``.

    Raises IllegalMoveError unless ``w`` lies in the halo of ``part`` and its
    current core keeps at least one other vertex.
    """
    _require_match(P, G_halo)
    b, w = move
    return _State(G_halo, P.owner, P.q).delta(int(b), int(w))


def _require_match(P, G_halo):
    if P.halo_graph_id != G_halo.fingerprint:
        raise ValueError("partition halos were not derived from the given graph")


def _propose(state, rng, max_resample):
    """Random legal ``(part, w)`` or None when every draw was illegal or no edge exists."""
    live = np.flatnonzero(state.halo > 0)
    if live.size == 0:
        return None
    for _ in range(max_resample):
        p = int(live[rng.integers(live.size)])
        halo = state.halo_vertices(p)
        weights = state.count[p, halo].astype(np.float64)
        # uniform core-halo edge (v, w): w weighted by its edges into the core; v is irrelevant
        w = int(halo[np.searchsorted(np.cumsum(weights), rng.random() * weights.sum(), side="right")])
        if state.core[state.owner[w]] > 1:
            return p, w
    return None


def sa_refine(G_halo, P, cfg=None):
    """Refine ``P`` for ``cfg.iterations`` steps; return the best partition seen.

    Temperature at iteration ``i`` (1-based) is ``t(i) = 1/i`` unless
    ``cfg.temperature`` is a callable of ``i``; an uphill move of size
    ``delta`` is accepted with probability ``exp(-delta/t(i))``.
    """
    cfg = cfg or SAConfig()
    _require_match(P, G_halo)
    t0 = time.perf_counter()
    temperature = cfg.temperature if callable(cfg.temperature) else _SCHEDULES[cfg.temperature]
    rng = np.random.default_rng(cfg.seed)
    state = _State(G_halo, P.owner, P.q)
    initial = state.objective
    if state.halo.max() == 0:
        return SAResult(P, [], P, initial, initial, time.perf_counter() - t0)
    best = initial
    best_owner = state.owner.copy()
    trace = []
    for i in range(1, cfg.iterations + 1):
        t = temperature(i)
        move = _propose(state, rng, cfg.max_resample)
        if move is None:
            trace.append(SAStep(i, -1, -1, 0, t, False, state.objective, best))
            continue
        p, w = move
        d = state.delta(p, w)
        u = rng.random()
        accepted = d < 0 or u < accept_probability(d, t)
        if accepted:
            state.apply(p, w)
            if cfg.check:
                _check_state(state)
            if state.objective < best:
                best = state.objective
                best_owner = state.owner.copy()
        trace.append(SAStep(i, p, w, int(d), t, bool(accepted), state.objective, best))

    partition = build_ch_partition(G_halo, cores_from_owner(best_owner))
    final = build_ch_partition(G_halo, cores_from_owner(state.owner))
    return SAResult(
        partition=partition,
        trace=trace,
        final_partition=final,
        initial_objective=initial,
        best_objective=best,
        elapsed_s=time.perf_counter() - t0,
    )


def _check_state(state):
    P = build_ch_partition(state.G, cores_from_owner(state.owner))
    assert np.array_equal(P.halo_sizes, state.halo), "halo sizes drifted"
    assert np.array_equal(P.core_sizes, state.core), "core sizes drifted"
    assert objective_sum_cubes(P) == state.objective, "objective drifted"


def write_trace_csv(trace, path):
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRACE_COLUMNS)
        for st in trace:
            writer.writerow([
                st.iteration, st.part, st.vertex, st.delta, repr(st.temperature),
                int(st.accepted), st.objective, st.best_objective,
            ])
