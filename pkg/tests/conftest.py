"""Shared fixtures and independent oracles.

The oracles here deliberately avoid the package's own code paths: plain
Python sets, dense numpy loops and explicit enumeration.
"""

import numpy as np
import pytest

from halosp2 import SparsityGraph


def random_graph(n, p, rng):
    """Erdos-Renyi graph as a SparsityGraph plus its python edge set."""
    iu = np.triu_indices(n, 1)
    mask = rng.random(iu[0].size) < p
    edges = list(zip(iu[0][mask].tolist(), iu[1][mask].tolist()))
    return SparsityGraph.from_edges(n, edges), set(edges)


def adjacency_lists(n, edges):
    adj = {v: {v} for v in range(n)}
    for i, j in edges:
        adj[i].add(j)
        adj[j].add(i)
    return adj


def boolean_power_pattern(n, edges, k):
    """Nonzero pattern of (A + I)**k by k dense integer products, clipped to 0/1."""
    B = np.eye(n, dtype=np.int64)
    for i, j in edges:
        B[i, j] = B[j, i] = 1
    R = np.eye(n, dtype=np.int64)
    for _ in range(k):
        R = np.minimum(R @ B, 1)
    return R.astype(bool)


def dense_poly_oracle(A, steps):
    """Full dense evaluation of a thresholded polynomial, no symmetrization."""
    X = np.array(A, dtype=np.float64)
    for poly, tau in steps:
        X2 = X @ X
        X = X2 if str(poly) == "SQUARE" else 2 * X - X2
        if tau > 0:
            off = ~np.eye(len(X), dtype=bool)
            X[(np.abs(X) < tau) & off] = 0.0
    return X


def triple_loop_square(A):
    n = len(A)
    out = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            s = 0.0
            for k in range(n):
                s += A[i, k] * A[k, j]
            out[i, j] = s
    return out


def graph_edge_set(G):
    return {(int(i), int(j)) for i, j in G.edges()}


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def path6():
    return SparsityGraph.from_edges(6, [(i, i + 1) for i in range(5)])


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
