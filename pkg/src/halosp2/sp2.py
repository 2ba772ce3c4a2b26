"""SP2 density-matrix expansion and thresholded matrix polynomials.

A thresholded polynomial is a sequence of steps, each applying either
``X**2`` or ``2X - X**2`` and then dropping off-diagonal entries below a
threshold. ``sm_sp2`` picks the branch at every step so the trace is steered
toward the occupation number and returns the realized sequence as a
``PolySchedule`` that can be replayed on other matrices.
"""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import norm as sparse_norm

from .errors import ConvergenceWarning, ParseError
from .spmat import SymSparseMatrix, threshold, trace

__all__ = [
    "Poly",
    "PolySchedule",
    "SP2Config",
    "SP2Result",
    "gershgorin_bounds",
    "sp2_initial",
    "choose_branch",
    "sp2_step",
    "sm_sp2",
    "sp2_converged",
    "thresholded_poly_apply",
    "apply_poly_dense",
    "threshold_dense",
    "read_schedule_header",
]


class Poly(enum.Enum):
    SQUARE = "SQUARE"
    DOUBLE_MINUS_SQUARE = "DMS"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class PolySchedule:
    """Ordered ``(poly, tau)`` steps of a thresholded matrix polynomial."""

    steps: tuple = ()

    def __post_init__(self):
        steps = tuple((Poly(p) if not isinstance(p, Poly) else p, float(t)) for p, t in self.steps)
        for _, tau in steps:
            if tau < 0:
                raise ValueError(f"negative threshold {tau}")
        object.__setattr__(self, "steps", steps)

    def __len__(self):
        return len(self.steps)

    @property
    def s(self):
        return len(self.steps)

    @property
    def final_tau(self):
        return self.steps[-1][1] if self.steps else 0.0

    @property
    def branches(self):
        return [p for p, _ in self.steps]

    def dumps(self):
        return "".join(f"step {k}: {p} tau={tau!r}\n" for k, (p, tau) in enumerate(self.steps))

    @classmethod
    def loads(cls, text):
        steps = []
        for lineno, line in enumerate(text.splitlines(), start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            try:
                head, body = line.split(":", 1)
                k = int(head.split()[1])
                tag, tau = body.split()
                if not tau.startswith("tau="):
                    raise ValueError(tau)
                step = (Poly(tag), float(tau[4:]))
            except (ValueError, IndexError):
                raise ParseError(f"schedule line {lineno} malformed: {line!r}") from None
            if k != len(steps):
                raise ParseError(f"schedule line {lineno}: expected step {len(steps)}, got {k}")
            steps.append(step)
        return cls(tuple(steps))

    def save(self, path, header=None):
        text = self.dumps()
        if header:
            text = "".join(f"# {h}\n" for h in header) + text
        Path(path).write_text(text)

    @classmethod
    def load(cls, path):
        return cls.loads(Path(path).read_text())


def read_schedule_header(path):
    """``key=value`` pairs from the ``#`` comment lines of a schedule file."""
    meta = {}
    for line in Path(path).read_text().splitlines():
        if line.startswith("#"):
            for tok in line[1:].split():
                if "=" in tok:
                    k, v = tok.split("=", 1)
                    meta[k] = v
    return meta


@dataclass(frozen=True)
class SP2Config:
    nocc: float
    tau: float = 0.0
    max_iter: int = 30
    conv_tol: float = 1e-10

    def __post_init__(self):
        if self.nocc <= 0:
            raise ValueError("nocc must be positive")
        if self.tau < 0:
            raise ValueError("tau must be non-negative")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")


@dataclass
class SP2Result:
    D: SymSparseMatrix
    schedule: PolySchedule
    converged: bool
    iterations: int
    eps_min: float
    eps_max: float
    history: list = field(default_factory=list)

    def __iter__(self):
        # allows ``D, schedule = sm_sp2(...)``
        return iter((self.D, self.schedule))


def gershgorin_bounds(H):
    """Interval containing the spectrum of ``H`` by Gershgorin's theorem."""
    m = H.to_scipy()
    d = H.diagonal()
    radius = np.asarray(abs(m).sum(axis=1)).ravel() - np.abs(d)
    return float((d - radius).min()), float((d + radius).max())


def sp2_initial(H, eps_min=None, eps_max=None):
    """``(eps_max*I - H) / (eps_max - eps_min)``: spectrum mapped into [0, 1], order reversed."""
    if eps_min is None or eps_max is None:
        lo, hi = gershgorin_bounds(H)
        eps_min = lo if eps_min is None else eps_min
        eps_max = hi if eps_max is None else eps_max
    if not eps_max > eps_min:
        raise ValueError(f"need eps_max > eps_min, got [{eps_min}, {eps_max}]")
    width = eps_max - eps_min
    diag = H.rows == H.cols
    values = np.where(diag, eps_max - H.values, -H.values) / width
    return SymSparseMatrix(H.n, H.rows, H.cols, values, H.structural_diagonal)


def choose_branch(tr_x, tr_x2, nocc):
    """Branch whose resulting trace is closer to ``nocc``; ties go to SQUARE."""
    d_sq = abs(tr_x2 - nocc)
    d_dms = abs(2.0 * tr_x - tr_x2 - nocc)
    return Poly.SQUARE if d_sq <= d_dms else Poly.DOUBLE_MINUS_SQUARE


# sparse path -------------------------------------------------------------

def _square(X):
    m = X.to_scipy()
    return m @ m


def _combine(X, X2, poly):
    if poly is Poly.SQUARE:
        return X2
    return 2.0 * X.to_scipy() - X2


def _finish(n, m, tau):
    """Upper triangle of ``m`` as a SymSparseMatrix, thresholded at ``tau``."""
    out = SymSparseMatrix._with_diagonal(n, *_upper(m))
    return threshold(out, tau)


def _upper(m):
    m = sp.triu(m, format="coo")
    keep = (m.data != 0) | (m.row == m.col)
    return m.row[keep], m.col[keep], m.data[keep]


def sp2_step(X, nocc):
    """One SP2 step on a SymSparseMatrix or dense array; returns ``(X_new, branch)``."""
    if isinstance(X, SymSparseMatrix):
        X2 = _square(X)
        poly = choose_branch(trace(X), float(X2.diagonal().sum()), nocc)
        return _finish(X.n, _combine(X, X2, poly), 0.0), poly
    X = np.asarray(X, dtype=np.float64)
    X2 = X @ X
    poly = choose_branch(float(np.trace(X)), float(np.trace(X2)), nocc)
    return apply_poly_dense(X, poly, X2), poly


def thresholded_poly_apply(A, sched, return_dropped=False):
    """Apply every ``(poly, tau)`` step of ``sched`` to sparse ``A`` in order.

    With ``return_dropped`` the per-step sets of dropped ``(i, j)`` pairs
    (``i < j``) are returned alongside the result.
    """
    X = A
    dropped = []
    for poly, tau in sched.steps:
        full = _finish(X.n, _combine(X, _square(X), poly), 0.0)
        X = threshold(full, tau)
        if return_dropped:
            gone = (full.rows != full.cols) & (np.abs(full.values) < tau)
            dropped.append(frozenset(zip(full.rows[gone].tolist(), full.cols[gone].tolist())))
    if return_dropped:
        return X, dropped
    return X


def sp2_converged(trace_err, idem, prev_idem, scale, n, tau, conv_tol):
    """Stopping test shared by the full and the partitioned SP2 loops.

    ``idem`` is ``||X^2 - X||_F`` and ``scale`` is ``max(1, ||X||_F)``. The
    trace must match within ``conv_tol``, widened by ``sqrt(n) * tau`` when
    entries are thresholded. The idempotency residual must then either be
    below ``conv_tol * scale`` or have stopped decreasing after reaching
    ``1e-2 * scale``, the point where thresholding noise dominates.
    """
    if trace_err >= conv_tol + np.sqrt(n) * tau:
        return False
    if idem < conv_tol * scale:
        return True
    return idem >= prev_idem and idem < 1e-2 * scale


def sm_sp2(H, cfg, eps_min=None, eps_max=None):
    """Sparse SP2 expansion of the density matrix of ``H``.

    Iterates until :func:`sp2_converged` holds or ``max_iter`` steps have
    been taken. Non-convergence emits a ConvergenceWarning and returns the
    last iterate with ``converged=False``.
    """
    if not 0 < cfg.nocc < H.n:
        raise ValueError(f"nocc must lie in (0, {H.n}), got {cfg.nocc}")
    if eps_min is None or eps_max is None:
        lo, hi = gershgorin_bounds(H)
        eps_min = lo if eps_min is None else eps_min
        eps_max = hi if eps_max is None else eps_max
    X = sp2_initial(H, eps_min, eps_max)
    steps = []
    history = []
    converged = False
    prev_idem = np.inf
    while True:
        X2 = _square(X)
        tr_x = trace(X)
        tr_x2 = float(X2.diagonal().sum())
        idem = sparse_norm(X2 - X.to_scipy())
        scale = max(1.0, sparse_norm(X.to_scipy()))
        trace_err = abs(tr_x - cfg.nocc)
        history.append((len(steps), trace_err, idem))
        if sp2_converged(trace_err, idem, prev_idem, scale, X.n, cfg.tau, cfg.conv_tol):
            converged = True
            break
        if len(steps) >= cfg.max_iter:
            break
        prev_idem = idem
        poly = choose_branch(tr_x, tr_x2, cfg.nocc)
        X = threshold(_finish(X.n, _combine(X, X2, poly), 0.0), cfg.tau)
        steps.append((poly, cfg.tau))
    if not converged:
        warnings.warn(
            f"SP2 did not converge in {cfg.max_iter} steps "
            f"(trace error {history[-1][1]:.3e}, idempotency {history[-1][2]:.3e})",
            ConvergenceWarning,
            stacklevel=2,
        )
    return SP2Result(X, PolySchedule(tuple(steps)), converged, len(steps), eps_min, eps_max, history)


# dense path --------------------------------------------------------------

def apply_poly_dense(X, poly, X2=None):
    """``X**2`` or ``2X - X**2`` of a dense symmetric array, symmetrized exactly."""
    if X2 is None:
        X2 = X @ X
    Y = X2 if poly is Poly.SQUARE else 2.0 * X - X2
    return 0.5 * (Y + Y.T)


def threshold_dense(X, tau):
    """Zero off-diagonal entries with ``|x| < tau`` (in place)."""
    if tau > 0:
        small = np.abs(X) < tau
        np.fill_diagonal(small, False)
        X[small] = 0.0
    return X
