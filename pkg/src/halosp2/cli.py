"""Command-line front end.

Subcommands: ``gen``, ``partition``, ``sp2``, ``gsp2`` and ``sweep``. Exit
codes: 0 success, 3 parse error, 4 validation error, 5 SP2 did not
converge, 6 assembly check failed. The default worker count for ``gsp2``
comes from ``HALOSP2_WORKERS`` (1 if unset).
"""

from __future__ import annotations

import argparse
import csv
import logging
import os
import sys
import time
import warnings
from pathlib import Path

import numpy as np

from .anneal import SAConfig, sa_refine, write_trace_csv
from .errors import AssemblyError, ConvergenceWarning, ParseError, ValidationError
from .generators import KINDS, gen_system
from .gsp2 import gsp2_run, write_run_metrics_csv
from .partition import bfs_block_partition, export_partition, import_partition
from .sgraph import (
    build_ch_partition,
    partition_metrics,
    read_metis_graph,
    sparsity_graph,
    structural_polynomial_graph,
)
from .sp2 import PolySchedule, SP2Config, read_schedule_header, sm_sp2, sp2_initial
from .spmat import load_matrix_market, save_matrix_market, threshold

log = logging.getLogger("halosp2")

EXIT_OK = 0
EXIT_PARSE = 3
EXIT_VALIDATION = 4
EXIT_CONVERGENCE = 5
EXIT_ASSEMBLY = 6

PARTITION_COLUMNS = ["name", "method", "sum", "min", "max", "time_s", "nno", "mmpn"]
SWEEP_COLUMNS = ["q", "sum_cubes", "min", "max", "partition_time_s"]


def _default_workers():
    try:
        return max(1, int(os.environ.get("HALOSP2_WORKERS", "1")))
    except ValueError:
        return 1


def _int_list(text):
    return [int(t) for t in text.split(",") if t.strip()]


def load_graph(path, tau=0.0):
    """Sparsity graph from a ``.mtx`` file (after thresholding) or a METIS graph file."""
    path = Path(path)
    if path.suffix == ".mtx":
        return sparsity_graph(threshold(load_matrix_market(path), tau))
    return read_metis_graph(path)


def make_partition(G, q, method="bfs", part_file=None, sa_iters=0, seed=0, trace_path=None):
    """Cores from ``method``, halos in ``G``, optional SA; returns ``(P, metrics, label)``."""
    t0 = time.perf_counter()
    if q == 1:
        cores = [np.arange(G.n)]
    elif method == "bfs":
        cores = bfs_block_partition(G, q, seed)
    elif method == "import":
        if part_file is None:
            raise ValueError("method 'import' needs a partition file")
        cores = import_partition(part_file, G)
        if len(cores) != q:
            raise ValidationError(f"partition file has {len(cores)} parts, expected {q}")
    else:
        raise ValueError(f"unknown method {method!r}")
    P = build_ch_partition(G, cores)
    label = method
    if sa_iters > 0 and q > 1:
        res = sa_refine(G, P, SAConfig(iterations=sa_iters, seed=seed))
        P = res.partition
        label = f"{method}+sa"
        if trace_path is not None:
            write_trace_csv(res.trace, trace_path)
    return P, partition_metrics(P, time.perf_counter() - t0), label


def _write_rows(path, columns, rows):
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=columns)
        writer.writeheader()
        for row in rows:
            writer.writerow(row)


# subcommands -------------------------------------------------------------

def cmd_gen(args):
    params = {}
    for key in ("bandwidth", "nx", "ny", "radius", "density", "dim"):
        val = getattr(args, key)
        if val is not None:
            params[key] = val
    M = gen_system(args.kind, args.n, seed=args.seed, **params)
    save_matrix_market(M, args.out, comment=f"{args.kind} n={M.n} seed={args.seed}")
    log.info("wrote %s (n=%d, stored=%d)", args.out, M.n, M.nnz)
    return EXIT_OK


def cmd_partition(args):
    G = load_graph(args.graph, args.tau)
    out = Path(args.out)
    trace_path = out.with_suffix(".sa.csv") if args.sa_iters else None
    P, m, label = make_partition(
        G, args.q, args.method, args.part_file, args.sa_iters, args.seed, trace_path
    )
    export_partition(P.cores, P.n, out.with_suffix(".part"))
    row = {"name": Path(args.graph).stem, "method": label, **m.as_row()}
    _write_rows(out.with_suffix(".csv"), PARTITION_COLUMNS, [row])
    print(",".join(str(row[c]) for c in PARTITION_COLUMNS))
    return EXIT_OK


def cmd_sp2(args):
    H = load_matrix_market(args.matrix)
    nocc = args.nocc if args.nocc is not None else H.n / 2
    cfg = SP2Config(nocc=nocc, tau=args.tau, max_iter=args.max_iter)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConvergenceWarning)
        res = sm_sp2(H, cfg)
    out = Path(args.out)
    save_matrix_market(res.D, out.with_suffix(".D.mtx"))
    res.schedule.save(
        out.with_suffix(".sched"),
        header=[f"eps_min={res.eps_min!r} eps_max={res.eps_max!r} nocc={nocc!r}"],
    )
    log.info("SP2 %s after %d steps", "converged" if res.converged else "did NOT converge",
             res.iterations)
    return EXIT_OK if res.converged else EXIT_CONVERGENCE


def cmd_gsp2(args):
    H = load_matrix_market(args.matrix)
    sched = PolySchedule.load(args.schedule)
    meta = read_schedule_header(args.schedule)
    eps_min = float(meta["eps_min"]) if "eps_min" in meta else None
    eps_max = float(meta["eps_max"]) if "eps_max" in meta else None
    X0 = sp2_initial(H, eps_min, eps_max)
    G = sparsity_graph(X0)
    if args.halo == "structural":
        H_graph = structural_polynomial_graph(G, sched.s)
    elif args.halo == "graph":
        H_graph = G
    else:
        H_graph = sparsity_graph(threshold(load_matrix_market(args.halo), args.halo_tau))
    cores = import_partition(args.partition, H_graph)
    P = build_ch_partition(H_graph, cores)
    strict = args.halo == "structural"

    out = Path(args.out)
    scaling = []
    reference = None
    for workers in args.workers:
        D, metrics = gsp2_run(X0, P, sched, workers=workers, strict=strict)
        scaling.append({"workers": workers, "wall_time_s": metrics.wall_time_s})
        if reference is None:
            reference = D
            save_matrix_market(D, out.with_suffix(".D.mtx"))
            write_run_metrics_csv(metrics, out.with_suffix(".metrics.csv"))
        elif D != reference:
            raise AssemblyError(f"output with {workers} workers differs from {args.workers[0]}")
    if len(args.workers) > 1:
        _write_rows(out.with_suffix(".scaling.csv"), ["workers", "wall_time_s"], scaling)
        times = [r["wall_time_s"] for r in scaling]
        if any(b > a for a, b in zip(times, times[1:])):
            log.info("wall time did not decrease monotonically with workers: %s", times)
    return EXIT_OK


def cmd_sweep(args):
    G = load_graph(args.matrix, args.tau)
    rows = []
    for q in args.q_list:
        P, m, _ = make_partition(G, q, "bfs", None, args.sa_iters, args.seed)
        rows.append({
            "q": q,
            "sum_cubes": m.sum_cubes,
            "min": m.min_part,
            "max": m.max_part,
            "partition_time_s": m.wall_time_s,
        })
        log.info("q=%d sum_cubes=%d", q, m.sum_cubes)
    _write_rows(args.out, SWEEP_COLUMNS, rows)
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="halosp2", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="write a synthetic symmetric system")
    p.add_argument("kind", choices=KINDS)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--bandwidth", type=int)
    p.add_argument("--nx", type=int)
    p.add_argument("--ny", type=int)
    p.add_argument("--radius", type=float)
    p.add_argument("--density", type=float)
    p.add_argument("--dim", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("partition", help="CH-partition a graph and report sum of cubes")
    p.add_argument("graph", help=".mtx matrix or METIS graph file")
    p.add_argument("--q", type=int, required=True)
    p.add_argument("--method", choices=["bfs", "import"], default="bfs")
    p.add_argument("--part-file")
    p.add_argument("--sa-iters", "--sa", dest="sa_iters", type=int, default=0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tau", type=float, default=0.0, help="threshold applied to .mtx input")
    p.add_argument("--out", required=True, help="output prefix")
    p.set_defaults(func=cmd_partition)

    p = sub.add_parser("sp2", help="full sparse SP2 density matrix")
    p.add_argument("matrix")
    p.add_argument("--nocc", type=float)
    p.add_argument("--tau", type=float, default=1e-5)
    p.add_argument("--max-iter", type=int, default=30)
    p.add_argument("--out", required=True, help="output prefix")
    p.set_defaults(func=cmd_sp2)

    p = sub.add_parser("gsp2", help="partitioned evaluation of a saved schedule")
    p.add_argument("matrix")
    p.add_argument("partition")
    p.add_argument("schedule")
    p.add_argument("--workers", type=_int_list, default=[_default_workers()],
                   help="worker count, or a comma list to time several")
    p.add_argument("--halo", default="structural",
                   help="'structural', 'graph', or a .mtx density matrix whose graph defines halos")
    p.add_argument("--halo-tau", type=float, default=1e-5)
    p.add_argument("--out", required=True, help="output prefix")
    p.set_defaults(func=cmd_gsp2)

    p = sub.add_parser("sweep", help="sum of cubes against the number of parts")
    p.add_argument("matrix")
    p.add_argument("--q-list", type=_int_list, default=[1, 2, 4, 8, 16, 32, 64])
    p.add_argument("--sa-iters", type=int, default=0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tau", type=float, default=0.0)
    p.add_argument("--out", required=True, help="CSV path")
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (ParseError, OSError) as exc:
        log.error("%s", exc)
        return EXIT_PARSE
    except (ValidationError, ValueError) as exc:
        log.error("%s", exc)
        return EXIT_VALIDATION
    except AssemblyError as exc:
        log.error("%s", exc)
        return EXIT_ASSEMBLY


if __name__ == "__main__":
    sys.exit(main())
