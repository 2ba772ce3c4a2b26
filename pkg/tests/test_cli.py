import csv

import numpy as np
import pytest

from halosp2 import (
    SymSparseMatrix,
    build_ch_partition,
    import_partition,
    load_matrix_market,
    partition_metrics,
    save_matrix_market,
    sparsity_graph,
    write_metis_graph,
)
from halosp2 import cli
from halosp2.errors import AssemblyError


def rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


@pytest.fixture
def chain_file(tmp_path):
    path = tmp_path / "chain.mtx"
    assert cli.main(["gen", "chain", "--n", "192", "--bandwidth", "2", "--seed", "1",
                     "--out", str(path)]) == 0
    return path


def test_gen_kinds(tmp_path):
    assert cli.main(["gen", "grid2d", "--n", "9", "--out", str(tmp_path / "g.mtx")]) == 0
    assert sparsity_graph(load_matrix_market(tmp_path / "g.mtx")).n_edges == 12
    assert cli.main(["gen", "grid2d", "--n", "10", "--out", str(tmp_path / "h.mtx")]) == 4


def test_partition_chain_row_is_closed(chain_file, tmp_path):
    out = tmp_path / "p"
    assert cli.main(["partition", str(chain_file), "--q", "16", "--out", str(out)]) == 0
    (row,) = rows(out.with_suffix(".csv"))
    assert list(row) == cli.PARTITION_COLUMNS
    assert row["name"] == "chain" and row["method"] == "bfs"
    # 12-vertex cores; interior parts see 2 halo vertices per side, the end parts one side only
    assert int(row["sum"]) == 14 * 16 ** 3 + 2 * 14 ** 3
    assert (int(row["min"]), int(row["max"])) == (14, 16)
    assert float(row["mmpn"]) == pytest.approx(2 / 192)
    assert float(row["nno"]) == pytest.approx(int(row["sum"]) / 192 ** 3)
    # recompute every metric from the emitted files
    G = sparsity_graph(load_matrix_market(chain_file))
    m = partition_metrics(build_ch_partition(G, import_partition(out.with_suffix(".part"), G)))
    for key, val in m.as_row().items():
        if key != "time_s":
            assert str(val) == row[key]


def test_partition_with_sa_not_worse(tmp_path):
    mtx = tmp_path / "rg.mtx"
    cli.main(["gen", "random-geometric", "--n", "300", "--seed", "2", "--out", str(mtx)])
    cli.main(["partition", str(mtx), "--q", "8", "--out", str(tmp_path / "a")])
    assert cli.main(["partition", str(mtx), "--q", "8", "--sa", "100", "--out",
                     str(tmp_path / "b")]) == 0
    (a,), (b,) = rows(tmp_path / "a.csv"), rows(tmp_path / "b.csv")
    assert b["method"] == "bfs+sa"
    assert int(b["sum"]) <= int(a["sum"])
    assert len(rows(tmp_path / "b.sa.csv")) == 100


def test_partition_import_and_metis_input(chain_file, tmp_path):
    G = sparsity_graph(load_matrix_market(chain_file))
    write_metis_graph(G, tmp_path / "chain.graph")
    (tmp_path / "mine.part").write_text("\n".join(str(v * 4 // 192) for v in range(192)) + "\n")
    assert cli.main(["partition", str(tmp_path / "chain.graph"), "--q", "4", "--method",
                     "import", "--part-file", str(tmp_path / "mine.part"),
                     "--out", str(tmp_path / "imp")]) == 0
    (row,) = rows(tmp_path / "imp.csv")
    assert int(row["sum"]) == 2 * 50 ** 3 + 2 * 52 ** 3


def test_exit_codes(chain_file, tmp_path, monkeypatch):
    assert cli.main(["partition", str(tmp_path / "missing.mtx"), "--q", "2",
                     "--out", str(tmp_path / "x")]) == cli.EXIT_PARSE
    bad = tmp_path / "bad.mtx"
    bad.write_text("%%MatrixMarket matrix array real general\n2 2\n")
    assert cli.main(["sp2", str(bad), "--out", str(tmp_path / "x")]) == cli.EXIT_PARSE
    part = tmp_path / "short.part"
    part.write_text("0\n1\n")
    assert cli.main(["partition", str(chain_file), "--q", "2", "--method", "import",
                     "--part-file", str(part), "--out", str(tmp_path / "x")]) != 0
    assert cli.main(["partition", str(chain_file), "--q", "1000",
                     "--out", str(tmp_path / "x")]) == cli.EXIT_VALIDATION
    assert cli.main(["sp2", str(chain_file), "--max-iter", "2", "--tau", "0",
                     "--out", str(tmp_path / "x")]) == cli.EXIT_CONVERGENCE

    def boom(*args, **kwargs):
        raise AssemblyError("mismatch")

    cli.main(["sp2", str(chain_file), "--tau", "0", "--out", str(tmp_path / "s")])
    cli.main(["partition", str(chain_file), "--q", "4", "--out", str(tmp_path / "p")])
    monkeypatch.setattr(cli, "gsp2_run", boom)
    assert cli.main(["gsp2", str(chain_file), str(tmp_path / "p.part"),
                     str(tmp_path / "s.sched"), "--out", str(tmp_path / "g")]) == cli.EXIT_ASSEMBLY


def test_sp2_diagonal_case(tmp_path):
    save_matrix_market(SymSparseMatrix.from_dense(np.diag([0.0, 1.0])), tmp_path / "d.mtx")
    assert cli.main(["sp2", str(tmp_path / "d.mtx"), "--nocc", "1", "--out",
                     str(tmp_path / "d")]) == 0
    np.testing.assert_array_equal(load_matrix_market(tmp_path / "d.D.mtx").to_dense(),
                                  np.diag([1.0, 0.0]))


def test_sp2_then_gsp2_matches(chain_file, tmp_path, monkeypatch):
    assert cli.main(["sp2", str(chain_file), "--tau", "0", "--out", str(tmp_path / "s")]) == 0
    assert cli.main(["partition", str(chain_file), "--q", "6", "--out", str(tmp_path / "p")]) == 0
    monkeypatch.setenv("HALOSP2_WORKERS", "2")
    assert cli.main(["gsp2", str(chain_file), str(tmp_path / "p.part"), str(tmp_path / "s.sched"),
                     "--out", str(tmp_path / "g")]) == 0
    full = load_matrix_market(tmp_path / "s.D.mtx").to_dense()
    part = load_matrix_market(tmp_path / "g.D.mtx").to_dense()
    assert np.abs(full - part).max() <= 1e-12
    metrics = rows(tmp_path / "g.metrics.csv")
    assert len(metrics) == 6
    assert sum(int(r["core_size"]) for r in metrics) == 192


def test_gsp2_worker_list_identical(chain_file, tmp_path):
    cli.main(["sp2", str(chain_file), "--out", str(tmp_path / "s")])
    cli.main(["partition", str(chain_file), "--q", "8", "--out", str(tmp_path / "p")])
    assert cli.main(["gsp2", str(chain_file), str(tmp_path / "p.part"), str(tmp_path / "s.sched"),
                     "--workers", "1,2,4,8", "--out", str(tmp_path / "g")]) == 0
    scaling = rows(tmp_path / "g.scaling.csv")
    assert [int(r["workers"]) for r in scaling] == [1, 2, 4, 8]


def test_sweep(chain_file, tmp_path):
    out = tmp_path / "sweep.csv"
    assert cli.main(["sweep", str(chain_file), "--q-list", "1,2,4,8,16", "--out", str(out)]) == 0
    table = rows(out)
    assert list(table[0]) == cli.SWEEP_COLUMNS
    assert int(table[0]["sum_cubes"]) == 192 ** 3
    sums = [int(r["sum_cubes"]) for r in table]
    assert all(b <= a for a, b in zip(sums, sums[1:]))
