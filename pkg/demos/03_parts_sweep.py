"""
Sum of cubes against the number of parts
========================================

More parts shrink cores but add halo vertices. For an almost
one-dimensional chain each part has at most two boundaries, so the sum of
cubes keeps falling as q grows. This is the command-line sweep, called
from Python.
"""

import csv
import tempfile
from pathlib import Path

from halosp2 import cli

with tempfile.TemporaryDirectory() as tmp:
    tmp = Path(tmp)
    # long banded chain: 24 couplings on each side of every site
    cli.main(["gen", "chain", "--n", "12288", "--bandwidth", "24", "--out", str(tmp / "chain.mtx")])
    cli.main(["sweep", str(tmp / "chain.mtx"), "--out", str(tmp / "sweep.csv")])
    with open(tmp / "sweep.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))

n = 12288
print(f"{'q':>4} {'sum of cubes':>16} {'normalized':>11} {'largest part':>13}")
for r in rows:
    s = int(r["sum_cubes"])
    print(f"{r['q']:>4} {s:>16} {s / n ** 3:>11.5f} {r['max']:>13}")
