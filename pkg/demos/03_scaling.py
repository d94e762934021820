"""Time the transformation on growing series-parallel nets."""

import sys
import tempfile
from pathlib import Path

from pn2sc import run_bench

sizes = [int(a) for a in sys.argv[1:]] or [10, 100, 500, 1000, 2000]

with tempfile.TemporaryDirectory() as tmp:
    csv_path = Path(tmp) / "bench.csv"
    records = run_bench(sizes, csv_path=csv_path)
    print(csv_path.read_text())

# seconds per thousand model elements should stay roughly flat
for r in records:
    print(f"{r.name:>8} {r.size:>7} {1000 * r.transform_s / r.size:.3f} s/k")
