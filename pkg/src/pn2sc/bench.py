"""Series-parallel net generator and the scaling benchmark harness."""

from __future__ import annotations

import csv
import os
import tempfile
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Union

from .formats import NetDocument, format_net, load_net, parse_net_text
from .graph import GraphStore
from .models import model_size

CSV_HEADER = ("name", "size", "transform_s", "read_s")


def generate_sp(n: int) -> NetDocument:
    """Chain of ``n`` fork-join blocks starting from place ``c0``.

    Block ``i`` forks ``c{i-1}`` into ``a{i}`` and ``b{i}`` through ``tf{i}``
    and joins them into ``c{i}`` through ``tj{i}``: 1+3n places, 2n
    transitions and 6n arcs.
    """
    if n < 0:
        raise ValueError("block count must be non-negative")
    doc = NetDocument(places=[("c0", "c0")])
    for i in range(1, n + 1):
        doc.places += [(f"a{i}", f"a{i}"), (f"b{i}", f"b{i}"), (f"c{i}", f"c{i}")]
        doc.transitions += [(f"tf{i}", f"tf{i}"), (f"tj{i}", f"tj{i}")]
        doc.arcs += [
            (f"c{i-1}", f"tf{i}"), (f"tf{i}", f"a{i}"), (f"tf{i}", f"b{i}"),
            (f"a{i}", f"tj{i}"), (f"b{i}", f"tj{i}"), (f"tj{i}", f"c{i}"),
        ]
    return doc


@dataclass(frozen=True)
class BenchRecord:
    name: str
    size: int
    transform_s: float
    read_s: float

    def row(self) -> list[str]:
        return [self.name, str(self.size), f"{self.transform_s:.6f}", f"{self.read_s:.6f}"]


class NotReducible(RuntimeError):
    pass


def bench_one(n: int, matcher: str = "incremental", workdir: Union[str, os.PathLike, None] = None) -> BenchRecord:
    from .transform import transform

    with tempfile.TemporaryDirectory(dir=workdir) as tmp:
        path = Path(tmp) / f"sp{n}.net"
        path.write_text(format_net(generate_sp(n)))
        t0 = time.perf_counter()
        store = GraphStore()
        load_net(parse_net_text(path.read_text()), store)
        read_s = time.perf_counter() - t0
    size = model_size(store)
    result = transform(store, matcher=matcher)
    if not result.reducible or result.place_count != 1 or result.transition_count != 0:
        raise NotReducible(f"sp{n} did not reduce to a single place")
    return BenchRecord(f"sp{n}", size, result.transform_seconds, read_s)


def run_bench(sizes: Iterable[int], matcher: str = "incremental",
              csv_path: Union[str, os.PathLike, None] = None) -> list[BenchRecord]:
    """Time generate -> write -> parse -> transform for each block count.

    Rows are flushed as they complete, so a failure leaves a partial CSV.
    """
    records = []
    handle = open(csv_path, "w", newline="") if csv_path is not None else None
    try:
        writer = csv.writer(handle, lineterminator="\n") if handle else None
        if writer:
            writer.writerow(CSV_HEADER)
            handle.flush()
        for n in sizes:
            record = bench_one(n, matcher)
            records.append(record)
            if writer:
                writer.writerow(record.row())
                handle.flush()
    finally:
        if handle:
            handle.close()
    return records
