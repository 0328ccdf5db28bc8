"""Scaling benchmark of the two connection detectors on generated clean networks."""

from __future__ import annotations

import csv
import gc
import io
import statistics
import time
from dataclasses import asdict, dataclass
from typing import Iterable, Sequence

from netlint.detectors import AttributeTable, detect_exhaustive, detect_spatialjoin
from netlint.generate import generate_network
from netlint.network import build_network

DETECTORS = ("exhaustive", "spatialjoin")
DEFAULT_SIZES = (2000, 4000, 8000, 16000)


@dataclass
class BenchRow:
    detector: str
    n: int
    k: int
    median_ms: float
    reps: int


def _time(fn, reps: int) -> list[float]:
    # Same convention as timeit: collector off while the clock runs.
    out = []
    for _ in range(reps):
        gc.collect()
        was_enabled = gc.isenabled()
        gc.disable()
        try:
            t0 = time.perf_counter()
            fn()
            out.append(time.perf_counter() - t0)
        finally:
            if was_enabled:
                gc.enable()
    return out


def bench(
    sizes: Sequence[int] = DEFAULT_SIZES,
    k: int = 5,
    detectors: Iterable[str] = DETECTORS,
    reps: int = 5,
    seed: int = 0,
) -> list[BenchRow]:
    """Median wall time per detector and size. Network building is not timed."""
    detectors = list(detectors)
    unknown = [d for d in detectors if d not in DETECTORS]
    if unknown:
        raise ValueError(f"unknown detectors {unknown}; choose from {DETECTORS}")
    rows = []
    for n in sizes:
        gen = generate_network(n, k, seed)
        net = build_network(gen.features, gen.cfg)
        table = AttributeTable.from_network(net)
        runs = {
            "exhaustive": lambda: detect_exhaustive(table, gen.cfg),
            "spatialjoin": lambda: detect_spatialjoin(net, gen.cfg),
        }
        for d in detectors:
            runs[d]()  # warm-up
            times = _time(runs[d], reps)
            rows.append(BenchRow(d, n, k, round(statistics.median(times) * 1000, 3), reps))
    return rows


def rows_to_csv(rows: Iterable[BenchRow]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=["detector", "n", "k", "median_ms", "reps"], lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow(asdict(r))
    return buf.getvalue()


def doubling_ratios(rows: Iterable[BenchRow], detector: str) -> list[float]:
    """t(2n) / t(n) for consecutive doubled sizes."""
    by_n = {r.n: r.median_ms for r in rows if r.detector == detector}
    return [by_n[2 * n] / by_n[n] for n in sorted(by_n) if 2 * n in by_n and by_n[n] > 0]
