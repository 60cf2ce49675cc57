"""Per-step timing of the cubic benchmark sample over a range of grid sizes."""
from __future__ import annotations

import csv
import io
import os
import platform
import statistics
import time
from dataclasses import dataclass, field

from . import kernels
from .demag import build_demag_tensor
from .dynamics import SimState, euler_step
from .mesh import Grid, MaterialParams, VectorField

# cubic sample: A = 1e-11 J/m, Ms = 1000 kA/m, anisotropy field 100 kA/m along x
BENCH_MATERIAL = MaterialParams(Ms=1e6, A_exch=1e-11, alpha=0.5, aniso_axis=(1.0, 0.0, 0.0), H_k=1e5)
BENCH_DT = 1e-15
MIN_STEPS = 50
MIN_WARMUP = 5
# warm-up also runs for at least this long so caches and clocks settle
MIN_WARMUP_S = 0.1


@dataclass
class BenchRow:
    n: int
    cells: int
    mean_ms: float = float("nan")
    std_ms: float = float("nan")
    steps: int = 0
    skipped: str = ""


@dataclass
class BenchReport:
    rows: list
    threads: int
    backend: str = kernels.BACKEND
    precision: str = "float64"
    machine: str = field(default_factory=platform.machine)

    def mean(self, n: int) -> float:
        for r in self.rows:
            if r.n == n:
                return r.mean_ms
        raise KeyError(n)

    def ratios(self) -> list[tuple[int, int, float]]:
        """(N, 2N, t(2N)/t(N)) for every doubling present in the report."""
        have = {r.n: r.mean_ms for r in self.rows if not r.skipped}
        return [(n, 2 * n, have[2 * n] / have[n]) for n in sorted(have) if 2 * n in have]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["N", "cells", "mean_ms", "std_ms", "steps", "threads", "backend", "precision", "skipped"])
        for r in self.rows:
            w.writerow([r.n, r.cells, f"{r.mean_ms:.6f}", f"{r.std_ms:.6f}", r.steps,
                        self.threads, self.backend, self.precision, r.skipped])
        return buf.getvalue()

    def to_table(self) -> str:
        lines = [f"per-step time, threads={self.threads}, backend={self.backend}, {self.precision}",
                 f"{'size':>8} {'cells':>10} {'mean ms':>12} {'std ms':>10} {'steps':>6}"]
        for r in self.rows:
            if r.skipped:
                lines.append(f"{r.n:>6}^3 {r.cells:>10} {'skipped: ' + r.skipped:>30}")
            else:
                lines.append(f"{r.n:>6}^3 {r.cells:>10} {r.mean_ms:>12.4f} {r.std_ms:>10.4f} {r.steps:>6}")
        for n, n2, ratio in self.ratios():
            ok = "ok" if ratio <= 10.0 else "ABOVE O(N log N) BOUND"
            lines.append(f"t({n2}^3)/t({n}^3) = {ratio:.2f} (<= 10: {ok})")
        return "\n".join(lines) + "\n"


def bench_sample(n: int, workers=None) -> SimState:
    grid = Grid(n, n, n)
    m = VectorField.uniform(grid, (0.0, 1e6, 0.0))
    # tilt a little so every term does work
    m.data[0] += 1e5
    m.data *= 1e6 / m.norms()
    return SimState(m, BENCH_MATERIAL, build_demag_tensor(grid), workers=workers)


def time_steps(state: SimState, steps: int, warmup: int, warmup_s: float = 0.0) -> list[float]:
    """Per-step wall times in ms after ``warmup`` untimed steps (and at least ``warmup_s``)."""
    t_end = time.perf_counter() + warmup_s
    done = 0
    while done < warmup or time.perf_counter() < t_end:
        euler_step(state, BENCH_DT)
        done += 1
    times = []
    for _ in range(steps):
        t0 = time.perf_counter()
        euler_step(state, BENCH_DT)
        times.append((time.perf_counter() - t0) * 1e3)
    return times


def run_bench(sizes=(8, 16, 32, 64), steps: int = MIN_STEPS, warmup: int = MIN_WARMUP,
              threads: int | None = None, rounds: int = 5) -> BenchReport:
    """Time every size, interleaving sizes over ``rounds`` rounds.

    Each size is warmed up once, then its timed steps are split across the
    rounds with one untimed step at the start of each, so slow drifts of the
    machine affect all sizes alike.
    """
    steps = max(steps, MIN_STEPS)
    warmup = max(warmup, MIN_WARMUP)
    rounds = max(1, min(rounds, steps))
    threads = threads or os.cpu_count() or 1
    rows = {n: BenchRow(n, n**3) for n in sizes}
    states = {}
    for n in sizes:
        try:
            states[n] = bench_sample(n, workers=threads)
            time_steps(states[n], 0, warmup, MIN_WARMUP_S)
        except MemoryError as exc:
            states.pop(n, None)
            rows[n].skipped = f"out of memory ({exc})"
    times = {n: [] for n in states}
    per_round = [steps // rounds + (1 if r < steps % rounds else 0) for r in range(rounds)]
    for count in per_round:
        for n, state in states.items():
            times[n] += time_steps(state, count, 1)
    for n, ts in times.items():
        rows[n].mean_ms = statistics.fmean(ts)
        rows[n].std_ms = statistics.stdev(ts) if len(ts) > 1 else 0.0
        rows[n].steps = len(ts)
    return BenchReport([rows[n] for n in sizes], threads)
