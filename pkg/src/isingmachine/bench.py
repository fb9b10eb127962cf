"""Spin-update throughput measurements."""

from __future__ import annotations

import csv
import io
import time
from dataclasses import dataclass

import numpy as np

from .kernel import build_boltzmann_table, row_block_schedule, run_lane_mcs, sequential_mcs_array
from .lattice import Init, check_side, new_lattice
from .rng import seed_lanes

LANE = "lane"
SEQUENTIAL = "sequential"
VARIANTS = (LANE, SEQUENTIAL)
BENCH_T = 2.5

# published hardware figures, printed for orientation only
FPGA_SPINS_PER_US = 614400.0
FPGA_CPU_SPINS_PER_US = 62.0

REPORT_COLUMNS = ("L", "variant", "spins_per_us", "ns_per_mcs", "wall_time_s", "n_mcs", "workers")


@dataclass(frozen=True)
class ThroughputReport:
    L: int
    variant: str
    spins_per_microsecond: float
    ns_per_mcs: float
    wall_time: float
    n_mcs: int
    workers: int = 1

    @property
    def N(self) -> int:
        return self.L * self.L


def _lane_runner(L, lane_budget, seed):
    spins = new_lattice(L, Init.RANDOM, seed).spins()
    bank = seed_lanes(seed, lane_budget)
    table = build_boltzmann_table(BENCH_T)
    schedule = row_block_schedule(L, lane_budget)
    return lambda n: run_lane_mcs(spins, bank, table, schedule, n)


def _sequential_runner(L, seed):
    spins = new_lattice(L, Init.RANDOM, seed).spins()
    rng = np.random.default_rng(seed)
    return lambda n: sequential_mcs_array(spins, rng, BENCH_T, n)


def throughput(
    L: int,
    variant: str = LANE,
    min_duration: float = 1.0,
    *,
    lane_budget: int = 2048,
    seed: int = 0,
    workers: int = 1,
) -> ThroughputReport:
    """Time whole MCS at T = 2.5 until ``min_duration`` seconds have elapsed.

    One untimed MCS runs first so compilation and cache warm-up stay out of
    the measurement.
    """
    L = check_side(L)
    if min_duration < 1.0:
        raise ValueError("min_duration must be at least 1 s")
    if variant == LANE:
        run = _lane_runner(L, lane_budget, seed)
    elif variant == SEQUENTIAL:
        run = _sequential_runner(L, seed)
    else:
        raise ValueError(f"unknown variant {variant!r}; expected one of {VARIANTS}")
    run(1)

    # grow the batch so timer overhead stays negligible for small lattices
    batch = 1
    n_mcs = 0
    start = time.perf_counter()
    elapsed = 0.0
    while elapsed < min_duration:
        run(batch)
        n_mcs += batch
        elapsed = time.perf_counter() - start
        if elapsed < 0.05 * min_duration:
            batch *= 2
    if elapsed <= 0:
        raise OSError("monotonic timer did not advance")
    trials = n_mcs * L * L
    return ThroughputReport(
        L=L,
        variant=variant,
        spins_per_microsecond=trials / (elapsed * 1e6),
        ns_per_mcs=elapsed * 1e9 / n_mcs,
        wall_time=elapsed,
        n_mcs=n_mcs,
        workers=workers,
    )


def _sorted(reports):
    reports = list(reports)
    if not reports:
        raise ValueError("no reports to render")
    return sorted(reports, key=lambda r: (r.L, r.variant))


def render_report(reports, *, total_mcs: int | None = None, context: bool = True) -> str:
    """Aligned text table sorted by (L, variant).

    With ``total_mcs`` a footer estimates the time for one full temperature
    point as ns_per_mcs * total_mcs; nothing extra is measured.
    """
    rows = _sorted(reports)
    header = ("L", "variant", "spins/us", "ns/MCS")
    body = [(str(r.L), r.variant, f"{r.spins_per_microsecond:.2f}", f"{r.ns_per_mcs:.0f}") for r in rows]
    widths = [max(len(h), *(len(b[k]) for b in body)) for k, h in enumerate(header)]

    def line(cells):
        return "  ".join(c.rjust(w) if k != 1 else c.ljust(w) for k, (c, w) in enumerate(zip(cells, widths)))

    out = [line(header), line(["-" * w for w in widths])]
    out += [line(b) for b in body]
    if context:
        out.append("")
        out.append(
            f"literature context (not measured here): FPGA {FPGA_SPINS_PER_US:.0f} spins/us, "
            f"CPU {FPGA_CPU_SPINS_PER_US:.0f} spins/us at L=1024"
        )
    if total_mcs is not None:
        out.append("")
        out.append(f"TOTAL per temperature point ({total_mcs} MCS):")
        for r in rows:
            out.append(f"  L={r.L} {r.variant}: {r.ns_per_mcs * total_mcs / 1e9:.3f} s")
    workers = sorted({r.workers for r in rows})
    out.append(f"workers: {','.join(map(str, workers))}")
    return "\n".join(out) + "\n"


def report_to_csv(reports) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(REPORT_COLUMNS)
    for r in _sorted(reports):
        writer.writerow(
            [r.L, r.variant, repr(r.spins_per_microsecond), repr(r.ns_per_mcs), repr(r.wall_time), r.n_mcs, r.workers]
        )
    return buf.getvalue()


def report_from_csv(text: str) -> list[ThroughputReport]:
    reader = csv.DictReader(io.StringIO(text))
    return [
        ThroughputReport(
            L=int(row["L"]),
            variant=row["variant"],
            spins_per_microsecond=float(row["spins_per_us"]),
            ns_per_mcs=float(row["ns_per_mcs"]),
            wall_time=float(row["wall_time_s"]),
            n_mcs=int(row["n_mcs"]),
            workers=int(row["workers"]),
        )
        for row in reader
    ]
