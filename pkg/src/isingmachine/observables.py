"""Measurement protocol and estimators.

A temperature point is thermalised for ``warmup`` MCS and then sampled
``n_samples`` times, with ``stride`` MCS before each sample.  Standard
errors assume independent samples; near the critical point they are
optimistic.
"""

from __future__ import annotations

import csv
import io
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .errors import ConfigurationError, InsufficientDataError
from .kernel import (
    build_boltzmann_table,
    row_block_schedule,
    run_lane_mcs,
    sample_lane_chain,
    sequential_mcs_array,
)
from .lattice import Init, Model, ModelParams, bond_energy, check_side, new_lattice
from .models import (
    j1j2_boltzmann_table,
    j1j2_energy,
    j1j2_mcs_array,
    new_potts_lattice,
    potts_energy,
    potts_mcs_array,
    potts_order,
)
from .rng import seed_lanes

CSV_COLUMNS = (
    "L",
    "T",
    "m_signed",
    "m_abs",
    "chi",
    "chi_abs",
    "e_per_spin",
    "se_m",
    "se_chi",
    "n_samples",
    "warmup",
    "stride",
    "seed",
)

LANE = "lane"
SEQUENTIAL = "sequential"


@dataclass(frozen=True)
class Protocol:
    warmup: int = 1000
    n_samples: int = 1000
    stride: int = 100
    lane_budget: int = 2048
    init: str = Init.RANDOM.value
    kernel: str = LANE

    def __post_init__(self):
        if self.warmup < 0:
            raise ConfigurationError("warmup must be >= 0")
        if self.n_samples < 1:
            raise ConfigurationError("n_samples must be >= 1")
        if self.stride < 1:
            raise ConfigurationError("stride must be >= 1")
        if self.kernel not in (LANE, SEQUENTIAL):
            raise ConfigurationError(f"kernel must be {LANE!r} or {SEQUENTIAL!r}")
        Init(self.init)

    @property
    def total_mcs(self) -> int:
        return self.warmup + self.n_samples * self.stride


@dataclass
class SampleSeries:
    M: np.ndarray
    E: np.ndarray
    T: float
    L: int
    stride_mcs: int
    warmup_mcs: int
    seed: int
    model: str = Model.NN_ISING.value

    @property
    def n_samples(self) -> int:
        return int(len(self.M))

    @property
    def N(self) -> int:
        return self.L * self.L


@dataclass(frozen=True)
class PointStats:
    L: int
    T: float
    m_signed: float
    m_abs: float
    chi: float
    chi_abs: float
    e_per_spin: float
    se_m_signed: float
    se_m: float
    se_chi: float
    se_chi_signed: float
    se_e: float
    n_samples: int
    warmup: int
    stride: int
    seed: int
    note: str = field(default="standard errors assume independent samples")

    def csv_row(self) -> dict:
        d = asdict(self)
        return {k: d[k] for k in CSV_COLUMNS}


def _variance_se(x: np.ndarray) -> float:
    n = x.size
    if n < 4:
        return float("nan")
    d = x - x.mean()
    m2 = float(np.mean(d**2))
    m4 = float(np.mean(d**4))
    return float(np.sqrt(max(m4 - m2 * m2, 0.0) / n))


def susceptibility(series: SampleSeries) -> tuple[float, float]:
    """(chi, chi_abs): magnetisation variance over T * N, using M or |M|."""
    if series.n_samples < 2:
        raise InsufficientDataError("susceptibility needs at least 2 samples")
    M = np.asarray(series.M, dtype=float)
    A = np.abs(M)
    scale = series.T * series.N
    chi = max(float(np.mean(M * M) - np.mean(M) ** 2), 0.0) / scale
    chi_abs = max(float(np.mean(A * A) - np.mean(A) ** 2), 0.0) / scale
    return chi, chi_abs


def point_stats(series: SampleSeries) -> PointStats:
    n = series.n_samples
    N = series.N
    M = np.asarray(series.M, dtype=float)
    E = np.asarray(series.E, dtype=float)
    A = np.abs(M)
    chi, chi_abs = susceptibility(series)
    root_n = np.sqrt(n)
    scale = series.T * N
    return PointStats(
        L=series.L,
        T=series.T,
        m_signed=float(M.mean() / N),
        m_abs=float(A.mean() / N),
        chi=chi,
        chi_abs=chi_abs,
        e_per_spin=float(E.mean() / N),
        se_m_signed=float(M.std() / N / root_n),
        se_m=float(A.std() / N / root_n),
        se_chi=_variance_se(A) / scale,
        se_chi_signed=_variance_se(M) / scale,
        se_e=float(E.std() / N / root_n),
        n_samples=n,
        warmup=series.warmup_mcs,
        stride=series.stride_mcs,
        seed=series.seed,
    )


def batch_means_se(x, n_batches: int = 50) -> float:
    """Standard error of the mean from non-overlapping batch averages."""
    x = np.asarray(x, dtype=float)
    size = x.size // n_batches
    if size < 1:
        raise InsufficientDataError(f"need at least {n_batches} samples for batch means")
    means = x[: size * n_batches].reshape(n_batches, size).mean(axis=1)
    return float(means.std(ddof=1) / np.sqrt(n_batches))


def _reduced_temperature(params):
    # only the ratio T / J enters the nearest-neighbour acceptance
    if params.J <= 0:
        raise ConfigurationError("the Ising kernels need a ferromagnetic coupling J > 0")
    return params.T / params.J


def _run_ising_lane(params, L, protocol, seed):
    spins = new_lattice(L, protocol.init, seed).spins()
    bank = seed_lanes(seed, protocol.lane_budget)
    table = build_boltzmann_table(_reduced_temperature(params))
    schedule = row_block_schedule(L, protocol.lane_budget)
    if protocol.warmup:
        run_lane_mcs(spins, bank, table, schedule, protocol.warmup)
    M, E = sample_lane_chain(spins, bank, table, schedule, protocol.n_samples, protocol.stride)
    return M, E * params.J


def _run_ising_sequential(params, L, protocol, seed):
    spins = new_lattice(L, protocol.init, seed).spins()
    rng = np.random.default_rng(seed)
    t_red = _reduced_temperature(params)
    if protocol.warmup:
        sequential_mcs_array(spins, rng, t_red, protocol.warmup)
    M = np.empty(protocol.n_samples, dtype=np.int64)
    E = np.empty(protocol.n_samples, dtype=np.int64)
    for k in range(protocol.n_samples):
        sequential_mcs_array(spins, rng, t_red, protocol.stride)
        M[k] = int(spins.sum(dtype=np.int64))
        E[k] = bond_energy(spins)
    return M, E * params.J


def _run_j1j2(params, L, protocol, seed):
    spins = new_lattice(L, protocol.init, seed).spins()
    bank = seed_lanes(seed, protocol.lane_budget)
    table = j1j2_boltzmann_table(params.T, params.J1, params.J2)
    schedule = row_block_schedule(L, protocol.lane_budget)
    for _ in range(protocol.warmup):
        j1j2_mcs_array(spins, bank, table, schedule)
    M = np.empty(protocol.n_samples, dtype=np.int64)
    E = np.empty(protocol.n_samples, dtype=float)
    for k in range(protocol.n_samples):
        for _ in range(protocol.stride):
            j1j2_mcs_array(spins, bank, table, schedule)
        M[k] = int(spins.sum(dtype=np.int64))
        E[k] = j1j2_energy(spins, params.J1, params.J2)
    return M, E


def _run_potts(params, L, protocol, seed):
    init = "ordered" if protocol.init == Init.ALL_UP.value else "random"
    lat = new_potts_lattice(L, params.q, init, seed)
    bank = seed_lanes(seed, protocol.lane_budget)
    schedule = row_block_schedule(L, protocol.lane_budget)
    for _ in range(protocol.warmup):
        potts_mcs_array(lat.states, params.q, bank, params.T, params.J, schedule)
    M = np.empty(protocol.n_samples, dtype=float)
    E = np.empty(protocol.n_samples, dtype=float)
    for k in range(protocol.n_samples):
        for _ in range(protocol.stride):
            potts_mcs_array(lat.states, params.q, bank, params.T, params.J, schedule)
        M[k] = potts_order(lat.states, params.q)
        E[k] = potts_energy(lat.states, params.J)
    return M, E


def run_temperature_point(
    params: ModelParams, L: int, protocol: Protocol = Protocol(), seed: int = 0
) -> tuple[SampleSeries, PointStats]:
    """Thermalise, sample and estimate at one temperature.

    For the Potts model the recorded "magnetisation" is the order parameter
    of ``models.potts_order``, which is non-negative.
    """
    L = check_side(L)
    if protocol.kernel == SEQUENTIAL and params.model is not Model.NN_ISING:
        raise ConfigurationError("the sequential reference kernel only handles the Ising model")
    if params.model is Model.NN_ISING:
        runner = _run_ising_sequential if protocol.kernel == SEQUENTIAL else _run_ising_lane
    elif params.model is Model.J1J2:
        runner = _run_j1j2
    else:
        runner = _run_potts
    M, E = runner(params, L, protocol, seed)
    series = SampleSeries(M, E, params.T, L, protocol.stride, protocol.warmup, seed, params.model.value)
    return series, point_stats(series)


def _point_job(args):
    params, L, protocol, seed = args
    return run_temperature_point(params, L, protocol, seed)[1]


def temperature_sweep(
    params: ModelParams,
    L: int,
    T_list,
    protocol: Protocol = Protocol(),
    seed: int = 0,
    workers: int = 1,
) -> list[PointStats]:
    """One point per temperature with seed ``seed + index``; output follows ``T_list``."""
    T_list = [float(t) for t in T_list]
    if not T_list:
        raise ValueError("T_list is empty")
    if any(t <= 0 for t in T_list):
        raise ValueError("temperatures must be positive")
    jobs = [(replace(params, T=t), L, protocol, seed + k) for k, t in enumerate(T_list)]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_point_job, jobs))
    return [_point_job(j) for j in jobs]


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return str(v)


def stats_to_csv(stats, path=None) -> str:
    """Serialise to the fixed CSV schema; writes ``path`` when given."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for s in stats:
        row = s.csv_row()
        writer.writerow([_fmt(row[c]) for c in CSV_COLUMNS])
    text = buf.getvalue()
    if path is not None:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    return text


_INT_COLUMNS = {"L", "n_samples", "warmup", "stride", "seed"}


def read_stats_csv(path) -> list[dict]:
    """Rows of a sweep CSV with numeric fields converted."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        missing = set(CSV_COLUMNS) - set(reader.fieldnames or ())
        if missing:
            raise ValueError(f"{path}: missing columns {sorted(missing)}")
        rows = []
        for raw in reader:
            rows.append({k: (int(v) if k in _INT_COLUMNS else float(v)) for k, v in raw.items() if k in CSV_COLUMNS})
    return rows


@dataclass(frozen=True)
class PeakSweep:
    """Points of every refinement stage and the peak estimate after each."""

    L: int
    stages: tuple[tuple[PointStats, ...], ...]
    estimates: tuple[float, ...]

    @property
    def final(self) -> tuple[PointStats, ...]:
        return self.stages[-1]


def _peak_estimate(stats) -> float:
    # imported here: analysis does not depend on observables and should not
    from .analysis import lorentzian_fit
    from .errors import FitError

    T = np.array([s.T for s in stats])
    chi = np.array([s.chi_abs for s in stats])
    guess = float(T[np.argmax(chi)])
    if T.size < 5 or np.any(chi <= 0):
        return guess
    try:
        fit = lorentzian_fit(np.column_stack([T, chi]))
    except (FitError, InsufficientDataError, ValueError):
        return guess
    lo, hi = fit.window
    return float(fit.T_star) if lo <= fit.T_star <= hi else guess


def peak_sweep(
    params: ModelParams,
    L: int,
    T_lo: float,
    T_hi: float,
    spacings,
    protocols,
    seed: int = 0,
    half_points: int = 5,
    workers: int = 1,
) -> PeakSweep:
    """Locate the chi_abs peak by successively finer temperature grids.

    Stage 0 covers [T_lo, T_hi] with ``spacings[0]``; each later stage puts
    ``2 * half_points + 1`` points around the previous estimate, clipped to
    the interval.  Stage k uses ``protocols[k]`` and seeds from
    ``seed + 1000 * k``.
    """
    if len(spacings) != len(protocols) or not spacings:
        raise ValueError("need one protocol per spacing")
    if not T_lo < T_hi:
        raise ValueError("T_lo must be below T_hi")
    stages, estimates = [], []
    for k, (step, proto) in enumerate(zip(spacings, protocols)):
        if k == 0:
            grid = np.arange(T_lo, T_hi + 1e-9, step)
        else:
            grid = estimates[-1] + step * np.arange(-half_points, half_points + 1)
            grid = grid[(grid >= T_lo - 1e-12) & (grid <= T_hi + 1e-12)]
        grid = np.round(grid, 9)
        stats = temperature_sweep(params, L, grid, proto, seed + 1000 * k, workers)
        stages.append(tuple(stats))
        estimates.append(_peak_estimate(stats))
    return PeakSweep(L, tuple(stages), tuple(estimates))
