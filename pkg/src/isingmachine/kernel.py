"""Lane-parallel Metropolis update engine.

The kernel works like a spin-update circuit replicated over ``lane_budget``
lanes.  One schedule step updates a block of rows of one checkerboard
colour.  In a step the global LFSR advances once and each active lane
draws one 12-bit number (see ``rng`` for how a draw is formed).  A spin flips when its local energy
``eps = S0 * (neighbour sum)`` is <= 0, or when the draw is below the
table threshold for ``eps``.  Flipping changes the energy by ``2 * eps``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import CapacityError, ConfigurationError
from .lattice import BLACK, WHITE, SpinLattice, check_side
from .rng import LaneRngBank

TABLE_BITS = 12
TABLE_SCALE = 1 << TABLE_BITS
TABLE_MAX = TABLE_SCALE - 1
EPSILONS = (-4, -2, 0, 2, 4)


def threshold(boltzmann_factor: float) -> int:
    """12-bit fixed-point encoding of an acceptance probability."""
    return min(TABLE_MAX, int(round(TABLE_SCALE * boltzmann_factor)))


@dataclass(frozen=True)
class BoltzmannTable:
    """Five 12-bit thresholds indexed by ``(eps + 4) // 2``.

    Entries for eps <= 0 are never read by the comparator path and are
    stored saturated.
    """

    entries: tuple[int, int, int, int, int]
    T: float

    def __getitem__(self, eps: int) -> int:
        if eps not in EPSILONS:
            raise ValueError(f"eps must be one of {EPSILONS}, got {eps}")
        return self.entries[(eps + 4) // 2]

    def as_array(self) -> np.ndarray:
        return np.array(self.entries, dtype=np.int32)


def build_boltzmann_table(T: float) -> BoltzmannTable:
    if not T > 0:
        raise ValueError(f"temperature must be positive, got {T}")
    beta = 1.0 / T
    entries = tuple(
        threshold(math.exp(-beta * 2 * eps)) if eps > 0 else TABLE_MAX for eps in EPSILONS
    )
    return BoltzmannTable(entries, float(T))


def update_spin(S0: int, eps: int, r: int, table: BoltzmannTable) -> int:
    """New value of one spin: the OR of the downhill and random-accept comparators."""
    if eps not in EPSILONS:
        raise ValueError(f"eps must be one of {EPSILONS}, got {eps}")
    if not 0 <= r <= TABLE_MAX:
        raise ValueError(f"draw must be a 12-bit value, got {r}")
    flip = eps <= 0 or r < table[eps]
    return -S0 if flip else S0


@dataclass(frozen=True)
class RowBlockSchedule:
    """Order of (colour, first row, stop row) steps for one Monte Carlo step."""

    L: int
    lane_budget: int
    rows_per_step: int
    steps: tuple[tuple[int, int, int], ...]

    @property
    def steps_per_sublattice(self) -> int:
        return len(self.steps) // 2

    @property
    def lanes_per_step(self) -> int:
        return self.rows_per_step * (self.L // 2)

    def color_steps(self, color: int):
        return [s for s in self.steps if s[0] == color]


def row_block_schedule(L: int, lane_budget: int) -> RowBlockSchedule:
    """Split each sublattice into blocks of rows that fit in ``lane_budget`` lanes."""
    L = check_side(L)
    half = L // 2
    if lane_budget < half:
        raise CapacityError(
            f"lane budget {lane_budget} cannot hold one sublattice row of {half} sites"
        )
    if lane_budget % 2:
        raise ValueError(f"lane budget must be even, got {lane_budget}")
    rows = min(L, lane_budget // half)
    return RowBlockSchedule(L, lane_budget, rows, _block_steps(L, rows))


def _block_steps(L: int, rows: int) -> tuple[tuple[int, int, int], ...]:
    return tuple(
        (color, start, min(start + rows, L)) for color in (BLACK, WHITE) for start in range(0, L, rows)
    )


@dataclass(frozen=True)
class StepPlan:
    """Flat site indices for one step (lane k updates ``sites[k]``)."""

    sites: np.ndarray
    nbrs: np.ndarray  # shape (4, n): left, top, right, bottom


def _nn_indices(L: int, rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
    return np.stack(
        [
            rows * L + (cols - 1) % L,
            ((rows - 1) % L) * L + cols,
            rows * L + (cols + 1) % L,
            ((rows + 1) % L) * L + cols,
        ]
    )


def _nnn_indices(L: int, rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
    up, down = (rows - 1) % L, (rows + 1) % L
    left, right = (cols - 1) % L, (cols + 1) % L
    return np.stack([up * L + left, up * L + right, down * L + right, down * L + left])


@lru_cache(maxsize=64)
def _plans(L: int, rows_per_step: int) -> tuple[StepPlan, ...]:
    plans = []
    for color, start, stop in _block_steps(L, rows_per_step):
        i, j = np.indices((stop - start, L))
        i = i + start
        keep = (i + j) % 2 == color
        rows, cols = i[keep], j[keep]  # row-major order
        plans.append(StepPlan(rows * L + cols, _nn_indices(L, rows, cols)))
    return tuple(plans)


def step_plans(schedule: RowBlockSchedule) -> tuple[StepPlan, ...]:
    """Site/neighbour index arrays for every step of ``schedule``."""
    return _plans(schedule.L, schedule.rows_per_step)


def _check_setup(L: int, bank: LaneRngBank, schedule: RowBlockSchedule):
    if schedule.L != L:
        raise ConfigurationError(f"schedule built for L={schedule.L}, lattice has L={L}")
    if bank.n_lanes < schedule.lanes_per_step:
        raise ConfigurationError(
            f"schedule needs {schedule.lanes_per_step} lanes per step, bank has {bank.n_lanes}"
        )


def _update_step(s: np.ndarray, plan: StepPlan, r: np.ndarray, thresholds: np.ndarray) -> None:
    s0 = s[plan.sites]
    nb = s[plan.nbrs].sum(axis=0, dtype=np.int8)
    eps = s0 * nb
    accept = (eps <= 0) | (r < thresholds[(eps + 4) >> 1])
    s[plan.sites] = np.where(accept, -s0, s0)


def half_sweep_array(
    spins: np.ndarray, color: int, bank: LaneRngBank, table: BoltzmannTable, schedule: RowBlockSchedule
) -> int:
    """In-place half sweep of a decoded ``(L, L)`` int8 array; returns trial count."""
    _check_setup(spins.shape[0], bank, schedule)
    s = spins.reshape(-1)
    thr = table.as_array()
    trials = 0
    for (step_color, _, _), plan in zip(schedule.steps, step_plans(schedule)):
        if step_color != color:
            continue
        bank.cycle_advance()
        r = bank.draw_lanes(plan.sites.size)
        _update_step(s, plan, r, thr)
        trials += plan.sites.size
    return trials


def mcs_array(spins: np.ndarray, bank: LaneRngBank, table: BoltzmannTable, schedule: RowBlockSchedule) -> int:
    """One Monte Carlo step (BLACK then WHITE) on a decoded array."""
    return half_sweep_array(spins, BLACK, bank, table, schedule) + half_sweep_array(
        spins, WHITE, bank, table, schedule
    )


def half_sweep(lat: SpinLattice, color: int, bank: LaneRngBank, table: BoltzmannTable, schedule: RowBlockSchedule) -> int:
    if color not in (BLACK, WHITE):
        raise ValueError(f"color must be BLACK (0) or WHITE (1), got {color}")
    _check_setup(lat.L, bank, schedule)
    s = lat.spins()
    trials = half_sweep_array(s, color, bank, table, schedule)
    lat.load_spins(s)
    return trials


def mcs(lat: SpinLattice, bank: LaneRngBank, table: BoltzmannTable, schedule: RowBlockSchedule) -> int:
    """Update both sublattices once; returns the number of trials (N)."""
    _check_setup(lat.L, bank, schedule)
    s = lat.spins()
    trials = mcs_array(s, bank, table, schedule)
    lat.load_spins(s)
    return trials


def mcs_with_draws(spins: np.ndarray, table: BoltzmannTable, draws: np.ndarray) -> int:
    """Checkerboard sweep where site (i, j) consumes ``draws[i, j]``.

    Lets other kernels be compared trajectory by trajectory against this one.
    """
    L = spins.shape[0]
    s = spins.reshape(-1)
    r = np.asarray(draws).reshape(-1)
    thr = table.as_array()
    for color in (BLACK, WHITE):
        plan = _color_plan(L, color)
        _update_step(s, plan, r[plan.sites], thr)
    return L * L


@lru_cache(maxsize=64)
def _color_plan(L: int, color: int) -> StepPlan:
    i, j = np.indices((L, L))
    keep = (i + j) % 2 == color
    rows, cols = i[keep], j[keep]
    return StepPlan(rows * L + cols, _nn_indices(L, rows, cols))


@lru_cache(maxsize=16)
def _neighbor_lists(L: int) -> list:
    idx = np.arange(L * L)
    return _nn_indices(L, idx // L, idx % L).T.tolist()


def sequential_mcs_array(spins: np.ndarray, rng: np.random.Generator, T: float, n_mcs: int = 1) -> int:
    """Random-site single-spin Metropolis in double precision.

    Each MCS makes N trials at uniformly chosen sites and accepts an uphill
    move when a uniform float is below exp(-dE / T).
    """
    if not T > 0:
        raise ValueError(f"temperature must be positive, got {T}")
    L = spins.shape[0]
    N = L * L
    nbrs = _neighbor_lists(L)
    accept = {e: math.exp(-2.0 * e / T) for e in (2, 4)}
    s = spins.reshape(-1).tolist()
    for _ in range(n_mcs):
        sites = rng.integers(0, N, size=N).tolist()
        us = rng.random(N).tolist()
        for k, u in zip(sites, us):
            a, b, c, d = nbrs[k]
            eps = s[k] * (s[a] + s[b] + s[c] + s[d])
            if eps <= 0 or u < accept[eps]:
                s[k] = -s[k]
    spins.reshape(-1)[:] = s
    return n_mcs * N


def sequential_mcs_reference(lat: SpinLattice, rng, T: float) -> int:
    """One sequential MCS on a packed lattice; ``rng`` is a Generator or seed."""
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    s = lat.spins()
    trials = sequential_mcs_array(s, rng, T)
    lat.load_spins(s)
    return trials


@lru_cache(maxsize=64)
def _flat_plans(L: int, rows_per_step: int):
    from ._jit import flatten_plans

    return flatten_plans(_plans(L, rows_per_step))


def _jit_args(spins, bank, table, schedule):
    _check_setup(spins.shape[0], bank, schedule)
    if spins.dtype != np.int8 or not spins.flags.c_contiguous:
        raise ValueError("spins must be a C-contiguous int8 array")
    sites, nbrs, offsets = _flat_plans(schedule.L, schedule.rows_per_step)
    lanes = bank.locals.astype(np.int64)
    return spins.reshape(-1), sites, nbrs, offsets, table.as_array().astype(np.int64), lanes


def run_lane_mcs(spins: np.ndarray, bank: LaneRngBank, table: BoltzmannTable, schedule: RowBlockSchedule, n_mcs: int = 1) -> int:
    """Compiled equivalent of calling ``mcs_array`` ``n_mcs`` times."""
    from ._jit import _steps

    s, sites, nbrs, offsets, thr, lanes = _jit_args(spins, bank, table, schedule)
    bank.global_state = int(_steps(s, sites, nbrs, offsets, thr, bank.global_state, lanes, n_mcs, bank.leap))
    bank.locals[:] = lanes
    return n_mcs * spins.size


def sample_lane_chain(
    spins: np.ndarray,
    bank: LaneRngBank,
    table: BoltzmannTable,
    schedule: RowBlockSchedule,
    n_samples: int,
    stride: int,
) -> tuple[np.ndarray, np.ndarray]:
    """Run ``stride`` MCS then record (M, E) with J = 1, ``n_samples`` times."""
    from ._jit import _sample

    s, sites, nbrs, offsets, thr, lanes = _jit_args(spins, bank, table, schedule)
    out_m = np.empty(n_samples, dtype=np.int64)
    out_e = np.empty(n_samples, dtype=np.int64)
    g = _sample(
        s, schedule.L, sites, nbrs, offsets, thr, bank.global_state, lanes, n_samples, stride, bank.leap, out_m, out_e
    )
    bank.global_state = int(g)
    bank.locals[:] = lanes
    return out_m, out_e
