"""Hamiltonians beyond the nearest-neighbour Ising model.

Every model plugs into the same lane machinery: propose a new state,
compute its energy change, compare a 12-bit draw with a precomputed
threshold for uphill moves.

J1/J2: binary spins with ferromagnetic nearest and antiferromagnetic
next-nearest (diagonal) couplings, updated over four colour classes that
contain neither kind of neighbour pair.

Potts: q integer states with Kronecker-delta bonds; each trial uses one
draw to pick one of the other q - 1 states and a second draw to accept.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import ConfigurationError
from .kernel import (
    TABLE_SCALE,
    RowBlockSchedule,
    StepPlan,
    _nn_indices,
    _nnn_indices,
    threshold,
)
from .lattice import BLACK, WHITE, check_side
from .rng import LaneRngBank

NEIGHBOR_SUMS = (-4, -2, 0, 2, 4)
# J2 = 0 reduces to checkerboard order: classes 0, 3 are BLACK and 1, 2 WHITE
FOUR_COLOR_ORDER = (0, 3, 1, 2)


def epsilon_nn(S0: int, nbr_sum: int) -> int:
    """Local energy S0 * (sum of the four nearest neighbours); flipping costs 2 * eps."""
    if S0 not in (1, -1):
        raise ValueError(f"S0 must be +1 or -1, got {S0}")
    if nbr_sum not in NEIGHBOR_SUMS:
        raise ValueError(f"neighbour sum must be one of {NEIGHBOR_SUMS}, got {nbr_sum}")
    return S0 * nbr_sum


def _check_j1j2(J1, J2):
    if not (J1 > 0 and J2 < 0):
        raise ValueError(f"J1/J2 model needs J1 > 0 and J2 < 0, got J1={J1}, J2={J2}")


def epsilon_j1j2(S0: int, nn_sum: int, nnn_sum: int, J1: float, J2: float, *, allow_zero_j2: bool = False) -> float:
    """``(J1 * nn_sum + J2 * nnn_sum) * S0``; flipping costs twice this."""
    if S0 not in (1, -1):
        raise ValueError(f"S0 must be +1 or -1, got {S0}")
    if nn_sum not in NEIGHBOR_SUMS or nnn_sum not in NEIGHBOR_SUMS:
        raise ValueError("neighbour sums must be even integers in [-4, 4]")
    if not (allow_zero_j2 and J2 == 0 and J1 > 0):
        _check_j1j2(J1, J2)
    return (J1 * nn_sum + J2 * nnn_sum) * S0


@dataclass(frozen=True)
class J1J2Table:
    """Thresholds for every (S0 * nn_sum, S0 * nnn_sum) pair.

    ``grid[a, b]`` is indexed by ``(S0*nn_sum + 4) // 2`` and
    ``(S0*nnn_sum + 4) // 2``; ``free[a, b]`` marks moves with eps' <= 0.
    ``levels`` lists the distinct positive eps' values with their thresholds.
    """

    T: float
    J1: float
    J2: float
    grid: np.ndarray
    free: np.ndarray
    levels: tuple[tuple[float, int], ...]


def j1j2_boltzmann_table(T: float, J1: float, J2: float, *, allow_zero_j2: bool = False) -> J1J2Table:
    if not T > 0:
        raise ValueError(f"temperature must be positive, got {T}")
    if not (allow_zero_j2 and J2 == 0 and J1 > 0):
        _check_j1j2(J1, J2)
    grid = np.full((5, 5), TABLE_SCALE - 1, dtype=np.int64)
    free = np.zeros((5, 5), dtype=bool)
    levels = {}
    for a, nn in enumerate(NEIGHBOR_SUMS):
        for b, nnn in enumerate(NEIGHBOR_SUMS):
            eps = J1 * nn + J2 * nnn
            if eps <= 0:
                free[a, b] = True
            else:
                grid[a, b] = threshold(math.exp(-2.0 * eps / T))
                levels[eps] = int(grid[a, b])
    return J1J2Table(float(T), J1, J2, grid, free, tuple(sorted(levels.items())))


@dataclass(frozen=True)
class J1J2Plan:
    sites: np.ndarray
    nn: np.ndarray
    nnn: np.ndarray


@lru_cache(maxsize=32)
def _four_color_plans(L: int, rows_per_step: int) -> tuple[tuple[int, J1J2Plan], ...]:
    """Steps per colour class; a class occupies every other row."""
    plans = []
    for color in FOUR_COLOR_ORDER:
        row_par, col_par = divmod(color, 2)
        class_rows = np.arange(row_par, L, 2)
        for start in range(0, class_rows.size, rows_per_step):
            rows_blk = class_rows[start : start + rows_per_step]
            cols = np.arange(col_par, L, 2)
            r, c = np.meshgrid(rows_blk, cols, indexing="ij")
            r, c = r.ravel(), c.ravel()
            plans.append((color, J1J2Plan(r * L + c, _nn_indices(L, r, c), _nnn_indices(L, r, c))))
    return tuple(plans)


def _j1j2_update(s, plan: J1J2Plan, r, table: J1J2Table):
    s0 = s[plan.sites]
    a = ((s0 * s[plan.nn].sum(axis=0, dtype=np.int8)) + 4) >> 1
    b = ((s0 * s[plan.nnn].sum(axis=0, dtype=np.int8)) + 4) >> 1
    accept = table.free[a, b] | (r < table.grid[a, b])
    s[plan.sites] = np.where(accept, -s0, s0)


def j1j2_mcs_array(spins: np.ndarray, bank: LaneRngBank, table: J1J2Table, schedule: RowBlockSchedule) -> int:
    """One MCS over the four colour classes, lanes assigned row-major per step."""
    L = spins.shape[0]
    if schedule.L != L:
        raise ConfigurationError(f"schedule built for L={schedule.L}, lattice has L={L}")
    s = spins.reshape(-1)
    trials = 0
    for _, plan in _four_color_plans(L, schedule.rows_per_step):
        n = plan.sites.size
        if n > bank.n_lanes:
            raise ConfigurationError(f"step needs {n} lanes, bank has {bank.n_lanes}")
        bank.cycle_advance()
        _j1j2_update(s, plan, bank.draw_lanes(n), table)
        trials += n
    return trials


def j1j2_mcs_with_draws(spins: np.ndarray, table: J1J2Table, draws: np.ndarray) -> int:
    """Four-colour sweep where site (i, j) consumes ``draws[i, j]``."""
    L = check_side(spins.shape[0])
    s = spins.reshape(-1)
    r = np.asarray(draws).reshape(-1)
    for _, plan in _four_color_plans(L, L):
        _j1j2_update(s, plan, r[plan.sites], table)
    return L * L


def j1j2_energy(spins: np.ndarray, J1: float, J2: float) -> float:
    """-J1 sum_nn s_i s_j - J2 sum_nnn s_i s_j over the torus, each bond once."""
    s = spins.astype(np.int64)
    nn = np.sum(s * (np.roll(s, -1, 0) + np.roll(s, -1, 1)))
    diag = np.roll(np.roll(s, -1, 0), -1, 1) + np.roll(np.roll(s, -1, 0), 1, 1)
    nnn = np.sum(s * diag)
    return float(-J1 * nn - J2 * nnn)


# --- Potts ---------------------------------------------------------------


@dataclass
class PottsLattice:
    """L x L array of states in 1..q."""

    L: int
    states: np.ndarray
    q: int

    def __post_init__(self):
        self.L = check_side(self.L)
        if self.q < 2:
            raise ValueError(f"Potts model needs q >= 2, got {self.q}")
        self.states = np.asarray(self.states, dtype=np.int16)
        if self.states.shape != (self.L, self.L):
            raise ValueError(f"states must have shape {(self.L, self.L)}")
        if self.states.min() < 1 or self.states.max() > self.q:
            raise ValueError(f"states must lie in [1, {self.q}]")

    @property
    def N(self) -> int:
        return self.L * self.L


def new_potts_lattice(L: int, q: int, init: str = "random", seed: int = 0) -> PottsLattice:
    L = check_side(L)
    if init in ("all_up", "ordered"):
        return PottsLattice(L, np.ones((L, L), dtype=np.int16), q)
    if init != "random":
        raise ValueError(f"unknown init {init!r}")
    rng = np.random.default_rng(seed)
    return PottsLattice(L, rng.integers(1, q + 1, size=(L, L), dtype=np.int16), q)


def potts_propose(S0, q: int, rand):
    """Map a 12-bit draw to one of the q - 1 states different from ``S0``."""
    if q < 2:
        raise ValueError(f"Potts model needs q >= 2, got {q}")
    S0 = np.asarray(S0)
    if np.any(S0 < 1) or np.any(S0 > q):
        raise ValueError(f"state must lie in [1, {q}]")
    k = (np.asarray(rand, dtype=np.int64) * (q - 1)) >> 12  # 0 .. q-2
    out = k + 1 + (k + 1 >= S0)
    return int(out) if out.ndim == 0 else out.astype(np.int16)


def potts_delta_e(S0: int, S_prop: int, nbrs, J: float = 1.0, q: int | None = None) -> float:
    """Energy change J * (n_same(S0) - n_same(S_prop)) for the four neighbours."""
    nb = list(nbrs)
    if len(nb) != 4:
        raise ValueError("exactly four neighbour states are required")
    states = [S0, S_prop, *nb]
    if any(s < 1 for s in states) or (q is not None and any(s > q for s in states)):
        raise ValueError("Potts states out of range")
    return J * (sum(n == S0 for n in nb) - sum(n == S_prop for n in nb))


def potts_thresholds(T: float, J: float) -> np.ndarray:
    """Thresholds indexed by ``d + 4`` where dE = J * d; uphill moves only."""
    if not T > 0:
        raise ValueError(f"temperature must be positive, got {T}")
    out = np.full(9, TABLE_SCALE - 1, dtype=np.int64)
    for d in range(-4, 5):
        de = J * d
        if de > 0:
            out[d + 4] = threshold(math.exp(-de / T))
    return out


@lru_cache(maxsize=32)
def _potts_plans(L: int, rows_per_step: int) -> tuple[tuple[int, StepPlan], ...]:
    plans = []
    for color in (BLACK, WHITE):
        for start in range(0, L, rows_per_step):
            i, j = np.indices((min(rows_per_step, L - start), L))
            i = i + start
            keep = (i + j) % 2 == color
            r, c = i[keep], j[keep]
            plans.append((color, StepPlan(r * L + c, _nn_indices(L, r, c))))
    return tuple(plans)


def potts_mcs_array(
    states: np.ndarray, q: int, bank: LaneRngBank, T: float, J: float, schedule: RowBlockSchedule
) -> int:
    """Checkerboard Potts sweep on a raw state array; two draws per trial."""
    L = states.shape[0]
    if schedule.L != L:
        raise ConfigurationError(f"schedule built for L={schedule.L}, lattice has L={L}")
    thr = potts_thresholds(T, J)
    s = states.reshape(-1)
    trials = 0
    for _, plan in _potts_plans(L, schedule.rows_per_step):
        n = plan.sites.size
        if n > bank.n_lanes:
            raise ConfigurationError(f"step needs {n} lanes, bank has {bank.n_lanes}")
        bank.cycle_advance()
        r_prop = bank.draw_lanes(n)
        r_acc = bank.draw_lanes(n)
        s0 = s[plan.sites]
        k = (r_prop.astype(np.int64) * (q - 1)) >> 12
        prop = (k + 1 + (k + 1 >= s0)).astype(states.dtype)
        nb = s[plan.nbrs]
        d = (nb == s0).sum(axis=0) - (nb == prop).sum(axis=0)
        accept = (J * d <= 0) | (r_acc < thr[d + 4])
        s[plan.sites] = np.where(accept, prop, s0)
        trials += n
    return trials


def potts_mcs(lat: PottsLattice, bank: LaneRngBank, T: float, J: float, schedule: RowBlockSchedule) -> int:
    return potts_mcs_array(lat.states, lat.q, bank, T, J, schedule)


def potts_energy(states: np.ndarray, J: float = 1.0) -> float:
    s = np.asarray(states)
    same = (s == np.roll(s, -1, 0)).sum() + (s == np.roll(s, -1, 1)).sum()
    return float(-J * same)


def potts_order(states: np.ndarray, q: int) -> float:
    """(q * n_max - N) / (q - 1): N when fully ordered, ~0 when disordered.

    For q = 2 this is |n_1 - n_2|, the absolute Ising magnetisation.
    """
    counts = np.bincount(np.asarray(states).ravel(), minlength=q + 1)[1:]
    return (q * counts.max() - counts.sum()) / (q - 1)
