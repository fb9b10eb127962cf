"""Bit-packed square spin lattice with periodic boundaries.

Spins are stored one bit per site, row by row, in 64-bit words.  Bit 0
decodes to spin -1 and bit 1 to spin +1, the same Boolean/binary split as
a register file feeding an arithmetic circuit.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ModelMismatchError

WORD_BITS = 64


class Model(str, enum.Enum):
    NN_ISING = "ising"
    J1J2 = "j1j2"
    POTTS = "potts"


class Init(str, enum.Enum):
    ALL_UP = "all_up"
    RANDOM = "random"


BLACK = 0
WHITE = 1


@dataclass(frozen=True)
class ModelParams:
    """Hamiltonian choice and temperature (k_B = 1, zero field)."""

    model: Model = Model.NN_ISING
    T: float = 2.269
    J: float = 1.0
    J1: float = 1.0
    J2: float = -0.5
    q: int = 2
    B: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "model", Model(self.model))
        if not self.T > 0:
            raise ValueError(f"temperature must be positive, got {self.T}")
        if self.B != 0:
            raise ValueError("only zero external field is supported")
        if self.model is Model.J1J2 and not (self.J1 > 0 and self.J2 < 0):
            raise ValueError(f"J1/J2 model needs J1 > 0 and J2 < 0, got J1={self.J1}, J2={self.J2}")
        if self.model is Model.POTTS and self.q < 2:
            raise ValueError(f"Potts model needs q >= 2, got {self.q}")

    @property
    def beta(self) -> float:
        return 1.0 / self.T


def check_side(L: int) -> int:
    if int(L) != L or L < 4 or L % 2:
        raise ValueError(f"lattice side must be an even integer >= 4, got {L}")
    return int(L)


class SpinLattice:
    """L x L Ising configuration packed into ``(L, ceil(L/64))`` uint64 words."""

    def __init__(self, L: int, words: np.ndarray | None = None):
        self.L = check_side(L)
        self.n_words = -(-self.L // WORD_BITS)
        if words is None:
            words = np.zeros((self.L, self.n_words), dtype=np.uint64)
        words = np.asarray(words, dtype=np.uint64)
        if words.shape != (self.L, self.n_words):
            raise ValueError(f"expected word array of shape {(self.L, self.n_words)}, got {words.shape}")
        self.words = words.copy()
        self._clear_padding()

    @property
    def N(self) -> int:
        return self.L * self.L

    def _clear_padding(self):
        tail = self.L % WORD_BITS
        if tail:
            self.words[:, -1] &= np.uint64((1 << tail) - 1)

    @classmethod
    def from_spins(cls, spins) -> "SpinLattice":
        arr = np.asarray(spins)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise ValueError("spin array must be square")
        lat = cls(arr.shape[0])
        lat.load_spins(arr)
        return lat

    def spins(self) -> np.ndarray:
        """Decoded int8 array of +-1 values."""
        raw = self.words.astype("<u8").view(np.uint8).reshape(self.L, -1)
        bits = np.unpackbits(raw, axis=1, count=self.L, bitorder="little")
        return (2 * bits.astype(np.int8) - 1).astype(np.int8)

    def load_spins(self, spins) -> None:
        arr = np.asarray(spins)
        if arr.shape != (self.L, self.L):
            raise ValueError(f"expected spins of shape {(self.L, self.L)}, got {arr.shape}")
        if not np.all((arr == 1) | (arr == -1)):
            raise ValueError("spins must be +1 or -1")
        bits = (arr > 0).astype(np.uint8)
        packed = np.packbits(bits, axis=1, bitorder="little")
        buf = np.zeros((self.L, self.n_words * 8), dtype=np.uint8)
        buf[:, : packed.shape[1]] = packed
        self.words = buf.view("<u8").astype(np.uint64).reshape(self.L, self.n_words)

    def copy(self) -> "SpinLattice":
        return SpinLattice(self.L, self.words)

    def __eq__(self, other):
        if not isinstance(other, SpinLattice):
            return NotImplemented
        return self.L == other.L and np.array_equal(self.words, other.words)

    def _check_index(self, i, j):
        if not (0 <= i < self.L and 0 <= j < self.L):
            raise IndexError(f"site ({i}, {j}) outside {self.L}x{self.L} lattice")

    def spin_at(self, i: int, j: int) -> int:
        self._check_index(i, j)
        word = int(self.words[i, j // WORD_BITS])
        return 1 if (word >> (j % WORD_BITS)) & 1 else -1

    def set_spin(self, i: int, j: int, value: int) -> None:
        self._check_index(i, j)
        if value not in (1, -1):
            raise ValueError(f"spin must be +1 or -1, got {value}")
        w, b = divmod(j, WORD_BITS)
        word = int(self.words[i, w])
        word = word | (1 << b) if value == 1 else word & ~(1 << b)
        self.words[i, w] = np.uint64(word)

    def __repr__(self):
        return f"SpinLattice(L={self.L}, M={total_magnetization(self)})"


def new_lattice(L: int, init: Init | str = Init.RANDOM, seed: int = 0) -> SpinLattice:
    """Fresh lattice, either fully magnetised or with independent random spins."""
    L = check_side(L)
    init = Init(init)
    if init is Init.ALL_UP:
        return SpinLattice.from_spins(np.ones((L, L), dtype=np.int8))
    rng = np.random.default_rng(seed)
    return SpinLattice.from_spins(2 * rng.integers(0, 2, size=(L, L), dtype=np.int8) - 1)


def spin_at(lat: SpinLattice, i: int, j: int) -> int:
    return lat.spin_at(i, j)


def set_spin(lat: SpinLattice, i: int, j: int, value: int) -> None:
    lat.set_spin(i, j, value)


def neighbor_sum_nn(lat: SpinLattice, i: int, j: int) -> int:
    """Sum of the four nearest neighbours, wrapping at the edges."""
    lat._check_index(i, j)
    L = lat.L
    return (
        lat.spin_at(i, (j - 1) % L)
        + lat.spin_at((i - 1) % L, j)
        + lat.spin_at(i, (j + 1) % L)
        + lat.spin_at((i + 1) % L, j)
    )


def neighbor_sums(spins: np.ndarray) -> np.ndarray:
    """Nearest-neighbour sums for every site of a +-1 array."""
    s = spins.astype(np.int8, copy=False)
    return (
        np.roll(s, 1, axis=0) + np.roll(s, -1, axis=0) + np.roll(s, 1, axis=1) + np.roll(s, -1, axis=1)
    )


def total_magnetization(lat: SpinLattice) -> int:
    """M = sum of spins, from popcounts of the packed words."""
    ups = int(np.bitwise_count(lat.words).sum())
    return 2 * ups - lat.N


def bond_energy(spins: np.ndarray) -> int:
    """-sum over the 2N torus bonds of s_i s_j (coupling 1)."""
    s = spins.astype(np.int64, copy=False)
    return -int(np.sum(s * (np.roll(s, -1, axis=0) + np.roll(s, -1, axis=1))))


def total_energy_nn(lat: SpinLattice, params: ModelParams | None = None):
    """Nearest-neighbour Ising energy; an int when J == 1."""
    params = params or ModelParams()
    if params.model is not Model.NN_ISING:
        raise ModelMismatchError(f"total_energy_nn needs the nearest-neighbour Ising model, got {params.model.value}")
    e = bond_energy(lat.spins())
    return e if params.J == 1 else params.J * e


def checkerboard_partition(L: int) -> tuple[list[tuple[int, int]], list[tuple[int, int]]]:
    """(BLACK, WHITE) site lists; BLACK means i + j even."""
    L = check_side(L)
    black = [(i, j) for i in range(L) for j in range(L) if (i + j) % 2 == 0]
    white = [(i, j) for i in range(L) for j in range(L) if (i + j) % 2 == 1]
    return black, white


def four_color(i: int, j: int) -> int:
    return 2 * (i % 2) + (j % 2)


def four_color_partition(L: int) -> list[list[tuple[int, int]]]:
    """Four site classes free of nearest and next-nearest neighbour pairs."""
    L = check_side(L)
    classes = [[], [], [], []]
    for i in range(L):
        for j in range(L):
            classes[four_color(i, j)].append((i, j))
    return classes


def checkerboard_mask(L: int, color: int) -> np.ndarray:
    i, j = np.indices((L, L))
    return (i + j) % 2 == color


def write_snapshot(lat: SpinLattice, path) -> None:
    """Plain-text dump: ``L=<n>`` then L rows of ``+``/``-``."""
    s = lat.spins()
    rows = ["".join("+" if v > 0 else "-" for v in row) for row in s]
    Path(path).write_text(f"L={lat.L}\n" + "\n".join(rows) + "\n")


def read_snapshot(path) -> SpinLattice:
    lines = Path(path).read_text().split()
    if not lines or not lines[0].startswith("L="):
        raise ValueError(f"{path}: missing 'L=<n>' header")
    L = int(lines[0][2:])
    rows = lines[1:]
    if len(rows) != L or any(len(r) != L for r in rows):
        raise ValueError(f"{path}: expected {L} rows of {L} characters")
    table = {"+": 1, "-": -1}
    try:
        spins = np.array([[table[c] for c in r] for r in rows], dtype=np.int8)
    except KeyError as exc:
        raise ValueError(f"{path}: invalid spin character {exc.args[0]!r}") from None
    return SpinLattice.from_spins(spins)
