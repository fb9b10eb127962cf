"""Combined global/local LFSR random number generator.

A single 32-bit LFSR is shared by every update lane and each lane owns a
12-bit LFSR.  A lane's 12-bit draw is the XOR of the low 12 bits of the
global register with its own freshly stepped local register.

By default a draw clocks the lane register 12 times (leap-forward), so
every draw carries a fresh 12-bit word.  With ``leap=1`` consecutive draws
of a lane are one-bit shifts of each other; a site that keeps getting
numbers from the same lane then sees correlated acceptances, which
visibly biases small lattices.

Both registers are Fibonacci LFSRs shifting left, with the feedback bit
entering at the least significant position:

* 32 bit: x^32 + x^22 + x^2 + x + 1, feedback = b31 ^ b21 ^ b1 ^ b0
* 12 bit: x^12 + x^11 + x^10 + x^4 + 1, feedback = b11 ^ b10 ^ b9 ^ b3
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import CapacityError

MASK32 = 0xFFFFFFFF
MASK12 = 0xFFF
MAX_LANES = 4095
DEFAULT_LEAP = 12


def lfsr32_next(state: int) -> int:
    """Advance the 32-bit register by one shift."""
    if state & MASK32 == 0:
        raise ValueError("LFSR32 state must be nonzero")
    s = state & MASK32
    fb = ((s >> 31) ^ (s >> 21) ^ (s >> 1) ^ s) & 1
    return ((s << 1) | fb) & MASK32


def lfsr12_next(state: int) -> int:
    """Advance the 12-bit register by one shift."""
    s = state & MASK12
    if s == 0 or state != s:
        raise ValueError(f"LFSR12 state must be in [1, 4095], got {state}")
    fb = ((s >> 11) ^ (s >> 10) ^ (s >> 9) ^ (s >> 3)) & 1
    return ((s << 1) | fb) & MASK12


def _lfsr12_step_array(states: np.ndarray) -> np.ndarray:
    fb = ((states >> 11) ^ (states >> 10) ^ (states >> 9) ^ (states >> 3)) & 1
    return ((states << 1) | fb) & MASK12


def seed_digest32(master_seed: int) -> int:
    """Nonzero 32-bit digest of an arbitrary integer seed."""
    raw = int(master_seed).to_bytes(16, "little", signed=True)
    value = int.from_bytes(hashlib.blake2b(raw, digest_size=4).digest(), "little")
    return value or 1


@dataclass
class LaneRngBank:
    """One global LFSR32 plus one LFSR12 per update lane."""

    global_state: int
    locals: np.ndarray = field(repr=False)
    leap: int = DEFAULT_LEAP

    def __post_init__(self):
        if self.leap < 1:
            raise ValueError("leap must be >= 1")
        self.locals = np.asarray(self.locals, dtype=np.uint16)
        if self.locals.ndim != 1 or self.locals.size < 1:
            raise ValueError("bank needs at least one lane")
        if self.global_state & MASK32 == 0:
            raise ValueError("global LFSR state must be nonzero")
        if np.any(self.locals == 0) or np.any(self.locals > MASK12):
            raise ValueError("local LFSR states must be in [1, 4095]")

    @property
    def n_lanes(self) -> int:
        return int(self.locals.size)

    def copy(self) -> "LaneRngBank":
        return LaneRngBank(self.global_state, self.locals.copy(), self.leap)

    def cycle_advance(self) -> None:
        """Step the shared register once; lane registers are left alone."""
        self.global_state = lfsr32_next(self.global_state)

    def draw12(self, lane: int) -> int:
        """Clock ``lane``'s register ``leap`` times and return its 12-bit draw."""
        if not 0 <= lane < self.locals.size:
            raise IndexError(f"lane {lane} out of range for {self.locals.size} lanes")
        nxt = int(self.locals[lane])
        for _ in range(self.leap):
            nxt = lfsr12_next(nxt)
        self.locals[lane] = nxt
        return (self.global_state & MASK12) ^ nxt

    def draw_lanes(self, n: int) -> np.ndarray:
        """Vectorised ``draw12`` for lanes ``0 .. n-1`` (same global slice)."""
        if not 0 <= n <= self.locals.size:
            raise IndexError(f"requested {n} lanes from a bank of {self.locals.size}")
        head = self.locals[:n]
        for _ in range(self.leap):
            head = _lfsr12_step_array(head)
        self.locals[:n] = head
        return head ^ np.uint16(self.global_state & MASK12)


def seed_lanes(master_seed: int, n_lanes: int, leap: int = DEFAULT_LEAP) -> LaneRngBank:
    """Deterministically seed a bank from a single integer.

    Lane states are low-12-bit slices of the global register taken every
    32 steps, skipping zeros and repeats.  The global register of the
    returned bank holds the digest itself, not the advanced value.
    """
    if n_lanes < 1:
        raise ValueError("n_lanes must be >= 1")
    if n_lanes > MAX_LANES:
        raise CapacityError(
            f"at most {MAX_LANES} lanes have distinct nonzero 12-bit states, got {n_lanes}"
        )
    g0 = seed_digest32(master_seed)
    g = g0
    seen = set()
    states = []
    while len(states) < n_lanes:
        for _ in range(32):
            g = lfsr32_next(g)
        cand = g & MASK12
        if cand and cand not in seen:
            seen.add(cand)
            states.append(cand)
    return LaneRngBank(g0, np.array(states, dtype=np.uint16), leap)


def lfsr32_stream(master_seed: int, n_bits: int) -> np.ndarray:
    """Successive low bits of the bare global register, one per step."""
    g = seed_digest32(master_seed)
    out = np.empty(n_bits, dtype=np.uint8)
    for i in range(n_bits):
        fb = ((g >> 31) ^ (g >> 21) ^ (g >> 1) ^ g) & 1
        g = ((g << 1) | fb) & MASK32
        out[i] = fb
    return out


def lfsr12_stream(master_seed: int, n_bits: int) -> np.ndarray:
    """Successive low bits of a bare lane register (period 4095)."""
    s = int(seed_lanes(master_seed, 1).locals[0])
    out = np.empty(n_bits, dtype=np.uint8)
    for i in range(n_bits):
        s = lfsr12_next(s)
        out[i] = s & 1
    return out


def combined_stream(master_seed: int, n_bits: int, n_lanes: int = 2048, leap: int = DEFAULT_LEAP) -> np.ndarray:
    """Draws in the order the kernel consumes them.

    Each cycle advances the bank once and emits the 12-bit draw of every
    lane, most significant bit first, lane 0 first.
    """
    bank = seed_lanes(master_seed, n_lanes, leap)
    shifts = np.arange(11, -1, -1, dtype=np.uint16)
    per_cycle = 12 * n_lanes
    chunks = []
    for _ in range(-(-n_bits // per_cycle)):
        bank.cycle_advance()
        r = bank.draw_lanes(n_lanes)
        chunks.append(((r[:, None] >> shifts) & 1).astype(np.uint8).ravel())
    return np.concatenate(chunks)[:n_bits]


def _combined_single_shift(master_seed: int, n_bits: int) -> np.ndarray:
    return combined_stream(master_seed, n_bits, leap=1)


GENERATORS = {
    "combined": combined_stream,
    "combined-leap1": _combined_single_shift,
    "lfsr32": lfsr32_stream,
    "lfsr12": lfsr12_stream,
}


def generate_bits(source: str, n_bits: int, master_seed: int = 2015) -> np.ndarray:
    """Bitstream from a named generator."""
    try:
        gen = GENERATORS[source]
    except KeyError:
        raise ValueError(f"unknown generator {source!r}; choose from {sorted(GENERATORS)}") from None
    if n_bits < 1:
        raise ValueError("n_bits must be >= 1")
    return gen(master_seed, n_bits)


def export_bitstream(source, n_bits: int, destination, master_seed: int = 2015) -> Path:
    """Write raw bits, 8 per byte, least significant bit first.

    ``source`` is a generator name or an array of 0/1 values.
    """
    if n_bits < 1:
        raise ValueError("n_bits must be >= 1")
    if isinstance(source, str):
        bits = generate_bits(source, n_bits, master_seed)
    else:
        bits = np.asarray(source, dtype=np.uint8).ravel()[:n_bits]
        if bits.size < n_bits:
            raise ValueError(f"source holds {bits.size} bits, {n_bits} requested")
    path = Path(destination)
    path.write_bytes(np.packbits(bits, bitorder="little").tobytes())
    return path


def read_bitstream(path, n_bits: int | None = None) -> np.ndarray:
    raw = np.frombuffer(Path(path).read_bytes(), dtype=np.uint8)
    bits = np.unpackbits(raw, bitorder="little")
    return bits if n_bits is None else bits[:n_bits]
