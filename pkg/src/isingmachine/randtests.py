"""A subset of the NIST SP 800-22 statistical tests.

Every test takes a 1-D array of 0/1 values and returns a p-value.  The
battery runs them all at the suite's default significance level of 0.01.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import erfc, exp, sqrt

import numpy as np
from scipy.special import gammaincc
from scipy.stats import norm

from .errors import InsufficientDataError

ALPHA = 0.01
RANK_MATRIX_DIM = 32
RANK_MIN_MATRICES = 38


def _as_bits(bits) -> np.ndarray:
    arr = np.asarray(bits, dtype=np.int8).ravel()
    if arr.size and (arr.min() < 0 or arr.max() > 1):
        raise ValueError("bitstream must contain only 0 and 1")
    return arr


def _require(n, minimum, name):
    if n < minimum:
        raise InsufficientDataError(f"{name} needs at least {minimum} bits, got {n}")


def monobit_test(bits) -> float:
    """Frequency (monobit) test."""
    b = _as_bits(bits)
    n = b.size
    _require(n, 100, "monobit test")
    s = 2 * int(b.sum()) - n
    return erfc(abs(s) / sqrt(2.0 * n))


def block_frequency_test(bits, block_len: int = 128) -> float:
    """Frequency test within blocks of ``block_len`` bits."""
    b = _as_bits(bits)
    n = b.size
    _require(n, 100, "block frequency test")
    if block_len < 2:
        raise ValueError("block_len must be >= 2")
    n_blocks = n // block_len
    if n_blocks < 1:
        raise InsufficientDataError("stream shorter than one block")
    pi = b[: n_blocks * block_len].reshape(n_blocks, block_len).mean(axis=1)
    chi2 = 4.0 * block_len * float(np.sum((pi - 0.5) ** 2))
    return float(gammaincc(n_blocks / 2.0, chi2 / 2.0))


def runs_test(bits) -> float:
    """Runs test; returns 0 when the monobit prerequisite fails."""
    b = _as_bits(bits)
    n = b.size
    _require(n, 100, "runs test")
    pi = b.mean()
    if abs(pi - 0.5) >= 2.0 / sqrt(n):
        return 0.0
    v = 1 + int(np.count_nonzero(b[1:] != b[:-1]))
    num = abs(v - 2.0 * n * pi * (1.0 - pi))
    den = 2.0 * sqrt(2.0 * n) * pi * (1.0 - pi)
    return erfc(num / den)


def cusum_test(bits, mode: str = "forward") -> float:
    """Cumulative sums test, ``mode`` is ``"forward"`` or ``"backward"``."""
    b = _as_bits(bits)
    n = b.size
    _require(n, 100, "cumulative sums test")
    x = 2 * b.astype(np.int64) - 1
    if mode == "backward":
        x = x[::-1]
    elif mode != "forward":
        raise ValueError(f"unknown mode {mode!r}")
    z = int(np.abs(np.cumsum(x)).max())
    if z == 0:
        return 1.0
    rn = sqrt(n)
    k1 = np.arange(int(np.floor((-n / z + 1) / 4)), int(np.floor((n / z - 1) / 4)) + 1)
    k2 = np.arange(int(np.floor((-n / z - 3) / 4)), int(np.floor((n / z - 1) / 4)) + 1)
    s1 = np.sum(norm.cdf((4 * k1 + 1) * z / rn) - norm.cdf((4 * k1 - 1) * z / rn))
    s2 = np.sum(norm.cdf((4 * k2 + 3) * z / rn) - norm.cdf((4 * k2 + 1) * z / rn))
    return float(min(1.0, max(0.0, 1.0 - s1 + s2)))


def gf2_ranks(rows: np.ndarray, n_cols: int) -> np.ndarray:
    """Ranks over GF(2) of a stack of bit matrices.

    ``rows`` has shape (n_matrices, n_rows) and holds each row as an
    unsigned integer whose low ``n_cols`` bits are the entries.
    """
    work = np.array(rows, dtype=np.uint64, copy=True)
    n_mat, n_rows = work.shape
    used = np.zeros((n_mat, n_rows), dtype=bool)
    rank = np.zeros(n_mat, dtype=np.int64)
    idx = np.arange(n_mat)
    for bit in range(n_cols - 1, -1, -1):
        has = ((work >> np.uint64(bit)) & np.uint64(1)).astype(bool)
        cand = has & ~used
        found = cand.any(axis=1)
        if not found.any():
            continue
        piv = np.argmax(cand, axis=1)
        m = idx[found]
        p = piv[found]
        pivot_rows = work[m, p]
        clear = has[m].copy()
        clear[np.arange(m.size), p] = False
        work[m] ^= np.where(clear, pivot_rows[:, None], np.uint64(0))
        used[m, p] = True
        rank[m] += 1
    return rank


def _rank_probabilities(m: int, q: int) -> tuple[float, float, float]:
    def prob(r):
        prod = 1.0
        for i in range(r):
            prod *= (1 - 2.0 ** (i - q)) * (1 - 2.0 ** (i - m)) / (1 - 2.0 ** (i - r))
        return 2.0 ** (r * (q + m - r) - m * q) * prod

    p_full = prob(m)
    p_minus1 = prob(m - 1)
    return p_full, p_minus1, 1.0 - p_full - p_minus1


def rank_test(bits) -> float:
    """Binary matrix rank test on 32x32 matrices filled row by row."""
    b = _as_bits(bits)
    dim = RANK_MATRIX_DIM
    block = dim * dim
    _require(b.size, RANK_MIN_MATRICES * block, "rank test")
    n_mat = b.size // block
    mats = b[: n_mat * block].reshape(n_mat, dim, dim).astype(np.uint64)
    weights = np.uint64(1) << np.arange(dim - 1, -1, -1, dtype=np.uint64)
    rows = (mats * weights).sum(axis=2, dtype=np.uint64)
    ranks = gf2_ranks(rows, dim)
    f_full = int(np.count_nonzero(ranks == dim))
    f_minus1 = int(np.count_nonzero(ranks == dim - 1))
    f_rest = n_mat - f_full - f_minus1
    probs = _rank_probabilities(dim, dim)
    chi2 = sum((f - p * n_mat) ** 2 / (p * n_mat) for f, p in zip((f_full, f_minus1, f_rest), probs))
    return exp(-chi2 / 2.0)


@dataclass(frozen=True)
class TestOutcome:
    name: str
    p_value: float

    @property
    def passed(self) -> bool:
        return self.p_value >= ALPHA


def run_battery(bits, block_len: int = 128) -> list[TestOutcome]:
    """Run every implemented test on one stream."""
    b = _as_bits(bits)
    return [
        TestOutcome("Frequency", monobit_test(b)),
        TestOutcome("BlockFrequency", block_frequency_test(b, block_len)),
        TestOutcome("CumulativeSums-forward", cusum_test(b, "forward")),
        TestOutcome("CumulativeSums-backward", cusum_test(b, "backward")),
        TestOutcome("Runs", runs_test(b)),
        TestOutcome("Rank", rank_test(b)),
    ]


def format_battery(outcomes, title: str = "") -> str:
    """Fixed-width table of test name, p-value and verdict."""
    lines = []
    if title:
        lines.append(title)
    lines.append(f"{'test':<26}{'p-value':>10}  result")
    lines.append("-" * 44)
    for o in outcomes:
        lines.append(f"{o.name:<26}{o.p_value:>10.6f}  {'PASS' if o.passed else 'FAIL'}")
    return "\n".join(lines)
