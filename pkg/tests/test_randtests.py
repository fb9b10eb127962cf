import numpy as np
import pytest

from isingmachine.errors import InsufficientDataError
from isingmachine.randtests import (
    _rank_probabilities,
    block_frequency_test,
    cusum_test,
    format_battery,
    gf2_ranks,
    monobit_test,
    rank_test,
    run_battery,
    runs_test,
)
from isingmachine.rng import generate_bits

# binary expansion of pi, 100 bits, with the worked p-values of the NIST
# SP 800-22 reference examples
PI_100 = (
    "1100100100001111110110101010001000100001011010001100"
    "001000110100110001001100011001100010100010111000"
)


@pytest.fixture
def pi_bits():
    return np.array([int(c) for c in PI_100], dtype=np.uint8)


def test_nist_reference_values(pi_bits):
    assert monobit_test(pi_bits) == pytest.approx(0.109599, abs=1e-6)
    assert block_frequency_test(pi_bits, 10) == pytest.approx(0.706438, abs=1e-6)
    assert runs_test(pi_bits) == pytest.approx(0.500798, abs=1e-6)
    assert cusum_test(pi_bits, "forward") == pytest.approx(0.219194, abs=1e-6)
    assert cusum_test(pi_bits, "backward") == pytest.approx(0.114866, abs=1e-6)


def test_extreme_streams():
    ones = np.ones(10_000, dtype=np.uint8)
    alt = np.tile([0, 1], 5_000).astype(np.uint8)
    assert monobit_test(ones) < 1e-6
    assert monobit_test(alt) == 1.0
    assert runs_test(alt) < 1e-6
    assert block_frequency_test(np.zeros(10_000, dtype=np.uint8)) < 1e-6
    alt_big = np.tile([0, 1], 38 * 1024 // 2 * 4).astype(np.uint8)
    assert rank_test(alt_big) < 1e-6


def test_short_streams_rejected():
    with pytest.raises(InsufficientDataError):
        monobit_test(np.ones(99, dtype=np.uint8))
    with pytest.raises(InsufficientDataError):
        rank_test(np.ones(37 * 1024, dtype=np.uint8))


def test_non_binary_input_rejected():
    with pytest.raises(ValueError):
        monobit_test(np.full(200, 2))


def test_cusum_mode_checked(pi_bits):
    with pytest.raises(ValueError):
        cusum_test(pi_bits, "sideways")


def _rank_oracle(matrix):
    # plain Gaussian elimination over GF(2), one row as a Python int
    rows = [int("".join(map(str, r)), 2) for r in matrix]
    rank = 0
    for bit in reversed(range(matrix.shape[1])):
        pivot = next((r for r in rows if r >> bit & 1), None)
        if pivot is None:
            continue
        rows.remove(pivot)
        rows = [r ^ pivot if r >> bit & 1 else r for r in rows]
        rank += 1
    return rank


def test_gf2_ranks_match_elimination_oracle():
    rng = np.random.default_rng(0)
    mats = rng.integers(0, 2, size=(200, 32, 32), dtype=np.uint8)
    mats[0] = 0
    mats[1] = np.eye(32, dtype=np.uint8)
    mats[2, 5] = mats[2, 7]
    weights = np.uint64(1) << np.arange(31, -1, -1, dtype=np.uint64)
    packed = (mats.astype(np.uint64) * weights).sum(axis=2, dtype=np.uint64)
    ranks = gf2_ranks(packed, 32)
    assert ranks.tolist() == [_rank_oracle(m) for m in mats]


def test_rank_probabilities():
    p32, p31, rest = _rank_probabilities(32, 32)
    assert p32 == pytest.approx(0.2888, abs=1e-4)
    assert p31 == pytest.approx(0.5776, abs=1e-4)
    assert rest == pytest.approx(0.1336, abs=1e-4)


def test_battery_format():
    bits = generate_bits("combined", 40_000, 1)
    outcomes = run_battery(bits)
    assert [o.name for o in outcomes] == [
        "Frequency",
        "BlockFrequency",
        "CumulativeSums-forward",
        "CumulativeSums-backward",
        "Runs",
        "Rank",
    ]
    assert all(0.0 <= o.p_value <= 1.0 for o in outcomes)
    text = format_battery(outcomes, "t")
    assert text.splitlines()[0] == "t" and len(text.splitlines()) == 9


def test_bare_lfsr32_fails_rank_on_short_stream():
    assert rank_test(generate_bits("lfsr32", 100_000, 2015)) < 0.01
