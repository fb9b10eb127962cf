import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from isingmachine.errors import CapacityError
from isingmachine.rng import (
    MASK12,
    LaneRngBank,
    export_bitstream,
    generate_bits,
    lfsr12_next,
    lfsr32_next,
    read_bitstream,
    seed_digest32,
    seed_lanes,
)


# --- independent oracle: primitivity of the characteristic polynomial over GF(2)


def _gf2_mulmod(a, b, mod, deg):
    out = 0
    while b:
        if b & 1:
            out ^= a
        b >>= 1
        a <<= 1
        if a >> deg & 1:
            a ^= mod
    return out


def _gf2_powmod(base, e, mod, deg):
    out = 1
    while e:
        if e & 1:
            out = _gf2_mulmod(out, base, mod, deg)
        base = _gf2_mulmod(base, base, mod, deg)
        e >>= 1
    return out


def _is_primitive(poly, deg, prime_factors):
    order = (1 << deg) - 1
    x = 0b10
    if _gf2_powmod(x, order, poly, deg) != 1:
        return False
    return all(_gf2_powmod(x, order // p, poly, deg) != 1 for p in prime_factors)


def _char_poly(taps, deg):
    # left-shift register, feedback = XOR of bits in ``taps`` entering bit 0:
    # a[n+deg] = sum a[n + deg-1-t]; characteristic x^deg + sum x^(deg-1-t)
    poly = 1 << deg
    for t in taps:
        poly ^= 1 << (deg - 1 - t)
    return poly


def test_lfsr32_taps_are_maximal_length():
    poly = _char_poly((31, 21, 1, 0), 32)
    assert _is_primitive(poly, 32, (3, 5, 17, 257, 65537))


def test_lfsr12_taps_are_maximal_length():
    poly = _char_poly((11, 10, 9, 3), 12)
    assert _is_primitive(poly, 12, (3, 5, 7, 13))


def test_lfsr32_hand_traces():
    assert lfsr32_next(0x00000001) == 0x00000003
    assert lfsr32_next(0x80000000) == 0x00000001


def test_lfsr12_hand_traces():
    assert lfsr12_next(0x001) == 0x002
    assert lfsr12_next(0x800) == 0x001


def test_lfsr12_orbit_has_period_4095():
    s, seen = 1, set()
    while s not in seen:
        seen.add(s)
        s = lfsr12_next(s)
    assert s == 1 and len(seen) == 4095


@pytest.mark.parametrize("bad", [0, 0x1000, -1])
def test_lfsr12_rejects_invalid_states(bad):
    with pytest.raises(ValueError):
        lfsr12_next(bad)


def test_lfsr32_rejects_zero():
    with pytest.raises(ValueError):
        lfsr32_next(0)


def test_lfsr32_never_reaches_zero_or_seed():
    bits = generate_bits("lfsr32", 1_000_000, master_seed=7)
    assert 0.49 < bits.mean() < 0.51
    s0 = seed_digest32(7)
    s = s0
    for _ in range(200_000):
        s = lfsr32_next(s)
        assert s != 0 and s != s0


@given(st.integers(min_value=-(2**63), max_value=2**63 - 1))
def test_seed_digest_nonzero_32bit(seed):
    d = seed_digest32(seed)
    assert 0 < d <= 0xFFFFFFFF


def test_seed_lanes_examples():
    b1 = seed_lanes(123, 1)
    assert b1.n_lanes == 1 and b1.locals[0] != 0
    big = seed_lanes(123, 2048)
    assert np.unique(big.locals).size == 2048
    assert np.all((big.locals >= 1) & (big.locals <= MASK12))
    with pytest.raises(CapacityError):
        seed_lanes(123, 4096)
    full = seed_lanes(5, 4095)
    assert np.unique(full.locals).size == 4095


def test_seed_lanes_is_deterministic():
    a, b = seed_lanes(99, 64), seed_lanes(99, 64)
    assert a.global_state == b.global_state
    assert np.array_equal(a.locals, b.locals)
    assert not np.array_equal(a.locals, seed_lanes(100, 64).locals)


def test_cycle_advance_moves_only_global():
    a, b = seed_lanes(1, 16), seed_lanes(1, 16)
    before = a.locals.copy()
    a.cycle_advance()
    b.cycle_advance()
    assert a.global_state == b.global_state == lfsr32_next(seed_digest32(1))
    assert np.array_equal(a.locals, before)


def test_global_slices_vary():
    bank = seed_lanes(3, 1)
    slices = set()
    for _ in range(4095):
        bank.cycle_advance()
        slices.add(bank.global_state & MASK12)
    assert len(slices) > 1000


def test_draw12_xor_examples():
    # a local register equal to 0xFFF after one step: the state before is lfsr12 preimage
    pre = next(s for s in range(1, 4096) if lfsr12_next(s) == 0xFFF)
    bank = LaneRngBank(0x00000FFF, np.array([pre]), leap=1)
    assert bank.draw12(0) == 0
    bank = LaneRngBank(0x12345000, np.array([1]), leap=1)
    assert bank.draw12(0) == lfsr12_next(1)
    with pytest.raises(IndexError):
        bank.draw12(1)


def test_draw12_leap_clocks_local_register():
    bank = LaneRngBank(0xABCDE123, np.array([77]), leap=12)
    s = 77
    for _ in range(12):
        s = lfsr12_next(s)
    assert bank.draw12(0) == (0x123 ^ s)
    assert bank.locals[0] == s


def test_draw_lanes_matches_scalar_draws():
    a, b = seed_lanes(11, 40), seed_lanes(11, 40)
    for _ in range(5):
        a.cycle_advance()
        b.cycle_advance()
        vec = a.draw_lanes(25)
        scalar = [b.draw12(k) for k in range(25)]
        assert vec.tolist() == scalar
    assert np.array_equal(a.locals, b.locals)


def test_draws_are_uniform():
    bank = seed_lanes(2015, 2048)
    draws = []
    for _ in range(489):  # ~10^6 draws
        bank.cycle_advance()
        draws.append(bank.draw_lanes(2048))
    r = np.concatenate(draws).astype(float)
    n = r.size
    sigma = np.sqrt((4096**2 - 1) / 12 / n)
    assert abs(r.mean() - 2047.5) < 3 * sigma
    counts = np.bincount(r.astype(int), minlength=4096)
    p = 1 / 4096
    assert np.all(np.abs(counts - n * p) < 5 * np.sqrt(n * p * (1 - p)))


def test_bank_rejects_bad_states():
    with pytest.raises(ValueError):
        LaneRngBank(0, np.array([1]))
    with pytest.raises(ValueError):
        LaneRngBank(1, np.array([0]))
    with pytest.raises(ValueError):
        LaneRngBank(1, np.array([1]), leap=0)


def test_export_examples(tmp_path):
    p = export_bitstream(np.ones(8, dtype=np.uint8), 8, tmp_path / "ones.bin")
    assert p.read_bytes() == b"\xff"
    bits = np.ones(12, dtype=np.uint8)
    raw = export_bitstream(bits, 12, tmp_path / "twelve.bin").read_bytes()
    assert len(raw) == 2 and raw[1] >> 4 == 0


@given(st.lists(st.integers(0, 1), min_size=1, max_size=200))
def test_export_round_trip(tmp_path_factory, bits):
    path = tmp_path_factory.mktemp("bits") / "s.bin"
    arr = np.array(bits, dtype=np.uint8)
    export_bitstream(arr, arr.size, path)
    assert path.stat().st_size == -(-arr.size // 8)
    assert np.array_equal(read_bitstream(path, arr.size), arr)


def test_export_named_generator(tmp_path):
    path = export_bitstream("combined", 1000, tmp_path / "c.bin", master_seed=4)
    assert np.array_equal(read_bitstream(path, 1000), generate_bits("combined", 1000, 4))


def test_export_to_unwritable_destination(tmp_path):
    with pytest.raises(OSError):
        export_bitstream("lfsr32", 16, tmp_path / "missing" / "x.bin")


def test_generate_bits_rejects_unknown_source():
    with pytest.raises(ValueError):
        generate_bits("mersenne", 10)
