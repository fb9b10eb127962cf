"""End-to-end acceptance checks, one test per criterion.

Each test records a PASS/FAIL line that is repeated in the pytest summary.
The statistical checks use fixed seeds chosen before looking at results.
"""

import itertools
import math
import time

import numpy as np
import pytest

from isingmachine.analysis import TC_EXACT, exhaustive_oracle, lorentzian_fit, onsager_m, power_law_fit, tc_extrapolate
from isingmachine.bench import FPGA_SPINS_PER_US, render_report, throughput
from isingmachine.cli import main as cli_main
from isingmachine.kernel import (
    build_boltzmann_table,
    mcs_with_draws,
    row_block_schedule,
    run_lane_mcs,
    sample_lane_chain,
)
from isingmachine.lattice import Init, Model, ModelParams, new_lattice
from isingmachine.models import epsilon_j1j2, j1j2_boltzmann_table, j1j2_mcs_with_draws
from isingmachine.observables import Protocol, batch_means_se, peak_sweep, run_temperature_point
from isingmachine.randtests import run_battery
from isingmachine.rng import generate_bits, lfsr12_next, seed_lanes

SEED = 2015


def _agree(a, b, se):
    return abs(a - b) <= 3 * se


# 1 ---------------------------------------------------------------------------


def test_c01_gibbs_oracle_equivalence(criterion):
    start = time.perf_counter()
    lines, ok = [], True
    for T in (2.0, 3.0):
        exact = exhaustive_oracle(4, T)
        spins = new_lattice(4, Init.RANDOM, SEED).spins()
        bank = seed_lanes(SEED, 2048)
        table, sched = build_boltzmann_table(T), row_block_schedule(4, 2048)
        run_lane_mcs(spins, bank, table, sched, 1000)
        M, E = sample_lane_chain(spins, bank, table, sched, 200_000, 1)
        e, m = E / 16.0, np.abs(M) / 16.0
        for name, series, target in (("E/N", e, exact.e_per_spin), ("|M|/N", m, exact.m_abs)):
            est, se = series.mean(), batch_means_se(series, 100)
            good = _agree(est, target, se) and abs(est - target) <= 0.01
            ok &= good
            lines.append(f"T={T} {name} {est:.5f} vs {target:.5f} (se {se:.5f})")
    elapsed = time.perf_counter() - start
    ok &= elapsed < 120
    criterion(1, "Gibbs-oracle equivalence (L=4)", ok, "; ".join(lines) + f"; {elapsed:.1f}s")


# 2 ---------------------------------------------------------------------------


def test_c02_onsager_regression(criterion):
    start = time.perf_counter()
    proto = Protocol(warmup=1000, n_samples=200, stride=20, init=Init.ALL_UP.value)
    lines, ok = [], True
    for T in (1.5, 2.0):
        _, st = run_temperature_point(ModelParams(T=T), 128, proto, seed=SEED)
        exact = onsager_m(T)
        ok &= abs(st.m_abs - exact) <= 0.01
        lines.append(f"T={T} m_abs {st.m_abs:.5f} vs {exact:.5f}")
    elapsed = time.perf_counter() - start
    ok &= elapsed < 300
    criterion(2, "Onsager regression (L=128)", ok, "; ".join(lines) + f"; {elapsed:.1f}s")


# 3, 4 ------------------------------------------------------------------------

FSS_SIZES = (16, 32, 64, 128)


@pytest.fixture(scope="module")
def fss_peaks():
    """Lorentzian peak fits of chi_abs for each size, from staged sweeps over [2.1, 3.0]."""
    start = time.perf_counter()
    peaks = {}
    for L in FSS_SIZES:
        stride = max(10, L // 4)
        protocols = (
            Protocol(1000, 200, 10, init="all_up"),
            Protocol(2000, 500, stride, init="all_up"),
            Protocol(5000, 1000, stride, init="all_up"),
        )
        sweep = peak_sweep(ModelParams(), L, 2.1, 3.0, (0.05, 2.5 / L, 1.0 / L), protocols, seed=SEED)
        peaks[L] = lorentzian_fit([(s.T, s.chi_abs) for s in sweep.final])
    return peaks, time.perf_counter() - start


def test_c03_critical_exponent(criterion, fss_peaks):
    peaks, elapsed = fss_peaks
    fit = power_law_fit(FSS_SIZES, [peaks[L].chi_max for L in FSS_SIZES])
    ok = 1.60 <= fit.exponent <= 1.90 and fit.r2 >= 0.98
    heights = ", ".join(f"L={L}: {peaks[L].chi_max:.2f}" for L in FSS_SIZES)
    detail = f"gamma/nu = {fit.exponent:.3f} +- {fit.exponent_se:.3f}, r2 = {fit.r2:.4f} ({heights}); sweep {elapsed:.0f}s"
    criterion(3, "critical exponent gamma/nu", ok, detail)


def test_c04_tc_extrapolation(criterion, fss_peaks):
    peaks, _ = fss_peaks
    fit = tc_extrapolate(FSS_SIZES, [peaks[L].T_star for L in FSS_SIZES])
    ok = 2.17 <= fit.Tc <= 2.37
    spots = ", ".join(f"L={L}: {peaks[L].T_star:.4f}" for L in FSS_SIZES)
    detail = f"Tc = {fit.Tc:.4f} +- {fit.Tc_se:.4f} (exact {TC_EXACT:.4f}), b = {fit.b:.3f}, r2 = {fit.r2:.3f} ({spots})"
    criterion(4, "Tc extrapolation", ok, detail)


# 5 ---------------------------------------------------------------------------


def test_c05_rng_separation(criterion):
    start = time.perf_counter()
    combined = run_battery(generate_bits("combined", 1_000_000, SEED))
    bare = {o.name: o for o in run_battery(generate_bits("lfsr32", 1_000_000, SEED))}
    elapsed = time.perf_counter() - start
    ok = all(o.passed for o in combined) and bare["Rank"].p_value < 0.01 and elapsed < 60
    detail = (
        "combined " + ", ".join(f"{o.name}={o.p_value:.3f}" for o in combined)
        + f"; bare LFSR32 Rank p={bare['Rank'].p_value:.2e}; {elapsed:.1f}s"
    )
    criterion(5, "RNG separation", ok, detail)


# 6 ---------------------------------------------------------------------------


def test_c06_lfsr12_maximal(criterion):
    start = time.perf_counter()
    s, period = lfsr12_next(1), 1
    while s != 1:
        s = lfsr12_next(s)
        period += 1
    elapsed = time.perf_counter() - start
    criterion(6, "LFSR12 period", period == 4095 and elapsed < 1, f"period {period} in {elapsed * 1e3:.1f} ms")


# 7 ---------------------------------------------------------------------------


def test_c07_fixed_point_fidelity(criterion):
    worst = 0.0
    for T in (0.5, 1.0, 2.269, 5.0):
        table = build_boltzmann_table(T)
        for eps in (-4, -2, 0, 2, 4):
            # acceptance probability of the move; exp(-beta dE) > 1 is clipped to 1
            exact = min(1.0, math.exp(-2 * eps / T))
            worst = max(worst, abs(table[eps] / 4096 - exact))
    criterion(7, "fixed-point fidelity", worst <= 1 / 4096, f"max error {worst * 4096:.3f}/4096")


# 8 ---------------------------------------------------------------------------


def test_c08_kernel_cross_validation(criterion):
    lines, ok = [], True
    for T in (2.0, 2.5, 3.0):
        results = {}
        for kernel in ("lane", "sequential"):
            proto = Protocol(warmup=1000, n_samples=3000, stride=5, kernel=kernel)
            series, _ = run_temperature_point(ModelParams(T=T), 16, proto, seed=SEED)
            m = np.abs(series.M) / 256.0
            e = series.E / 256.0
            results[kernel] = {k: (v.mean(), batch_means_se(v)) for k, v in (("|m|", m), ("E/N", e))}
        for name in ("|m|", "E/N"):
            (a, sa), (b, sb) = results["lane"][name], results["sequential"][name]
            se = math.hypot(sa, sb)
            good = _agree(a, b, se)
            ok &= good
            lines.append(f"T={T} {name} {a:.4f}/{b:.4f} ({abs(a - b) / se:.1f} se)")
    criterion(8, "lane vs sequential kernel (16^2)", ok, "; ".join(lines))


# 9 ---------------------------------------------------------------------------


def test_c09_determinism(criterion, tmp_path):
    args = ["sweep", "--L", "16", "--T", "2.0", "2.3", "2.6", "3.0", "--warmup", "200", "--samples", "100",
            "--stride", "5", "--seed", "7"]
    outputs = []
    for workers in (1, 2, 4):
        out = tmp_path / f"w{workers}.csv"
        assert cli_main([*args, "--workers", str(workers), "--out", str(out)]) == 0
        outputs.append(out.read_bytes())
    again = tmp_path / "again.csv"
    cli_main([*args, "--workers", "1", "--out", str(again)])
    outputs.append(again.read_bytes())
    ok = all(o == outputs[0] for o in outputs)
    criterion(9, "byte-identical sweeps", ok, f"{len(outputs)} runs (workers 1, 2, 4, 1), {len(outputs[0])} bytes each")


# 10 --------------------------------------------------------------------------


def _brute_j1j2(s, J1, J2):
    L = s.shape[0]
    e = 0.0
    for i, j in itertools.product(range(L), repeat=2):
        e -= J1 * s[i, j] * (s[i, (j + 1) % L] + s[(i + 1) % L, j])
        e -= J2 * s[i, j] * (s[(i + 1) % L, (j + 1) % L] + s[(i + 1) % L, (j - 1) % L])
    return e


def test_c10_model_extensions(criterion):
    parts, ok = [], True

    # q = 2 Potts (J = 2) against NN Ising (J = 1) on 8^2
    proto = Protocol(warmup=1000, n_samples=4000, stride=5)
    for T in (2.0, 2.5, 3.0):
        ising, _ = run_temperature_point(ModelParams(T=T), 8, proto, seed=SEED)
        potts, _ = run_temperature_point(ModelParams(model=Model.POTTS, q=2, J=2.0, T=T), 8, proto, seed=SEED)
        a, b = np.abs(ising.M) / 64.0, potts.M / 64.0
        se = math.hypot(batch_means_se(a), batch_means_se(b))
        good = _agree(a.mean(), b.mean(), se)
        ok &= good
        parts.append(f"Potts q=2 T={T} |m| {b.mean():.4f} vs {a.mean():.4f} ({abs(a.mean() - b.mean()) / se:.1f} se)")

    # J1/J2 local energy against brute-force Hamiltonian differences, every site of random 6^2 lattices
    rng = np.random.default_rng(SEED)
    mismatches, checked = 0, 0
    J1, J2 = 1.0, -0.5
    for _ in range(20):
        s = rng.choice(np.array([-1, 1]), size=(6, 6))
        h0 = _brute_j1j2(s, J1, J2)
        for i, j in itertools.product(range(6), repeat=2):
            nn = s[i, (j - 1) % 6] + s[(i - 1) % 6, j] + s[i, (j + 1) % 6] + s[(i + 1) % 6, j]
            nnn = sum(s[(i + di) % 6, (j + dj) % 6] for di in (-1, 1) for dj in (-1, 1))
            t = s.copy()
            t[i, j] *= -1
            dE = _brute_j1j2(t, J1, J2) - h0
            mismatches += not math.isclose(dE, 2 * epsilon_j1j2(int(s[i, j]), int(nn), int(nnn), J1, J2), abs_tol=1e-12)
            checked += 1
    ok &= mismatches == 0
    parts.append(f"J1/J2 dE {checked - mismatches}/{checked} single flips match")

    # J2 = 0 four-colour sweep against the checkerboard kernel with identical draws
    same = True
    for T in (1.5, 2.269, 4.0):
        a = new_lattice(8, Init.RANDOM, SEED).spins()
        b = a.copy()
        nn_table = build_boltzmann_table(T)
        j_table = j1j2_boltzmann_table(T, 1.0, 0.0, allow_zero_j2=True)
        for _ in range(100):
            draws = rng.integers(0, 4096, size=(8, 8))
            mcs_with_draws(a, nn_table, draws)
            j1j2_mcs_with_draws(b, j_table, draws)
            same &= bool(np.array_equal(a, b))
    ok &= same
    parts.append(f"J2=0 trajectories identical over 300 MCS: {same}")
    criterion(10, "model extensions", ok, "; ".join(parts))


# 11 --------------------------------------------------------------------------


def test_c11_throughput_report(criterion):
    lane = throughput(1024, "lane", 1.0)
    seq = throughput(1024, "sequential", 1.0)
    text = render_report([lane, seq], total_mcs=Protocol().total_mcs)
    print(text)
    ratio = lane.spins_per_microsecond / seq.spins_per_microsecond
    ok = ratio >= 4 and f"{FPGA_SPINS_PER_US:.0f}" in text and "ns/MCS" in text
    detail = (
        f"lane {lane.spins_per_microsecond:.1f} spins/us, sequential {seq.spins_per_microsecond:.2f} spins/us, "
        f"ratio {ratio:.0f}x at L=1024"
    )
    criterion(11, "throughput report", ok, detail)
