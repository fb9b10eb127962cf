"""Command-line front end: ``isingmachine <subcommand> [options]``.

Exit status: 0 success, 1 usage error, 2 runtime error, 3 a randomness
test failed under ``--strict``.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import exhaustive_oracle, lorentzian_fit, power_law_fit, tc_extrapolate
from .bench import LANE, SEQUENTIAL, VARIANTS, render_report, report_to_csv, throughput
from .errors import FitError, InsufficientDataError
from .lattice import Init, Model, ModelParams, check_side
from .observables import Protocol, read_stats_csv, run_temperature_point, stats_to_csv, temperature_sweep
from .randtests import format_battery, run_battery
from .rng import GENERATORS, export_bitstream, generate_bits

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_RUNTIME = 2
EXIT_TEST_FAILURE = 3


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    model: str = Model.NN_ISING.value
    L: list[int] = field(default_factory=lambda: [32])
    T: list[float] = field(default_factory=lambda: [2.269])
    J: float = 1.0
    J1: float = 1.0
    J2: float = -0.5
    q: int = 2
    warmup: int = 1000
    samples: int = 1000
    stride: int = 100
    lanes: int = 2048
    seed: int = 0
    workers: int = 1
    init: str = Init.RANDOM.value
    kernel: str = LANE
    out: str | None = None

    def params(self, T: float | None = None) -> ModelParams:
        return ModelParams(Model(self.model), self.T[0] if T is None else T, self.J, self.J1, self.J2, self.q)

    def protocol(self) -> Protocol:
        return Protocol(self.warmup, self.samples, self.stride, self.lanes, self.init, self.kernel)


CONFIG_KEYS = {f.name for f in fields(RunConfig)} | {"T_range"}


def parse_t_range(text: str) -> list[float]:
    """``a:b:step`` -> the grid a, a+step, ..., up to b inclusive."""
    try:
        a, b, step = (float(x) for x in text.split(":"))
    except ValueError:
        raise UsageError(f"T-range: expected a:b:step, got {text!r}") from None
    if step <= 0 or b < a:
        raise UsageError(f"T-range: need a <= b and step > 0, got {text!r}")
    n = int(np.floor((b - a) / step + 1e-9)) + 1
    return [round(a + k * step, 10) for k in range(n)]


def _as_list(value, kind, key):
    items = value if isinstance(value, list) else [value]
    try:
        return [kind(v) for v in items]
    except (TypeError, ValueError):
        raise UsageError(f"{key}: invalid value {value!r}") from None


def _load_config_file(path) -> dict:
    try:
        data = json.loads(Path(path).read_text())
    except OSError as exc:
        raise UsageError(f"config: cannot read {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"config: {path} is not valid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise UsageError(f"config: {path} must hold a JSON object")
    unknown = sorted(set(data) - CONFIG_KEYS)
    if unknown:
        raise UsageError(f"config: unknown key {unknown[0]!r}")
    return data


def _validate(cfg: RunConfig) -> RunConfig:
    checks = (
        ("model", lambda: Model(cfg.model)),
        ("init", lambda: Init(cfg.init)),
        ("L", lambda: [check_side(v) for v in cfg.L]),
        ("T", lambda: [cfg.params(t) for t in cfg.T]),
        ("warmup/samples/stride", cfg.protocol),
    )
    for key, check in checks:
        try:
            check()
        except ValueError as exc:
            raise UsageError(f"{key}: {exc}") from None
    if not cfg.L:
        raise UsageError("L: at least one lattice side is required")
    if not cfg.T:
        raise UsageError("T: at least one temperature is required")
    if cfg.lanes < 2 or cfg.lanes % 2:
        raise UsageError(f"lanes: must be a positive even number, got {cfg.lanes}")
    for L in cfg.L:
        if cfg.lanes < L // 2:
            raise UsageError(f"lanes: {cfg.lanes} lanes cannot cover a half row of L={L}")
    if cfg.workers < 1:
        raise UsageError(f"workers: must be >= 1, got {cfg.workers}")
    return cfg


# flag dest -> RunConfig field
_FLAG_FIELDS = {
    "model": "model",
    "L": "L",
    "J": "J",
    "J1": "J1",
    "J2": "J2",
    "q": "q",
    "warmup": "warmup",
    "samples": "samples",
    "stride": "stride",
    "lanes": "lanes",
    "seed": "seed",
    "workers": "workers",
    "init": "init",
    "kernel": "kernel",
    "out": "out",
}


def parse_config(args: argparse.Namespace) -> RunConfig:
    """Merge defaults, an optional JSON file and command-line flags (flags win)."""
    values = asdict(RunConfig())
    if getattr(args, "config", None):
        data = _load_config_file(args.config)
        if "T_range" in data:
            if "T" in data:
                raise UsageError("config: give T or T_range, not both")
            data["T"] = parse_t_range(str(data.pop("T_range")))
        values.update(data)
    for dest, key in _FLAG_FIELDS.items():
        v = getattr(args, dest, None)
        if v is not None:
            values[key] = v
    if getattr(args, "T", None) is not None:
        values["T"] = args.T
    if getattr(args, "T_range", None) is not None:
        values["T"] = parse_t_range(args.T_range)

    scalar_types = {"J": float, "J1": float, "J2": float, "q": int, "warmup": int, "samples": int,
                    "stride": int, "lanes": int, "seed": int, "workers": int}
    for key, kind in scalar_types.items():
        try:
            values[key] = kind(values[key])
        except (TypeError, ValueError):
            raise UsageError(f"{key}: invalid value {values[key]!r}") from None
    values["L"] = _as_list(values["L"], int, "L")
    values["T"] = sorted(set(_as_list(values["T"], float, "T")))
    return _validate(RunConfig(**values))


def _sidecar(cfg: RunConfig, csv_name: str) -> dict:
    seeds = {str(L): [cfg.seed + k for k in range(len(cfg.T))] for L in cfg.L}
    return {
        "generator": f"isingmachine {__version__}",
        "csv": csv_name,
        "config": asdict(cfg),
        "seeds": seeds,
        "seed_rule": "point k of the temperature list uses seed + k",
    }


def cmd_sweep(cfg: RunConfig) -> int:
    stats = []
    for L in cfg.L:
        stats += temperature_sweep(cfg.params(), L, cfg.T, cfg.protocol(), cfg.seed, cfg.workers)
    text = stats_to_csv(stats)
    if cfg.out is None:
        sys.stdout.write(text)
        return EXIT_OK
    out = Path(cfg.out)
    try:
        out.write_text(text)
        meta = json.dumps(_sidecar(cfg, out.name), indent=2, sort_keys=True) + "\n"
        out.with_name(out.name + ".json").write_text(meta)
    except OSError as exc:
        raise RuntimeError(f"cannot write {out}: {exc}") from exc
    print(f"wrote {len(stats)} rows to {out}")
    return EXIT_OK


def cmd_run(cfg: RunConfig) -> int:
    _, st = run_temperature_point(cfg.params(), cfg.L[0], cfg.protocol(), cfg.seed)
    if cfg.out:
        stats_to_csv([st], cfg.out)
    print(json.dumps(asdict(st), indent=2))
    return EXIT_OK


def fit_report(rows, window: int = 3) -> dict:
    """Lorentzian fit per lattice size, then the scaling fits across sizes.

    A size whose peak cannot be fitted is reported with its error and left
    out of the scaling fits.
    """
    by_L: dict[int, list] = {}
    for r in rows:
        by_L.setdefault(int(r["L"]), []).append((r["T"], r["chi_abs"]))
    peaks, failed = {}, {}
    for L in sorted(by_L):
        try:
            peaks[L] = lorentzian_fit(by_L[L], window=window)
        except (FitError, InsufficientDataError) as exc:
            failed[str(L)] = str(exc)
    report = {
        "lorentzian": {str(L): f.to_dict() for L, f in peaks.items()},
        "failed": failed,
        "scaling": None,
        "tc": None,
    }
    if len(peaks) >= 3:
        Ls = list(peaks)
        report["scaling"] = power_law_fit(Ls, [peaks[L].chi_max for L in Ls]).to_dict()
        report["tc"] = tc_extrapolate(Ls, [peaks[L].T_star for L in Ls]).to_dict()
    return report


def cmd_fit(paths, window: int, out) -> int:
    rows = []
    for p in paths:
        try:
            rows += read_stats_csv(p)
        except OSError as exc:
            raise RuntimeError(f"cannot read {p}: {exc}") from exc
    text = json.dumps(fit_report(rows, window), indent=2) + "\n"
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_rngtest(generator: str, n_bits: int, seed: int, strict: bool, export=None) -> int:
    bits = generate_bits(generator, n_bits, seed)
    outcomes = run_battery(bits)
    print(format_battery(outcomes, f"{generator}: {n_bits} bits, seed {seed}"))
    if export:
        export_bitstream(bits, n_bits, export)
        print(f"bitstream written to {export}")
    if strict and not all(o.passed for o in outcomes):
        return EXIT_TEST_FAILURE
    return EXIT_OK


def cmd_bench(sizes, variants, min_duration: float, lanes: int, workers: int, out=None, total_mcs=None) -> int:
    reports = [throughput(L, v, min_duration, lane_budget=lanes, workers=workers) for L in sizes for v in variants]
    print(render_report(reports, total_mcs=total_mcs), end="")
    if out:
        Path(out).write_text(report_to_csv(reports))
    return EXIT_OK


def cmd_oracle(L: int, T: float) -> int:
    ex = exhaustive_oracle(L, T)
    print(f"L={ex.L} T={ex.T!r}")
    for name in ("e_per_spin", "m_abs", "m_signed", "chi_abs", "chi", "Z"):
        print(f"{name:<11}{getattr(ex, name)!r}")
    return EXIT_OK


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _add_run_flags(p):
    p.add_argument("--config", help="JSON file with RunConfig keys; flags override it")
    p.add_argument("--model", choices=[m.value for m in Model])
    p.add_argument("--L", type=int, nargs="+", help="lattice side(s)")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--T", type=float, nargs="+", help="temperature(s)")
    g.add_argument("--T-range", dest="T_range", metavar="A:B:STEP")
    p.add_argument("--J", type=float)
    p.add_argument("--J1", type=float)
    p.add_argument("--J2", type=float)
    p.add_argument("--q", type=int)
    p.add_argument("--warmup", type=int)
    p.add_argument("--samples", type=int)
    p.add_argument("--stride", type=int)
    p.add_argument("--lanes", type=int, help="lane budget (simultaneous updates)")
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--init", choices=[i.value for i in Init])
    p.add_argument("--kernel", choices=[LANE, SEQUENTIAL])
    p.add_argument("--out")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="isingmachine", description="Lane-parallel Metropolis simulation of 2-D spin models.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    _add_run_flags(sub.add_parser("sweep", help="temperature sweep to CSV plus a JSON sidecar"))
    _add_run_flags(sub.add_parser("run", help="one temperature point"))

    p = sub.add_parser("fit", help="Lorentzian and finite-size-scaling fits of sweep CSVs")
    p.add_argument("csv", nargs="+")
    p.add_argument("--window", type=int, default=3, help="points kept on each side of the peak")
    p.add_argument("--out")

    p = sub.add_parser("rngtest", help="statistical tests on a generator's bitstream")
    p.add_argument("--generator", choices=sorted(GENERATORS), default="combined")
    p.add_argument("--bits", type=int, default=1_000_000)
    p.add_argument("--seed", type=int, default=2015)
    p.add_argument("--export", metavar="PATH", help="also write the raw bits, 8 per byte")
    p.add_argument("--strict", action="store_true", help="exit 3 if any test fails")

    p = sub.add_parser("bench", help="spin-update throughput table")
    p.add_argument("--L", type=int, nargs="+", default=[64, 256, 1024])
    p.add_argument("--variant", choices=VARIANTS, nargs="+", default=list(VARIANTS))
    p.add_argument("--min-duration", type=float, default=1.0)
    p.add_argument("--lanes", type=int, default=2048)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--total-mcs", type=int, default=Protocol().total_mcs,
                   help="MCS per temperature point for the TOTAL footer")
    p.add_argument("--out", help="CSV copy of the table")

    p = sub.add_parser("oracle", help="exact averages by enumeration (L = 2 or 4)")
    p.add_argument("--L", type=int, default=4)
    p.add_argument("--T", type=float, default=3.0)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command in ("sweep", "run"):
            cfg = parse_config(args)
            return cmd_sweep(cfg) if args.command == "sweep" else cmd_run(cfg)
        if args.command == "fit":
            return cmd_fit(args.csv, args.window, args.out)
        if args.command == "rngtest":
            if args.bits < 1:
                raise UsageError("bits: must be >= 1")
            return cmd_rngtest(args.generator, args.bits, args.seed, args.strict, args.export)
        if args.command == "bench":
            return cmd_bench(args.L, args.variant, args.min_duration, args.lanes, args.workers, args.out, args.total_mcs)
        return cmd_oracle(args.L, args.T)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, RuntimeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
