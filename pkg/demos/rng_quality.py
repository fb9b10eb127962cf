"""Run the randomness battery on each generator the package can emit.

The bare 32-bit LFSR fails the binary-rank test because its output bits are
linear combinations of a 32-bit state, while the combined lane generator passes.
"""

import argparse

from isingmachine.randtests import format_battery, run_battery
from isingmachine.rng import GENERATORS, generate_bits


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--bits", type=int, default=1_000_000)
    ap.add_argument("--seed", type=int, default=2015)
    args = ap.parse_args()
    for name in sorted(GENERATORS):
        outcomes = run_battery(generate_bits(name, args.bits, args.seed))
        print(format_battery(outcomes, title=f"{name} ({args.bits} bits, seed {args.seed})"))


if __name__ == "__main__":
    main()
