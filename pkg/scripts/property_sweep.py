"""Randomized invariant sweep over generated instances.

    python scripts/property_sweep.py --seed 0 --count 20
"""

import argparse

from chp_clearing.verification import property_sweep


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--count", type=int, default=20)
    args = p.parse_args()
    report = property_sweep(args.seed, args.count)
    print(report.text(), end="")
    raise SystemExit(1 if report.violations else 0)


if __name__ == "__main__":
    main()
