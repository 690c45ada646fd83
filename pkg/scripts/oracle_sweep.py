"""Finite-difference price oracle at every target of the reference instance.

    python scripts/oracle_sweep.py [--eps 0.01]
"""

import argparse
from importlib import resources

from chp_clearing.io import load_instance
from chp_clearing.verification import oracle_sweep


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--eps", type=float, default=1e-2)
    args = p.parse_args()
    inst = load_instance(resources.files("chp_clearing") / "data" / "reference.json")
    results = oracle_sweep(inst, eps=args.eps)
    for r in results:
        oracle = "n/a" if r.oracle is None else f"{r.oracle:12.6f}"
        print(f"{r.target.label:16s} t={r.target.period + 1:2d} posted {r.posted:12.6f} oracle {oracle} {r.verdict}")
    conclusive = sum(r.conclusive for r in results)
    failed = sum(r.verdict == "FAIL" for r in results)
    print(f"{conclusive}/{len(results)} conclusive, {failed} failed")


if __name__ == "__main__":
    main()
