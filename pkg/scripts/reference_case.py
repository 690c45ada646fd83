"""Clear the bundled reference instance and print a case summary: dispatch,
prices, unit price components and both surpluses per period.

    python scripts/reference_case.py
"""

from importlib import resources

import numpy as np

from chp_clearing.dispatch import build, kkt_report, solve
from chp_clearing.io import load_instance
from chp_clearing.pricing import compute_prices
from chp_clearing.settlement import surplus_report


def _fmt(values):
    return " ".join(f"{v:8.3f}" for v in values)


def main() -> None:
    inst = load_instance(resources.files("chp_clearing") / "data" / "reference.json")
    sol = solve(build(inst))
    sched = compute_prices(sol, inst)
    rep = surplus_report(sol, sched, inst)
    print(f"objective {sol.objective:.6f}  iterations {sol.iterations}  "
          f"max KKT residual {max(kkt_report(sol.problem, sol).values()):.2e}")
    print("\nelectricity output (MW) per e-period")
    for uid in sol.problem.layout.e_units:
        print(f"  {uid:5s} {_fmt(sol.unit_gp(uid))}")
    print("heat output (MW) per h-period")
    for uid in sol.problem.layout.h_units:
        print(f"  {uid:5s} {_fmt(sol.unit_gh(uid))}")
    print("\nheat price ($/MWh) and supply grade price ($/(degC h))")
    for i, nid in enumerate(sched.node_ids):
        print(f"  node {nid}: {_fmt(sched.heat_energy[i])} | {_fmt(sched.grade_supply[i])}")
    print("electricity price ($/MWh)")
    for i, bid in enumerate(sched.bus_ids):
        print(f"  bus {bid}: {_fmt(sched.electricity[i])}")
    print("\nunit price components")
    for uid, up in sched.units.items():
        if up.mg_e.any() or up.co_e.any():
            print(f"  {uid} MG_E {_fmt(up.mg_e)}\n  {uid} CO_E {_fmt(up.co_e)}")
        if up.mg_h.any() or up.co_h.any():
            print(f"  {uid} MG_H {_fmt(up.mg_h)}\n  {uid} CO_H {_fmt(up.co_h)}")
    h = rep.heat
    print("\nheat surplus per h-period: direct, CR, IL, IU")
    for row in zip(h.direct, h.cr, h.il, h.iu):
        print("  " + _fmt(row))
    print(f"  horizon {h.horizon_direct:.6f}")
    print(f"electricity surplus per e-period:\n  {_fmt(rep.electricity.direct)}")
    print(f"  horizon {float(np.sum(rep.electricity.direct)):.6f}")
    print(f"conservation gap {rep.conservation_gap:.2e}")
    for w in rep.warnings:
        print(f"warning: {w}")


if __name__ == "__main__":
    main()
