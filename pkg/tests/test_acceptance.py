"""The eight acceptance criteria, one test each. Every test prints a single
PASS/FAIL line (visible in ``pytest -v`` output) before asserting."""

import time

import numpy as np
import pytest

from chp_clearing.cli import CLEAR_ARTIFACTS, main
from chp_clearing.dispatch import build, kkt_report, solve
from chp_clearing.heat import simulate_forward
from chp_clearing.pricing import identity_gaps
from chp_clearing.verification import oracle_sweep, property_sweep
from conftest import REFERENCE, scalar_vs_matrix

KKT_TOL = 1e-6
RUNTIME_LIMIT = 10.0
CONCLUSIVE_SHARE = 0.95
IDENTITY_TOL = 1e-6
ADEQUACY_TOL = 1e-6
THERMAL_TOL = 1e-6
ROW_TOL = 1e-9


@pytest.fixture
def verdict(capsys):
    def emit(number, name, ok, detail):
        with capsys.disabled():
            print(f"\nCRITERION {number} {'PASS' if ok else 'FAIL'} {name}: {detail}")
        assert ok, detail
    return emit


@pytest.fixture(scope="module")
def sweep():
    return property_sweep(0, 20)


def test_1_kkt_validity(reference, verdict):
    start = time.perf_counter()
    sol = solve(build(reference))
    elapsed = time.perf_counter() - start
    worst = max(kkt_report(sol.problem, sol).values())
    verdict(1, "KKT validity", worst <= KKT_TOL and elapsed <= RUNTIME_LIMIT,
            f"max residual {worst:.2e} (<= {KKT_TOL:g}), solve {elapsed:.2f} s (<= {RUNTIME_LIMIT:g} s)")


def test_2_price_oracle(reference, reference_solution, reference_prices, verdict):
    results = oracle_sweep(reference, base=reference_solution, schedule=reference_prices)
    conclusive = [r for r in results if r.conclusive]
    failed = [r for r in conclusive if r.verdict == "FAIL"]
    share = len(conclusive) / len(results)
    worst = max((r.abs_err for r in conclusive), default=0.0)
    verdict(2, "price oracle", share >= CONCLUSIVE_SHARE and not failed,
            f"{len(conclusive)}/{len(results)} conclusive ({100 * share:.1f}%), {len(failed)} outside "
            f"max(1e-3, 0.1%); largest |oracle - posted| {worst:.2e}")


def test_3_revenue_adequacy(reference_surplus, sweep, verdict):
    rep = reference_surplus
    heat, elec_min = rep.heat.horizon_direct, float(rep.electricity.direct.min())
    ok_ref = heat >= -ADEQUACY_TOL and elec_min >= -ADEQUACY_TOL
    optimal = [c for c in sweep.checks if c.status == "optimal"]
    bad = [c.index for c in sweep.checks if any("surplus" in f for f in c.failures) or c.status == "error"]
    verdict(3, "revenue adequacy", ok_ref and not bad and len(optimal) == len(sweep.checks),
            f"reference M_H={heat:.6g}, min M_E,t={elec_min:.3g}; sweep seed 0: "
            f"{len(optimal)}/20 optimal, inadequate instances {bad}")


def test_4_decomposition_identities(reference_surplus, sweep, verdict):
    rep = reference_surplus
    heat_gap = float(np.abs(rep.heat.gap).max())
    elec_gap = float(np.abs(rep.electricity.gap).max())
    cons = abs(rep.conservation_gap)
    sweep_worst = max((max(c.metrics[k] for k in ("heat_identity", "elec_identity", "conservation"))
                       for c in sweep.checks if c.status == "optimal"), default=0.0)
    ok = max(heat_gap, elec_gap, cons, sweep_worst) <= IDENTITY_TOL
    verdict(4, "decomposition identities", ok,
            f"heat {heat_gap:.2e}, electricity {elec_gap:.2e}, conservation {cons:.2e}, "
            f"sweep worst {sweep_worst:.2e}")


def test_5_price_components(reference, reference_solution, reference_prices, verdict):
    gaps = identity_gaps(reference_prices, reference)
    g = reference.time_grid
    spreads = []
    for u in reference.units:
        if u.kind == "back_pressure":
            mg = reference_prices.units[u.id].mg_e.reshape(g.n_h, g.ratio)
            gp = reference_solution.unit_gp(u.id).reshape(g.n_h, g.ratio)
            spreads += [float(np.ptp(mg, axis=1).max()), float(np.ptp(gp, axis=1).max())]
    ok = bool(spreads) and max(max(gaps.values()), *spreads) <= IDENTITY_TOL
    verdict(5, "price components", ok,
            f"|price - MG - CO| heat {gaps['heat']:.2e}, electricity {gaps['electricity']:.2e}; "
            f"back-pressure MG_E spread {spreads[0]:.2e}, G_p spread {spreads[1]:.2e}")


def test_6_thermal_equivalence(reference, reference_solution, verdict):
    dyn = reference_solution.problem.dynamics
    sim = simulate_forward(dyn, dyn.t0, reference_solution.gh.T)
    thermal = float(np.abs(sim - reference_solution.temps).max())
    rows = scalar_vs_matrix(reference, np.random.default_rng(2024), 100)
    verdict(6, "thermal equivalence", thermal <= THERMAL_TOL and rows <= ROW_TOL,
            f"optimizer vs simulation {thermal:.2e} (<= {THERMAL_TOL:g}); "
            f"matrix vs scalar rows on 100 states {rows:.2e} (<= {ROW_TOL:g})")


def test_7_qualitative_behaviour(reference, reference_solution, reference_prices, verdict):
    sol, sched = reference_solution, reference_prices
    dyn = sol.problem.dynamics
    grade_hits = []
    for nd in reference.heat.nodes:
        for side in ("supply", "return"):
            req = nd.requirement(side)
            if req is None:
                continue
            k = dyn.state_index(nd.id, side)
            binding = np.abs(sol.temps[:, k] - np.asarray(req)) <= 1e-6
            priced = sched.grade(side)[sched.node_row(nd.id)] > 0
            grade_hits += [f"{nd.id}:{side}@h{t + 1}" for t in np.flatnonzero(binding & priced)]
    congested = [t + 1 for t in range(reference.time_grid.n_e) if sol.sigma[t].max() > 1e-6]
    up = sched.units["CHP1"]
    co_h_e = np.repeat(up.co_h, reference.time_grid.ratio)
    boundary = [t + 1 for t in range(reference.time_grid.n_e)
                if up.co_e[t] >= 0 and co_h_e[t] <= 0 and (up.co_e[t] > 1e-6 or co_h_e[t] < -1e-6)]
    ok = bool(grade_hits) and bool(congested) and bool(boundary)
    verdict(7, "qualitative behaviour", ok,
            f"binding priced requirements {grade_hits}; congested e-periods {congested}; "
            f"CHP1 boundary e-periods with CO_E >= 0, CO_H <= 0 {boundary}")


def test_8_determinism(tmp_path, verdict):
    ref = tmp_path / "ref.json"
    ref.write_bytes(REFERENCE.read_bytes())
    runs = []
    for name in ("a", "b"):
        out = tmp_path / name
        assert main(["clear", "--instance", str(ref), "--out", str(out)]) == 0
        assert main(["verify", "--instance", str(ref), "--out", str(out / "verify"), "--targets", "node:4",
                     "--sweep-count", "3"]) == 0
        runs.append(out)
    names = list(CLEAR_ARTIFACTS) + ["verify/verification.csv", "verify/sweep.txt", "verify/manifest.json"]
    differing = [n for n in names if (runs[0] / n).read_bytes() != (runs[1] / n).read_bytes()]
    verdict(8, "determinism", not differing, f"{len(names)} artifacts compared, differing: {differing}")
