import dataclasses
import time

import numpy as np
import pytest

from chp_clearing.dispatch import (
    Infeasible, build, dual_objective, export_qps, kkt_report, read_qps, solve, unit_cost_total,
)
from chp_clearing.verification import independent_solve
from conftest import pair_network, single_bus, two_bus


def test_single_bus_forced_dispatch():
    sol = solve(build(single_bus()))
    assert sol.gp[0, 0] == pytest.approx(100.0, abs=1e-9)
    assert sol.objective == pytest.approx(10 * 100 + 0.1 * 100**2, abs=1e-8)


def test_quarter_hour_periods_weight_cost():
    inst = single_bus(load=(100.0,) * 4, dt_e=0.25)
    assert solve(build(inst)).objective == pytest.approx(2000.0, abs=1e-8)


def test_reference_variable_count(reference):
    # n_e * (electric units + buses) + n_h * (heat units + states)
    problem = build(reference)
    assert problem.n_vars == 16 * (3 + 8) + 4 * (3 + 8) == 220


def test_back_pressure_row_count(reference):
    problem = build(reference)
    rows = [t for t in problem.in_tags if t.family == "unit_polytope" and t.key[0] == "CHP2"]
    g = reference.time_grid
    assert len(rows) == 2 * g.n_e + 2 * g.n_h


def test_objective_matches_unit_costs(reference, reference_solution):
    sol = reference_solution
    gp = {u: sol.unit_gp(u) for u in sol.problem.layout.e_units}
    gh = {u: sol.unit_gh(u) for u in sol.problem.layout.h_units}
    assert unit_cost_total(reference, gp, gh) == pytest.approx(sol.objective, rel=1e-12)


def test_strong_duality(reference_solution):
    problem = reference_solution.problem
    assert dual_objective(problem, reference_solution) == pytest.approx(reference_solution.objective, rel=1e-8)


def test_two_bus_congestion_matches_cvxpy():
    inst = two_bus(limit=40.0, load=100.0)
    sol = solve(build(inst))
    ref = independent_solve(inst)
    assert sol.objective == pytest.approx(ref.objective, rel=1e-6)
    lam = sol.lambda_p[0] / inst.time_grid.delta_t_e
    assert lam[0] == pytest.approx(ref.electricity_price["1"][0], abs=1e-4)
    assert lam[1] == pytest.approx(ref.electricity_price["2"][0], abs=1e-4)
    assert lam[1] > lam[0] + 1.0
    assert sol.sigma[0, 0] > 1e-6
    assert sol.sigma[0, 0] == pytest.approx(lam[1] - lam[0], abs=1e-6)  # reactance-scaled rent


def test_two_bus_uncongested():
    sol = solve(build(two_bus(limit=500.0)))
    assert np.abs(sol.sigma).max() < 1e-9
    assert sol.lambda_p[0, 0] == pytest.approx(sol.lambda_p[0, 1], abs=1e-9)


def test_reference_matches_independent_solver(reference, reference_solution):
    ref = independent_solve(reference)
    assert reference_solution.objective == pytest.approx(ref.objective, rel=1e-5)


def test_reference_kkt_and_runtime(reference):
    start = time.perf_counter()
    sol = solve(build(reference))
    assert time.perf_counter() - start <= 10.0
    assert max(kkt_report(sol.problem, sol).values()) <= 1e-6


def test_zeroed_dual_flagged_in_its_block(reference_solution):
    sol = reference_solution
    problem = sol.problem
    binding = [k for k, t in enumerate(problem.in_tags) if t.family == "temp_req" and sol.z[k] > 1e-3]
    assert binding
    faulty = dataclasses.replace(sol, z=sol.z.copy())
    faulty.z[binding[0]] = 0.0
    report = kkt_report(problem, faulty)
    assert report["stationarity:T"] > 1e-4
    assert report["stationarity:G_p"] < 1e-9
    assert report["stationarity:delta"] < 1e-9


def test_qps_round_trip(reference):
    problem = build(reference)
    back = read_qps(export_qps(problem))
    assert len(back["columns"]) == problem.n_vars
    assert np.array_equal(back["q"], problem.q)
    assert np.array_equal(back["c"], problem.c)
    assert np.array_equal(back["a_eq"], problem.a_eq)
    assert np.array_equal(back["b_eq"], problem.b_eq)
    assert np.array_equal(back["g_in"], problem.g_in)
    assert np.array_equal(back["h_in"], problem.h_in)
    assert back["const"] == problem.const


def test_infeasible_names_conflicting_rows():
    # requirement above the supply cap
    inst = pair_network(req=(110.0, 110.0), cap=100.0)
    with pytest.raises(Infeasible) as info:
        solve(build(inst))
    families = {t.family for t in info.value.conflicts}
    assert families & {"temp_req", "temp_cap"}
    assert info.value.violation > 1e-6


def test_binding_requirement_in_reference(reference_solution):
    tags = {str(t) for t in reference_solution.binding_set()}
    assert any(t.startswith("temp_req[") for t in tags)
