import dataclasses

import numpy as np
import pytest

from chp_clearing import verification
from chp_clearing.dispatch import build, solve
from chp_clearing.model import Bus, ElectricNetwork, GenerationUnit, HeatNetwork, Instance, TimeGrid, validate
from chp_clearing.verification import (
    ELECTRICITY, HEAT, ActiveSetChanged, Target, all_targets, check_instance, independent_solve, oracle_sweep,
    parse_target_filter, price_oracle, property_sweep, random_instance,
)
from conftest import pair_network, single_bus


def test_oracle_matches_marginal_cost():
    res = price_oracle(single_bus(), Target(ELECTRICITY, "1", 0), eps=0.1)
    assert res.conclusive
    assert res.oracle == pytest.approx(10 + 2 * 0.1 * 100, abs=1e-6)
    assert res.verdict == "PASS"


def test_oracle_on_kink_reports_active_set_change():
    # the cheap unit sits exactly at capacity, so any step crosses a vertex
    grid = TimeGrid(1.0, 1.0, 1, 1)
    units = tuple(
        GenerationUnit(uid, "pure_electric", ((-1.0, 0.0, 0.0), (1.0, 0.0, 100.0)), (0.0, 0.0, 0.0, mc, 0.0, 0.0),
                       electric_bus="1")
        for uid, mc in (("A", 10.0), ("B", 30.0)))
    inst = Instance(grid, HeatNetwork((), (), (5.0,)), ElectricNetwork((Bus("1", (100.0,)),), (), "1"), units)
    with pytest.raises(ActiveSetChanged):
        price_oracle(inst, Target(ELECTRICITY, "1", 0), eps=0.1)
    (res,) = oracle_sweep(inst, targets=[Target(ELECTRICITY, "1", 0)], eps=0.1)
    assert res.verdict == "INCONCLUSIVE"


def test_targets_cover_every_location(reference):
    targets = all_targets(reference)
    g = reference.time_grid
    n_grade = sum(g.n_h for nd in reference.heat.nodes for s in ("supply", "return") if nd.requirement(s))
    assert len(targets) == len(reference.heat.nodes) * g.n_h + len(reference.electric.buses) * g.n_e + n_grade
    assert targets == sorted(targets)


def test_parse_target_filter():
    assert parse_target_filter("node:1") == (HEAT, "1")
    assert parse_target_filter("bus:3") == (ELECTRICITY, "3")
    with pytest.raises(ValueError):
        parse_target_filter("pipe:7")


def test_reference_oracle_one_node(reference, reference_solution, reference_prices):
    targets = [t for t in all_targets(reference) if t.location == "4" and t.market == HEAT]
    results = oracle_sweep(reference, targets=targets, base=reference_solution, schedule=reference_prices)
    assert all(r.verdict != "FAIL" for r in results)
    assert sum(r.conclusive for r in results) >= 3


def test_fault_injection_is_caught(reference, reference_solution, reference_prices):
    targets = [Target(ELECTRICITY, "3", t) for t in range(4)]
    results = oracle_sweep(reference, targets=targets, base=reference_solution, schedule=reference_prices,
                           price_scale=2.0)
    assert any(r.verdict == "FAIL" for r in results)


def test_independent_solver_prices_agree(reference, reference_solution, reference_prices):
    ref = independent_solve(reference)
    sched = reference_prices
    for nid, prices in ref.heat_price.items():
        assert sched.heat_energy[sched.node_row(nid)] == pytest.approx(prices, abs=1e-4)
    for bid, prices in ref.electricity_price.items():
        assert sched.electricity[sched.bus_row(bid)] == pytest.approx(prices, abs=1e-4)
    for (nid, side), prices in ref.grade_price.items():
        assert sched.grade(side)[sched.node_row(nid)] == pytest.approx(prices, abs=1e-4)
    for uid, gp in ref.gp.items():
        assert reference_solution.unit_gp(uid) == pytest.approx(gp, abs=1e-4)


def test_generator_yields_valid_small_instances():
    rng = np.random.default_rng(5)
    for _ in range(10):
        inst = random_instance(rng)
        assert validate(inst).ok
        assert len(inst.heat.nodes) <= 4
        assert len(inst.electric.buses) <= 6
        assert inst.time_grid.n_h <= 4


def test_sweep_is_deterministic():
    assert property_sweep(0, 3).text() == property_sweep(0, 3).text()


def test_sweep_records_infeasible_as_status(monkeypatch):
    bad = pair_network(req=(110.0, 110.0), cap=100.0)
    monkeypatch.setattr(verification, "random_instance", lambda rng: bad)
    report = property_sweep(0, 2)
    assert [c.status for c in report.checks] == ["infeasible", "infeasible"]
    assert report.violations == 0


def test_linear_cost_instance_keeps_identities(reference):
    units = tuple(dataclasses.replace(u, cost=(u.cost[0], u.cost[1], 0.0, u.cost[3], 0.0, 0.0))
                  for u in reference.units)
    inst = dataclasses.replace(reference, units=units)
    assert validate(inst).ok
    chk = check_instance(inst, solve(build(inst)))
    assert chk.ok, chk.failures


def test_check_instance_flags_bad_solution(reference, reference_solution):
    broken = dataclasses.replace(reference_solution, temps=reference_solution.temps + 1.0)
    chk = check_instance(reference, broken)
    assert any(f.startswith("thermal") for f in chk.failures)
