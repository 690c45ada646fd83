import dataclasses

import numpy as np
import pytest

from chp_clearing.dispatch import build, solve
from chp_clearing.heat import BALANCE
from chp_clearing.pricing import (
    PriceSchedule, UnknownParticipant, compute_prices, decompose_prices, identity_gaps, load_payment, unit_payment,
)
from conftest import pair_network, single_bus


def _schedule(inst, heat=30.0, grade_s=0.0, gh=0.0):
    g = inst.time_grid
    n = len(inst.heat.nodes)
    return PriceSchedule(
        node_ids=tuple(nd.id for nd in inst.heat.nodes), bus_ids=(),
        heat_energy=np.full((n, g.n_h), heat), grade_supply=np.broadcast_to(grade_s, (n, g.n_h)).copy(),
        grade_return=np.zeros((n, g.n_h)), electricity=np.zeros((0, g.n_e)),
        gp={}, gh={u.id: np.full(g.n_h, gh) for u in inst.units},
    )


def test_electricity_price_scales_by_period_length():
    inst = single_bus(load=(100.0,) * 4, dt_e=0.25)
    sol = solve(build(inst))
    assert sol.lambda_p[0, 0] == pytest.approx(7.5, abs=1e-8)  # $ per row = 30 $/MWh * 0.25 h
    assert compute_prices(sol, inst).electricity[0] == pytest.approx([30.0] * 4, abs=1e-8)


def test_heat_price_scaling():
    inst = pair_network(n_h=4, load=(10.0,) * 4, heat_cost=(0.0, 30.0, 0.0), req=(60.0,) * 4,
                        length=450.0, loss=1.0)
    sol = solve(build(inst))
    row = sol.problem.dynamics.row_index("1", BALANCE)
    assert 1e-3 < sol.unit_gh("B")[0] < 50.0  # interior, so the price is the linear cost
    assert sol.lambda_h[0, row] == pytest.approx(30.0, abs=1e-8)
    assert compute_prices(sol, inst).heat_energy[0, 0] == pytest.approx(30.0, abs=1e-8)


def test_uncongested_price_is_marginal_cost():
    inst = single_bus(load=(80.0, 100.0, 120.0))
    sched = compute_prices(solve(build(inst)), inst)
    assert sched.electricity[0] == pytest.approx([10 + 0.2 * d for d in (80, 100, 120)], abs=1e-8)


def test_heat_load_payment_arithmetic():
    inst = pair_network(n_h=4, load=(10.0,) * 4)
    line = load_payment(_schedule(inst), inst, "heat", "2")
    assert line.energy_payment == pytest.approx(1200.0)
    assert line.grade_payment == 0.0


def test_grade_payment_arithmetic():
    inst = pair_network(n_h=4, load=(10.0,) * 4, req=(65.0,) * 4)  # T_Q - T_a = 60
    sched = _schedule(inst)
    sched.grade_supply[sched.node_row("2"), 0] = 2.0
    line = load_payment(sched, inst, "heat", "2")
    assert line.grade_payment == pytest.approx(120.0)
    assert line.total == pytest.approx(1320.0)
    assert line.by_period[0] == pytest.approx(420.0)


def test_unknown_participants():
    inst = pair_network()
    sched = _schedule(inst)
    with pytest.raises(UnknownParticipant):
        load_payment(sched, inst, "heat", "9")
    with pytest.raises(UnknownParticipant):
        load_payment(sched, inst, "heat", "1")  # a source, not a load
    with pytest.raises(UnknownParticipant):
        load_payment(sched, inst, "electricity", "1")
    with pytest.raises(UnknownParticipant):
        unit_payment(sched, inst, "nope")


def test_pure_heat_unit_revenue():
    inst = pair_network(n_h=4)
    (line,) = unit_payment(_schedule(inst, heat=30.0, gh=5.0), inst, "B")
    assert line.energy_payment == pytest.approx(4 * 30.0 * 5.0)
    assert line.grade_payment == 0.0


def test_idle_unit_still_charged_for_grade():
    inst = pair_network(n_h=2)
    src = dataclasses.replace(inst.heat.nodes[0], supply_temp_requirement=(45.0, 45.0))
    inst = dataclasses.replace(inst, heat=dataclasses.replace(inst.heat, nodes=(src, inst.heat.nodes[1])))
    sched = _schedule(inst, gh=0.0)
    sched.grade_supply[sched.node_row("1"), 1] = 0.5
    (line,) = unit_payment(sched, inst, "B")
    assert line.energy_payment == 0.0
    assert line.grade_payment == pytest.approx(-0.5 * 40.0)


def test_interior_point_has_no_coupled_cost():
    inst = single_bus()
    sol = solve(build(inst))
    up = decompose_prices(sol, inst, "G")
    assert up.co_e == pytest.approx([0.0], abs=1e-9)
    assert up.price_e == pytest.approx(up.mg_e, abs=1e-8)


def test_price_identity_on_reference(reference, reference_prices):
    gaps = identity_gaps(reference_prices, reference)
    assert max(gaps.values()) <= 1e-6


def test_extraction_condensing_boundary_signs(reference_prices):
    up = reference_prices.units["CHP1"]
    # co_h is per heat period; compare with the electricity periods inside each block
    co_h_e = np.repeat(up.co_h, 4)
    boundary = np.flatnonzero((up.co_e > 1e-6) | (co_h_e < -1e-6))
    assert boundary.size
    assert np.all(up.co_e[boundary] >= -1e-9)
    assert np.all(co_h_e[boundary] <= 1e-9)
    assert np.all(up.price_e[boundary] >= up.mg_e[boundary] - 1e-9)


def test_back_pressure_split(reference, reference_solution, reference_prices):
    up = reference_prices.units["CHP2"]
    split = up.back_pressure
    assert split is not None
    g = reference.time_grid
    # the coupled pair plus the heat bounds reproduce the unit's CO terms
    assert split.co_e == pytest.approx(up.co_e, abs=1e-9)
    assert split.co_h_pair + split.co_h_bounds == pytest.approx(up.co_h, abs=1e-9)
    assert np.all(split.lower_1 >= 0) and np.all(split.upper_1 >= 0)
    blocks = up.mg_e.reshape(g.n_h, g.ratio)
    assert np.ptp(blocks, axis=1).max() <= 1e-6
    gp = reference_solution.unit_gp("CHP2").reshape(g.n_h, g.ratio)
    assert np.ptp(gp, axis=1).max() <= 1e-6


def test_grade_price_zero_when_requirement_slack(reference, reference_solution, reference_prices):
    dyn = reference_solution.problem.dynamics
    for nd in reference.heat.nodes:
        req = nd.supply_temp_requirement
        if req is None:
            continue
        k = dyn.state_index(nd.id, "supply")
        slack = reference_solution.temps[:, k] - np.asarray(req)
        price = reference_prices.grade_supply[reference_prices.node_row(nd.id)]
        assert np.all(price[slack > 1e-6] == 0.0)
        assert np.all(price >= 0.0)


def test_payments_from_raw_duals(reference, reference_solution, reference_prices):
    sol, g = reference_solution, reference.time_grid
    dyn = sol.problem.dynamics
    nd = reference.heat.node("4")
    k = dyn.state_index("4", "supply")
    raw = sum(sol.lambda_h[t, dyn.row_index("4", BALANCE)] * nd.heat_load[t]
              + sol.beta[t, k] * (nd.supply_temp_requirement[t] - reference.heat.ambient[t]) for t in range(g.n_h))
    assert load_payment(reference_prices, reference, "heat", "4").total == pytest.approx(raw, rel=1e-9)
    lines = unit_payment(reference_prices, reference, "CHP2")
    elec = next(ln for ln in lines if ln.market == "electricity")
    b = reference.electric.bus_index()["2"]
    raw_e = float(np.sum(sol.lambda_p[:, b] * sol.unit_gp("CHP2")))
    assert elec.energy_payment == pytest.approx(raw_e, rel=1e-9)
