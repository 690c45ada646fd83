"""Energy-grade double prices from the dispatch multipliers, participant
payments, and the split of each unit's prices into marginal generation cost
(MG) and energy-coupled cost (CO).

Price units: energy $/MWh, grade $/(degC h).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .dispatch import DispatchSolution
from .heat import BALANCE
from .model import BACK_PRESSURE, LOAD, RETURN, SUPPLY, GenerationUnit, Instance

GRADE_ZERO = 1e-9


class UnknownParticipant(KeyError):
    pass


@dataclass
class BackPressureSplit:
    """Per-row contributions of a back-pressure unit's coupled pair and heat bounds.

    ``lower_1``/``upper_1`` are the multipliers of the rows
    -O G_p - K G_h <= -V and O G_p + K G_h <= V (O > 0) per electricity period;
    ``lower_2``/``upper_2`` those of the heat bounds per heat period.
    """

    lower_1: np.ndarray
    upper_1: np.ndarray
    lower_2: np.ndarray
    upper_2: np.ndarray
    co_e: np.ndarray
    co_h_pair: np.ndarray
    co_h_bounds: np.ndarray


@dataclass
class UnitPrices:
    unit_id: str
    mg_e: np.ndarray  # (n_e,)
    co_e: np.ndarray
    mg_h: np.ndarray  # (n_h,)
    co_h: np.ndarray
    price_e: np.ndarray  # electricity price at the unit's bus, zeros if none
    price_h: np.ndarray  # heat energy price at the unit's node, zeros if none
    back_pressure: Optional[BackPressureSplit] = None


@dataclass
class PriceSchedule:
    node_ids: tuple[str, ...]
    bus_ids: tuple[str, ...]
    heat_energy: np.ndarray  # (n_nodes, n_h)
    grade_supply: np.ndarray  # (n_nodes, n_h)
    grade_return: np.ndarray
    electricity: np.ndarray  # (n_buses, n_e)
    gp: dict  # unit -> dispatched electricity series
    gh: dict  # unit -> dispatched heat series
    units: dict = field(default_factory=dict)  # unit -> UnitPrices

    def node_row(self, node_id: str) -> int:
        return self.node_ids.index(node_id)

    def bus_row(self, bus_id: str) -> int:
        return self.bus_ids.index(bus_id)

    def grade(self, side: str) -> np.ndarray:
        return self.grade_supply if side == SUPPLY else self.grade_return


def compute_prices(solution: DispatchSolution, instance: Instance) -> PriceSchedule:
    if solution.y is None or solution.z is None:
        raise ValueError("solution carries no multipliers")
    grid = instance.time_grid
    dyn = solution.problem.dynamics
    nodes = instance.heat.nodes
    heat = np.zeros((len(nodes), grid.n_h))
    g_s = np.zeros_like(heat)
    g_r = np.zeros_like(heat)
    for i, nd in enumerate(nodes):
        heat[i] = solution.lambda_h[:, dyn.row_index(nd.id, BALANCE)] / grid.delta_t_h
        g_s[i] = solution.beta[:, dyn.state_index(nd.id, SUPPLY)] / grid.delta_t_h
        g_r[i] = solution.beta[:, dyn.state_index(nd.id, RETURN)] / grid.delta_t_h
    g_s[np.abs(g_s) < GRADE_ZERO] = 0.0
    g_r[np.abs(g_r) < GRADE_ZERO] = 0.0
    elec = solution.lambda_p.T / grid.delta_t_e
    sched = PriceSchedule(
        node_ids=tuple(nd.id for nd in nodes),
        bus_ids=tuple(b.id for b in instance.electric.buses),
        heat_energy=heat, grade_supply=g_s, grade_return=g_r, electricity=elec,
        gp={u: solution.unit_gp(u) for u in solution.problem.layout.e_units},
        gh={u: solution.unit_gh(u) for u in solution.problem.layout.h_units},
    )
    for u in instance.units:
        sched.units[u.id] = decompose_prices(solution, instance, u.id, sched)
    return sched


def decompose_prices(solution: DispatchSolution, instance: Instance, unit_id: str,
                     schedule: Optional[PriceSchedule] = None) -> UnitPrices:
    """MG/CO components of a unit's electricity and heat prices."""
    u = instance.unit(unit_id)
    grid = instance.time_grid
    de, dh, ratio = grid.delta_t_e, grid.delta_t_h, grid.ratio
    _, e1, e2, e3, e4, e5 = u.cost
    gamma = solution.gamma[u.id]
    gp = solution.unit_gp(u.id) if u.has_electric else np.zeros(grid.n_e)
    gh = solution.unit_gh(u.id) if u.has_heat else np.zeros(grid.n_h)
    gh_e = np.repeat(gh, ratio)
    mg_e = np.zeros(grid.n_e)
    co_e = np.zeros(grid.n_e)
    mg_h = np.zeros(grid.n_h)
    co_h = np.zeros(grid.n_h)
    price_e = np.zeros(grid.n_e)
    price_h = np.zeros(grid.n_h)
    if u.has_electric:
        mg_e = e3 + 2.0 * e4 * gp + e5 * gh_e
        for b in u.electric_rows():
            co_e += gamma[b] * u.polytope[b][0] / de
        b_idx = instance.electric.bus_index()[u.electric_bus]
        price_e = solution.lambda_p[:, b_idx] / de
    if u.has_heat:
        block_gp = gp.reshape(grid.n_h, ratio).sum(axis=1)
        mg_h = e1 + 2.0 * e2 * gh + (de / dh) * e5 * block_gp
        for b in u.electric_rows():
            co_h += gamma[b].reshape(grid.n_h, ratio).sum(axis=1) * u.polytope[b][1] / dh
        for b in u.heat_rows():
            co_h += gamma[b] * u.polytope[b][1] / dh
        row = solution.problem.dynamics.row_index(u.heat_node, BALANCE)
        price_h = solution.lambda_h[:, row] / dh
    split = _back_pressure_split(u, gamma, grid) if u.kind == BACK_PRESSURE else None
    return UnitPrices(u.id, mg_e, co_e, mg_h, co_h, price_e, price_h, split)


def _back_pressure_split(u: GenerationUnit, gamma: dict, grid) -> Optional[BackPressureSplit]:
    rows = u.polytope
    upper = lower = None
    for i, (o, k, v) in enumerate(rows):
        if o > 0 and k != 0:
            for j, r in enumerate(rows):
                if j != i and r == (-o, -k, -v):
                    upper, lower = i, j
    if upper is None:
        return None
    o1, k1 = rows[upper][0], rows[upper][1]
    de, dh, ratio = grid.delta_t_e, grid.delta_t_h, grid.ratio
    lo2 = np.zeros(grid.n_h)
    up2 = np.zeros(grid.n_h)
    bounds = np.zeros(grid.n_h)
    for b in u.heat_rows():
        kb = rows[b][1]
        (up2 if kb > 0 else lo2)[:] += gamma[b] * abs(kb)
        bounds += gamma[b] * kb / dh
    diff = gamma[upper] - gamma[lower]
    return BackPressureSplit(
        lower_1=gamma[lower].copy(), upper_1=gamma[upper].copy(), lower_2=lo2, upper_2=up2,
        co_e=diff * o1 / de,
        co_h_pair=diff.reshape(grid.n_h, ratio).sum(axis=1) * k1 / dh,
        co_h_bounds=bounds,
    )


@dataclass(frozen=True)
class SettlementLine:
    """One participant's settlement in one market over the horizon.

    Loads: amounts paid. Units: amounts received, with their own grade
    requirement charged as a negative grade payment.
    """

    participant: str
    role: str  # "load" or "unit"
    market: str  # "heat" or "electricity"
    energy_payment: float
    grade_payment: float
    by_period: tuple[float, ...]  # energy + grade per period of the market's time scale

    @property
    def total(self) -> float:
        return self.energy_payment + self.grade_payment

    @property
    def label(self) -> str:
        return f"{self.role}:{self.participant}"


def _grade_terms(schedule: PriceSchedule, instance: Instance, node_id: str) -> np.ndarray:
    """Per heat period sum over sides of grade price * (T_Q - T_a)."""
    nd = instance.heat.node(node_id)
    i = schedule.node_row(node_id)
    ambient = np.asarray(instance.heat.ambient, dtype=float)
    out = np.zeros(instance.time_grid.n_h)
    for side in (SUPPLY, RETURN):
        req = nd.requirement(side)
        if req is not None:
            out += schedule.grade(side)[i] * (np.asarray(req) - ambient)
    return out


def load_payment(schedule: PriceSchedule, instance: Instance, market: str, location: str) -> SettlementLine:
    grid = instance.time_grid
    if market == "heat":
        try:
            nd = instance.heat.node(location)
        except KeyError:
            raise UnknownParticipant(f"heat node {location!r}") from None
        if nd.kind != LOAD:
            raise UnknownParticipant(f"heat node {location!r} is not a load")
        i = schedule.node_row(location)
        energy = schedule.heat_energy[i] * np.asarray(nd.heat_load) * grid.delta_t_h
        grade = _grade_terms(schedule, instance, location) * grid.delta_t_h
        return SettlementLine(location, "load", "heat", float(energy.sum()), float(grade.sum()),
                              tuple(float(v) for v in energy + grade))
    if market == "electricity":
        if location not in schedule.bus_ids:
            raise UnknownParticipant(f"bus {location!r}")
        bus = instance.electric.buses[schedule.bus_row(location)]
        energy = schedule.electricity[schedule.bus_row(location)] * np.asarray(bus.load) * grid.delta_t_e
        return SettlementLine(location, "load", "electricity", float(energy.sum()), 0.0,
                              tuple(float(v) for v in energy))
    raise UnknownParticipant(f"market {market!r}")


def unit_payment(schedule: PriceSchedule, instance: Instance, unit_id: str) -> tuple[SettlementLine, ...]:
    """Settlement lines for a unit: one per market it sells into."""
    try:
        u = instance.unit(unit_id)
    except KeyError:
        raise UnknownParticipant(f"unit {unit_id!r}") from None
    grid = instance.time_grid
    lines = []
    if u.has_electric:
        price = schedule.electricity[schedule.bus_row(u.electric_bus)]
        energy = price * schedule.gp[u.id] * grid.delta_t_e
        lines.append(SettlementLine(u.id, "unit", "electricity", float(energy.sum()), 0.0,
                                    tuple(float(v) for v in energy)))
    if u.has_heat:
        i = schedule.node_row(u.heat_node)
        energy = schedule.heat_energy[i] * schedule.gh[u.id] * grid.delta_t_h
        grade = -_grade_terms(schedule, instance, u.heat_node) * grid.delta_t_h
        lines.append(SettlementLine(u.id, "unit", "heat", float(energy.sum()), float(grade.sum()),
                                    tuple(float(v) for v in energy + grade)))
    return tuple(lines)


def all_settlements(schedule: PriceSchedule, instance: Instance) -> list[SettlementLine]:
    out = []
    for nd in instance.heat.nodes:
        if nd.kind == LOAD:
            out.append(load_payment(schedule, instance, "heat", nd.id))
    for b in instance.electric.buses:
        if any(b.load):
            out.append(load_payment(schedule, instance, "electricity", b.id))
    for u in instance.units:
        out.extend(unit_payment(schedule, instance, u.id))
    return out


def identity_gaps(schedule: PriceSchedule, instance: Instance) -> dict:
    """Largest |price - (MG + CO)| per market over all units and periods."""
    gap_e = gap_h = 0.0
    for u in instance.units:
        up = schedule.units[u.id]
        if u.has_electric:
            gap_e = max(gap_e, float(np.abs(up.price_e - up.mg_e - up.co_e).max()))
        if u.has_heat:
            gap_h = max(gap_h, float(np.abs(up.price_h - up.mg_h - up.co_h).max()))
    return {"electricity": gap_e, "heat": gap_h}
