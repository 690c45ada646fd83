"""Domain types for a combined heat-and-power market instance, plus validation.

All series are plain tuples so that instances stay immutable and hashable-ish;
the numerical modules convert them to arrays on demand.

Units: power in MW, time in hours, temperature in degC, mass flow in kg/s,
pipe geometry in m / m^2, heat-loss coefficient in W/(m degC).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

SPECIFIC_HEAT = 4182.0  # J/(kg degC)
WATER_DENSITY = 1000.0  # kg/m^3

SOURCE, LOAD = "source", "load"
SUPPLY, RETURN = "supply", "return"

PURE_ELECTRIC = "pure_electric"
PURE_HEAT = "pure_heat"
EXTRACTION_CONDENSING = "extraction_condensing"
BACK_PRESSURE = "back_pressure"
UNIT_KINDS = (PURE_ELECTRIC, PURE_HEAT, EXTRACTION_CONDENSING, BACK_PRESSURE)
CHP_KINDS = (EXTRACTION_CONDENSING, BACK_PRESSURE)

_REL = 1e-9


@dataclass(frozen=True)
class TimeGrid:
    delta_t_e: float
    delta_t_h: float
    n_e: int
    n_h: int

    @property
    def horizon(self) -> float:
        return self.n_h * self.delta_t_h

    @property
    def ratio(self) -> int:
        """Electricity periods per heat period."""
        return self.n_e // self.n_h

    def heat_block(self, t_h: int) -> range:
        """0-based electricity period indices inside 0-based heat period ``t_h``."""
        return range(t_h * self.ratio, (t_h + 1) * self.ratio)

    def e_starts(self) -> np.ndarray:
        return np.arange(self.n_e) * self.delta_t_e

    def h_starts(self) -> np.ndarray:
        return np.arange(self.n_h) * self.delta_t_h


def heat_period_of(t_e: int, grid: TimeGrid) -> int:
    """Map a 1-based electricity period to the 1-based heat period containing it."""
    if not 1 <= t_e <= grid.n_e:
        raise IndexError(f"electricity period {t_e} outside 1..{grid.n_e}")
    return -(-t_e // grid.ratio)


@dataclass(frozen=True)
class HeatNode:
    id: str
    kind: str
    exchanger_mass_flow: tuple[float, ...]
    heat_load: tuple[float, ...]
    initial_supply_temp: float
    initial_return_temp: float
    supply_temp_requirement: Optional[tuple[float, ...]] = None
    return_temp_requirement: Optional[tuple[float, ...]] = None

    def requirement(self, side: str) -> Optional[tuple[float, ...]]:
        return self.supply_temp_requirement if side == SUPPLY else self.return_temp_requirement

    def initial_temp(self, side: str) -> float:
        return self.initial_supply_temp if side == SUPPLY else self.initial_return_temp

    @property
    def balance_side(self) -> str:
        """Side on which the exchanger injects (sources) or withdraws (loads) heat."""
        return SUPPLY if self.kind == SOURCE else RETURN

    @property
    def mixing_side(self) -> str:
        return RETURN if self.kind == SOURCE else SUPPLY


@dataclass(frozen=True)
class Pipeline:
    id: str
    from_node: str
    to_node: str
    network_side: str
    length: float
    cross_section: float
    mass_flow: tuple[float, ...]
    loss_coefficient: float
    temp_cap: Optional[float] = None


@dataclass(frozen=True)
class HeatNetwork:
    nodes: tuple[HeatNode, ...] = ()
    pipelines: tuple[Pipeline, ...] = ()
    ambient: tuple[float, ...] = ()

    def node(self, node_id: str) -> HeatNode:
        for n in self.nodes:
            if n.id == node_id:
                return n
        raise KeyError(node_id)


@dataclass(frozen=True)
class Bus:
    id: str
    load: tuple[float, ...]


@dataclass(frozen=True)
class Line:
    id: str
    from_bus: str
    to_bus: str
    reactance: float
    limit: float


@dataclass(frozen=True)
class ElectricNetwork:
    buses: tuple[Bus, ...] = ()
    lines: tuple[Line, ...] = ()
    reference_bus: Optional[str] = None

    def bus_index(self) -> dict[str, int]:
        return {b.id: k for k, b in enumerate(self.buses)}


@dataclass(frozen=True)
class GenerationUnit:
    """A generator with a polytope feasible region ``O*G_p + K*G_h <= V``.

    ``cost`` holds (eta0, ..., eta5): eta1/eta2 weight heat output, eta3/eta4
    electric output and eta5 the product G_p*G_h.
    """

    id: str
    kind: str
    polytope: tuple[tuple[float, float, float], ...]
    cost: tuple[float, ...]
    electric_bus: Optional[str] = None
    heat_node: Optional[str] = None

    @property
    def has_electric(self) -> bool:
        return self.kind != PURE_HEAT

    @property
    def has_heat(self) -> bool:
        return self.kind != PURE_ELECTRIC

    def electric_rows(self) -> list[int]:
        """Polytope rows evaluated every electricity period (rows touching G_p)."""
        return [b for b, (o, _, _) in enumerate(self.polytope) if o != 0.0]

    def heat_rows(self) -> list[int]:
        """Rows involving only G_h; these are imposed once per heat period."""
        return [b for b, (o, _, _) in enumerate(self.polytope) if o == 0.0]


@dataclass(frozen=True)
class Instance:
    time_grid: TimeGrid
    heat: HeatNetwork = field(default_factory=HeatNetwork)
    electric: ElectricNetwork = field(default_factory=ElectricNetwork)
    units: tuple[GenerationUnit, ...] = ()
    specific_heat: float = SPECIFIC_HEAT
    water_density: float = WATER_DENSITY

    def unit(self, unit_id: str) -> GenerationUnit:
        for u in self.units:
            if u.id == unit_id:
                return u
        raise KeyError(unit_id)

    @property
    def electric_units(self) -> tuple[GenerationUnit, ...]:
        return tuple(u for u in self.units if u.has_electric)

    @property
    def heat_units(self) -> tuple[GenerationUnit, ...]:
        return tuple(u for u in self.units if u.has_heat)


# --------------------------------------------------------------------------
# validation


@dataclass(frozen=True)
class Violation:
    field: str
    message: str

    def __str__(self) -> str:
        return f"{self.field}: {self.message}"


@dataclass
class ValidationReport:
    violations: list[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def add(self, path: str, message: str) -> None:
        self.violations.append(Violation(path, message))

    def messages(self) -> list[str]:
        return [str(v) for v in self.violations]


def _finite(xs) -> bool:
    return all(math.isfinite(x) for x in xs)


def _check_series(rep: ValidationReport, path: str, series, n: int) -> bool:
    if len(series) != n:
        rep.add(path, f"series length {len(series)} != {n}")
        return False
    if not _finite(series):
        rep.add(path, "series contains non-finite values")
        return False
    return True


def _close(a: float, b: float) -> bool:
    return abs(a - b) <= _REL * max(1.0, abs(a), abs(b))


def validate(instance: Instance) -> ValidationReport:
    """Check every precondition the assembly and solve steps rely on.

    Violations are collected, never raised.
    """
    rep = ValidationReport()
    grid_ok = _validate_grid(instance.time_grid, rep)
    if not grid_ok:
        return rep
    heat_ok = _validate_heat(instance, rep)
    _validate_electric(instance, rep)
    _validate_units(instance, rep)
    if heat_ok and rep.ok and instance.heat.nodes:
        _validate_dynamics(instance, rep)
    return rep


def _validate_grid(g: TimeGrid, rep: ValidationReport) -> bool:
    if not (g.delta_t_e > 0 and g.delta_t_h > 0):
        rep.add("time_grid", "durations must be positive")
        return False
    if g.n_e < 1 or g.n_h < 1:
        rep.add("time_grid", "period counts must be >= 1")
        return False
    if g.n_e % g.n_h:
        rep.add("time_grid", f"n_e={g.n_e} is not a multiple of n_h={g.n_h}")
        return False
    ratio = g.delta_t_h / g.delta_t_e
    if abs(ratio - round(ratio)) > 1e-9 or round(ratio) != g.ratio:
        rep.add("time_grid", f"delta_t_h/delta_t_e={ratio:g} must equal n_e/n_h={g.ratio}")
        return False
    if not _close(g.n_e * g.delta_t_e, g.n_h * g.delta_t_h):
        rep.add("time_grid", "n_e*delta_t_e != n_h*delta_t_h")
        return False
    return True


def _validate_heat(inst: Instance, rep: ValidationReport) -> bool:
    net, n_h = inst.heat, inst.time_grid.n_h
    ok_before = len(rep.violations)
    if not net.nodes:
        if net.pipelines:
            rep.add("heat_network.pipelines", "pipelines without nodes")
        return len(rep.violations) == ok_before
    ambient_ok = _check_series(rep, "heat_network.ambient", net.ambient, n_h)
    ids = [n.id for n in net.nodes]
    if len(set(ids)) != len(ids):
        rep.add("heat_network.nodes", "duplicate node ids")
    for k, n in enumerate(net.nodes):
        p = f"heat_network.nodes[{k}]"
        if n.kind not in (SOURCE, LOAD):
            rep.add(f"{p}.kind", f"unknown kind {n.kind!r}")
            continue
        if _check_series(rep, f"{p}.exchanger_mass_flow", n.exchanger_mass_flow, n_h):
            if min(n.exchanger_mass_flow) <= 0:
                rep.add(f"{p}.exchanger_mass_flow", "mass flow must be > 0")
        if _check_series(rep, f"{p}.heat_load", n.heat_load, n_h):
            if n.kind == SOURCE and any(d != 0.0 for d in n.heat_load):
                rep.add(f"{p}.heat_load", "source nodes carry no heat load")
        if not _finite([n.initial_supply_temp, n.initial_return_temp]):
            rep.add(f"{p}.initial_temps", "initial temperatures must be finite")
        for side in (SUPPLY, RETURN):
            req = n.requirement(side)
            if req is None:
                continue
            rp = f"{p}.{side}_temp_requirement"
            if _check_series(rep, rp, req, n_h) and ambient_ok:
                if any(q < a for q, a in zip(req, net.ambient)):
                    rep.add(rp, "requirement below ambient temperature")

    node_ids = set(ids)
    pids = [p.id for p in net.pipelines]
    if len(set(pids)) != len(pids):
        rep.add("heat_network.pipelines", "duplicate pipeline ids")
    for k, pipe in enumerate(net.pipelines):
        p = f"heat_network.pipelines[{k}]"
        for end in (pipe.from_node, pipe.to_node):
            if end not in node_ids:
                rep.add(p, f"unknown node {end!r}")
        if pipe.from_node == pipe.to_node:
            rep.add(p, "pipeline must connect two distinct nodes")
        if pipe.network_side not in (SUPPLY, RETURN):
            rep.add(f"{p}.network_side", f"unknown side {pipe.network_side!r}")
        if not (pipe.length >= 0 and pipe.cross_section >= 0):
            rep.add(p, "length and cross_section must be >= 0")
        if not (pipe.loss_coefficient >= 0):
            rep.add(f"{p}.loss_coefficient", "loss coefficient must be >= 0")
        if pipe.temp_cap is not None and not math.isfinite(pipe.temp_cap):
            rep.add(f"{p}.temp_cap", "temperature cap must be finite")
        if not _check_series(rep, f"{p}.mass_flow", pipe.mass_flow, n_h):
            continue
        if min(pipe.mass_flow) <= 0:
            rep.add(f"{p}.mass_flow", "mass flow must be > 0")
            continue
        for t, m in enumerate(pipe.mass_flow):
            psi = inst.water_density * pipe.cross_section * pipe.length / (
                m * inst.time_grid.delta_t_h * 3600.0)
            if psi > 1.0 + 1e-12:
                rep.add(p, f"transport time exceeds one heat period (psi={psi:.4g} at t={t + 1})")
                break
            phi = 1.0 - pipe.loss_coefficient * pipe.length / (inst.specific_heat * m)
            if phi <= 0.0:
                rep.add(p, f"excessive heat loss (phi={phi:.4g} at t={t + 1})")
                break
    if len(rep.violations) > ok_before:
        return False
    _validate_mass_balance(inst, rep)
    return len(rep.violations) == ok_before


def _validate_mass_balance(inst: Instance, rep: ValidationReport) -> None:
    # flow out of an exchanger-output location = in + M; the other side loses M
    net = inst.heat
    for k, n in enumerate(net.nodes):
        for side in (SUPPLY, RETURN):
            ins = [p for p in net.pipelines if p.to_node == n.id and p.network_side == side]
            outs = [p for p in net.pipelines if p.from_node == n.id and p.network_side == side]
            sign = 1.0 if side == n.balance_side else -1.0
            for t in range(inst.time_grid.n_h):
                fin = sum(p.mass_flow[t] for p in ins)
                fout = sum(p.mass_flow[t] for p in outs)
                expected = fin + sign * n.exchanger_mass_flow[t]
                if not _close(fout, expected):
                    rep.add(
                        f"heat_network.nodes[{k}]",
                        f"mass flow not conserved at {side} side, t={t + 1} "
                        f"(out {fout:g} != {expected:g})",
                    )
                    break


def _validate_electric(inst: Instance, rep: ValidationReport) -> None:
    net, n_e = inst.electric, inst.time_grid.n_e
    if not net.buses:
        if net.lines:
            rep.add("electric_network.lines", "lines without buses")
        return
    ids = [b.id for b in net.buses]
    if len(set(ids)) != len(ids):
        rep.add("electric_network.buses", "duplicate bus ids")
    for k, b in enumerate(net.buses):
        _check_series(rep, f"electric_network.buses[{k}].load", b.load, n_e)
    if net.reference_bus not in ids:
        rep.add("electric_network.reference_bus", f"unknown reference bus {net.reference_bus!r}")
    bus_set = set(ids)
    lids = [ln.id for ln in net.lines]
    if len(set(lids)) != len(lids):
        rep.add("electric_network.lines", "duplicate line ids")
    adj: dict[str, set[str]] = {b: set() for b in ids}
    for k, ln in enumerate(net.lines):
        p = f"electric_network.lines[{k}]"
        if ln.from_bus not in bus_set or ln.to_bus not in bus_set or ln.from_bus == ln.to_bus:
            rep.add(p, "line must join two distinct known buses")
            continue
        if not ln.reactance > 0:
            rep.add(f"{p}.reactance", "reactance must be > 0")
        if not ln.limit > 0:
            rep.add(f"{p}.limit", "thermal limit must be > 0")
        adj[ln.from_bus].add(ln.to_bus)
        adj[ln.to_bus].add(ln.from_bus)
    seen, stack = {ids[0]}, [ids[0]]
    while stack:
        for nb in adj[stack.pop()]:
            if nb not in seen:
                seen.add(nb)
                stack.append(nb)
    if len(seen) != len(ids):
        rep.add("electric_network", "bus graph is not connected")


def _validate_units(inst: Instance, rep: ValidationReport) -> None:
    ids = [u.id for u in inst.units]
    if len(set(ids)) != len(ids):
        rep.add("units", "duplicate unit ids")
    buses = {b.id for b in inst.electric.buses}
    nodes = {n.id: n for n in inst.heat.nodes}
    hosted: dict[str, list[str]] = {}
    for k, u in enumerate(inst.units):
        p = f"units[{k}]"
        if u.kind not in UNIT_KINDS:
            rep.add(f"{p}.kind", f"unknown kind {u.kind!r}")
            continue
        if u.electric_bus is None and u.heat_node is None:
            rep.add(p, "unit references no network")
        if u.has_electric:
            if u.electric_bus not in buses:
                rep.add(f"{p}.electric_bus", f"unknown bus {u.electric_bus!r}")
        elif u.electric_bus is not None:
            rep.add(f"{p}.electric_bus", "pure heat unit cannot sit on a bus")
        if u.has_heat:
            node = nodes.get(u.heat_node)  # type: ignore[arg-type]
            if node is None:
                rep.add(f"{p}.heat_node", f"unknown heat node {u.heat_node!r}")
            elif node.kind != SOURCE:
                rep.add(f"{p}.heat_node", f"heat node {u.heat_node!r} is not a source")
            else:
                hosted.setdefault(node.id, []).append(u.id)
        elif u.heat_node is not None:
            rep.add(f"{p}.heat_node", "pure electric unit cannot sit on a heat node")
        _validate_cost(u, p, rep)
        _validate_polytope(u, p, rep)
    for n in inst.heat.nodes:
        if n.kind == SOURCE and len(hosted.get(n.id, [])) != 1:
            rep.add(f"heat_network.nodes[{n.id}]", "each source node must host exactly one unit")


def _validate_cost(u: GenerationUnit, p: str, rep: ValidationReport) -> None:
    if len(u.cost) != 6 or not _finite(u.cost):
        rep.add(f"{p}.cost", "cost needs six finite coefficients")
        return
    _, e1, e2, e3, e4, e5 = u.cost
    if e2 < 0 or e4 < 0 or 4.0 * e2 * e4 < e5 * e5:
        rep.add(f"{p}.cost", "non-convex cost (Hessian not positive semidefinite)")
    if u.kind == PURE_ELECTRIC and (e1 or e2 or e5):
        rep.add(f"{p}.cost", "pure electric unit has heat cost terms")
    if u.kind == PURE_HEAT and (e3 or e4 or e5):
        rep.add(f"{p}.cost", "pure heat unit has electric cost terms")


def _validate_polytope(u: GenerationUnit, p: str, rep: ValidationReport) -> None:
    rows = u.polytope
    if not rows or any(len(r) != 3 or not _finite(r) for r in rows):
        rep.add(f"{p}.polytope", "polytope needs rows of three finite numbers")
        return
    if any(o == 0.0 and k == 0.0 for o, k, _ in rows):
        rep.add(f"{p}.polytope", "row with zero coefficients")
        return
    if u.kind == PURE_ELECTRIC and any(k != 0.0 for _, k, _ in rows):
        rep.add(f"{p}.polytope", "pure electric rows must not involve heat")
        return
    if u.kind == PURE_HEAT and any(o != 0.0 for o, _, _ in rows):
        rep.add(f"{p}.polytope", "pure heat rows must not involve electricity")
        return
    if u.kind == BACK_PRESSURE:
        pair = any(
            rows[i][0] != 0.0 and rows[i][1] != 0.0
            and all(rows[j][c] == -rows[i][c] for c in range(3))
            for i in range(len(rows)) for j in range(len(rows)) if i != j
        )
        if not pair:
            rep.add(f"{p}.polytope", "unpaired linear relation (back-pressure needs the inequality pair)")
        if not any(o == 0.0 and k > 0 for o, k, _ in rows) or not any(
                o == 0.0 and k < 0 for o, k, _ in rows):
            rep.add(f"{p}.polytope", "back-pressure unit needs lower and upper heat bounds")
    if u.kind == EXTRACTION_CONDENSING and not any(o != 0 and k != 0 for o, k, _ in rows):
        rep.add(f"{p}.polytope", "extraction-condensing region has no coupled row")
    msg = polytope_problem(u)
    if msg:
        rep.add(f"{p}.polytope", msg)


def _validate_dynamics(inst: Instance, rep: ValidationReport) -> None:
    from .heat import assemble

    system = assemble(inst)
    for t in range(inst.time_grid.n_h):
        if np.linalg.cond(system.c1[t]) > 1e12:
            rep.add("heat_network", f"temperature map is singular at t={t + 1} "
                    "(a lossless, delay-free loop leaves the temperature level undetermined)")
            break


def polytope_problem(u: GenerationUnit) -> Optional[str]:
    """Return a message if the unit's feasible region is empty or unbounded."""
    from scipy.optimize import linprog

    rows = np.asarray(u.polytope, dtype=float)
    axes = []
    if u.has_electric:
        axes.append(0)
    if u.has_heat:
        axes.append(1)
    a_ub = rows[:, axes]
    b_ub = rows[:, 2]
    free = [(None, None)] * len(axes)
    for k in range(len(axes)):
        for sign in (1.0, -1.0):
            c = np.zeros(len(axes))
            c[k] = sign
            res = linprog(c, A_ub=a_ub, b_ub=b_ub, bounds=free, method="highs")
            if res.status == 2:
                return "empty feasible region"
            if res.status == 3:
                return "unbounded feasible region"
            if res.status != 0:
                return f"region check failed ({res.message})"
    return None
