"""Independent checks of the clearing engine.

* :func:`price_oracle` re-solves with the demand (or a temperature
  requirement) nudged by +-eps and compares the central difference of f*
  with the posted price.
* :func:`independent_solve` rebuilds the dispatch from the instance in cvxpy,
  straight from the scalar node equations, and solves it with Clarabel.
* :func:`random_instance` and :func:`property_sweep` generate small valid
  systems and run every module invariant on them.
"""

from __future__ import annotations

import dataclasses
import logging
from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np

from .dispatch import DispatchSolution, Infeasible, SolveError, build, dual_objective, elastic_check, kkt_report, solve
from .heat import loss_factor, simulate_forward, transfer_fraction
from .model import (
    BACK_PRESSURE, EXTRACTION_CONDENSING, LOAD, PURE_ELECTRIC, PURE_HEAT, RETURN, SOURCE, SUPPLY, Bus,
    ElectricNetwork, GenerationUnit, HeatNetwork, HeatNode, Instance, Line, Pipeline, TimeGrid, validate,
)
from .pricing import PriceSchedule, compute_prices, identity_gaps
from .settlement import surplus_report

log = logging.getLogger(__name__)

HEAT, ELECTRICITY, GRADE = "heat", "electricity", "grade"
IDENTITY_TOL = 1e-6


class ActiveSetChanged(RuntimeError):
    """The perturbation crossed a vertex, so the difference quotient is not a derivative."""


@dataclass(frozen=True, order=True)
class Target:
    market: str  # HEAT, ELECTRICITY or GRADE
    location: str
    period: int  # 0-based on the market's time scale
    side: str = ""  # GRADE only

    @property
    def label(self) -> str:
        if self.market == HEAT:
            return f"node:{self.location}"
        if self.market == ELECTRICITY:
            return f"bus:{self.location}"
        return f"grade:{self.location}:{self.side}"


@dataclass(frozen=True)
class OracleResult:
    target: Target
    posted: float
    oracle: Optional[float]  # None when inconclusive
    eps: float
    tolerance: float

    @property
    def conclusive(self) -> bool:
        return self.oracle is not None

    @property
    def abs_err(self) -> Optional[float]:
        return None if self.oracle is None else abs(self.oracle - self.posted)

    @property
    def verdict(self) -> str:
        if self.oracle is None:
            return "INCONCLUSIVE"
        return "PASS" if self.abs_err <= self.tolerance else "FAIL"


def price_tolerance(price: float, rel: float = 1e-3, floor: float = 1e-3) -> float:
    return max(floor, rel * abs(price))


def _replace_series(series, period: int, delta: float) -> tuple:
    out = list(series)
    out[period] += delta
    return tuple(out)


def perturb(instance: Instance, target: Target, delta: float) -> Instance:
    """Copy of ``instance`` with the target's demand or requirement shifted by ``delta``."""
    if target.market == ELECTRICITY:
        buses = tuple(dataclasses.replace(b, load=_replace_series(b.load, target.period, delta))
                      if b.id == target.location else b for b in instance.electric.buses)
        return dataclasses.replace(instance, electric=dataclasses.replace(instance.electric, buses=buses))
    nodes = []
    for nd in instance.heat.nodes:
        if nd.id == target.location:
            if target.market == HEAT:
                nd = dataclasses.replace(nd, heat_load=_replace_series(nd.heat_load, target.period, delta))
            else:
                key = f"{target.side}_temp_requirement"
                nd = dataclasses.replace(nd, **{key: _replace_series(getattr(nd, key), target.period, delta)})
        nodes.append(nd)
    return dataclasses.replace(instance, heat=dataclasses.replace(instance.heat, nodes=tuple(nodes)))


def posted_price(schedule: PriceSchedule, target: Target) -> float:
    if target.market == HEAT:
        return float(schedule.heat_energy[schedule.node_row(target.location), target.period])
    if target.market == ELECTRICITY:
        return float(schedule.electricity[schedule.bus_row(target.location), target.period])
    return float(schedule.grade(target.side)[schedule.node_row(target.location), target.period])


def _period_length(instance: Instance, target: Target) -> float:
    g = instance.time_grid
    return g.delta_t_e if target.market == ELECTRICITY else g.delta_t_h


def _solve_quiet(instance: Instance, tol: float) -> DispatchSolution:
    return solve(build(instance), tol=tol)


def price_oracle(instance: Instance, target: Target, eps: float = 1e-2, *,
                 base: Optional[DispatchSolution] = None, schedule: Optional[PriceSchedule] = None,
                 rel_tol: float = 1e-3, solver_tol: float = 1e-10) -> OracleResult:
    """Central difference (f*(+eps) - f*(-eps)) / (2 eps dT) at ``target``.

    The active set of both perturbed solves must equal the base one; otherwise
    eps is halved once. A second change raises :class:`ActiveSetChanged`.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    if base is None:
        base = _solve_quiet(instance, solver_tol)
    if schedule is None:
        schedule = compute_prices(base, instance)
    posted = posted_price(schedule, target)
    ref_set = base.binding_set()
    dt = _period_length(instance, target)
    step = eps
    for _ in range(2):
        plus = _solve_quiet(perturb(instance, target, step), solver_tol)
        minus = _solve_quiet(perturb(instance, target, -step), solver_tol)
        if plus.binding_set() == ref_set and minus.binding_set() == ref_set:
            fd = (plus.objective - minus.objective) / (2.0 * step * dt)
            return OracleResult(target, posted, fd, step, price_tolerance(posted, rel_tol))
        step /= 2.0
    raise ActiveSetChanged(f"{target.label} period {target.period + 1}: binding set changes within +-{step * 2:g}")


def all_targets(instance: Instance) -> list[Target]:
    g = instance.time_grid
    out = [Target(HEAT, nd.id, t) for nd in instance.heat.nodes for t in range(g.n_h)]
    out += [Target(ELECTRICITY, b.id, t) for b in instance.electric.buses for t in range(g.n_e)]
    for nd in instance.heat.nodes:
        for side in (SUPPLY, RETURN):
            if nd.requirement(side) is not None:
                out += [Target(GRADE, nd.id, t, side) for t in range(g.n_h)]
    return sorted(out)


def parse_target_filter(text: str) -> tuple[str, str]:
    """``node:1`` / ``bus:3`` / ``grade:4`` -> (market, location)."""
    kind, _, loc = text.partition(":")
    market = {"node": HEAT, "bus": ELECTRICITY, "grade": GRADE}.get(kind)
    if market is None or not loc:
        raise ValueError(f"bad target {text!r}; expected node:<id>, bus:<id> or grade:<id>")
    return market, loc


def oracle_sweep(instance: Instance, *, targets: Optional[Iterable[Target]] = None, eps: float = 1e-2,
                 base: Optional[DispatchSolution] = None, schedule: Optional[PriceSchedule] = None,
                 rel_tol: float = 1e-3, price_scale: float = 1.0) -> list[OracleResult]:
    """Oracle at every target, sorted. ``price_scale`` multiplies the posted
    prices before comparison; it exists to inject faults in tests."""
    if base is None:
        base = _solve_quiet(instance, 1e-10)
    if schedule is None:
        schedule = compute_prices(base, instance)
    if price_scale != 1.0:
        schedule = dataclasses.replace(
            schedule, heat_energy=schedule.heat_energy * price_scale,
            grade_supply=schedule.grade_supply * price_scale, grade_return=schedule.grade_return * price_scale,
            electricity=schedule.electricity * price_scale)
    out = []
    for tg in sorted(all_targets(instance) if targets is None else targets):
        try:
            out.append(price_oracle(instance, tg, eps, base=base, schedule=schedule, rel_tol=rel_tol))
        except ActiveSetChanged as exc:
            log.info("oracle inconclusive: %s", exc)
            p = posted_price(schedule, tg)
            out.append(OracleResult(tg, p, None, eps, price_tolerance(p, rel_tol)))
    return out


# ---------------------------------------------------------------------------
# independent formulation


@dataclass
class IndependentSolution:
    objective: float
    gp: dict  # unit -> (n_e,)
    gh: dict  # unit -> (n_h,)
    temps: dict  # (node, side) -> (n_h,)
    heat_price: dict  # node -> (n_h,) $/MWh
    grade_price: dict  # (node, side) -> (n_h,) $/(degC h)
    electricity_price: dict  # bus -> (n_e,) $/MWh


def independent_solve(instance: Instance, solver: str = "CLARABEL") -> IndependentSolution:
    """Solve the dispatch with cvxpy, written from the scalar equations."""
    import cvxpy as cp

    g = instance.time_grid
    net, en = instance.heat, instance.electric
    c = instance.specific_heat / 1e6
    ratio = g.ratio
    gp = {u.id: cp.Variable(g.n_e) for u in instance.units if u.has_electric}
    gh = {u.id: cp.Variable(g.n_h) for u in instance.units if u.has_heat}
    temp = {(nd.id, s): cp.Variable(g.n_h) for nd in net.nodes for s in (SUPPLY, RETURN)}
    ang = {b.id: cp.Variable(g.n_e) for b in en.buses}

    cost = 0
    for u in instance.units:
        e0, e1, e2, e3, e4, e5 = u.cost
        base = e0 * (g.delta_t_e * g.n_e if u.kind == PURE_ELECTRIC else g.delta_t_h * g.n_h)
        cost += base
        if u.has_heat:
            cost += g.delta_t_h * e1 * cp.sum(gh[u.id])
        if u.has_electric:
            cost += g.delta_t_e * e3 * cp.sum(gp[u.id])
        if u.has_heat and u.has_electric:
            # per heat block, the quadratic part in (p_1..p_r, h) as one PSD form
            quad = np.zeros((ratio + 1, ratio + 1))
            quad[np.arange(ratio), np.arange(ratio)] = g.delta_t_e * e4
            quad[:ratio, ratio] = quad[ratio, :ratio] = 0.5 * g.delta_t_e * e5
            quad[ratio, ratio] = g.delta_t_h * e2
            for t in range(g.n_h):
                z = cp.hstack([gp[u.id][t * ratio:(t + 1) * ratio], gh[u.id][t:t + 1]])
                cost += cp.quad_form(z, cp.psd_wrap(quad))
        elif u.has_heat:
            cost += g.delta_t_h * e2 * cp.sum_squares(gh[u.id])
        elif u.has_electric:
            cost += g.delta_t_e * e4 * cp.sum_squares(gp[u.id])

    cons_heat, cons_grade, cons_power = {}, {}, {}
    cons = []
    psi = {p.id: transfer_fraction(p, g, instance.water_density) for p in net.pipelines}
    phi = {p.id: loss_factor(p, instance.specific_heat) for p in net.pipelines}
    at_node = {nd.id: [u.id for u in instance.units if u.heat_node == nd.id] for nd in net.nodes}
    for t in range(g.n_h):
        ta = net.ambient[t]
        for nd in net.nodes:
            for side in (SUPPLY, RETURN):
                mix = 0
                through = 0.0
                for p in net.pipelines:
                    if p.to_node != nd.id or p.network_side != side:
                        continue
                    src = temp[(p.from_node, side)]
                    prev = net.node(p.from_node).initial_temp(side) if t == 0 else src[t - 1]
                    tau = ((1 - psi[p.id][t]) * src[t] + psi[p.id][t] * prev - ta) * phi[p.id][t] + ta
                    mix = mix + p.mass_flow[t] * tau
                    through += p.mass_flow[t]
                own = temp[(nd.id, side)][t]
                if side == nd.balance_side:
                    m_ex = nd.exchanger_mass_flow[t]
                    other = temp[(nd.id, nd.mixing_side)][t]
                    injected = sum(gh[u][t] for u in at_node[nd.id]) if at_node[nd.id] else 0.0
                    con = injected - c * ((m_ex + through) * own - m_ex * other - mix) == nd.heat_load[t]
                    cons_heat[(nd.id, t)] = con
                else:
                    con = through * own - mix == 0
                cons.append(con)
                req = nd.requirement(side)
                if req is not None:
                    cons_grade[(nd.id, side, t)] = own >= req[t]
                    cons.append(cons_grade[(nd.id, side, t)])
                caps = [p.temp_cap for p in net.pipelines if p.temp_cap is not None and p.network_side == side
                        and nd.id in (p.from_node, p.to_node)]
                if caps:
                    cons.append(own <= min(caps))

    for t in range(g.n_e):
        if en.reference_bus is not None:
            cons.append(ang[en.reference_bus][t] == 0)
        for b in en.buses:
            out_flow = 0
            for ln in en.lines:
                if ln.from_bus == b.id:
                    out_flow = out_flow + (ang[b.id][t] - ang[ln.to_bus][t]) / ln.reactance
                elif ln.to_bus == b.id:
                    out_flow = out_flow + (ang[b.id][t] - ang[ln.from_bus][t]) / ln.reactance
            gen = sum(gp[u.id][t] for u in instance.units if u.electric_bus == b.id)
            cons_power[(b.id, t)] = gen - out_flow == b.load[t]
            cons.append(cons_power[(b.id, t)])
        for ln in en.lines:
            flow = (ang[ln.from_bus][t] - ang[ln.to_bus][t]) / ln.reactance
            cons += [flow <= ln.limit, -flow <= ln.limit]

    for u in instance.units:
        for o, k, v in u.polytope:
            if o != 0:
                for t in range(g.n_e):
                    h_term = k * gh[u.id][t // ratio] if k else 0.0
                    cons.append(o * gp[u.id][t] + h_term <= v)
            else:
                cons.append(k * gh[u.id] <= v)

    prob = cp.Problem(cp.Minimize(cost), cons)
    prob.solve(solver=solver)
    if prob.status not in (cp.OPTIMAL, cp.OPTIMAL_INACCURATE):
        raise SolveError(f"independent solve ended with status {prob.status}")
    heat_price = {nd.id: np.array([-cons_heat[(nd.id, t)].dual_value for t in range(g.n_h)]) / g.delta_t_h
                  for nd in net.nodes}
    grade = {}
    for (nid, side, t), con in cons_grade.items():
        grade.setdefault((nid, side), np.zeros(g.n_h))[t] = float(con.dual_value) / g.delta_t_h
    elec = {b.id: np.array([-cons_power[(b.id, t)].dual_value for t in range(g.n_e)]) / g.delta_t_e
            for b in en.buses}
    return IndependentSolution(
        objective=float(prob.value),
        gp={k: np.asarray(v.value).ravel() for k, v in gp.items()},
        gh={k: np.asarray(v.value).ravel() for k, v in gh.items()},
        temps={k: np.asarray(v.value).ravel() for k, v in temp.items()},
        heat_price=heat_price, grade_price=grade, electricity_price=elec,
    )


# ---------------------------------------------------------------------------
# random instances


def _pipe(pid, a, b, side, m, n_h, rng, dt_h, density, specific_heat, cap):
    length = float(rng.uniform(400.0, 3000.0))
    psi = float(rng.uniform(0.05, 0.95))
    phi = float(rng.uniform(0.95, 0.999))
    area = psi * m * dt_h * 3600.0 / (density * length)
    loss = (1.0 - phi) * specific_heat * m / length
    return Pipeline(pid, a, b, side, length, area, tuple(m for _ in range(n_h)), loss, cap)


def _heat_unit(uid, kind, node, bus, scale, rng, linear):
    e5 = 0.0 if linear else float(rng.uniform(0.0, 0.01))
    e2 = 0.0 if linear else float(rng.uniform(0.02, 0.1))
    e4 = 0.0 if linear else float(rng.uniform(0.02, 0.08))
    cost = (float(rng.uniform(10, 60)), float(rng.uniform(5, 15)), e2, float(rng.uniform(12, 25)), e4, e5)
    if kind == EXTRACTION_CONDENSING:
        poly = ((0.0, -1.0, 0.0), (1.0, -2.0 / 3.0, 35.0 * scale), (1.0, 0.75, 82.5 * scale),
                (-1.0, 0.7, -10.0 * scale))
        return GenerationUnit(uid, kind, poly, cost, electric_bus=bus, heat_node=node)
    if kind == BACK_PRESSURE:
        r = float(rng.uniform(0.6, 1.0))
        lo = float(rng.uniform(0.0, 2.0))
        poly = ((-1.0, r, 0.0), (1.0, -r, 0.0), (0.0, -1.0, -lo), (0.0, 1.0, 40.0 * scale))
        return GenerationUnit(uid, kind, poly, cost, electric_bus=bus, heat_node=node)
    heat_cost = (cost[0], float(rng.uniform(15, 30)), cost[2], 0.0, 0.0, 0.0)
    return GenerationUnit(uid, PURE_HEAT, ((0.0, -1.0, 0.0), (0.0, 1.0, 45.0 * scale)), heat_cost, heat_node=node)


def _draw_instance(rng: np.random.Generator) -> Instance:
    ratio = int(rng.choice([1, 2, 4]))
    n_h = int(rng.integers(1, 5))
    grid = TimeGrid(delta_t_e=1.0 / ratio, delta_t_h=1.0, n_e=n_h * ratio, n_h=n_h)
    c, rho = 4182.0, 1000.0
    linear = bool(rng.random() < 0.1)

    n_src = int(rng.integers(1, 3))
    n_load = int(rng.integers(1, 3))
    src_ids = [f"S{k + 1}" for k in range(n_src)]
    load_ids = [f"L{k + 1}" for k in range(n_load)]
    m_src = rng.uniform(30.0, 80.0, n_src)
    w = rng.dirichlet(np.ones(n_load))
    m_load = w * m_src.sum()
    ambient = float(rng.uniform(-5.0, 10.0)) + np.cumsum(rng.uniform(-1.0, 1.0, n_h))
    ambient = tuple(float(a) for a in np.round(ambient, 3))
    cap_s = float(rng.uniform(110.0, 125.0))
    cap_r = float(rng.uniform(75.0, 95.0))

    nodes = []
    for k, sid in enumerate(src_ids):
        nodes.append(HeatNode(sid, SOURCE, tuple(float(m_src[k]) for _ in range(n_h)), tuple(0.0 for _ in range(n_h)),
                              float(rng.uniform(85, 95)), float(rng.uniform(40, 50))))
    for k, lid in enumerate(load_ids):
        drop = rng.uniform(25.0, 40.0, n_h)
        load = tuple(float(v) for v in np.round(c * m_load[k] * drop / 1e6, 4))
        req = tuple(float(v) for v in np.round(rng.uniform(65.0, 75.0, n_h), 2)) if rng.random() < 0.7 else None
        nodes.append(HeatNode(lid, LOAD, tuple(float(m_load[k]) for _ in range(n_h)), load,
                              float(rng.uniform(80, 90)), float(rng.uniform(40, 50)),
                              supply_temp_requirement=req))

    pipes = []
    flow = np.cumsum(m_src)
    for k in range(n_src - 1):
        a, b = src_ids[k], src_ids[k + 1]
        pipes.append(_pipe(f"S{a}{b}", a, b, SUPPLY, float(flow[k]), n_h, rng, 1.0, rho, c, cap_s))
        pipes.append(_pipe(f"R{b}{a}", b, a, RETURN, float(flow[k]), n_h, rng, 1.0, rho, c, cap_r))
    last = src_ids[-1]
    for k, lid in enumerate(load_ids):
        pipes.append(_pipe(f"S{last}{lid}", last, lid, SUPPLY, float(m_load[k]), n_h, rng, 1.0, rho, c, cap_s))
        pipes.append(_pipe(f"R{lid}{last}", lid, last, RETURN, float(m_load[k]), n_h, rng, 1.0, rho, c, cap_r))
    heat = HeatNetwork(tuple(nodes), tuple(pipes), ambient)

    n_bus = int(rng.integers(2, 7))
    bus_ids = [str(k + 1) for k in range(n_bus)]
    profile = 1.0 + 0.2 * np.sin(np.linspace(0.0, np.pi, grid.n_e)) * rng.uniform(-1.0, 1.0)
    peak = float(rng.uniform(40.0, 120.0))
    shares = rng.dirichlet(np.ones(n_bus)) * (rng.random(n_bus) < 0.7)
    if shares.sum() == 0:
        shares[-1] = 1.0
    shares = shares / shares.sum()
    buses = tuple(Bus(b, tuple(float(v) for v in np.round(peak * shares[k] * profile, 4)))
                  for k, b in enumerate(bus_ids))
    lines = [Line(f"L{k + 1}", str(int(rng.integers(0, k + 1)) + 1), bus_ids[k + 1],
                  float(rng.uniform(0.05, 0.25)), float(rng.uniform(0.3, 1.2) * peak))
             for k in range(n_bus - 1)]
    if n_bus > 2 and rng.random() < 0.6:
        a, b = rng.choice(n_bus, size=2, replace=False)
        if not any({ln.from_bus, ln.to_bus} == {bus_ids[a], bus_ids[b]} for ln in lines):
            lines.append(Line(f"L{len(lines) + 1}", bus_ids[a], bus_ids[b], float(rng.uniform(0.05, 0.25)),
                              float(rng.uniform(0.3, 1.2) * peak)))
    electric = ElectricNetwork(buses, tuple(lines), bus_ids[0])

    total_heat = max(sum(nd.heat_load[t] for nd in nodes) for t in range(n_h))
    units = []
    kinds = [EXTRACTION_CONDENSING, BACK_PRESSURE, PURE_HEAT]
    for k, sid in enumerate(src_ids):
        kind = kinds[int(rng.integers(0, 3))]
        scale = max(0.3, 1.6 * total_heat / n_src / 45.0)
        units.append(_heat_unit(f"U{k + 1}", kind, sid, bus_ids[int(rng.integers(0, n_bus))], scale, rng, linear))
    for k in range(int(rng.integers(1, 3))):
        e4 = 0.0 if linear else float(rng.uniform(0.02, 0.1))
        cap = float(1.5 * peak)
        units.append(GenerationUnit(f"G{k + 1}", PURE_ELECTRIC, ((-1.0, 0.0, 0.0), (1.0, 0.0, cap)),
                                    (float(rng.uniform(10, 40)), 0.0, 0.0, float(rng.uniform(20, 45)), e4, 0.0),
                                    electric_bus=bus_ids[int(rng.integers(0, n_bus))]))
    return Instance(grid, heat, electric, tuple(units), c, rho)


def random_instance(rng: np.random.Generator, *, feasible: bool = True, max_tries: int = 25) -> Instance:
    """Small valid instance (<= 4 heat nodes, <= 6 buses, n_h <= 4).

    With ``feasible`` the draw is repeated until the elastic relaxation shows
    no violated rows.
    """
    last = None
    for _ in range(max_tries):
        inst = _draw_instance(rng)
        if not validate(inst).ok:
            continue
        last = inst
        if not feasible:
            return inst
        _, violation = elastic_check(build(inst))
        if violation <= 1e-6:
            return inst
    if last is None:
        raise RuntimeError("generator produced no valid instance")
    return last


# ---------------------------------------------------------------------------
# property sweep


@dataclass
class InstanceCheck:
    index: int
    status: str  # "optimal", "infeasible" or "error"
    failures: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)
    metrics: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return not self.failures


@dataclass
class SweepReport:
    seed: int
    checks: list[InstanceCheck]

    @property
    def violations(self) -> int:
        return sum(len(c.failures) for c in self.checks)

    def text(self) -> str:
        lines = [f"property sweep seed={self.seed} count={len(self.checks)}"]
        for c in self.checks:
            verdict = "PASS" if c.ok else "FAIL"
            m = " ".join(f"{k}={v:.3e}" for k, v in sorted(c.metrics.items()))
            lines.append(f"instance {c.index} rng=[{self.seed},{c.index}] status={c.status} {verdict} {m}".rstrip())
            lines += [f"  failure: {f}" for f in c.failures]
            lines += [f"  warning: {w}" for w in c.warnings]
        lines.append(f"violations={self.violations}")
        return "\n".join(lines) + "\n"


def check_instance(instance: Instance, solution: DispatchSolution, tol: float = IDENTITY_TOL) -> InstanceCheck:
    """Every module invariant on one solved instance."""
    out = InstanceCheck(index=-1, status="optimal")
    fail, m = out.failures, out.metrics
    problem = solution.problem

    def expect(name: str, value: float, limit: float = tol) -> None:
        m[name] = float(value)
        if not value <= limit:
            fail.append(f"{name}={value:.3e} exceeds {limit:.1e}")

    expect("kkt", max(kkt_report(problem, solution).values()))
    expect("duality_gap", abs(dual_objective(problem, solution) - solution.objective) / (1 + abs(solution.objective)))
    sched = compute_prices(solution, instance)
    gaps = identity_gaps(sched, instance)
    expect("price_identity", max(gaps.values()))
    rep = surplus_report(solution, sched, instance)
    expect("heat_identity", float(np.abs(rep.heat.gap).max(initial=0.0)))
    expect("heat_horizon", abs(rep.heat.horizon_direct - rep.heat.horizon_closed_form))
    expect("elec_identity", float(np.abs(rep.electricity.gap).max(initial=0.0)))
    expect("conservation", abs(rep.conservation_gap))
    m["heat_surplus"] = rep.heat.horizon_direct
    if not rep.heat_adequate:
        fail.append(f"heat surplus {rep.heat.horizon_direct:.6g} is negative")
    if not rep.electricity_adequate:
        fail.append(f"electricity surplus {rep.electricity.direct.min():.6g} is negative in some period")
    for t in rep.sign_violations:
        fail.append(f"CR or IL negative at heat period {t + 1} where its sign is asserted")
    out.warnings += rep.warnings
    sim = simulate_forward(problem.dynamics, problem.dynamics.t0, solution.gh.T)
    expect("thermal", float(np.abs(sim - solution.temps).max(initial=0.0)))
    g = instance.time_grid
    for u in instance.units:
        if u.kind == BACK_PRESSURE:
            blocks = solution.unit_gp(u.id).reshape(g.n_h, g.ratio)
            mg = sched.units[u.id].mg_e.reshape(g.n_h, g.ratio)
            expect(f"bp_gp_spread:{u.id}", float(np.ptp(blocks, axis=1).max()))
            expect(f"bp_mg_spread:{u.id}", float(np.ptp(mg, axis=1).max()))
    return out


def property_sweep(seed: int, count: int) -> SweepReport:
    checks = []
    for i in range(count):
        rng = np.random.default_rng([seed, i])
        inst = random_instance(rng)
        try:
            sol = solve(build(inst))
        except Infeasible:
            checks.append(InstanceCheck(i, "infeasible"))
            continue
        except SolveError as exc:
            checks.append(InstanceCheck(i, "error", [f"{type(exc).__name__}: {exc}"]))
            continue
        chk = check_instance(inst, sol)
        chk.index = i
        checks.append(chk)
    return SweepReport(seed, checks)
