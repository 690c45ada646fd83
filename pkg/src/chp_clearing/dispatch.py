"""Asynchronous coordinated dispatch: electricity variables on the fine grid,
heat variables and temperatures on the coarse grid, one convex QP.

Constraint families and their multipliers:

    heat_balance   C1 T_t + C2 T_{t-1} + R_t = H_t         lambda_h (free)
    temp_cap       T_t <= T_sa                              mu >= 0
    temp_req       T_t >= T_Q                               beta >= 0
    power_balance  B delta_t = G_p,t - D_p,t                lambda_p (free)
    line_limit     +-F delta_t <= L                         sigma >= 0
    unit_polytope  O G_p,t + K G_h,r <= V                   gamma >= 0
    reference_angle delta_ref,t = 0

Multipliers follow L = f + lambda'(lhs - rhs) for the rows as written above,
so every price is a derivative of f* with respect to a demand.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import linprog

from .heat import BALANCE, HeatDynamicsSystem, assemble
from .model import RETURN, SUPPLY, GenerationUnit, Instance
from .qp import OPTIMAL, solve_qp

log = logging.getLogger(__name__)

EQ_FAMILIES = ("heat_balance", "reference_angle", "power_balance")
IN_FAMILIES = ("temp_cap", "temp_req", "line_limit", "unit_polytope")
BLOCKS = ("G_p", "G_h", "T", "delta")


class SolveError(RuntimeError):
    status = "error"


class Infeasible(SolveError):
    status = "infeasible"

    def __init__(self, conflicts: list, violation: float):
        names = ", ".join(str(c) for c in conflicts[:12])
        super().__init__(f"problem is infeasible (total violation {violation:.6g}); conflicting rows: {names}")
        self.conflicts = conflicts
        self.violation = violation


class Unbounded(SolveError):
    status = "unbounded"


class NumericalFailure(SolveError):
    status = "numerical_failure"

    def __init__(self, message: str, residuals: Optional[dict] = None):
        super().__init__(f"{message}; residuals={residuals}")
        self.residuals = residuals or {}


@dataclass(frozen=True)
class RowTag:
    family: str
    key: tuple
    period: int  # 0-based, on the row's own time scale
    scale: str  # "e" or "h"

    def __str__(self) -> str:
        key = ":".join(str(k) for k in self.key)
        return f"{self.family}[{key}]@{self.scale}{self.period + 1}"


@dataclass(frozen=True)
class Layout:
    e_units: tuple[str, ...]
    h_units: tuple[str, ...]
    n_states: int
    buses: tuple[str, ...]
    n_e: int
    n_h: int

    @property
    def gp0(self) -> int:
        return 0

    @property
    def gh0(self) -> int:
        return len(self.e_units) * self.n_e

    @property
    def t0(self) -> int:
        return self.gh0 + len(self.h_units) * self.n_h

    @property
    def d0(self) -> int:
        return self.t0 + self.n_states * self.n_h

    @property
    def n(self) -> int:
        return self.d0 + len(self.buses) * self.n_e

    def gp(self, u: int, t: int) -> int:
        return self.gp0 + u * self.n_e + t

    def gh(self, u: int, t: int) -> int:
        return self.gh0 + u * self.n_h + t

    def temp(self, t: int, k: int) -> int:
        return self.t0 + t * self.n_states + k

    def angle(self, b: int, t: int) -> int:
        return self.d0 + b * self.n_e + t

    def block(self, name: str) -> slice:
        return {
            "G_p": slice(self.gp0, self.gh0),
            "G_h": slice(self.gh0, self.t0),
            "T": slice(self.t0, self.d0),
            "delta": slice(self.d0, self.n),
        }[name]

    def names(self, states) -> list[str]:
        out = [f"gp_{u}_{t + 1}" for u in self.e_units for t in range(self.n_e)]
        out += [f"gh_{u}_{t + 1}" for u in self.h_units for t in range(self.n_h)]
        out += [f"T_{nd}_{side[0].upper()}_{t + 1}" for t in range(self.n_h) for nd, side in states]
        out += [f"d_{b}_{t + 1}" for b in self.buses for t in range(self.n_e)]
        return out


@dataclass
class DispatchProblem:
    instance: Instance
    dynamics: HeatDynamicsSystem
    layout: Layout
    q: np.ndarray
    c: np.ndarray
    const: float
    a_eq: np.ndarray
    b_eq: np.ndarray
    eq_tags: list[RowTag]
    g_in: np.ndarray
    h_in: np.ndarray
    in_tags: list[RowTag]

    def objective(self, x: np.ndarray) -> float:
        return float(0.5 * x @ self.q @ x + self.c @ x + self.const)

    def family_rows(self, family: str) -> np.ndarray:
        tags = self.eq_tags if family in EQ_FAMILIES else self.in_tags
        return np.array([k for k, tg in enumerate(tags) if tg.family == family], dtype=int)

    @property
    def n_vars(self) -> int:
        return self.layout.n


def state_caps(instance: Instance, states) -> dict[int, float]:
    """Temperature cap per location: the tightest cap of any pipe touching it."""
    caps: dict[int, float] = {}
    for k, (nid, side) in enumerate(states):
        vals = [p.temp_cap for p in instance.heat.pipelines
                if p.temp_cap is not None and p.network_side == side and nid in (p.from_node, p.to_node)]
        if vals:
            caps[k] = min(vals)
    return caps


def build(instance: Instance, dynamics: Optional[HeatDynamicsSystem] = None) -> DispatchProblem:
    """Assemble objective and constraint blocks of the dispatch QP."""
    if dynamics is None:
        dynamics = assemble(instance)
    grid = instance.time_grid
    n_e, n_h, de, dh = grid.n_e, grid.n_h, grid.delta_t_e, grid.delta_t_h
    e_units = instance.electric_units
    h_units = instance.heat_units
    buses = instance.electric.buses
    bidx = instance.electric.bus_index()
    lay = Layout(tuple(u.id for u in e_units), tuple(u.id for u in h_units), dynamics.n_states,
                 tuple(b.id for b in buses), n_e, n_h)
    n = lay.n
    e_pos = {u.id: k for k, u in enumerate(e_units)}
    h_pos = {u.id: k for k, u in enumerate(h_units)}

    q = np.zeros((n, n))
    c = np.zeros(n)
    const = 0.0
    for u in instance.units:
        e0, e1, e2, e3, e4, e5 = u.cost
        if u.kind == "pure_electric":
            const += e0 * de * n_e
        else:
            const += e0 * dh * n_h
        if u.has_electric:
            k = e_pos[u.id]
            for t in range(n_e):
                i = lay.gp(k, t)
                c[i] += de * e3
                q[i, i] += 2.0 * de * e4
                if u.has_heat and e5:
                    j = lay.gh(h_pos[u.id], t // grid.ratio)
                    q[i, j] += de * e5
                    q[j, i] += de * e5
        if u.has_heat:
            k = h_pos[u.id]
            for t in range(n_h):
                i = lay.gh(k, t)
                c[i] += dh * e1
                q[i, i] += 2.0 * dh * e2

    eq_rows, eq_rhs, eq_tags = [], [], []
    in_rows, in_rhs, in_tags = [], [], []

    # heat balance and mixing rows
    ns = dynamics.n_states
    for t in range(n_h):
        for r in range(ns):
            row = np.zeros(n)
            row[lay.temp(t, 0): lay.temp(t, 0) + ns] = dynamics.c1[t, r]
            rhs = -dynamics.r[t, r] - dynamics.demand[t, r]
            if t == 0:
                rhs -= dynamics.c2[t, r] @ dynamics.t0
            else:
                row[lay.temp(t - 1, 0): lay.temp(t - 1, 0) + ns] = dynamics.c2[t, r]
            for u_k in np.flatnonzero(dynamics.injection[r]):
                row[lay.gh(int(u_k), t)] -= dynamics.injection[r, u_k]
            eq_rows.append(row)
            eq_rhs.append(rhs)
            eq_tags.append(RowTag("heat_balance", dynamics.rows[r], t, "h"))

    # temperature caps and requirements
    caps = state_caps(instance, dynamics.states)
    for t in range(n_h):
        for k, (nid, side) in enumerate(dynamics.states):
            if k in caps:
                row = np.zeros(n)
                row[lay.temp(t, k)] = 1.0
                in_rows.append(row)
                in_rhs.append(caps[k])
                in_tags.append(RowTag("temp_cap", (nid, side), t, "h"))
            req = instance.heat.node(nid).requirement(side)
            if req is not None:
                row = np.zeros(n)
                row[lay.temp(t, k)] = -1.0
                in_rows.append(row)
                in_rhs.append(-req[t])
                in_tags.append(RowTag("temp_req", (nid, side), t, "h"))

    # electric network
    ref = bidx.get(instance.electric.reference_bus) if buses else None
    for t in range(n_e):
        if ref is not None:
            row = np.zeros(n)
            row[lay.angle(ref, t)] = 1.0
            eq_rows.append(row)
            eq_rhs.append(0.0)
            eq_tags.append(RowTag("reference_angle", (buses[ref].id,), t, "e"))
        for b, bus in enumerate(buses):
            row = np.zeros(n)
            for ln in instance.electric.lines:
                y = 1.0 / ln.reactance
                if ln.from_bus == bus.id:
                    other = bidx[ln.to_bus]
                elif ln.to_bus == bus.id:
                    other = bidx[ln.from_bus]
                else:
                    continue
                row[lay.angle(b, t)] += y
                row[lay.angle(other, t)] -= y
            for u in e_units:
                if u.electric_bus == bus.id:
                    row[lay.gp(e_pos[u.id], t)] -= 1.0
            eq_rows.append(row)
            eq_rhs.append(-bus.load[t])
            eq_tags.append(RowTag("power_balance", (bus.id,), t, "e"))
        for ln in instance.electric.lines:
            y = 1.0 / ln.reactance
            for sign in (1.0, -1.0):
                row = np.zeros(n)
                row[lay.angle(bidx[ln.from_bus], t)] = sign * y
                row[lay.angle(bidx[ln.to_bus], t)] = -sign * y
                in_rows.append(row)
                in_rhs.append(ln.limit)
                in_tags.append(RowTag("line_limit", (ln.id, int(sign)), t, "e"))

    # unit feasible regions
    for u in instance.units:
        for b in u.electric_rows():
            o, k_, v = u.polytope[b]
            for t in range(n_e):
                row = np.zeros(n)
                row[lay.gp(e_pos[u.id], t)] = o
                if k_:
                    row[lay.gh(h_pos[u.id], t // grid.ratio)] = k_
                in_rows.append(row)
                in_rhs.append(v)
                in_tags.append(RowTag("unit_polytope", (u.id, b), t, "e"))
        for b in u.heat_rows():
            _, k_, v = u.polytope[b]
            for t in range(n_h):
                row = np.zeros(n)
                row[lay.gh(h_pos[u.id], t)] = k_
                in_rows.append(row)
                in_rhs.append(v)
                in_tags.append(RowTag("unit_polytope", (u.id, b), t, "h"))

    def stack(rows):
        return np.array(rows, dtype=float).reshape(len(rows), n)

    return DispatchProblem(
        instance=instance, dynamics=dynamics, layout=lay, q=q, c=c, const=const,
        a_eq=stack(eq_rows), b_eq=np.array(eq_rhs, dtype=float), eq_tags=eq_tags,
        g_in=stack(in_rows), h_in=np.array(in_rhs, dtype=float), in_tags=in_tags,
    )


def unit_cost_total(instance: Instance, gp: dict, gh: dict) -> float:
    """Total generation cost evaluated term by term from unit outputs.

    ``gp[unit]`` is the electricity series (n_e), ``gh[unit]`` the heat series (n_h).
    """
    grid = instance.time_grid
    total = 0.0
    for u in instance.units:
        e0, e1, e2, e3, e4, e5 = u.cost
        if u.kind == "pure_electric":
            total += sum(e0 + e3 * p + e4 * p * p for p in gp[u.id]) * grid.delta_t_e
            continue
        total += sum(e0 + e1 * hh + e2 * hh * hh for hh in gh[u.id]) * grid.delta_t_h
        if u.has_electric:
            for t, p in enumerate(gp[u.id]):
                hh = gh[u.id][t // grid.ratio]
                total += (e3 * p + e4 * p * p + e5 * p * hh) * grid.delta_t_e
    return total


@dataclass
class DispatchSolution:
    problem: DispatchProblem
    x: np.ndarray
    y: np.ndarray
    z: np.ndarray
    objective: float
    status: str
    iterations: int
    polished: bool
    gp: np.ndarray  # (n_units_e, n_e)
    gh: np.ndarray  # (n_units_h, n_h)
    temps: np.ndarray  # (n_h, n_states)
    angles: np.ndarray  # (n_buses, n_e)
    lambda_h: np.ndarray  # (n_h, n_states) one per dynamics row
    mu: np.ndarray  # (n_h, n_states)
    beta: np.ndarray  # (n_h, n_states)
    lambda_p: np.ndarray  # (n_e, n_buses)
    sigma_pos: np.ndarray  # (n_e, n_lines)
    sigma_neg: np.ndarray
    gamma: dict = field(default_factory=dict)  # unit -> row -> array over the row's periods

    @property
    def sigma(self) -> np.ndarray:
        return self.sigma_pos + self.sigma_neg

    def unit_gp(self, unit_id: str) -> np.ndarray:
        return self.gp[self.problem.layout.e_units.index(unit_id)]

    def unit_gh(self, unit_id: str) -> np.ndarray:
        return self.gh[self.problem.layout.h_units.index(unit_id)]

    def slack(self) -> np.ndarray:
        return self.problem.h_in - self.problem.g_in @ self.x

    def binding_set(self, tol: float = 1e-7) -> frozenset:
        """Inequality rows at their bound, as tags."""
        g = self.problem.g_in
        norms = np.abs(g).max(axis=1) if g.size else np.zeros(0)
        s = self.slack() / np.where(norms > 0, norms, 1.0)
        return frozenset(self.problem.in_tags[k] for k in np.flatnonzero(s <= tol * (1 + np.abs(self.problem.h_in))))


def _decode(problem: DispatchProblem, x, y, z, objective, status, iterations, polished) -> DispatchSolution:
    lay, inst = problem.layout, problem.instance
    n_e, n_h, ns = lay.n_e, lay.n_h, lay.n_states
    gp = x[lay.block("G_p")].reshape(len(lay.e_units), n_e)
    gh = x[lay.block("G_h")].reshape(len(lay.h_units), n_h)
    temps = x[lay.block("T")].reshape(n_h, ns)
    angles = x[lay.block("delta")].reshape(len(lay.buses), n_e)
    states = problem.dynamics.states
    sidx = {s: k for k, s in enumerate(states)}
    ridx = {r: k for k, r in enumerate(problem.dynamics.rows)}
    bidx = {b: k for k, b in enumerate(lay.buses)}
    lidx = {ln.id: k for k, ln in enumerate(inst.electric.lines)}
    lam_h = np.zeros((n_h, ns))
    lam_p = np.zeros((n_e, len(lay.buses)))
    for k, tg in enumerate(problem.eq_tags):
        if tg.family == "heat_balance":
            lam_h[tg.period, ridx[tg.key]] = y[k]
        elif tg.family == "power_balance":
            lam_p[tg.period, bidx[tg.key[0]]] = y[k]
    mu = np.zeros((n_h, ns))
    beta = np.zeros((n_h, ns))
    n_l = len(inst.electric.lines)
    s_pos, s_neg = np.zeros((n_e, n_l)), np.zeros((n_e, n_l))
    gamma: dict = {u.id: {} for u in inst.units}
    for u in inst.units:
        for b in u.electric_rows():
            gamma[u.id][b] = np.zeros(n_e)
        for b in u.heat_rows():
            gamma[u.id][b] = np.zeros(n_h)
    for k, tg in enumerate(problem.in_tags):
        if tg.family == "temp_cap":
            mu[tg.period, sidx[tg.key]] = z[k]
        elif tg.family == "temp_req":
            beta[tg.period, sidx[tg.key]] = z[k]
        elif tg.family == "line_limit":
            (s_pos if tg.key[1] > 0 else s_neg)[tg.period, lidx[tg.key[0]]] = z[k]
        else:
            gamma[tg.key[0]][tg.key[1]][tg.period] = z[k]
    return DispatchSolution(
        problem=problem, x=x, y=y, z=z, objective=objective, status=status, iterations=iterations,
        polished=polished, gp=gp, gh=gh, temps=temps, angles=angles, lambda_h=lam_h, mu=mu,
        beta=beta, lambda_p=lam_p, sigma_pos=s_pos, sigma_neg=s_neg, gamma=gamma,
    )


def solve(problem: DispatchProblem, *, tol: float = 1e-10, max_iter: int = 100) -> DispatchSolution:
    """Solve to KKT optimality or raise Infeasible / Unbounded / NumericalFailure."""
    res = solve_qp(problem.q, problem.c, problem.a_eq, problem.b_eq, problem.g_in, problem.h_in,
                   tol=tol, max_iter=max_iter)
    if res.status != OPTIMAL:
        conflicts, violation = elastic_check(problem)
        if violation > 1e-6:
            raise Infeasible(conflicts, violation)
        if np.abs(res.x).max(initial=0.0) > 1e10:
            raise Unbounded("objective is unbounded below")
        raise NumericalFailure(f"interior point stopped with status {res.status}", res.residuals)
    sol = _decode(problem, res.x, res.y, res.z, problem.objective(res.x), res.status,
                  res.iterations, res.polished)
    report = kkt_report(problem, sol)
    worst = max(report.values())
    if worst > 1e-6:
        raise NumericalFailure("KKT residuals above 1e-6", report)
    log.info("dispatch solved: f*=%.10g iterations=%d polished=%s max KKT residual=%.2e",
             sol.objective, res.iterations, res.polished, worst)
    return sol


def elastic_check(problem: DispatchProblem) -> tuple[list[RowTag], float]:
    """Minimise total constraint violation (an LP, solved with HiGHS); rows
    left violated at the optimum conflict with each other."""
    n = problem.n_vars
    me, mi = problem.a_eq.shape[0], problem.g_in.shape[0]
    c = np.concatenate([np.zeros(n), np.ones(2 * me + mi)])
    a = np.hstack([problem.a_eq, np.eye(me), -np.eye(me), np.zeros((me, mi))])
    g = np.hstack([problem.g_in, np.zeros((mi, 2 * me)), -np.eye(mi)])
    bounds = [(None, None)] * n + [(0, None)] * (2 * me + mi)
    res = linprog(c, A_ub=g if mi else None, b_ub=problem.h_in if mi else None,
                  A_eq=a if me else None, b_eq=problem.b_eq if me else None, bounds=bounds, method="highs")
    if res.status != 0:
        raise NumericalFailure(f"elastic relaxation failed: {res.message}")
    e = res.x[n:]
    viol_eq = e[:me] + e[me: 2 * me]
    viol_in = e[2 * me:]
    conflicts = [problem.eq_tags[k] for k in np.flatnonzero(viol_eq > 1e-6)]
    conflicts += [problem.in_tags[k] for k in np.flatnonzero(viol_in > 1e-6)]
    return conflicts, float(e.sum())


def kkt_report(problem: DispatchProblem, solution: DispatchSolution) -> dict:
    """Per-family KKT residuals (infinity norm, rows normalised to unit infinity norm)."""
    x, y, z = solution.x, solution.y, solution.z
    lay = problem.layout
    grad = problem.q @ x + problem.c + problem.a_eq.T @ y + problem.g_in.T @ z
    scale = 1.0 + max(np.abs(problem.c).max(initial=0.0), np.abs(problem.q @ x).max(initial=0.0))
    out = {}
    for name in BLOCKS:
        out[f"stationarity:{name}"] = float(np.abs(grad[lay.block(name)]).max(initial=0.0) / scale)
    eq_norm = np.abs(problem.a_eq).max(axis=1) if problem.a_eq.size else np.zeros(0)
    eq_res = (problem.a_eq @ x - problem.b_eq) / np.where(eq_norm > 0, eq_norm, 1.0)
    for fam in EQ_FAMILIES:
        rows = problem.family_rows(fam)
        out[f"primal:{fam}"] = float(np.abs(eq_res[rows]).max(initial=0.0))
    in_norm = np.abs(problem.g_in).max(axis=1) if problem.g_in.size else np.zeros(0)
    slack = problem.h_in - problem.g_in @ x
    for fam in IN_FAMILIES:
        rows = problem.family_rows(fam)
        s = slack[rows] / np.where(in_norm[rows] > 0, in_norm[rows], 1.0)
        out[f"primal:{fam}"] = float(max(0.0, -s.min(initial=0.0)))
        out[f"dual:{fam}"] = float(max(0.0, -z[rows].min(initial=0.0)))
        out[f"complementarity:{fam}"] = float(np.abs(z[rows] * slack[rows]).max(initial=0.0) / scale)
    return out


def dual_objective(problem: DispatchProblem, solution: DispatchSolution) -> float:
    """Lagrangian dual value at the returned multipliers (equals f* under strong duality)."""
    x = solution.x
    return float(-0.5 * x @ problem.q @ x - problem.b_eq @ solution.y - problem.h_in @ solution.z
                 + problem.const)


def export_qps(problem: DispatchProblem) -> str:
    """Free-format QPS text of the assembled problem (objective constant via RHS of the N row)."""
    names = problem.layout.names(problem.dynamics.states)
    rows = []
    for prefix, tags in (("E", problem.eq_tags), ("L", problem.in_tags)):
        for k, tg in enumerate(tags):
            rows.append((prefix, f"{prefix.lower()}{k}_{_sanitize(str(tg))}"))
    eq_names = [r[1] for r in rows[: len(problem.eq_tags)]]
    in_names = [r[1] for r in rows[len(problem.eq_tags):]]
    lines = ["NAME chp_dispatch", "ROWS", " N obj"]
    lines += [f" {kind} {name}" for kind, name in rows]
    lines.append("COLUMNS")
    for j, var in enumerate(names):
        if problem.c[j]:
            lines.append(f" {var} obj {problem.c[j]:.17g}")
        for k in np.flatnonzero(problem.a_eq[:, j]):
            lines.append(f" {var} {eq_names[k]} {problem.a_eq[k, j]:.17g}")
        for k in np.flatnonzero(problem.g_in[:, j]):
            lines.append(f" {var} {in_names[k]} {problem.g_in[k, j]:.17g}")
    lines.append("RHS")
    if problem.const:
        lines.append(f" rhs obj {-problem.const:.17g}")
    for name, v in zip(eq_names, problem.b_eq):
        if v:
            lines.append(f" rhs {name} {v:.17g}")
    for name, v in zip(in_names, problem.h_in):
        if v:
            lines.append(f" rhs {name} {v:.17g}")
    lines.append("BOUNDS")
    lines += [f" FR bnd {var}" for var in names]
    lines.append("QUADOBJ")
    for i in range(len(names)):
        for j in range(i + 1):
            if problem.q[i, j]:
                lines.append(f" {names[j]} {names[i]} {problem.q[i, j]:.17g}")
    lines.append("ENDATA")
    return "\n".join(lines) + "\n"


def _sanitize(s: str) -> str:
    return "".join(ch if ch.isalnum() or ch in "_.-" else "_" for ch in s)


def read_qps(text: str) -> dict:
    """Parse the subset of QPS written by :func:`export_qps` back into dense arrays."""
    section = None
    rows: list[tuple[str, str]] = []
    cols: list[str] = []
    entries: dict[tuple[str, str], float] = {}
    rhs: dict[str, float] = {}
    quad: list[tuple[str, str, float]] = []
    for raw in text.splitlines():
        if not raw.strip():
            continue
        if not raw.startswith(" "):
            section = raw.split()[0]
            continue
        parts = raw.split()
        if section == "ROWS":
            rows.append((parts[0], parts[1]))
        elif section == "COLUMNS":
            if not cols or cols[-1] != parts[0]:
                cols.append(parts[0])
            entries[(parts[1], parts[0])] = float(parts[2])
        elif section == "RHS":
            rhs[parts[1]] = float(parts[2])
        elif section == "BOUNDS":
            if parts[2] not in cols:
                cols.append(parts[2])
        elif section == "QUADOBJ":
            quad.append((parts[0], parts[1], float(parts[2])))
    col = {name: k for k, name in enumerate(cols)}
    n = len(cols)
    eq = [r for kind, r in rows if kind == "E"]
    le = [r for kind, r in rows if kind == "L"]

    def mat(names):
        m = np.zeros((len(names), n))
        for i, r in enumerate(names):
            for j, cname in enumerate(cols):
                m[i, j] = entries.get((r, cname), 0.0)
        return m

    c = np.array([entries.get(("obj", cname), 0.0) for cname in cols])
    q = np.zeros((n, n))
    for a, b, v in quad:
        q[col[a], col[b]] = v
        q[col[b], col[a]] = v
    return {
        "columns": cols, "q": q, "c": c, "const": -rhs.get("obj", 0.0),
        "a_eq": mat(eq), "b_eq": np.array([rhs.get(r, 0.0) for r in eq]),
        "g_in": mat(le), "h_in": np.array([rhs.get(r, 0.0) for r in le]),
    }
