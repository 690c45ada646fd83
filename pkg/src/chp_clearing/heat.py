"""District-heating dynamics: node-method pipe outlets and the linear recurrence

    C1[t] @ T[t] + C2[t] @ T[t-1] + R[t] = H[t]

over heat periods. Every row is expressed in MW: the node balance rows carry
G_h - D_h on the right-hand side, the mixing rows carry zero.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import RETURN, SUPPLY, Instance, Pipeline, TimeGrid

BALANCE, MIXING = "balance", "mixing"


class PipelineTooSlow(ValueError):
    def __init__(self, pipeline_id: str, psi: float):
        super().__init__(f"pipeline {pipeline_id}: transport takes more than one heat period (psi={psi:.6g})")
        self.psi = psi


class ExcessiveLoss(ValueError):
    def __init__(self, pipeline_id: str, phi: float):
        super().__init__(f"pipeline {pipeline_id}: loss factor {phi:.6g} is not in (0, 1]")
        self.phi = phi


class SingularDynamics(np.linalg.LinAlgError):
    pass


def transfer_fraction(pipeline: Pipeline, grid: TimeGrid, density: float = 1000.0) -> np.ndarray:
    """Share of the outlet water that left the inlet during the previous heat period.

    One value per heat period (mass flow may change between periods).
    """
    m = np.asarray(pipeline.mass_flow, dtype=float)
    psi = density * pipeline.cross_section * pipeline.length / (m * grid.delta_t_h * 3600.0)
    worst = float(psi.max(initial=0.0))
    if worst > 1.0 + 1e-12:
        raise PipelineTooSlow(pipeline.id, worst)
    return np.minimum(psi, 1.0)


def loss_factor(pipeline: Pipeline, specific_heat: float = 4182.0) -> np.ndarray:
    m = np.asarray(pipeline.mass_flow, dtype=float)
    phi = 1.0 - pipeline.loss_coefficient * pipeline.length / (specific_heat * m)
    if float(phi.min(initial=1.0)) <= 0.0:
        raise ExcessiveLoss(pipeline.id, float(phi.min()))
    return phi


def pipe_outlet(psi: float, phi: float, t_now, t_prev, t_ambient):
    """Outlet temperature of a pipe given its inlet history (node method, one lag)."""
    return ((1.0 - psi) * t_now + psi * t_prev - t_ambient) * phi + t_ambient


def outlet_temperature(pipeline: Pipeline, t_now: float, t_prev: float, t_ambient: float,
                       grid: TimeGrid, period: int = 0, specific_heat: float = 4182.0,
                       density: float = 1000.0) -> float:
    psi = transfer_fraction(pipeline, grid, density)[period]
    phi = loss_factor(pipeline, specific_heat)[period]
    return float(pipe_outlet(psi, phi, t_now, t_prev, t_ambient))


@dataclass(frozen=True)
class HeatDynamicsSystem:
    """Assembled per-period recurrence.

    ``states[k]`` is the (node id, side) whose temperature is entry k of T;
    ``rows[k]`` is (node id, BALANCE|MIXING). ``injection`` maps the vector of
    heat-unit outputs onto rows; ``demand[t]`` holds D_h on balance rows, so
    H[t] = injection @ g_h[t] - demand[t].
    """

    states: tuple[tuple[str, str], ...]
    rows: tuple[tuple[str, str], ...]
    heat_unit_ids: tuple[str, ...]
    c1: np.ndarray  # (n_h, n, n)
    c2: np.ndarray  # (n_h, n, n)
    r: np.ndarray  # (n_h, n)
    injection: np.ndarray  # (n, n_units_h)
    demand: np.ndarray  # (n_h, n)
    t0: np.ndarray  # (n,)
    ambient: np.ndarray  # (n_h,)

    @property
    def n_states(self) -> int:
        return len(self.states)

    @property
    def n_periods(self) -> int:
        return self.c1.shape[0]

    def state_index(self, node_id: str, side: str) -> int:
        return self.states.index((node_id, side))

    def row_index(self, node_id: str, kind: str = BALANCE) -> int:
        return self.rows.index((node_id, kind))

    def h(self, t: int, g_h: np.ndarray) -> np.ndarray:
        return self.injection @ np.asarray(g_h, dtype=float) - self.demand[t]

    def residual(self, t: int, temps: np.ndarray, temps_prev: np.ndarray, g_h: np.ndarray) -> np.ndarray:
        return self.c1[t] @ temps + self.c2[t] @ temps_prev + self.r[t] - self.h(t, g_h)

    def dump(self) -> str:
        """Dense text dump of C1/C2/R per period, rows and columns labelled."""
        labels = [f"{n}:{s}" for n, s in self.states]
        out = []
        for t in range(self.n_periods):
            for name, mat in (("C1", self.c1[t]), ("C2", self.c2[t])):
                out.append(f"# {name} t={t + 1}")
                out.append("row\t" + "\t".join(labels))
                for (n, kind), vals in zip(self.rows, mat):
                    out.append(f"{n}:{kind}\t" + "\t".join(f"{v:.12g}" for v in vals))
            out.append(f"# R t={t + 1}")
            for (n, kind), v in zip(self.rows, self.r[t]):
                out.append(f"{n}:{kind}\t{v:.12g}")
        return "\n".join(out) + "\n"


def assemble(instance: Instance) -> HeatDynamicsSystem:
    """Build C1, C2, R and the injection map row by row from the node equations."""
    net, grid = instance.heat, instance.time_grid
    n_h = grid.n_h
    states = tuple((nd.id, side) for nd in net.nodes for side in (SUPPLY, RETURN))
    rows = tuple((nd.id, kind) for nd in net.nodes for kind in (BALANCE, MIXING))
    sidx = {s: k for k, s in enumerate(states)}
    ridx = {r: k for k, r in enumerate(rows)}
    heat_units = instance.heat_units
    n = len(states)

    c1 = np.zeros((n_h, n, n))
    c2 = np.zeros((n_h, n, n))
    r = np.zeros((n_h, n))
    demand = np.zeros((n_h, n))
    injection = np.zeros((n, len(heat_units)))
    ambient = np.asarray(net.ambient, dtype=float) if net.nodes else np.zeros(n_h)
    scale = instance.specific_heat / 1e6  # MW per (kg/s * degC)

    psi = {p.id: transfer_fraction(p, grid, instance.water_density) for p in net.pipelines}
    phi = {p.id: loss_factor(p, instance.specific_heat) for p in net.pipelines}
    inflow = {(nd.id, side): [p for p in net.pipelines if p.to_node == nd.id and p.network_side == side]
              for nd in net.nodes for side in (SUPPLY, RETURN)}

    for u_k, u in enumerate(heat_units):
        injection[ridx[(u.heat_node, BALANCE)], u_k] = 1.0

    for t in range(n_h):
        ta = ambient[t]
        for nd in net.nodes:
            for kind, side in ((BALANCE, nd.balance_side), (MIXING, nd.mixing_side)):
                row = ridx[(nd.id, kind)]
                pipes = inflow[(nd.id, side)]
                own = sidx[(nd.id, side)]
                mix_in = sum(p.mass_flow[t] for p in pipes)
                if kind == BALANCE:
                    m_ex = nd.exchanger_mass_flow[t]
                    c1[t, row, own] += scale * (m_ex + mix_in)
                    c1[t, row, sidx[(nd.id, nd.mixing_side)]] -= scale * m_ex
                    demand[t, row] = nd.heat_load[t]
                else:
                    c1[t, row, own] += scale * mix_in
                for p in pipes:
                    w = scale * p.mass_flow[t]
                    ps, ph = psi[p.id][t], phi[p.id][t]
                    src = sidx[(p.from_node, side)]
                    c1[t, row, src] -= w * ph * (1.0 - ps)
                    c2[t, row, src] -= w * ph * ps
                    r[t, row] -= w * (1.0 - ph) * ta

    t0 = np.array([net.node(nid).initial_temp(side) for nid, side in states], dtype=float)
    return HeatDynamicsSystem(
        states=states, rows=rows, heat_unit_ids=tuple(u.id for u in heat_units),
        c1=c1, c2=c2, r=r, injection=injection, demand=demand, t0=t0, ambient=ambient,
    )


def simulate_forward(system: HeatDynamicsSystem, t0: np.ndarray, g_h: np.ndarray) -> np.ndarray:
    """Step the recurrence forward from ``t0`` under heat-unit outputs ``g_h[t]``.

    Returns an (n_h, n_states) temperature trajectory.
    """
    g_h = np.asarray(g_h, dtype=float).reshape(system.n_periods, -1)
    prev = np.asarray(t0, dtype=float)
    out = np.empty((system.n_periods, system.n_states))
    for t in range(system.n_periods):
        c1 = system.c1[t]
        if np.linalg.cond(c1) > 1e12:
            raise SingularDynamics(f"C1 is singular at heat period {t + 1}")
        prev = np.linalg.solve(c1, system.h(t, g_h[t]) - system.c2[t] @ prev - system.r[t])
        out[t] = prev
    return out


def scalar_residuals(instance: Instance, t: int, temps: dict, temps_prev: dict,
                     heat_output: dict) -> dict:
    """Evaluate the node balance and mixing equations directly for heat period ``t``.

    ``temps``/``temps_prev`` map (node, side) to degC; ``heat_output`` maps node
    id to total unit heat output at the node. Residuals are in MW and keyed by
    (node, BALANCE|MIXING). Independent of :func:`assemble`; used to audit it.
    """
    net, grid = instance.heat, instance.time_grid
    c = instance.specific_heat
    ta = net.ambient[t]
    out = {}
    for nd in net.nodes:
        for kind, side in ((BALANCE, nd.balance_side), (MIXING, nd.mixing_side)):
            heat = 0.0
            through = 0.0
            for p in net.pipelines:
                if p.to_node != nd.id or p.network_side != side:
                    continue
                m = p.mass_flow[t]
                tau = outlet_temperature(p, temps[(p.from_node, side)], temps_prev[(p.from_node, side)],
                                         ta, grid, t, c, instance.water_density)
                heat -= m * tau
                through += m
            if kind == BALANCE:
                m_ex = nd.exchanger_mass_flow[t]
                heat += (m_ex + through) * temps[(nd.id, side)] - m_ex * temps[(nd.id, nd.mixing_side)]
                net_inj = heat_output.get(nd.id, 0.0) - nd.heat_load[t]
                out[(nd.id, kind)] = c * heat / 1e6 - net_inj
            else:
                heat += through * temps[(nd.id, side)]
                out[(nd.id, kind)] = c * heat / 1e6
    return out
