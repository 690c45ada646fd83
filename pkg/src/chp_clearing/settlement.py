"""Merchandising surplus of both markets, computed twice: directly from the
settlement lines, and from the multipliers through the closed forms below.

Heat, per heat period t (lambda, mu are raw multipliers, i.e. price * dt_h):

    M_H,t = CR_t + IL_t + IU_t
    CR_t  = mu_t' (T_cap - T_a,t)                          congestion rent of the caps
    IL_t  = -lambda_t' C2_t (T_{t-1} - T_a,t)              value of heat inherited from t-1
    IU_t  =  lambda_{t+1}' C2_{t+1} (T_t - T_a,t)          value of heat passed on, 0 at the end

The identity follows from stationarity in T, complementary slackness and
(C1 + C2) 1 T_a + R = 0, and needs the ambient to be one network-wide series.
Summed over the horizon the interior terms telescope:

    M_H = sum_t CR_t + IL_1 + sum_t lambda_{t+1}' C2_{t+1} 1 (T_a,t+1 - T_a,t)

Electricity, per electricity period: M_E,t = sigma_t' L_bar.

Signs: mu >= 0 gives CR_t >= 0 once T_cap >= T_a. With C2 <= 0, IL_t >= 0
needs T_{t-1} >= T_a and lambda_t >= 0 on the rows fed by delayed inflow; a
unit that co-produces heat beyond need can push heat prices negative, and
then IL_t < 0 is a legitimate outcome. Those periods are reported as
warnings instead of being asserted.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dispatch import DispatchSolution, state_caps
from .model import Instance
from .pricing import PriceSchedule, SettlementLine, all_settlements

ADEQUACY_TOL = 1e-6


@dataclass
class HeatSurplus:
    direct: np.ndarray  # (n_h,) loads paid minus units received
    cr: np.ndarray
    il: np.ndarray
    iu: np.ndarray
    drift: np.ndarray  # (n_h,) ambient-drift term between t and t+1, 0 at the end

    @property
    def decomposed(self) -> np.ndarray:
        return self.cr + self.il + self.iu

    @property
    def gap(self) -> np.ndarray:
        return self.direct - self.decomposed

    @property
    def horizon_direct(self) -> float:
        return float(self.direct.sum())

    @property
    def horizon_closed_form(self) -> float:
        return float(self.cr.sum() + self.il[0] + self.drift.sum()) if self.direct.size else 0.0


@dataclass
class ElectricitySurplus:
    direct: np.ndarray  # (n_e,)
    congestion: np.ndarray  # (n_e,) sigma' L_bar

    @property
    def gap(self) -> np.ndarray:
        return self.direct - self.congestion


@dataclass
class SurplusReport:
    heat: HeatSurplus
    electricity: ElectricitySurplus
    lines: list[SettlementLine]
    conservation_gap: float  # both markets: collected minus paid out, settlement lines vs closed forms
    sign_asserted: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=bool))  # (n_h,) CR/IL >= 0 applies
    warnings: list[str] = field(default_factory=list)

    @property
    def sign_violations(self) -> list[int]:
        """Heat periods (0-based) where CR or IL is negative although its sign is asserted."""
        bad = (self.heat.cr < -ADEQUACY_TOL) | (self.heat.il < -ADEQUACY_TOL)
        return [int(t) for t in np.flatnonzero(bad & self.sign_asserted)]

    @property
    def heat_adequate(self) -> bool:
        return self.heat.horizon_direct >= -ADEQUACY_TOL

    @property
    def electricity_adequate(self) -> bool:
        return bool(np.all(self.electricity.direct >= -ADEQUACY_TOL))


def _per_period(lines: list[SettlementLine], market: str, n: int) -> np.ndarray:
    out = np.zeros(n)
    for ln in lines:
        if ln.market == market:
            sign = 1.0 if ln.role == "load" else -1.0
            out += sign * np.asarray(ln.by_period)
    return out


def heat_surplus(solution: DispatchSolution, instance: Instance,
                 lines: list[SettlementLine]) -> HeatSurplus:
    dyn = solution.problem.dynamics
    n_h = instance.time_grid.n_h
    ta = dyn.ambient
    lam, temps = solution.lambda_h, solution.temps
    caps = state_caps(instance, dyn.states)
    cap_vec = np.zeros(dyn.n_states)
    for k, v in caps.items():
        cap_vec[k] = v
    cr, il, iu, drift = (np.zeros(n_h) for _ in range(4))
    for t in range(n_h):
        cr[t] = solution.mu[t] @ (cap_vec - ta[t])  # mu is zero where no cap applies
        prev = dyn.t0 if t == 0 else temps[t - 1]
        il[t] = -lam[t] @ dyn.c2[t] @ (prev - ta[t])
        if t + 1 < n_h:
            iu[t] = lam[t + 1] @ dyn.c2[t + 1] @ (temps[t] - ta[t])
            drift[t] = lam[t + 1] @ dyn.c2[t + 1] @ np.full(dyn.n_states, ta[t + 1] - ta[t])
    return HeatSurplus(_per_period(lines, "heat", n_h), cr, il, iu, drift)


def electricity_surplus(solution: DispatchSolution, instance: Instance,
                        lines: list[SettlementLine]) -> ElectricitySurplus:
    limits = np.array([ln.limit for ln in instance.electric.lines], dtype=float)
    congestion = solution.sigma @ limits if limits.size else np.zeros(instance.time_grid.n_e)
    return ElectricitySurplus(_per_period(lines, "electricity", instance.time_grid.n_e), congestion)


def _sign_regime(solution: DispatchSolution, instance: Instance) -> tuple[np.ndarray, list[str]]:
    """Per heat period: does the CR/IL sign argument apply? Diagnostics for periods where it does not."""
    dyn = solution.problem.dynamics
    caps = state_caps(instance, dyn.states)
    n_h = instance.time_grid.n_h
    ok = np.ones(n_h, dtype=bool)
    notes = []
    for t in range(n_h):
        ta = dyn.ambient[t]
        prev = dyn.t0 if t == 0 else solution.temps[t - 1]
        for k, (nid, side) in enumerate(dyn.states):
            for label, temp in (("inherited", prev[k]), ("dispatched", solution.temps[t, k])):
                if temp < ta - 1e-6:
                    ok[t] = False
                    notes.append(f"heat period {t + 1}: {label} temperature {nid}:{side} = {temp:.4f} "
                                 f"is below ambient {ta:.4f}")
            if k in caps and caps[k] < ta:
                ok[t] = False
                notes.append(f"heat period {t + 1}: cap of {nid}:{side} is below ambient")
        fed = np.flatnonzero(np.abs(dyn.c2[t]).sum(axis=1) > 0)
        neg = [k for k in fed if solution.lambda_h[t, k] < -ADEQUACY_TOL]
        if neg:
            ok[t] = False
            rows = ", ".join(f"{dyn.rows[k][0]}:{dyn.rows[k][1]}={solution.lambda_h[t, k]:.4g}" for k in neg)
            notes.append(f"heat period {t + 1}: negative heat multipliers ({rows}); IL sign not asserted")
    return ok, notes


def surplus_report(solution: DispatchSolution, schedule: PriceSchedule, instance: Instance) -> SurplusReport:
    lines = all_settlements(schedule, instance)
    heat = heat_surplus(solution, instance, lines)
    elec = electricity_surplus(solution, instance, lines)
    collected = sum(ln.total for ln in lines if ln.role == "load")
    paid = sum(ln.total for ln in lines if ln.role == "unit")
    closed = heat.horizon_closed_form + float(elec.congestion.sum())
    asserted, warnings = _sign_regime(solution, instance)
    return SurplusReport(heat, elec, lines, (collected - paid) - closed, asserted, warnings)
