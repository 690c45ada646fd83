from importlib import resources

import numpy as np
import pytest

from chp_clearing.dispatch import build, solve
from chp_clearing.heat import assemble, scalar_residuals
from chp_clearing.io import load_instance
from chp_clearing.model import (
    Bus, ElectricNetwork, GenerationUnit, HeatNetwork, HeatNode, Instance, Line, Pipeline, TimeGrid,
)
from chp_clearing.pricing import compute_prices
from chp_clearing.settlement import surplus_report

REFERENCE = resources.files("chp_clearing") / "data" / "reference.json"


def series(v, n):
    return tuple(float(v) for _ in range(n))


def single_bus(cost=(0.0, 0.0, 0.0, 10.0, 0.1, 0.0), load=(100.0,), dt_e=1.0, cap=500.0):
    n = len(load)
    grid = TimeGrid(dt_e, dt_e, n, n)
    unit = GenerationUnit("G", "pure_electric", ((-1.0, 0.0, 0.0), (1.0, 0.0, cap)), cost, electric_bus="1")
    return Instance(grid, HeatNetwork((), (), series(5.0, n)), ElectricNetwork((Bus("1", tuple(load)),), (), "1"), (unit,))


def two_bus(limit=40.0, load=100.0, n=1):
    """Cheap unit at bus 1, expensive at bus 2, all load at bus 2."""
    grid = TimeGrid(1.0, 1.0, n, n)
    buses = (Bus("1", series(0.0, n)), Bus("2", series(load, n)))
    lines = (Line("L12", "1", "2", 0.1, limit),)
    units = (
        GenerationUnit("A", "pure_electric", ((-1.0, 0.0, 0.0), (1.0, 0.0, 200.0)), (0.0, 0.0, 0.0, 10.0, 0.05, 0.0),
                       electric_bus="1"),
        GenerationUnit("B", "pure_electric", ((-1.0, 0.0, 0.0), (1.0, 0.0, 200.0)), (0.0, 0.0, 0.0, 30.0, 0.05, 0.0),
                       electric_bus="2"),
    )
    return Instance(grid, HeatNetwork((), (), series(5.0, n)), ElectricNetwork(buses, lines, "1"), units)


def pair_network(n_h=2, *, m=50.0, length=900.0, area=0.1, loss=0.0, load=None, ambient=5.0,
                 t_supply=80.0, t_return=40.0, req=None, cap=None, unit_max=50.0, heat_cost=(0.0, 20.0, 0.05)):
    """Source 1 feeding load 2 through one supply and one return pipe, served by a boiler."""
    load = series(5.0, n_h) if load is None else tuple(load)
    amb = series(ambient, n_h) if np.isscalar(ambient) else tuple(ambient)
    nodes = (
        HeatNode("1", "source", series(m, n_h), series(0.0, n_h), t_supply, t_return),
        HeatNode("2", "load", series(m, n_h), load, t_supply, t_return, supply_temp_requirement=req),
    )
    pipes = (
        Pipeline("S12", "1", "2", "supply", length, area, series(m, n_h), loss, cap),
        Pipeline("R21", "2", "1", "return", length, area, series(m, n_h), loss, cap),
    )
    e0, e1, e2 = heat_cost
    unit = GenerationUnit("B", "pure_heat", ((0.0, -1.0, 0.0), (0.0, 1.0, unit_max)), (e0, e1, e2, 0.0, 0.0, 0.0),
                          heat_node="1")
    grid = TimeGrid(1.0, 1.0, n_h, n_h)
    return Instance(grid, HeatNetwork(nodes, pipes, amb), ElectricNetwork((), (), None), (unit,))


def _as_dict(dyn, vec):
    return {s: float(v) for s, v in zip(dyn.states, vec)}


def scalar_vs_matrix(inst, rng, draws):
    """Largest gap between assembled rows and the scalar node equations over random states."""
    dyn = assemble(inst)
    worst = 0.0
    for _ in range(draws):
        t = int(rng.integers(inst.time_grid.n_h))
        now = rng.uniform(0.0, 120.0, dyn.n_states)
        prev = rng.uniform(0.0, 120.0, dyn.n_states)
        gh = rng.uniform(0.0, 50.0, len(dyn.heat_unit_ids))
        by_node = {}
        for uid, v in zip(dyn.heat_unit_ids, gh):
            node = inst.unit(uid).heat_node
            by_node[node] = by_node.get(node, 0.0) + float(v)
        scalar = scalar_residuals(inst, t, _as_dict(dyn, now), _as_dict(dyn, prev), by_node)
        matrix = dyn.residual(t, now, prev, gh)
        for k, row in enumerate(dyn.rows):
            worst = max(worst, abs(scalar[row] - matrix[k]))
    return worst


@pytest.fixture(scope="session")
def reference():
    return load_instance(REFERENCE)


@pytest.fixture(scope="session")
def reference_solution(reference):
    return solve(build(reference))


@pytest.fixture(scope="session")
def reference_prices(reference, reference_solution):
    return compute_prices(reference_solution, reference)


@pytest.fixture(scope="session")
def reference_surplus(reference, reference_solution, reference_prices):
    return surplus_report(reference_solution, reference_prices, reference)
