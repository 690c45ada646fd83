"""Author the bundled reference instance (8-bus grid, 4-node heating network).

Run from the repository root:

    python scripts/build_reference.py

Writes src/chp_clearing/data/reference.json. The data are synthetic; the
shape follows a small CHP system with an extraction-condensing unit, a
back-pressure unit, a heat-only boiler and a pure electric generator.
"""

from pathlib import Path

from chp_clearing.io import save_instance
from chp_clearing.model import (
    Bus, ElectricNetwork, GenerationUnit, HeatNetwork, HeatNode, Instance, Line, Pipeline, TimeGrid,
    validate,
)

N_E, N_H = 16, 4
OUT = Path(__file__).resolve().parents[1] / "src" / "chp_clearing" / "data" / "reference.json"


def const(v, n=N_H):
    return tuple(float(v) for _ in range(n))


def build() -> Instance:
    grid = TimeGrid(delta_t_e=0.25, delta_t_h=1.0, n_e=N_E, n_h=N_H)

    nodes = (
        HeatNode("1", "source", const(60), const(0), 86.0, 42.0,
                 supply_temp_requirement=(84.0, 84.0, 84.0, 84.0)),
        HeatNode("2", "source", const(50), const(0), 86.0, 42.0),
        HeatNode("3", "source", const(50), const(0), 86.0, 42.0),
        HeatNode("4", "load", const(160), (30.0, 33.0, 36.0, 32.0), 85.0, 41.0,
                 supply_temp_requirement=(80.0, 80.0, 82.0, 80.0)),
    )

    def pipe(pid, a, b, side, length, area, m, cap):
        return Pipeline(pid, a, b, side, length, area, const(m), 1.5, cap)

    pipes = (
        pipe("S12", "1", "2", "supply", 1500.0, 0.10, 60, 120.0),
        pipe("S24", "2", "4", "supply", 2500.0, 0.15, 110, 120.0),
        pipe("S34", "3", "4", "supply", 1000.0, 0.10, 50, 120.0),
        pipe("R42", "4", "2", "return", 2500.0, 0.15, 110, 90.0),
        pipe("R21", "2", "1", "return", 1500.0, 0.10, 60, 90.0),
        pipe("R43", "4", "3", "return", 1000.0, 0.10, 50, 90.0),
    )
    heat = HeatNetwork(nodes, pipes, const(5.0))

    profile = [0.80, 0.84, 0.88, 0.92, 0.96, 1.00, 1.04, 1.08,
               1.10, 1.06, 1.02, 0.98, 0.94, 0.90, 0.86, 0.82]
    base = {"1": 0.0, "2": 0.0, "3": 14.0, "4": 12.0, "5": 0.0, "6": 18.0, "7": 10.0, "8": 26.0}
    buses = tuple(Bus(b, tuple(round(v * f, 4) for f in profile)) for b, v in base.items())
    lines = (
        Line("L12", "1", "2", 0.10, 80.0),
        Line("L23", "2", "3", 0.12, 60.0),
        Line("L34", "3", "4", 0.15, 40.0),
        Line("L45", "4", "5", 0.10, 60.0),
        Line("L56", "5", "6", 0.12, 60.0),
        Line("L67", "6", "7", 0.15, 40.0),
        Line("L78", "7", "8", 0.10, 40.0),
        Line("L81", "8", "1", 0.12, 30.0),
        Line("L26", "2", "6", 0.20, 40.0),
    )
    electric = ElectricNetwork(buses, lines, "1")

    units = (
        GenerationUnit(
            "CHP1", "extraction_condensing",
            polytope=((0.0, -1.0, 0.0), (1.0, -2.0 / 3.0, 35.0), (1.0, 0.75, 82.5), (-1.0, 0.7, -10.0)),
            cost=(50.0, 8.0, 0.04, 20.0, 0.05, 0.01), electric_bus="1", heat_node="1",
        ),
        GenerationUnit(
            "CHP2", "back_pressure",
            polytope=((-1.0, 0.8, 0.0), (1.0, -0.8, 0.0), (0.0, -1.0, -2.0), (0.0, 1.0, 15.0)),
            cost=(40.0, 10.0, 0.05, 15.0, 0.04, 0.008), electric_bus="2", heat_node="2",
        ),
        GenerationUnit(
            "HB3", "pure_heat", polytope=((0.0, -1.0, 0.0), (0.0, 1.0, 20.0)),
            cost=(10.0, 25.0, 0.1, 0.0, 0.0, 0.0), heat_node="3",
        ),
        GenerationUnit(
            "G4", "pure_electric", polytope=((-1.0, 0.0, 0.0), (1.0, 0.0, 80.0)),
            cost=(30.0, 0.0, 0.0, 35.0, 0.08, 0.0), electric_bus="5",
        ),
    )
    return Instance(grid, heat, electric, units)


if __name__ == "__main__":
    inst = build()
    rep = validate(inst)
    if not rep.ok:
        raise SystemExit("\n".join(rep.messages()))
    save_instance(inst, OUT)
    print(f"wrote {OUT}")
