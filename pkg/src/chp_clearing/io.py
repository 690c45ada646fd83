"""Instance files: UTF-8 JSON documents with ``"format_version": 1``.

Parsing checks structure and types and reports the offending field path;
semantic checks live in :func:`chp_clearing.model.validate`.
"""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Any

from .model import (
    SPECIFIC_HEAT, WATER_DENSITY, Bus, ElectricNetwork, GenerationUnit, HeatNetwork, HeatNode, Instance,
    Line, Pipeline, TimeGrid,
)

FORMAT_VERSION = 1


class InstanceFormatError(ValueError):
    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


def _get(obj: dict, key: str, path: str, default: Any = ...):
    if not isinstance(obj, dict):
        raise InstanceFormatError(path, "expected an object")
    if key not in obj:
        if default is ...:
            raise InstanceFormatError(f"{path}.{key}" if path else key, "missing field")
        return default
    return obj[key]


def _num(v, path: str) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise InstanceFormatError(path, f"expected a number, got {type(v).__name__}")
    return float(v)


def _int(v, path: str) -> int:
    if isinstance(v, bool) or not isinstance(v, int):
        raise InstanceFormatError(path, f"expected an integer, got {type(v).__name__}")
    return v


def _str(v, path: str) -> str:
    if isinstance(v, bool) or not isinstance(v, (str, int)):
        raise InstanceFormatError(path, f"expected an id string, got {type(v).__name__}")
    return str(v)


def _series(v, path: str) -> tuple[float, ...]:
    if not isinstance(v, list):
        raise InstanceFormatError(path, "expected an array")
    return tuple(_num(x, f"{path}[{k}]") for k, x in enumerate(v))


def _list(v, path: str) -> list:
    if not isinstance(v, list):
        raise InstanceFormatError(path, "expected an array")
    return v


def parse_instance(doc: dict) -> Instance:
    if not isinstance(doc, dict):
        raise InstanceFormatError("", "top level must be an object")
    version = _get(doc, "format_version", "")
    if version != FORMAT_VERSION:
        raise InstanceFormatError("format_version", f"unsupported version {version!r}")
    consts = _get(doc, "constants", "", {}) or {}
    specific_heat = _num(_get(consts, "specific_heat", "constants", SPECIFIC_HEAT), "constants.specific_heat")
    density = _num(_get(consts, "water_density", "constants", WATER_DENSITY), "constants.water_density")

    g = _get(doc, "time_grid", "")
    grid = TimeGrid(
        delta_t_e=_num(_get(g, "delta_t_e", "time_grid"), "time_grid.delta_t_e"),
        delta_t_h=_num(_get(g, "delta_t_h", "time_grid"), "time_grid.delta_t_h"),
        n_e=_int(_get(g, "n_e", "time_grid"), "time_grid.n_e"),
        n_h=_int(_get(g, "n_h", "time_grid"), "time_grid.n_h"),
    )
    if "horizon" in g and not math.isclose(_num(g["horizon"], "time_grid.horizon"), grid.horizon):
        raise InstanceFormatError("time_grid.horizon", f"does not equal n_h*delta_t_h={grid.horizon:g}")

    hn = _get(doc, "heat_network", "", {}) or {}
    nodes = []
    for k, nd in enumerate(_list(_get(hn, "nodes", "heat_network", []), "heat_network.nodes")):
        p = f"heat_network.nodes[{k}]"
        init = _get(nd, "initial_temps", p)
        reqs = {}
        for side in ("supply", "return"):
            key = f"{side}_temp_requirement"
            reqs[side] = _series(nd[key], f"{p}.{key}") if nd.get(key) is not None else None
        nodes.append(HeatNode(
            id=_str(_get(nd, "id", p), f"{p}.id"),
            kind=_str(_get(nd, "kind", p), f"{p}.kind"),
            exchanger_mass_flow=_series(_get(nd, "exchanger_mass_flow", p), f"{p}.exchanger_mass_flow"),
            heat_load=_series(_get(nd, "heat_load", p), f"{p}.heat_load"),
            initial_supply_temp=_num(_get(init, "supply", f"{p}.initial_temps"), f"{p}.initial_temps.supply"),
            initial_return_temp=_num(_get(init, "return", f"{p}.initial_temps"), f"{p}.initial_temps.return"),
            supply_temp_requirement=reqs["supply"],
            return_temp_requirement=reqs["return"],
        ))
    pipes = []
    for k, pp in enumerate(_list(_get(hn, "pipelines", "heat_network", []), "heat_network.pipelines")):
        p = f"heat_network.pipelines[{k}]"
        cap = pp.get("temp_cap") if isinstance(pp, dict) else None
        pipes.append(Pipeline(
            id=_str(_get(pp, "id", p), f"{p}.id"),
            from_node=_str(_get(pp, "from_node", p), f"{p}.from_node"),
            to_node=_str(_get(pp, "to_node", p), f"{p}.to_node"),
            network_side=_str(_get(pp, "network_side", p), f"{p}.network_side"),
            length=_num(_get(pp, "length", p), f"{p}.length"),
            cross_section=_num(_get(pp, "cross_section", p), f"{p}.cross_section"),
            mass_flow=_series(_get(pp, "mass_flow", p), f"{p}.mass_flow"),
            loss_coefficient=_num(_get(pp, "loss_coefficient", p), f"{p}.loss_coefficient"),
            temp_cap=None if cap is None else _num(cap, f"{p}.temp_cap"),
        ))
    ambient = _series(_get(hn, "ambient", "heat_network", []), "heat_network.ambient")
    heat = HeatNetwork(tuple(nodes), tuple(pipes), ambient)

    en = _get(doc, "electric_network", "", {}) or {}
    buses = tuple(
        Bus(id=_str(_get(b, "id", f"electric_network.buses[{k}]"), f"electric_network.buses[{k}].id"),
            load=_series(_get(b, "load", f"electric_network.buses[{k}]"), f"electric_network.buses[{k}].load"))
        for k, b in enumerate(_list(_get(en, "buses", "electric_network", []), "electric_network.buses"))
    )
    lines = []
    for k, ln in enumerate(_list(_get(en, "lines", "electric_network", []), "electric_network.lines")):
        p = f"electric_network.lines[{k}]"
        lines.append(Line(
            id=_str(_get(ln, "id", p), f"{p}.id"),
            from_bus=_str(_get(ln, "from_bus", p), f"{p}.from_bus"),
            to_bus=_str(_get(ln, "to_bus", p), f"{p}.to_bus"),
            reactance=_num(_get(ln, "reactance", p), f"{p}.reactance"),
            limit=_num(_get(ln, "limit", p), f"{p}.limit"),
        ))
    ref = en.get("reference_bus")
    electric = ElectricNetwork(buses, tuple(lines), None if ref is None else _str(ref, "electric_network.reference_bus"))

    units = []
    for k, u in enumerate(_list(_get(doc, "units", "", []), "units")):
        p = f"units[{k}]"
        rows = []
        for j, row in enumerate(_list(_get(u, "polytope", p), f"{p}.polytope")):
            vals = _series(row, f"{p}.polytope[{j}]")
            if len(vals) != 3:
                raise InstanceFormatError(f"{p}.polytope[{j}]", "expected [O, K, V]")
            rows.append(vals)
        bus = u.get("electric_bus") if isinstance(u, dict) else None
        node = u.get("heat_node") if isinstance(u, dict) else None
        units.append(GenerationUnit(
            id=_str(_get(u, "id", p), f"{p}.id"),
            kind=_str(_get(u, "kind", p), f"{p}.kind"),
            polytope=tuple(rows),
            cost=_series(_get(u, "cost", p), f"{p}.cost"),
            electric_bus=None if bus is None else _str(bus, f"{p}.electric_bus"),
            heat_node=None if node is None else _str(node, f"{p}.heat_node"),
        ))
    return Instance(grid, heat, electric, tuple(units), specific_heat, density)


def dump_instance(inst: Instance) -> dict:
    g = inst.time_grid
    doc: dict[str, Any] = {
        "format_version": FORMAT_VERSION,
        "constants": {"specific_heat": inst.specific_heat, "water_density": inst.water_density},
        "time_grid": {"delta_t_e": g.delta_t_e, "delta_t_h": g.delta_t_h, "n_e": g.n_e, "n_h": g.n_h,
                      "horizon": g.horizon},
    }
    nodes = []
    for nd in inst.heat.nodes:
        d = {
            "id": nd.id, "kind": nd.kind,
            "exchanger_mass_flow": list(nd.exchanger_mass_flow),
            "heat_load": list(nd.heat_load),
            "initial_temps": {"supply": nd.initial_supply_temp, "return": nd.initial_return_temp},
        }
        if nd.supply_temp_requirement is not None:
            d["supply_temp_requirement"] = list(nd.supply_temp_requirement)
        if nd.return_temp_requirement is not None:
            d["return_temp_requirement"] = list(nd.return_temp_requirement)
        nodes.append(d)
    pipes = []
    for p in inst.heat.pipelines:
        d = {"id": p.id, "from_node": p.from_node, "to_node": p.to_node, "network_side": p.network_side,
             "length": p.length, "cross_section": p.cross_section, "mass_flow": list(p.mass_flow),
             "loss_coefficient": p.loss_coefficient}
        if p.temp_cap is not None:
            d["temp_cap"] = p.temp_cap
        pipes.append(d)
    doc["heat_network"] = {"ambient": list(inst.heat.ambient), "nodes": nodes, "pipelines": pipes}
    doc["electric_network"] = {
        "reference_bus": inst.electric.reference_bus,
        "buses": [{"id": b.id, "load": list(b.load)} for b in inst.electric.buses],
        "lines": [{"id": ln.id, "from_bus": ln.from_bus, "to_bus": ln.to_bus, "reactance": ln.reactance,
                   "limit": ln.limit} for ln in inst.electric.lines],
    }
    units = []
    for u in inst.units:
        d = {"id": u.id, "kind": u.kind}
        if u.electric_bus is not None:
            d["electric_bus"] = u.electric_bus
        if u.heat_node is not None:
            d["heat_node"] = u.heat_node
        d["polytope"] = [list(r) for r in u.polytope]
        d["cost"] = list(u.cost)
        units.append(d)
    doc["units"] = units
    return doc


def loads(text: str) -> Instance:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstanceFormatError(f"line {exc.lineno} column {exc.colno}", exc.msg) from exc
    return parse_instance(doc)


def dumps(inst: Instance) -> str:
    return json.dumps(dump_instance(inst), indent=2, ensure_ascii=False) + "\n"


def load_instance(path) -> Instance:
    return loads(Path(path).read_text(encoding="utf-8"))


def save_instance(inst: Instance, path) -> None:
    Path(path).write_text(dumps(inst), encoding="utf-8")
