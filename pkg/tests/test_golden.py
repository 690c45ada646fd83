"""Reference outputs against golden values written by the independent formulation
(scripts/make_golden.py). Tolerances reflect the conic solver's accuracy."""

import json
from pathlib import Path

import numpy as np
import pytest

GOLDEN = json.loads((Path(__file__).parent / "golden" / "reference.json").read_text())
PRICE_TOL = 1e-4
DISPATCH_TOL = 1e-4


def test_objective(reference_solution):
    assert reference_solution.objective == pytest.approx(GOLDEN["objective"], rel=1e-5)


def test_dispatch(reference_solution):
    for uid, vals in GOLDEN["gp"].items():
        assert np.abs(reference_solution.unit_gp(uid) - vals).max() <= DISPATCH_TOL, uid
    for uid, vals in GOLDEN["gh"].items():
        assert np.abs(reference_solution.unit_gh(uid) - vals).max() <= DISPATCH_TOL, uid


def test_heat_prices(reference_prices):
    for nid, vals in GOLDEN["heat_price"].items():
        assert np.abs(reference_prices.heat_energy[reference_prices.node_row(nid)] - vals).max() <= PRICE_TOL, nid


def test_electricity_prices(reference_prices):
    for bid, vals in GOLDEN["electricity_price"].items():
        assert np.abs(reference_prices.electricity[reference_prices.bus_row(bid)] - vals).max() <= PRICE_TOL, bid


def test_grade_prices(reference_prices):
    for key, vals in GOLDEN["grade_price"].items():
        nid, side = key.split(":")
        got = reference_prices.grade(side)[reference_prices.node_row(nid)]
        assert np.abs(got - vals).max() <= PRICE_TOL, key
