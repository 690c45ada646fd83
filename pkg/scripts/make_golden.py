"""Write the golden expectations for the bundled reference instance.

The values come from the independent cvxpy/Clarabel formulation, not from the
package's own solver, so tests/test_golden.py compares two routes.

    python scripts/make_golden.py
"""

import json
from importlib import resources
from pathlib import Path

from chp_clearing.io import load_instance
from chp_clearing.verification import independent_solve

OUT = Path(__file__).resolve().parents[1] / "tests" / "golden" / "reference.json"


def _round(values, digits=8):
    return [round(float(v), digits) for v in values]


def main() -> None:
    inst = load_instance(resources.files("chp_clearing") / "data" / "reference.json")
    sol = independent_solve(inst)
    doc = {
        "source": "cvxpy CLARABEL, scalar node equations",
        "objective": round(sol.objective, 8),
        "gp": {k: _round(v) for k, v in sorted(sol.gp.items())},
        "gh": {k: _round(v) for k, v in sorted(sol.gh.items())},
        "heat_price": {k: _round(v) for k, v in sorted(sol.heat_price.items())},
        "electricity_price": {k: _round(v) for k, v in sorted(sol.electricity_price.items())},
        "grade_price": {f"{n}:{s}": _round(v) for (n, s), v in sorted(sol.grade_price.items())},
    }
    OUT.parent.mkdir(parents=True, exist_ok=True)
    OUT.write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n", encoding="utf-8")
    print(f"wrote {OUT}")


if __name__ == "__main__":
    main()
