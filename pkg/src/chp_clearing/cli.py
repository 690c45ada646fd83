"""Command line: ``chp-market {validate,clear,verify,plotdata}``.

Exit codes: 0 success, 1 unreadable or invalid input, 2 infeasible instance,
3 an invariant or verification check failed, 4 the solver failed numerically.
Set CHP_LOG=DEBUG|INFO|WARNING to control logging on stderr.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import logging
import os
import platform
import shutil
import sys
import tempfile
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .dispatch import (
    Infeasible, NumericalFailure, SolveError, Unbounded, build, export_qps, kkt_report, solve,
)
from .heat import SingularDynamics
from .io import InstanceFormatError, dump_instance, loads
from .model import Instance, validate
from .pricing import compute_prices, identity_gaps
from .settlement import surplus_report

log = logging.getLogger("chp_clearing")

EXIT_OK, EXIT_INPUT, EXIT_INFEASIBLE, EXIT_CHECK, EXIT_NUMERIC = 0, 1, 2, 3, 4
IDENTITY_TOL = 1e-6
CLEAR_ARTIFACTS = ("solution.json", "prices.csv", "settlements.csv", "surplus.csv", "kkt.txt", "manifest.json")


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _num(v: float) -> str:
    return repr(float(v) + 0.0)  # + 0.0 folds -0.0


def _csv_text(header: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow(["" if v is None else (_num(v) if isinstance(v, (float, np.floating)) else v) for v in r])
    return buf.getvalue()


def _json_text(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def _sha256(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def write_atomic(out_dir: Path, files: dict[str, str]) -> None:
    """Write all files to a sibling temp dir, then swap it into place."""
    out_dir = out_dir.resolve()
    out_dir.parent.mkdir(parents=True, exist_ok=True)
    tmp = Path(tempfile.mkdtemp(prefix=f".{out_dir.name}.", dir=out_dir.parent))
    try:
        for name, text in files.items():
            (tmp / name).write_text(text, encoding="utf-8")
        old = None
        if out_dir.exists():
            old = out_dir.parent / f"{tmp.name}.old"
            os.replace(out_dir, old)
        os.replace(tmp, out_dir)
        if old is not None:
            shutil.rmtree(old)
    except BaseException:
        shutil.rmtree(tmp, ignore_errors=True)
        raise


def _load(path: str) -> tuple[Instance, bytes]:
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise CliError(EXIT_INPUT, f"cannot read {path}: {exc.strerror}") from exc
    try:
        inst = loads(raw.decode("utf-8"))
    except UnicodeDecodeError as exc:
        raise CliError(EXIT_INPUT, f"{path}: not UTF-8 ({exc.reason})") from exc
    except InstanceFormatError as exc:
        raise CliError(EXIT_INPUT, f"{path}: {exc}") from exc
    except (TypeError, ValueError) as exc:
        raise CliError(EXIT_INPUT, f"{path}: {exc}") from exc
    rep = validate(inst)
    if not rep.ok:
        raise CliError(EXIT_INPUT, f"{path}: invalid instance\n" + "\n".join(f"  {m}" for m in rep.messages()))
    return inst, raw


def _solve(inst: Instance):
    try:
        return solve(build(inst))
    except Infeasible as exc:
        rows = "\n".join(f"  {tag}" for tag in exc.conflicts)
        raise CliError(EXIT_INFEASIBLE, f"infeasible (total violation {exc.violation:.6g}); conflicting rows:\n{rows}") from exc
    except Unbounded as exc:
        raise CliError(EXIT_INFEASIBLE, f"unbounded: {exc}") from exc
    except (NumericalFailure, SingularDynamics) as exc:
        raise CliError(EXIT_NUMERIC, f"numerical failure: {exc}") from exc
    except SolveError as exc:
        raise CliError(EXIT_NUMERIC, str(exc)) from exc


def _manifest(command: str, config: dict, inst: Instance, raw: bytes, files: dict[str, str]) -> str:
    return _json_text({
        "tool": "chp_clearing",
        "version": __version__,
        "command": command,
        "config": config,
        "input_sha256": _sha256(raw),
        "instance": dump_instance(inst),
        "environment": {"python": platform.python_version(), "numpy": np.__version__, "scipy": scipy.__version__},
        "outputs": {name: _sha256(text.encode("utf-8")) for name, text in sorted(files.items())},
    })


# ---------------------------------------------------------------------------
# artifacts


def solution_doc(sol, inst: Instance) -> dict:
    g = inst.time_grid
    dyn = sol.problem.dynamics
    lay = sol.problem.layout
    mult: dict[str, dict] = {"heat_balance": {}, "temp_cap": {}, "temp_req": {}, "power_balance": {},
                             "line_limit": {}, "unit_polytope": {}}
    for k, (nid, kind) in enumerate(dyn.rows):
        mult["heat_balance"][f"{nid}:{kind}"] = sol.lambda_h[:, k].tolist()
    for k, (nid, side) in enumerate(dyn.states):
        mult["temp_cap"][f"{nid}:{side}"] = sol.mu[:, k].tolist()
        mult["temp_req"][f"{nid}:{side}"] = sol.beta[:, k].tolist()
    for b, bid in enumerate(lay.buses):
        mult["power_balance"][bid] = sol.lambda_p[:, b].tolist()
    for k, ln in enumerate(inst.electric.lines):
        mult["line_limit"][f"{ln.id}:+"] = sol.sigma_pos[:, k].tolist()
        mult["line_limit"][f"{ln.id}:-"] = sol.sigma_neg[:, k].tolist()
    for uid, rows in sol.gamma.items():
        for b, vals in rows.items():
            mult["unit_polytope"][f"{uid}:{b}"] = vals.tolist()
    clean = (lambda xs: [float(v) + 0.0 for v in xs])
    return {
        "status": sol.status,
        "objective": sol.objective,
        "iterations": sol.iterations,
        "polished": sol.polished,
        "time_grid": {"delta_t_e": g.delta_t_e, "delta_t_h": g.delta_t_h, "n_e": g.n_e, "n_h": g.n_h},
        "dispatch": {
            "G_p": {u: clean(sol.unit_gp(u)) for u in lay.e_units},
            "G_h": {u: clean(sol.unit_gh(u)) for u in lay.h_units},
        },
        "temperatures": {f"{nid}:{side}": clean(sol.temps[:, k]) for k, (nid, side) in enumerate(dyn.states)},
        "angles": {b: clean(sol.angles[k]) for k, b in enumerate(lay.buses)},
        "multipliers": {fam: {k: clean(v) for k, v in d.items()} for fam, d in mult.items()},
    }


def prices_csv(sched, inst: Instance) -> str:
    g = inst.time_grid
    hs, es = g.h_starts(), g.e_starts()
    rows = []
    for i, nid in enumerate(sched.node_ids):
        for t in range(g.n_h):
            rows.append(["heat", nid, t + 1, hs[t], sched.heat_energy[i, t], sched.grade_supply[i, t],
                         sched.grade_return[i, t], None, None])
    for i, bid in enumerate(sched.bus_ids):
        for t in range(g.n_e):
            rows.append(["electricity", bid, t + 1, es[t], sched.electricity[i, t], None, None, None, None])
    for u in inst.units:
        up = sched.units[u.id]
        if u.has_electric:
            for t in range(g.n_e):
                rows.append(["electricity", f"unit:{u.id}", t + 1, es[t], up.price_e[t], None, None,
                             up.mg_e[t], up.co_e[t]])
        if u.has_heat:
            for t in range(g.n_h):
                rows.append(["heat", f"unit:{u.id}", t + 1, hs[t], up.price_h[t], None, None,
                             up.mg_h[t], up.co_h[t]])
    return _csv_text(["market", "location", "period", "period_start_hours", "energy_price", "grade_S", "grade_R",
                      "MG", "CO"], rows)


def settlements_csv(lines) -> str:
    rows = [[ln.label, ln.market, ln.energy_payment, ln.grade_payment, ln.total] for ln in lines]
    return _csv_text(["participant", "market", "energy_pay", "grade_pay", "total"], rows)


def surplus_csv(rep, inst: Instance) -> str:
    g = inst.time_grid
    h = rep.heat
    rows = [["heat", t + 1, g.h_starts()[t], h.direct[t], h.cr[t], h.il[t], h.iu[t], h.gap[t]] for t in range(g.n_h)]
    e = rep.electricity
    rows += [["electricity", t + 1, g.e_starts()[t], e.direct[t], e.congestion[t], None, None, e.gap[t]]
             for t in range(g.n_e)]
    return _csv_text(["market", "period", "period_start_hours", "direct_ms", "CR", "IL", "IU", "identity_gap"], rows)


def run_checks(sol, sched, rep, inst: Instance, kkt_tol: float) -> tuple[list[str], bool]:
    """PASS/FAIL summary lines and whether all passed."""
    kkt = kkt_report(sol.problem, sol)
    gaps = identity_gaps(sched, inst)
    checks = [
        ("KKT residuals", max(kkt.values()) <= kkt_tol, f"max {max(kkt.values()):.3e} (tol {kkt_tol:.1e})"),
        ("price identity", max(gaps.values()) <= IDENTITY_TOL, f"max {max(gaps.values()):.3e}"),
        ("heat surplus identity", float(np.abs(rep.heat.gap).max(initial=0.0)) <= IDENTITY_TOL,
         f"max {float(np.abs(rep.heat.gap).max(initial=0.0)):.3e}"),
        ("electricity surplus identity", float(np.abs(rep.electricity.gap).max(initial=0.0)) <= IDENTITY_TOL,
         f"max {float(np.abs(rep.electricity.gap).max(initial=0.0)):.3e}"),
        ("settlement conservation", abs(rep.conservation_gap) <= IDENTITY_TOL, f"{rep.conservation_gap:.3e}"),
        ("heat revenue adequacy", rep.heat_adequate, f"M_H = {rep.heat.horizon_direct:.6f}"),
        ("electricity revenue adequacy", rep.electricity_adequate,
         f"min M_E,t = {float(rep.electricity.direct.min(initial=0.0)):.6g}"),
        ("CR/IL sign", not rep.sign_violations, f"violations at heat periods {[t + 1 for t in rep.sign_violations]}"
         if rep.sign_violations else "ok"),
    ]
    lines = [f"{'PASS' if ok else 'FAIL'} {name}: {detail}" for name, ok, detail in checks]
    lines += [f"WARN {w}" for w in rep.warnings]
    return lines, all(ok for _, ok, _ in checks)


# ---------------------------------------------------------------------------
# subcommands


def cmd_validate(args) -> int:
    _load(args.instance)
    print(f"{args.instance}: valid")
    return EXIT_OK


def clear_files(inst: Instance, raw: bytes, args, config: dict) -> tuple[dict[str, str], list[str], bool]:
    sol = _solve(inst)
    sched = compute_prices(sol, inst)
    rep = surplus_report(sol, sched, inst)
    summary, ok = run_checks(sol, sched, rep, inst, args.kkt_tol)
    kkt = kkt_report(sol.problem, sol)
    kkt_text = "".join(f"{k}\t{v:.6e}\n" for k, v in sorted(kkt.items()))
    kkt_text += f"max\t{max(kkt.values()):.6e}\ntolerance\t{args.kkt_tol:.1e}\n"
    files = {
        "solution.json": _json_text(solution_doc(sol, inst)),
        "prices.csv": prices_csv(sched, inst),
        "settlements.csv": settlements_csv(rep.lines),
        "surplus.csv": surplus_csv(rep, inst),
        "kkt.txt": kkt_text,
    }
    if args.export_qp:
        files["problem.qps"] = export_qps(sol.problem)
    if args.dump_dynamics:
        files["dynamics.txt"] = sol.problem.dynamics.dump()
    files["manifest.json"] = _manifest("clear", config, inst, raw, files)
    return files, summary, ok


def cmd_clear(args) -> int:
    inst, raw = _load(args.instance)
    config = {"instance": args.instance, "kkt_tol": args.kkt_tol, "export_qp": bool(args.export_qp),
              "dump_dynamics": bool(args.dump_dynamics)}
    files, summary, ok = clear_files(inst, raw, args, config)
    write_atomic(Path(args.out), files)
    for line in summary:
        print(line)
    print(f"wrote {len(files)} files to {args.out}")
    return EXIT_OK if ok else EXIT_CHECK


def cmd_verify(args) -> int:
    from .verification import ELECTRICITY, all_targets, oracle_sweep, parse_target_filter, property_sweep

    inst, raw = _load(args.instance)
    sol = _solve(inst)
    targets = all_targets(inst)
    if args.targets:
        try:
            wanted = [parse_target_filter(t) for t in args.targets]
        except ValueError as exc:
            raise CliError(EXIT_INPUT, str(exc)) from exc
        targets = [t for t in targets if (t.market, t.location) in wanted]
        if not targets:
            raise CliError(EXIT_INPUT, f"no targets match {', '.join(args.targets)}")
    results = oracle_sweep(inst, targets=targets, eps=args.eps, base=sol, rel_tol=args.price_tol,
                           price_scale=args.fault_price_scale)
    g = inst.time_grid
    rows = []
    for r in results:
        start = (g.e_starts() if r.target.market == ELECTRICITY else g.h_starts())[r.target.period]
        rows.append([r.target.label, r.target.period + 1, start, r.posted, r.oracle, r.abs_err, r.verdict])
    files = {"verification.csv": _csv_text(
        ["target", "period", "period_start_hours", "posted_price", "oracle_price", "abs_err", "verdict"], rows)}
    conclusive = [r for r in results if r.conclusive]
    failed = [r for r in conclusive if r.verdict == "FAIL"]
    rate = len(conclusive) / len(results) if results else 1.0
    summary = [f"{'PASS' if not failed else 'FAIL'} price oracle: {len(conclusive)}/{len(results)} conclusive "
               f"({100 * rate:.1f}%), {len(failed)} mismatched"]
    ok = not failed
    if args.sweep_count > 0:
        sweep = property_sweep(args.seed, args.sweep_count)
        files["sweep.txt"] = sweep.text()
        summary.append(f"{'PASS' if sweep.violations == 0 else 'FAIL'} property sweep seed={args.seed} "
                       f"count={args.sweep_count}: {sweep.violations} violations")
        ok = ok and sweep.violations == 0
    config = {"instance": args.instance, "targets": args.targets or [], "eps": args.eps, "price_tol": args.price_tol,
              "seed": args.seed, "sweep_count": args.sweep_count}
    if args.fault_price_scale != 1.0:
        config["fault_price_scale"] = args.fault_price_scale
    files["manifest.json"] = _manifest("verify", config, inst, raw, files)
    write_atomic(Path(args.out), files)
    for line in summary:
        print(line)
    return EXIT_OK if ok else EXIT_CHECK


def _read_csv(path: Path) -> list[dict]:
    with path.open(encoding="utf-8", newline="") as fh:
        return list(csv.DictReader(fh))


def plot_series(run: Path) -> str:
    needed = ("solution.json", "prices.csv", "surplus.csv")
    missing = [n for n in needed if not (run / n).is_file()]
    if missing:
        raise CliError(EXIT_INPUT, f"{run}: missing run artifacts: {', '.join(missing)}")
    doc = json.loads((run / "solution.json").read_text(encoding="utf-8"))
    g = doc["time_grid"]
    e_start = [t * g["delta_t_e"] for t in range(g["n_e"])]
    h_start = [t * g["delta_t_h"] for t in range(g["n_h"])]
    rows = []
    for uid, vals in sorted(doc["dispatch"]["G_p"].items()):
        rows += [["G_p", uid, e_start[t], v] for t, v in enumerate(vals)]
    for uid, vals in sorted(doc["dispatch"]["G_h"].items()):
        rows += [["G_h", uid, h_start[t], v] for t, v in enumerate(vals)]
    for key, vals in sorted(doc["temperatures"].items()):
        rows += [["temperature", key, h_start[t], v] for t, v in enumerate(vals)]
    for r in _read_csv(run / "prices.csv"):
        if r["location"].startswith("unit:"):
            for col, name in (("MG", "MG"), ("CO", "CO")):
                rows.append([f"{r['market']}_{name}", r["location"][5:], float(r["period_start_hours"]), float(r[col])])
            continue
        rows.append([f"{r['market']}_price", r["location"], float(r["period_start_hours"]), float(r["energy_price"])])
        if r["market"] == "heat":
            rows.append(["grade_price_supply", r["location"], float(r["period_start_hours"]), float(r["grade_S"])])
            rows.append(["grade_price_return", r["location"], float(r["period_start_hours"]), float(r["grade_R"])])
    for r in _read_csv(run / "surplus.csv"):
        start = float(r["period_start_hours"])
        rows.append([f"surplus_{r['market']}", "total", start, float(r["direct_ms"])])
        if r["market"] == "heat":
            for col in ("CR", "IL", "IU"):
                rows.append(["surplus_heat", col, start, float(r[col])])
        else:
            rows.append(["surplus_electricity", "CR", start, float(r["CR"])])
    return _csv_text(["series", "location", "period_start_hours", "value"],
                     [[s, loc, float(t), float(v)] for s, loc, t, v in rows])


def cmd_plotdata(args) -> int:
    run = Path(args.run)
    text = plot_series(run)
    out = Path(args.out) if args.out else run / "series.csv"
    tmp = out.with_name(f".{out.name}.tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, out)
    print(f"wrote {out}")
    return EXIT_OK


def parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="chp-market", description="Energy-grade double pricing for coupled CHP systems.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    v = sub.add_parser("validate", help="parse and validate an instance file")
    v.add_argument("--instance", required=True)
    v.set_defaults(func=cmd_validate)

    c = sub.add_parser("clear", help="solve, price, settle and write run artifacts")
    c.add_argument("--instance", required=True)
    c.add_argument("--out", required=True, help="output directory, replaced atomically")
    c.add_argument("--kkt-tol", type=float, default=1e-6)
    c.add_argument("--export-qp", action="store_true", help="also write problem.qps")
    c.add_argument("--dump-dynamics", action="store_true", help="also write dynamics.txt (C1, C2, R)")
    c.set_defaults(func=cmd_clear)

    f = sub.add_parser("verify", help="finite-difference price oracle and randomized property sweep")
    f.add_argument("--instance", required=True)
    f.add_argument("--out", required=True)
    f.add_argument("--targets", nargs="*", default=None, metavar="KIND:ID",
                   help="restrict the oracle to node:<id>, bus:<id> or grade:<id>")
    f.add_argument("--price-tol", type=float, default=1e-3, help="relative tolerance, floored at 1e-3 absolute")
    f.add_argument("--eps", type=float, default=1e-2, help="perturbation step in MW (or degC for grade)")
    f.add_argument("--seed", type=int, default=0)
    f.add_argument("--sweep-count", type=int, default=20, help="random instances in the property sweep; 0 skips it")
    f.add_argument("--fault-price-scale", type=float, default=1.0, help=argparse.SUPPRESS)
    f.set_defaults(func=cmd_verify)

    d = sub.add_parser("plotdata", help="long-format time series from a clear run")
    d.add_argument("--run", required=True, help="output directory of a clear run")
    d.add_argument("--out", default=None, help="defaults to <run>/series.csv")
    d.set_defaults(func=cmd_plotdata)
    return p


def main(argv=None) -> int:
    level = os.environ.get("CHP_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    args = parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
