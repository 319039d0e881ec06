"""``translab`` command line.

Exit status: 0 on success, 1 on validation failure, 2 on numerical failure.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
import warnings
from pathlib import Path

import numpy as np

from . import config as cfgmod
from . import fieldio, regularity
from .elliptic import RunLog, refine_study, solve_transmission
from .errors import ConditionError, NumericalError, TranslabError
from .fem import Grid
from .modulus import dini_integral, lemma_a2_check, psi
from .oracle import strong_form_suite
from .parabolic import solve_parabolic

log = logging.getLogger("translab")

OK, INVALID, NUMERICAL = 0, 1, 2


def _out(msg=""):
    print(msg)


def _load(args):
    cfg = cfgmod.load(args.config)
    if getattr(args, "cells", None):
        cfg.data["grid"]["cells_per_side"] = args.cells
        cfgmod.validate(cfg)
    return cfg


def _run_log(cfg, override):
    path = override or cfg["output"]["log"]
    return RunLog(path) if path else RunLog()


def cmd_solve(args):
    cfg = _load(args)
    p = cfgmod.build_problem(cfg)
    grid = Grid(p.n, cfg["grid"]["cells_per_side"])
    rl = _run_log(cfg, args.log)
    rl.write({"kind": "config", "config": cfg.effective()})
    s = cfg["solver"]
    u = solve_transmission(p, grid, tol=s["tol"], max_iter=s["max_iter"], run_log=rl, verify=s["verify"])
    out = args.out or cfg["output"]["field"]
    fieldio.write_field(out, u, cfg.effective())
    grads = args.gradients or cfg["output"]["gradients"]
    if grads:
        fieldio.write_gradients(grads, u)
    rec = rl.records[-1]
    _out(f"wrote {out}: N={grid.cells_per_side} iterations={rec['iterations']} residual={rec['residual']:.3e}")
    return OK


def cmd_parabolic(args):
    cfg = _load(args)
    p = cfgmod.build_problem(cfg, parabolic=True)
    grid = Grid(p.n, cfg["grid"]["cells_per_side"])
    rl = _run_log(cfg, args.log)
    rl.write({"kind": "config", "config": cfg.effective()})
    t, s = cfg["time"], cfg["solver"]
    f = solve_parabolic(p, grid, dt=t["dt"], scheme=t["scheme"], initial=cfgmod.initial_function(cfg),
                        t0=t["t0"], t_end=t["t_end"], snapshot_every=int(t["snapshot_every"]),
                        tol=s["tol"], verify=s["verify"], run_log=rl)
    out = args.out or cfg["output"]["field"]
    fieldio.write_field(out, f, cfg.effective())
    _out(f"wrote {out}: {f.times.size} levels, steps={f.stats['steps']} iterations={f.stats['iterations']}")
    return OK


def _analysis_settings(args, cfg_data):
    a = dict(cfgmod.DEFAULTS["analysis"])
    a.update(cfg_data.get("analysis", {}))
    for key in ("centers", "scales", "M", "min_cells", "resolution"):
        v = getattr(args, key)
        if v is not None:
            a[key] = v
    return a


def cmd_analyze(args):
    ff = fieldio.read_field(args.field)
    cfg = cfgmod.load(args.config) if args.config else cfgmod.loads(cfgmod.yaml.safe_dump(ff.config), f"{args.field}:config")
    a = _analysis_settings(args, cfg.data)
    n = ff.grid.n
    centers = cfgmod.parse_centers(a["centers"], n)
    scales = cfgmod.parse_scales(a["scales"])
    M = None if a["M"] is None else float(a["M"])
    parabolic = ff.is_time_series
    p = cfgmod.build_problem(cfg, parabolic=parabolic)
    if p.A.modulus is not None:
        modulus, msg = cfgmod.apply_policy(p.A.modulus, a["modulus_policy"], parabolic)
        if msg:
            _out(f"note: {msg}")
    else:
        modulus = None
    if parabolic:
        times = a["times"] if a["times"] is not None else [float(ff.times[-1])]
        reports = regularity.analyze_parabolic(p, ff.time_field(), centers, times, scales, M,
                                               resolution=int(a["resolution"]),
                                               time_resolution=int(a["time_resolution"]),
                                               min_cells=float(a["min_cells"]), modulus=modulus)
    else:
        reports = regularity.analyze(p, ff.field(), centers, scales, M, resolution=int(a["resolution"]),
                                     min_cells=float(a["min_cells"]), modulus=modulus)
    out = args.out or cfg["output"]["report"]
    rows = fieldio.write_report(out, reports, n, parabolic)
    _out(f"wrote {out}: {rows} rows from {len(reports)} centers")
    return OK


def cmd_oracle_check(args):
    rows = strong_form_suite(points=args.points, tol=args.tol)
    _out(f"{'oracle':<18}{'check':<14}{'max residual':>14}{'tolerance':>12}  result")
    for r in rows:
        _out(f"{r.oracle:<18}{r.check:<14}{r.max_residual:>14.3e}{r.tolerance:>12.1e}  {'PASS' if r.passed else 'FAIL'}")
    return OK if all(r.passed for r in rows) else INVALID


def cmd_modulus_check(args):
    cfg = _load(args)
    entries = list(enumerate(cfg["moduli"]))
    if cfg["problem"]["modulus"] is not None:
        entries.append(("A", cfg["problem"]["modulus"]))
    if not entries:
        _out("no moduli configured")
        return INVALID
    failed = False
    n = int(cfg["problem"]["n"])
    for key, entry in entries:
        path = ("moduli", key) if key != "A" else ("problem", "modulus")
        m = cfgmod.build_modulus(cfg, entry, *path)
        name = entry.get("name", f"modulus[{key}]")
        dini = dini_integral(m)
        verdict = "convergent" if dini.is_convergent else "DIVERGENT (not Dini)"
        _out(f"{name}: {m.to_dict()}")
        _out(f"  dini integral   {dini.value:.10g}  {verdict}")
        failed |= not dini.is_convergent
        alpha = float(entry.get("alpha_check", 3.0))
        a2 = lemma_a2_check(m, alpha)
        _out(f"  growth integral {a2.value:.10g}  alpha={alpha:g}  {'convergent' if a2.is_convergent else 'DIVERGENT'}")
        failed |= not a2.is_convergent
        rho = float(entry.get("rho", 0.5))
        _out(f"  psi(rho={rho:g}, n={n}) {psi(m, rho, n):.10g}")
        for parabolic in (False, True):
            ok, worst = cfgmod.check_rescaling(m, parabolic)
            label = "omega(r)|log r| <= 1/2" if parabolic else "omega(1) <= 1/2"
            _out(f"  {label:<24}{'ok' if ok else 'violated'} ({worst:.6g})")
    return INVALID if failed else OK


def cmd_sweep(args):
    cfg = _load(args)
    p = cfgmod.build_problem(cfg)
    res = [int(v) for v in args.resolutions.split(",")] if args.resolutions else cfg["sweep"]["resolutions"]
    exact = p.meta.get("exact")
    table = refine_study(p, res, exact=exact, tol=cfg["solver"]["tol"], verify=cfg["solver"]["verify"])
    rows = table.rows()
    _out(f"reference: {table.reference}")
    _out(f"{'h':>12}{'l2_error':>16}{'relative':>14}{'rate':>10}")
    for r in rows:
        rel = r["relative_error"]
        rate = r["rate"] if isinstance(r["rate"], str) else f"{r['rate']:.3f}"
        _out(f"{r['h']:>12.6g}{r['l2_error']:>16.6e}{(f'{rel:.4e}' if rel != '' else ''):>14}{rate:>10}")
    if args.out:
        with open(args.out, "w") as fh:
            fh.write("h,l2_error,relative_error,rate\n")
            for r in rows:
                fh.write(",".join(fieldio._fmt(r[k]) if r[k] != "" else "" for k in ("h", "l2_error", "relative_error", "rate")) + "\n")
    return OK


def _span(values):
    v = np.asarray([x for x in values if math.isfinite(x)], dtype=float)
    return (float(v.min()), float(v.max())) if v.size else (math.nan, math.nan)


def cmd_report(args):
    lines = ["scenario,rows,case1,case2,undetermined,grad_min,grad_max,bmo_min,bmo_max,slack_min,slack_max"]
    for path in args.csv:
        _, rows = fieldio.read_report(path)
        tags = [r["case_tag"] for r in rows]
        cols = [_span(r[k] for r in rows) for k in ("grad_l_norm", "bmo_C", "slack")]
        cells = [Path(path).stem, str(len(rows)), str(tags.count("Case1")), str(tags.count("Case2")),
                 str(tags.count("undetermined"))] + [fieldio._fmt(x) for pair in cols for x in pair]
        lines.append(",".join(cells))
    text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    sys.stdout.write(text)
    return OK


def build_parser():
    ap = argparse.ArgumentParser(prog="translab", description="Transmission-problem solver and regularity harness.")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", help="elliptic solve to a field file")
    s.add_argument("--config", required=True)
    s.add_argument("--out")
    s.add_argument("--log")
    s.add_argument("--gradients")
    s.add_argument("--cells", type=int)
    s.set_defaults(func=cmd_solve)

    s = sub.add_parser("parabolic", help="time-dependent solve to a field file")
    s.add_argument("--config", required=True)
    s.add_argument("--out")
    s.add_argument("--log")
    s.add_argument("--cells", type=int)
    s.set_defaults(func=cmd_parabolic)

    s = sub.add_parser("analyze", help="dyadic regularity report of a field")
    s.add_argument("--field", required=True)
    s.add_argument("--config")
    s.add_argument("--centers")
    s.add_argument("--scales")
    s.add_argument("--M", type=float)
    s.add_argument("--min-cells", dest="min_cells", type=float)
    s.add_argument("--resolution", type=int)
    s.add_argument("--out")
    s.set_defaults(func=cmd_analyze)

    s = sub.add_parser("oracle-check", help="strong-form residual suite")
    s.add_argument("--points", type=int, default=10**6)
    s.add_argument("--tol", type=float, default=1e-10)
    s.set_defaults(func=cmd_oracle_check)

    s = sub.add_parser("modulus-check", help="Dini and growth integrals of configured moduli")
    s.add_argument("--config", required=True)
    s.set_defaults(func=cmd_modulus_check)

    s = sub.add_parser("sweep", help="resolution study")
    s.add_argument("--config", required=True)
    s.add_argument("--resolutions", help="comma-separated cells_per_side values")
    s.add_argument("--out")
    s.set_defaults(func=cmd_sweep)

    s = sub.add_parser("report", help="summarise report CSVs")
    s.add_argument("csv", nargs="+")
    s.add_argument("--out")
    s.set_defaults(func=cmd_report)
    return ap


def run(argv=None):
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return OK if exc.code == 0 else INVALID
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            return args.func(args)
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return NUMERICAL
    except (ValueError, ConditionError, TranslabError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return INVALID


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
