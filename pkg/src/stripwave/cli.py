"""Command-line entry point: stripwave {solve,ode,phi,decay-fit,cutoff-test,check}.

Exit codes: 0 success, 2 configuration error, 3 solver non-convergence,
4 invariant-check failure.
"""

from __future__ import annotations

import argparse
import sys
import time
from typing import Optional

import numpy as np

from . import __version__
from .artifacts import (ArtifactError, emit_artifacts, read_field_csv,
                        resolve_output_dir, write_field_csv, write_profile_csv,
                        write_scalar_field_csv)
from .comparison import (DecayWindowError, PhiProblem, PhiSolveError,
                         fit_decay_profile, iterate_tj, make_slab, solve_phi, t_hat)
from .config import ConfigError, RunConfig, load_config, parse_config_dict
from .geometry import GeometryError, build_mask, check_connectedness
from .minimizer import SolverOptions
from .oracle import solve_heteroclinic_1d
from .potential import (DegenerateMinimumError, HypothesisViolation, build_f,
                        check_hypotheses, compute_g, linear_bound, min_eig_hess)
from .suites import cutoff_suite, max_principle_suite
from .wave import solve_standing_wave

EXIT_OK, EXIT_CONFIG, EXIT_NONCONVERGED, EXIT_INVARIANT = 0, 2, 3, 4


def split_timing(obj, prefix: str = ""):
    """Remove wall-clock entries from a nested report; return them separately."""
    timing = {}
    if isinstance(obj, dict):
        for key in list(obj):
            path = f"{prefix}.{key}" if prefix else key
            if key == "wall_time_s":
                timing[path] = obj.pop(key)
            else:
                timing.update(split_timing(obj[key], path))
    return timing


def _meta(cfg: RunConfig, command: str) -> dict:
    return {"command": command, "version": __version__,
            "numpy": np.__version__, "seed": cfg.opts.seed,
            "config_warnings": list(cfg.warnings)}


def _finish(out, report: dict, cfg: RunConfig, command: str, t0: float,
            report_name: str = "report.json", **kwargs) -> list:
    report = {"meta": _meta(cfg, command), **report}
    timing = split_timing(report)
    timing["total_wall_time_s"] = time.perf_counter() - t0
    return emit_artifacts(out, report, report_name=report_name, config=cfg,
                          timing=timing, **kwargs)


# ---------------------------------------------------------------------------
# subcommands

def cmd_solve(cfg: RunConfig, out, args) -> int:
    t0 = time.perf_counter()
    P = cfg.potential.build()
    opts = SolverOptions(tol=cfg.opts.tol, max_iter=cfg.opts.max_iter, seed=cfg.opts.seed)
    res = solve_standing_wave(P, cfg.strip.build(), cfg.grid.h, cfg.grid.T,
                              cfg.constraint.N, opts)
    rep = res.report
    body = rep.to_dict()
    flags = dict(body["invariants"])
    _finish(out, body, cfg, "solve", t0, trace=rep.energy_trace,
            fields={"solution.csv": lambda p: write_field_csv(p, res.domain, res.u)})
    status = body["existence_diagnostic"]
    print(f"solve: energy={rep.minimize.final.total:.12g} "
          f"residual={rep.residual:.3g} activity={rep.activity['total']} {status}")
    if rep.existence_diagnostic_fail:
        print("EXISTENCE-DIAGNOSTIC-FAIL: constraint still active", file=sys.stderr)
    if not rep.converged:
        return EXIT_NONCONVERGED
    flags.pop("constraint_inactive", None)
    return EXIT_OK if all(flags.values()) else EXIT_INVARIANT


def cmd_ode(cfg: RunConfig, out, args) -> int:
    t0 = time.perf_counter()
    P = cfg.potential.build()
    sol = solve_heteroclinic_1d(P, cfg.ode.T, cfg.ode.h, cfg.ode.tol)
    body = sol.to_dict()
    body["endpoints_ok"] = sol.endpoints_ok(P)
    _finish(out, body, cfg, "ode", t0, trace=sol.report.energy_trace,
            fields={"profile.csv": lambda p: write_profile_csv(p, sol.s, sol.u)})
    print(f"ode: energy={sol.energy:.12g} equipartition_defect={sol.equipartition_defect:.3g}")
    if not sol.converged:
        return EXIT_NONCONVERGED
    return EXIT_OK if body["endpoints_ok"] else EXIT_INVARIANT


def cmd_phi(cfg: RunConfig, out, args) -> int:
    t0 = time.perf_counter()
    ph = cfg.phi
    P = cfg.potential.build()
    if ph.f_mode == "linear" and ph.c2 is not None:
        f = linear_bound(ph.c2, r0=max(1.0, ph.t ** 0.5))
    else:
        f = build_f(compute_g(P), ph.f_mode)
    D = build_mask(cfg.strip.build(), ph.h, T=cfg.strip.L)
    slab = make_slab(D, 0.0)
    sol = solve_phi(PhiProblem(slab, f, ph.t))
    th = t_hat(sol)
    seq = iterate_tj(slab, f, ph.t, ph.j_max)
    strict = bool(sol.phi.max() < ph.t) if ph.t > 0 else True
    body = {
        "f_mode": f.mode, "c2": f.linear_c2, "t": ph.t, "t_hat": th,
        "ratio": th / ph.t if ph.t > 0 else None,
        "residual": sol.residual, "method": sol.method, "bounds_ok": sol.bounds_ok,
        "interior_below_t": strict,
        "t_j": seq.t, "theta": seq.theta, "theta_defect": seq.theta_defect,
        "strictly_decreasing": seq.strictly_decreasing,
    }
    _finish(out, body, cfg, "phi", t0, report_name="phi_report.json",
            fields={"phi.csv": lambda p: write_scalar_field_csv(p, D, slab.cells, sol.phi)})
    print(f"phi: t_hat/t={body['ratio']} t_j={[round(x, 6) for x in seq.t]}")
    ok = sol.bounds_ok and (seq.strictly_decreasing or f.linear_c2 == 0 or ph.t == 0)
    return EXIT_OK if ok else EXIT_INVARIANT


def cmd_decay_fit(cfg: RunConfig, out, args) -> int:
    t0 = time.perf_counter()
    P = cfg.potential.build()
    table = read_field_csv(args.field)
    if table.u.shape[1] != P.m:
        raise ConfigError("potential", f"field has {table.u.shape[1]} components, "
                                       f"potential expects {P.m}")
    sides = ("minus", "plus") if cfg.decay.side == "both" else (cfg.decay.side,)
    h = float(np.min(np.diff(np.unique(table.s))))
    lo = cfg.decay.lo if cfg.decay.lo is not None else 10 * h ** 2
    hi = cfg.decay.hi if cfg.decay.hi is not None else P.r0 / 2
    body, ok = {"field": str(args.field), "lo": lo, "hi": hi, "fits": {}}, True
    for side in sides:
        a = P.a_plus if side == "plus" else P.a_minus
        s, amp = table.column_amplitude(a)
        sel = s > 0 if side == "plus" else s < 0
        try:
            fit = fit_decay_profile(np.abs(s[sel]), amp[sel], lo, hi, side)
        except DecayWindowError as exc:
            body["fits"][side] = {"error": str(exc)}
            ok = False
            continue
        info = min_eig_hess(P, a)
        fit.k0_linear = None if info.degenerate else info.k0_candidate
        body["fits"][side] = fit.to_dict()
    _finish(out, body, cfg, "decay-fit", t0, report_name="decay.json")
    print("decay-fit: " + ", ".join(
        f"{k}: k0={v.get('k0', float('nan')):.4g}" for k, v in body["fits"].items()))
    return EXIT_OK if ok else EXIT_INVARIANT


def cmd_cutoff_test(cfg: RunConfig, out, args) -> int:
    t0 = time.perf_counter()
    cu = cfg.cutoff
    P = cfg.potential.build()
    rep = cutoff_suite(P, cu.trials, cu.identity_trials, cu.h, cu.r, cu.seed,
                       cfg.workers)
    body = rep.to_dict()
    ok = rep.passed
    if cu.max_principle_trials > 0:
        mp = max_principle_suite(P, cu.max_principle_trials, cu.h, cu.r, cu.seed,
                                 cfg.workers)
        body["max_principle"] = mp.to_dict()
        ok = ok and mp.passed
    _finish(out, body, cfg, "cutoff-test", t0, report_name="cutoff_report.json")
    print(f"cutoff-test: {'pass' if ok else 'FAIL'}")
    return EXIT_OK if ok else EXIT_INVARIANT


def cmd_check(cfg: RunConfig, out, args) -> int:
    t0 = time.perf_counter()
    P = cfg.potential.build()
    hyp = check_hypotheses(P)
    body = {"hypotheses": hyp.to_dict(), "hessian": {}}
    ok = hyp.all_pass
    for name, a in (("a_minus", P.a_minus), ("a_plus", P.a_plus)):
        info = min_eig_hess(P, a)
        body["hessian"][name] = {"mu": info.mu, "degenerate": info.degenerate,
                                 "k0_candidate": info.k0_candidate}
    try:
        rb = compute_g(P)
        f = build_f(rb, "envelope")
        body["radial_bound"] = {"g_min_positive": float(rb.g[1:].min()),
                                "f_admissible": bool(np.all(
                                    f.f_nodes <= 2 * rb.r * rb.g + 1e-15)),
                                "notes": f.notes}
        try:
            body["radial_bound"]["linear_c2"] = build_f(rb, "linear").linear_c2
        except DegenerateMinimumError as exc:
            body["radial_bound"]["linear_c2"] = None
            body["radial_bound"]["linear_note"] = str(exc)
    except HypothesisViolation as exc:
        body["radial_bound"] = {"error": str(exc)}
        ok = False
    strip = cfg.strip.build()
    geo = strip.check()
    D = build_mask(strip, cfg.grid.h, cfg.grid.T)
    geo["section_connected_at_0"] = check_connectedness(D, D.column_index(0.0))
    body["strip"] = geo
    ok = ok and geo["pass"] and geo["section_connected_at_0"]
    body["pass"] = ok
    _finish(out, body, cfg, "check", t0, report_name="check.json")
    print(f"check: {'pass' if ok else 'FAIL'}")
    return EXIT_OK if ok else EXIT_INVARIANT


COMMANDS = {
    "solve": cmd_solve, "ode": cmd_ode, "phi": cmd_phi,
    "decay-fit": cmd_decay_fit, "cutoff-test": cmd_cutoff_test, "check": cmd_check,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="stripwave", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("config", nargs="?", help="JSON config file (defaults if omitted)")
        p.add_argument("--out", help="output directory (overrides $STRIPWAVE_OUT)")
        p.add_argument("--workers", type=int, help="worker processes (default 1)")
        p.add_argument("--seed", type=int, help="override opts.seed and cutoff.seed")
        if name == "decay-fit":
            p.add_argument("--field", required=True, help="solution.csv from a solve run")
            p.add_argument("--side", choices=("plus", "minus", "both"))
        if name == "cutoff-test":
            p.add_argument("--trials", type=int)
            p.add_argument("--h", type=float)
            p.add_argument("--r", type=float)
    return parser


def _load(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else parse_config_dict({})
    raw = cfg.to_dict()
    if args.workers is not None:
        raw["workers"] = args.workers
    if args.seed is not None:
        raw["opts"]["seed"] = args.seed
        raw["cutoff"]["seed"] = args.seed
    for key in ("trials", "h", "r"):
        if getattr(args, key, None) is not None:
            raw["cutoff"][key] = getattr(args, key)
    if getattr(args, "side", None) is not None:
        raw["decay"]["side"] = args.side
    warnings = list(cfg.warnings)
    cfg = parse_config_dict(raw)
    cfg.warnings = warnings + cfg.warnings
    return cfg


def main(argv: Optional[list] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _load(args)
        for w in cfg.warnings:
            print(f"warning: {w}", file=sys.stderr)
        out = resolve_output_dir(args.out, cfg.output_dir)
        return COMMANDS[args.command](cfg, out, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except GeometryError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except PhiSolveError as exc:
        print(f"non-convergence: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGED
    except ArtifactError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
