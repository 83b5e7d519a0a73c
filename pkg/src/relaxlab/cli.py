"""Command-line entry point: ``relaxlab {check,limit,sweep,validate-theorem4,run} ...``.

Exit codes: 0 success, 1 check or assertion failure, 2 usage or config error.
Settings come from an optional TOML/JSON ``--config`` file; flags override it.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .core import RelaxLabError
from .criteria import (
    GeneratorExhausted, SamplePlan, limit_order_study, limit_residual_compare, run_all,
    validate_theorem4,
)
from .criteria.limit import sample_points
from .harness import DEFAULT_EPS, SweepConfig, persist_result, run_sweep
from .models.registry import get_preset, list_presets, smooth_field
from .solver import Grid, TimePlan, initial_state, solve_relax, write_field_csv

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
DEFAULT_SEED = 0
DEFAULT_LIMIT_TOL = 1e-5
OUTPUT_ENV = "RELAXLAB_OUTPUT_DIR"
LIMIT_CELLS = (32, 64, 128)


class UsageError(Exception):
    pass


# ------------------------------------------------------------------ config handling

def load_config(path: Optional[str]) -> dict:
    if not path:
        return {}
    p = Path(path)
    try:
        text = p.read_bytes()
    except OSError as exc:
        raise UsageError(f"cannot read config {p}: {exc}") from exc
    try:
        if p.suffix.lower() == ".json":
            return json.loads(text)
        return tomllib.loads(text.decode())
    except (ValueError, UnicodeDecodeError) as exc:
        raise UsageError(f"cannot parse config {p}: {exc}") from exc


def _parse_value(text: str):
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            pass
    low = text.lower()
    if low in ("true", "false"):
        return low == "true"
    return text


def _settings(args: argparse.Namespace, keys: Sequence[str]) -> dict:
    """Config file values overridden by any flag that was given explicitly."""
    cfg = load_config(getattr(args, "config", None))
    unknown = set(cfg) - set(keys) - {"command", "params"}
    if unknown:
        raise UsageError(f"unknown config keys: {sorted(unknown)}")
    params = dict(cfg.get("params", {}))
    for item in getattr(args, "set", None) or []:
        if "=" not in item:
            raise UsageError(f"--set expects key=value, got {item!r}")
        k, v = item.split("=", 1)
        params[k.strip()] = _parse_value(v.strip())
    if getattr(args, "tau_scale", None) is not None:
        params["tau_scale"] = args.tau_scale
    out = {k: v for k, v in cfg.items() if k in keys}
    for k in keys:
        v = getattr(args, k, None)
        if v is not None:
            out[k] = v
    out["params"] = params
    return out


def _output_dir(value: Optional[str]) -> Optional[Path]:
    value = value or os.environ.get(OUTPUT_ENV)
    return Path(value) if value else None


def _build(name: Optional[str], params: dict):
    if not name:
        raise UsageError("a model name is required")
    try:
        preset = get_preset(name)
        model, target = preset.build(params)
    except KeyError as exc:
        raise UsageError(exc.args[0]) from exc
    except (TypeError, ValueError) as exc:
        raise UsageError(f"cannot build {name!r}: {exc}") from exc
    return preset, model, target


def _write_json(out: Optional[Path], name: str, doc: dict) -> None:
    if out is None:
        return
    out.mkdir(parents=True, exist_ok=True)
    (out / name).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def _fmt(v) -> str:
    return "-" if v is None or (isinstance(v, float) and math.isnan(v)) else f"{v:.3e}"


# ------------------------------------------------------------------ commands

def cmd_check(args) -> int:
    s = _settings(args, ["model", "eps", "samples", "seed", "output"])
    preset, model, target = _build(s.get("model"), s["params"])
    eps = s.get("eps")
    eps_values = None if eps is None else tuple(np.atleast_1d(np.asarray(eps, float)).tolist())
    try:
        plan = SamplePlan(count=int(s.get("samples", 32)), seed=int(s.get("seed", DEFAULT_SEED)),
                          eps_values=eps_values)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    report = run_all(model, plan, target)
    print(f"model {s['model']}: {len(plan.states(model))} states, eps in {list(plan.eps_list(model))}")
    print(f"{'condition':>9}  {'verdict':7}  {'metric':>10}  {'tolerance':>10}  witness")
    for r in report.results:
        wit = "" if r.passed else f"U={np.round(r.witness_state, 4).tolist()} eps={r.witness_eps}"
        print(f"{r.condition:>9}  {r.verdict:7}  {_fmt(r.metric):>10}  {_fmt(r.tolerance):>10}  {wit}")
    if args.json:
        print(report.to_json())
    _write_json(_output_dir(s.get("output")), f"check-{_slug(s['model'])}.json", json.loads(report.to_json()))
    return EXIT_OK if report.all_passed else EXIT_FAIL


def _slug(name: str) -> str:
    return name.replace(":", "_")


def cmd_limit(args) -> int:
    s = _settings(args, ["model", "tol", "per_axis", "output"])
    preset, model, target = _build(s.get("model"), s["params"])
    tol = float(s.get("tol", DEFAULT_LIMIT_TOL))
    if not tol > 0:
        raise UsageError("tolerance must be positive")
    base, amp = preset.field_coefficients(model)
    fn = smooth_field(base, amp, model.dims.d)
    pts = sample_points(model.dims.d, int(s.get("per_axis", 24 if model.dims.d == 1 else 12)))
    hs = [2 * math.pi / n for n in LIMIT_CELLS]
    study = limit_order_study(model, target, fn, hs, pts)
    comp = limit_residual_compare(model, target, fn, hs[-1], pts)
    passed = comp.worst <= tol and study.converging
    print(f"model {s['model']}: limit vs target on a smooth field")
    for h, r in zip(study.hs, study.residuals):
        print(f"  h={h:.4e}  residual={r:.3e}")
    print(f"  observed orders: {[round(o, 2) for o in study.orders]}")
    print(f"  advection mismatch {[f'{v:.2e}' for v in comp.advection]}, "
          f"diffusion mismatch {[[f'{v:.2e}' for v in row] for row in comp.diffusion]}")
    print(f"  worst discrepancy {comp.worst:.3e} (tolerance {tol:.1e}): {'pass' if passed else 'fail'}")
    doc = {"schema_version": 1, "model": model.name, "tolerance": tol, "passed": passed,
           "comparison": comp.to_dict(), "study": {"hs": study.hs, "residuals": study.residuals,
                                                   "orders": study.orders, "converging": study.converging}}
    if args.json:
        print(json.dumps(doc, indent=2, sort_keys=True))
    _write_json(_output_dir(s.get("output")), f"limit-{_slug(s['model'])}.json", doc)
    return EXIT_OK if passed else EXIT_FAIL


SWEEP_KEYS = ["model", "eps", "cells", "t_end", "norm", "seed", "cfl", "scheme", "spatial", "init",
              "reference", "reference_factor", "grid_check", "timing", "slope_window", "output"]


def cmd_sweep(args) -> int:
    s = _settings(args, SWEEP_KEYS)
    if not s.get("model"):
        raise UsageError("a model name is required (positional or in the config file)")
    _build(s["model"], s["params"])
    out = _output_dir(s.pop("output", None)) or Path("relaxlab-out") / _slug(s["model"])
    try:
        cfg = SweepConfig(**{k: tuple(v) if isinstance(v, list) else v for k, v in s.items()})
    except (TypeError, ValueError) as exc:
        raise UsageError(f"invalid sweep config: {exc}") from exc
    try:
        res = run_sweep(cfg)
    except (ValueError, KeyError) as exc:
        raise UsageError(str(exc)) from exc
    persist_result(res, out)
    print(f"model {cfg.model}: reference={res.reference_kind}")
    print(f"{'eps':>10}  {'error':>10}  {'ratio':>6}")
    ratios = [None] + res.ratios
    for e, err, q in zip(res.eps, res.errors, ratios):
        print(f"{e:10.4g}  {err:10.3e}  {'' if q is None else f'{q:6.2f}'}")
    lo, hi = cfg.slope_window
    print(f"slope {res.slope:.3f} (window [{lo}, {hi}]), monotone={res.monotone}")
    if res.grid_check is not None:
        g = res.grid_check
        print(f"grid check at eps={g['eps']}: relative change {g['relative_change']:.3f}")
    if res.message:
        print(f"note: {res.message}")
    print(f"wrote {out / 'sweep.csv'} and {out / 'manifest.json'}")
    return EXIT_OK if res.passed else EXIT_FAIL


def cmd_validate(args) -> int:
    s = _settings(args, ["trials", "seed", "dims", "mutate", "output"])
    trials = int(s.get("trials", 100))
    if trials < 1:
        raise UsageError("trials must be >= 1")
    dims = s.get("dims")
    kwargs = {}
    if dims:
        try:
            kwargs["dims_list"] = [tuple(int(x) for x in str(d).split(",")) if not isinstance(d, list)
                                   else tuple(d) for d in dims]
        except ValueError as exc:
            raise UsageError(f"bad --dims entry: {exc}") from exc
        if any(len(d) != 3 for d in kwargs["dims_list"]):
            raise UsageError("--dims entries must be m,s,d")
    try:
        rep = validate_theorem4(trials=trials, seed=int(s.get("seed", DEFAULT_SEED)),
                                mutate=bool(s.get("mutate", False)), **kwargs)
    except GeneratorExhausted as exc:
        print(f"generator failure: {exc}")
        return EXIT_FAIL
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    doc = {"schema_version": 1, **rep.to_dict()}
    print(f"{len(rep.trials)} trials, pass rate {rep.pass_rate:.3f}, max z10 residual {rep.max_z10:.2e}, "
          f"{rep.wall_s:.2f} s")
    for t in rep.trials:
        if not t.passed:
            print(f"  seed {t.seed} dims {t.dims}: failed {t.failures}; witness {json.dumps(t.witness)}")
            break
    if args.json:
        print(json.dumps(doc, indent=2, sort_keys=True))
    _write_json(_output_dir(s.get("output")), "theorem4.json", doc)
    return EXIT_OK if rep.all_passed else EXIT_FAIL


def cmd_run(args) -> int:
    s = _settings(args, ["model", "eps", "cells", "t_end", "cfl", "scheme", "spatial", "init",
                         "snapshot_every", "output"])
    preset, model, target = _build(s.get("model"), s["params"])
    d = model.dims.d
    try:
        eps = float(s.get("eps", 0.05))
        if not 0 < eps <= model.eps_max:
            raise ValueError(f"eps must lie in (0, {model.eps_max:.4g}]")
        grid = Grid.uniform(d, int(s.get("cells", 256 if d == 1 else 128)))
        plan = TimePlan(float(s.get("t_end", 0.1)), float(s.get("cfl", 0.9)),
                        s.get("scheme", "ars233"), s.get("spatial", "central4"))
        base, amp = preset.field_coefficients(model)
        init = initial_state(model, grid, smooth_field(base, amp, d)(grid.coords()), eps,
                             s.get("init", "well-prepared"))
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    every = int(s.get("snapshot_every", 0))
    sol = solve_relax(model, init, eps, plan, snapshot_every=every)
    out = _output_dir(s.get("output")) or Path("relaxlab-out") / f"run-{_slug(model.name)}"
    labels = [f"u{i}" for i in range(model.dims.m)] + [f"w{i}" for i in range(model.dims.r)]
    write_field_csv(sol.field, out / "final.csv", labels)
    for k, (t, snap) in enumerate(sol.snapshots):
        write_field_csv(snap, out / f"snapshot_{k:04d}.csv", labels)
    doc = {"schema_version": 1, "model": model.name, "eps": eps, "t": sol.t, "steps": sol.steps,
           "dt_min": sol.dt_min, "dt_max": sol.dt_max, "cells": list(grid.cells),
           "scheme": plan.scheme, "spatial": plan.spatial, "diagnostics": sol.diagnostics,
           "snapshot_times": [t for t, _ in sol.snapshots]}
    _write_json(out, "run.json", doc)
    print(f"model {s['model']}: {sol.steps} steps to t={sol.t:.4g}, "
          f"max|w - eps w1| = {sol.diagnostics['w_minus_eps_w1']:.3e}, "
          f"mass drift = {sol.diagnostics['mass_drift']:.2e}; wrote {out}")
    return EXIT_OK


# ------------------------------------------------------------------ parser

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="relaxlab", description="Verification lab for relaxation systems.")
    p.add_argument("--list", action="store_true", help="list model presets and exit")
    sub = p.add_subparsers(dest="command")

    def common(sp, model=True):
        if model:
            sp.add_argument("model", nargs="?", help="model preset, e.g. cde1d or lbe-d2q5:nonlinear")
        sp.add_argument("--config", help="TOML or JSON file with settings (flags override)")
        sp.add_argument("--seed", type=int, help=f"random seed (default {DEFAULT_SEED})")
        sp.add_argument("--output", help=f"output directory (default ${OUTPUT_ENV})")
        sp.add_argument("--json", action="store_true", help="also print the JSON report")
        if model:
            sp.add_argument("--set", action="append", metavar="KEY=VALUE", help="model parameter override")
            sp.add_argument("--tau-scale", type=float, dest="tau_scale",
                            help="shorthand for --set tau_scale=VALUE")

    sp = sub.add_parser("check", help="certify the structural conditions")
    common(sp)
    sp.add_argument("--eps", type=float, nargs="+", help="eps values to test (0 is always added)")
    sp.add_argument("--samples", type=int, help="number of sampled states (default 32)")
    sp.set_defaults(func=cmd_check)

    sp = sub.add_parser("limit", help="compare the formal limit with the target PDE")
    common(sp)
    sp.add_argument("--tol", type=float, help=f"discrepancy tolerance (default {DEFAULT_LIMIT_TOL})")
    sp.add_argument("--per-axis", type=int, dest="per_axis", help="sample points per axis")
    sp.set_defaults(func=cmd_limit)

    sp = sub.add_parser("sweep", help="eps-convergence study")
    common(sp)
    sp.add_argument("--eps", type=float, nargs="+", help=f"decreasing eps list (default {list(DEFAULT_EPS)})")
    sp.add_argument("--cells", type=int)
    sp.add_argument("--t-end", type=float, dest="t_end")
    sp.add_argument("--norm", choices=["Linf", "L2"])
    sp.add_argument("--cfl", type=float)
    sp.add_argument("--scheme", choices=["imex1", "imex2", "ars233"])
    sp.add_argument("--spatial", choices=["central4", "llf"])
    sp.add_argument("--init", choices=["well-prepared", "zero-w"])
    sp.add_argument("--reference", choices=["auto", "exact", "numerical"])
    sp.add_argument("--reference-factor", type=int, dest="reference_factor")
    sp.add_argument("--grid-check", action="store_const", const=True, dest="grid_check")
    sp.add_argument("--timing", action="store_const", const=True, help="record wall times in sweep.csv")
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("validate-theorem4", help="randomised general hyperbolic-parabolic instances")
    common(sp, model=False)
    sp.add_argument("--trials", type=int)
    sp.add_argument("--dims", nargs="+", metavar="M,S,D")
    sp.add_argument("--mutate", action="store_const", const=True, help="flip the sign of S (negative control)")
    sp.set_defaults(func=cmd_validate)

    sp = sub.add_parser("run", help="single relaxation solve with CSV snapshots")
    common(sp)
    sp.add_argument("--eps", type=float)
    sp.add_argument("--cells", type=int)
    sp.add_argument("--t-end", type=float, dest="t_end")
    sp.add_argument("--cfl", type=float)
    sp.add_argument("--scheme", choices=["imex1", "imex2", "ars233"])
    sp.add_argument("--spatial", choices=["central4", "llf"])
    sp.add_argument("--init", choices=["well-prepared", "zero-w"])
    sp.add_argument("--snapshot-every", type=int, dest="snapshot_every")
    sp.set_defaults(func=cmd_run)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.list:
        for name in list_presets():
            print(f"{name:24s} {get_preset(name).description}")
        return EXIT_OK
    if not args.command:
        parser.print_usage()
        return EXIT_USAGE
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except RelaxLabError as exc:
        print(f"failure: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
