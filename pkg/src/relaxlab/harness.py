"""Epsilon-sweep convergence studies of relaxation models against their limits."""

from __future__ import annotations

import csv
import json
import math
import platform
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .core import RelaxLabError
from .models.registry import get_preset, smooth_field
from .solver import (
    DivergenceError, Grid, GridField, TimePlan, initial_state, solve_relax, solve_target_reference,
)

SCHEMA_VERSION = 1
DEFAULT_EPS = (0.1, 0.05, 0.025, 0.0125)
SLOPE_WINDOW = (0.8, 1.3)
GRID_CHECK_TOL = 0.10


@dataclass(frozen=True)
class SweepConfig:
    model: str
    eps: tuple = DEFAULT_EPS
    cells: Optional[int] = None            # per axis; 256 in 1-D and 128 in 2-D when omitted
    t_end: float = 0.1
    norm: str = "Linf"
    seed: int = 0
    cfl: float = 0.9
    scheme: str = "ars233"
    spatial: str = "central4"
    init: str = "well-prepared"
    reference: str = "auto"                # auto | exact | numerical
    reference_factor: int = 4
    params: dict = field(default_factory=dict)
    grid_check: bool = False
    timing: bool = False
    slope_window: tuple = SLOPE_WINDOW

    def __post_init__(self):
        eps = tuple(float(e) for e in self.eps)
        object.__setattr__(self, "eps", eps)
        object.__setattr__(self, "slope_window", tuple(float(v) for v in self.slope_window))
        if len(eps) < 3:
            raise ValueError("a sweep needs at least 3 eps values")
        if any(e <= 0 for e in eps) or any(b >= a for a, b in zip(eps, eps[1:])):
            raise ValueError(f"eps values must be positive and strictly decreasing, got {eps}")
        if self.norm not in ("Linf", "L2"):
            raise ValueError(f"norm must be 'Linf' or 'L2', got {self.norm!r}")
        if self.reference not in ("auto", "exact", "numerical"):
            raise ValueError(f"unknown reference mode {self.reference!r}")
        if self.reference_factor < 1:
            raise ValueError("reference_factor must be >= 1")
        if self.init not in ("well-prepared", "zero-w"):
            raise ValueError(f"unknown initialisation {self.init!r}")
        TimePlan(self.t_end, self.cfl, self.scheme, self.spatial)      # validates the rest

    def to_dict(self) -> dict:
        out = asdict(self)
        out["eps"] = list(self.eps)
        out["slope_window"] = list(self.slope_window)
        return out


@dataclass
class SweepResult:
    config: SweepConfig
    eps: list
    errors: list
    dts: list
    steps: list
    cells: list
    wall_ms: list
    slope: float = math.nan
    intercept: float = math.nan
    fit_residual: float = math.nan
    monotone: bool = False
    failed: bool = False
    message: str = ""
    reference_kind: str = ""
    diagnostics: list = field(default_factory=list)
    grid_check: Optional[dict] = None

    @property
    def ratios(self) -> list:
        return [a / b for a, b in zip(self.errors, self.errors[1:])]

    @property
    def in_window(self) -> bool:
        lo, hi = self.config.slope_window
        return bool(lo <= self.slope <= hi)

    @property
    def passed(self) -> bool:
        ok = not self.failed and self.monotone and self.in_window
        if self.grid_check is not None:
            ok = ok and self.grid_check["passed"]
        return ok

    def manifest(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "config": self.config.to_dict(),
            "seed": self.config.seed,
            "versions": {"relaxlab": __version__, "numpy": np.__version__,
                         "python": platform.python_version()},
            "reference": self.reference_kind,
            "fit": {"slope": self.slope, "intercept": self.intercept, "residual": self.fit_residual},
            "monotone": self.monotone, "in_window": self.in_window, "passed": self.passed,
            "failed": self.failed, "message": self.message,
            "rows": [{"eps": e, "error": r, "dt": dt, "steps": s, "cells": c}
                     for e, r, dt, s, c in zip(self.eps, self.errors, self.dts, self.steps, self.cells)],
            "diagnostics": self.diagnostics, "grid_check": self.grid_check,
        }


def fit_order(points: Sequence[tuple]) -> tuple[float, float, float]:
    """Least-squares fit ``log err = slope log eps + intercept``; returns (slope, intercept, rms residual)."""
    pts = np.asarray(points, float)
    if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 3:
        raise ValueError("need at least 3 (eps, error) points")
    if np.any(pts <= 0) or not np.all(np.isfinite(pts)):
        raise ValueError("eps and error values must be positive and finite")
    x, y = np.log(pts[:, 0]), np.log(pts[:, 1])
    if np.ptp(x) == 0:
        raise ValueError("degenerate fit: all eps values are identical")
    A = np.stack([x, np.ones_like(x)], axis=1)
    (slope, intercept), *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = float(np.sqrt(np.mean((A @ [slope, intercept] - y) ** 2)))
    return float(slope), float(intercept), resid


def error_norm(diff: np.ndarray, grid: Grid, norm: str) -> float:
    if norm == "Linf":
        return float(np.abs(diff).max())
    return float(np.sqrt((diff ** 2).sum() * float(np.prod(grid.spacing))))


class _Problem:
    """Model, grid, initial u and the limit solution at ``t_end`` for a sweep config."""

    def __init__(self, cfg: SweepConfig):
        self.preset = get_preset(cfg.model)
        self.model, self.target = self.preset.build(cfg.params)
        d = self.model.dims.d
        too_big = [e for e in cfg.eps if e > self.model.eps_max]
        if too_big:
            raise ValueError(f"eps {too_big} exceed eps_max={self.model.eps_max:.4g} of {self.model.name}")
        self.cells = cfg.cells or (256 if d == 1 else 128)
        base, amp = self.preset.field_coefficients(self.model)
        self.u0 = smooth_field(base, amp, d)
        self.exact = self.preset.exact_solution(self.model, cfg.params)
        if cfg.reference == "exact" and self.exact is None:
            raise RelaxLabError(f"no exact limit solution is known for {cfg.model!r}")
        self.kind = "exact" if self.exact is not None and cfg.reference != "numerical" else "numerical"
        self._fine: Optional[GridField] = None
        self.cfg = cfg

    def grid(self, cells: int) -> Grid:
        return Grid.uniform(self.model.dims.d, cells)

    def limit_at(self, grid: Grid) -> np.ndarray:
        if self.kind == "exact":
            return np.asarray(self.exact(grid.coords(), self.cfg.t_end), float)
        if self._fine is None:
            fine = self.grid(self.cells).refined(self.cfg.reference_factor)
            self._fine = solve_target_reference(self.target, GridField(fine, self.u0(fine.coords())),
                                                self.cfg.t_end)
        factor = self._fine.grid.cells[0] // grid.cells[0]
        return self._fine.restrict(factor).values

    def run(self, eps: float, cells: int):
        grid = self.grid(cells)
        cfg = self.cfg
        init = initial_state(self.model, grid, self.u0(grid.coords()), eps, cfg.init)
        plan = TimePlan(cfg.t_end, cfg.cfl, cfg.scheme, cfg.spatial)
        start = time.perf_counter()
        sol = solve_relax(self.model, init, eps, plan)
        wall = (time.perf_counter() - start) * 1e3
        err = error_norm(sol.u - self.limit_at(grid), grid, cfg.norm)
        return sol, err, wall


def run_sweep(cfg: SweepConfig) -> SweepResult:
    """Solve at every eps, measure ``||u^eps - u_0||`` at ``t_end`` and fit the order."""
    prob = _Problem(cfg)
    res = SweepResult(config=cfg, eps=[], errors=[], dts=[], steps=[], cells=[], wall_ms=[],
                      reference_kind=prob.kind)
    for eps in cfg.eps:
        try:
            sol, err, wall = prob.run(eps, prob.cells)
        except DivergenceError as exc:
            res.failed = True
            res.message = f"eps={eps:g}: {exc}"
            break
        res.eps.append(eps)
        res.errors.append(err)
        res.dts.append(sol.dt_max)
        res.steps.append(sol.steps)
        res.cells.append(prob.cells)
        res.wall_ms.append(wall)
        res.diagnostics.append({"eps": eps, **{k: v for k, v in sol.diagnostics.items() if k != "m"}})
    if len(res.errors) >= 3 and all(e > 0 for e in res.errors):
        res.slope, res.intercept, res.fit_residual = fit_order(list(zip(res.eps, res.errors)))
    res.monotone = len(res.errors) == len(cfg.eps) and all(b < a for a, b in zip(res.errors, res.errors[1:]))
    if not res.monotone and not res.failed:
        res.message = "errors are not monotonically decreasing"
    if cfg.grid_check and not res.failed:
        res.grid_check = _grid_check(prob, res)
    return res


def _grid_check(prob: _Problem, res: SweepResult) -> dict:
    """Rerun the smallest eps on the grid halved per axis; the error should barely move."""
    eps = res.eps[-1]
    coarse = prob.cells // 2
    _, err, _ = prob.run(eps, coarse)
    change = abs(err - res.errors[-1]) / res.errors[-1]
    return {"eps": eps, "cells": coarse, "error": err, "relative_change": change,
            "tolerance": GRID_CHECK_TOL, "passed": bool(change < GRID_CHECK_TOL)}


# ------------------------------------------------------------------ persistence

CSV_COLUMNS = ("eps", "error", "dt", "cells", "wall_ms")


def persist_result(result: SweepResult, path) -> tuple[Path, Path]:
    """Write ``sweep.csv`` and ``manifest.json`` into directory ``path``.

    Wall times are written only when the config asks for timing, so repeated
    runs of the same config produce identical bytes.
    """
    out = Path(path)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise RelaxLabError(f"cannot create output directory {out}: {exc}") from exc
    csv_path = out / "sweep.csv"
    json_path = out / "manifest.json"
    try:
        with csv_path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(CSV_COLUMNS)
            for e, err, dt, c, wall in zip(result.eps, result.errors, result.dts, result.cells,
                                           result.wall_ms):
                w.writerow([repr(e), repr(err), repr(dt), c,
                            f"{wall:.3f}" if result.config.timing else ""])
        json_path.write_text(json.dumps(_jsonable(result.manifest()), indent=2, sort_keys=True) + "\n")
    except OSError as exc:
        raise RelaxLabError(f"cannot write results to {out}: {exc}") from exc
    return csv_path, json_path


def load_sweep_csv(path) -> list[dict]:
    rows = []
    with Path(path).open(newline="") as fh:
        for row in csv.DictReader(fh):
            rows.append({"eps": float(row["eps"]), "error": float(row["error"]), "dt": float(row["dt"]),
                         "cells": int(row["cells"]),
                         "wall_ms": float(row["wall_ms"]) if row["wall_ms"] else None})
    return rows


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    return obj
