"""Periodic finite-difference solvers for relaxation systems and their limits.

Relaxation systems are advanced with IMEX Runge-Kutta schemes: the convective
term ``(1/eps) sum_j A_j d_j U`` is explicit and the stiff source
``Q/eps^2`` implicit.  Because Q only acts on w, every implicit stage is a
small per-cell solve for w with u frozen.

Target PDEs are advanced with an explicit second-order central scheme and
SSP-RK3 on a (usually finer) grid, to serve as reference solutions.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Literal, Optional

import numpy as np

from .core import EvaluationError, RelaxLabError, RelaxModel, TargetPDE
from .exact import exact_solution_library  # noqa: F401  (re-exported)

SchemeName = Literal["imex1", "imex2", "ars233"]
SpatialName = Literal["central4", "llf"]

BLOWUP_FACTOR = 1e6
NEWTON_MAXIT = 20
NEWTON_TOL = 1e-12


class DivergenceError(RelaxLabError):
    """The solution grew beyond the blow-up threshold or became non-finite."""

    def __init__(self, message: str, t: float):
        super().__init__(f"{message} at t={t:.6g}")
        self.t = t


# ------------------------------------------------------------------ grids and fields

@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid on ``[lo, hi)^d`` with nodes ``x_i = lo + i dx``."""

    cells: tuple
    lo: float = 0.0
    hi: float = 2 * math.pi

    def __post_init__(self):
        cells = tuple(int(c) for c in np.atleast_1d(self.cells))
        if not 1 <= len(cells) <= 3:
            raise ValueError("grid dimension must be 1..3")
        if min(cells) < 8:
            raise ValueError(f"need at least 8 cells per axis, got {cells}")
        if not self.hi > self.lo:
            raise ValueError("grid extent must be positive")
        object.__setattr__(self, "cells", cells)

    @classmethod
    def uniform(cls, d: int, n: int, lo: float = 0.0, hi: float = 2 * math.pi) -> "Grid":
        return cls((n,) * d, lo, hi)

    @property
    def d(self) -> int:
        return len(self.cells)

    @property
    def spacing(self) -> tuple:
        return tuple((self.hi - self.lo) / c for c in self.cells)

    @property
    def size(self) -> int:
        return int(np.prod(self.cells))

    def coords(self) -> np.ndarray:
        """Node coordinates, shape ``(*cells, d)``."""
        axes = [self.lo + np.arange(c) * h for c, h in zip(self.cells, self.spacing)]
        return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)

    def refined(self, factor: int) -> "Grid":
        return Grid(tuple(c * factor for c in self.cells), self.lo, self.hi)


@dataclass(frozen=True)
class GridField:
    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, float)
        if vals.shape[:-1] != self.grid.cells:
            raise ValueError(f"field shape {vals.shape[:-1]} does not match grid {self.grid.cells}")
        if not np.all(np.isfinite(vals)):
            raise EvaluationError("field contains non-finite entries")
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_function(cls, grid: Grid, fn: Callable[[np.ndarray], np.ndarray]) -> "GridField":
        return cls(grid, np.asarray(fn(grid.coords()), float))

    def totals(self) -> np.ndarray:
        """Grid sum of every component."""
        return self.values.reshape(-1, self.values.shape[-1]).sum(axis=0)

    def restrict(self, factor: int) -> "GridField":
        """Inject onto the grid coarser by ``factor`` (shared nodes)."""
        sl = tuple(slice(None, None, factor) for _ in self.grid.cells)
        coarse = Grid(tuple(c // factor for c in self.grid.cells), self.grid.lo, self.grid.hi)
        return GridField(coarse, self.values[sl])


@dataclass(frozen=True)
class TimePlan:
    t_end: float
    cfl: float = 0.9
    scheme: SchemeName = "ars233"
    spatial: SpatialName = "central4"
    max_steps: int = 2_000_000

    def __post_init__(self):
        if not self.t_end > 0:
            raise ValueError("t_end must be positive")
        if not 0 < self.cfl <= 1:
            raise ValueError("cfl must lie in (0, 1]")
        if self.scheme not in TABLEAUX:
            raise ValueError(f"unknown scheme {self.scheme!r}; choose from {sorted(TABLEAUX)}")
        if self.spatial not in ("central4", "llf"):
            raise ValueError(f"unknown spatial scheme {self.spatial!r}")


# ------------------------------------------------------------------ IMEX tableaux

@dataclass(frozen=True)
class ImexTableau:
    Ae: np.ndarray
    be: np.ndarray
    Ai: np.ndarray
    bi: np.ndarray

    @property
    def stages(self) -> int:
        return len(self.be)


def _ars111():
    return ImexTableau(Ae=np.array([[0.0, 0.0], [1.0, 0.0]]), be=np.array([1.0, 0.0]),
                       Ai=np.array([[0.0, 0.0], [0.0, 1.0]]), bi=np.array([0.0, 1.0]))


def _ars222():
    g = 1 - 1 / math.sqrt(2)
    dl = 1 - 1 / (2 * g)
    return ImexTableau(
        Ae=np.array([[0, 0, 0], [g, 0, 0], [dl, 1 - dl, 0]], float), be=np.array([dl, 1 - dl, 0]),
        Ai=np.array([[0, 0, 0], [0, g, 0], [0, 1 - g, g]], float), bi=np.array([0, 1 - g, g]))


def _ars233():
    g = (3 + math.sqrt(3)) / 6
    return ImexTableau(
        Ae=np.array([[0, 0, 0], [g, 0, 0], [g - 1, 2 * (1 - g), 0]], float), be=np.array([0, 0.5, 0.5]),
        Ai=np.array([[0, 0, 0], [0, g, 0], [0, 1 - 2 * g, g]], float), bi=np.array([0, 0.5, 0.5]))


TABLEAUX = {"imex1": _ars111(), "imex2": _ars222(), "ars233": _ars233()}


# ------------------------------------------------------------------ spatial operators

def _d1_central4(v: np.ndarray, axis: int, h: float) -> np.ndarray:
    return (8 * (np.roll(v, -1, axis) - np.roll(v, 1, axis))
            - (np.roll(v, -2, axis) - np.roll(v, 2, axis))) / (12 * h)


def grid_gradient(values: np.ndarray, grid: Grid) -> np.ndarray:
    """Fourth-order central gradient of a grid field, shape ``(*cells, d, k)``."""
    return np.stack([_d1_central4(values, j, h) for j, h in enumerate(grid.spacing)], axis=-2)


def spectral_radii(model: RelaxModel, U: np.ndarray, eps: float) -> np.ndarray:
    """Per-cell spectral radius of each ``A_j``, shape ``(*cells, d)``."""
    return _radii(np.asarray(model.flux_mat(U, eps), float))


def _radii(A: np.ndarray) -> np.ndarray:
    # constant-coefficient shortcut: one eigenvalue problem per axis
    flat = A.reshape((-1,) + A.shape[-3:])
    if np.array_equal(flat, np.broadcast_to(flat[:1], flat.shape)):
        rho = np.abs(np.linalg.eigvals(flat[0])).max(axis=-1)
        return np.broadcast_to(rho, A.shape[:-2]).copy()
    return np.abs(np.linalg.eigvals(A)).max(axis=-1)


def convective_rhs(model: RelaxModel, U: np.ndarray, eps: float, grid: Grid,
                   spatial: SpatialName = "central4", rho: Optional[np.ndarray] = None) -> np.ndarray:
    """``-(1/eps) sum_j A_j d_j U``; u-rows are in flux form when the model has a u-flux."""
    m = model.dims.m
    A = np.asarray(model.flux_mat(U, eps), float)
    flux = None if model.u_flux is None else np.asarray(model.u_flux(U, eps), float)
    cons = flux is not None
    lo = m if cons else 0                       # first row treated quasi-linearly
    out = np.zeros_like(U)
    if spatial == "llf" and rho is None:
        rho = _radii(A)
    for j, h in enumerate(grid.spacing):
        Aj = A[..., j, lo:, :]
        if spatial == "central4":
            out[..., lo:] -= np.einsum("...ab,...b->...a", Aj, _d1_central4(U, j, h))
            if cons:
                out[..., :m] -= _d1_central4(flux[..., j, :], j, h)
            continue
        # local Lax-Friedrichs, fluctuation form for the quasi-linear rows
        alpha = np.maximum(rho[..., j], np.roll(rho[..., j], -1, j))[..., None]   # face i+1/2
        jump = alpha * (np.roll(U, -1, j) - U)
        centred = (np.roll(U, -1, j) - np.roll(U, 1, j)) / (2 * h)
        out[..., lo:] -= np.einsum("...ab,...b->...a", Aj, centred)
        out[..., lo:] += (jump[..., lo:] - np.roll(jump[..., lo:], 1, j)) / (2 * h)
        if cons:
            F = flux[..., j, :]
            face = 0.5 * (F + np.roll(F, -1, j)) - 0.5 * jump[..., :m]
            out[..., :m] -= (face - np.roll(face, 1, j)) / h
    return out / eps


# ------------------------------------------------------------------ implicit relaxation

def _affine_parts(model: RelaxModel, u: np.ndarray, eps: float) -> tuple[np.ndarray, np.ndarray]:
    """``q(u, w) = c + J w`` for sources affine in w: returns ``c (..., r)`` and ``J (..., r, r)``."""
    r = model.dims.r
    # one batched call: w = 0 followed by the r unit vectors
    w = np.concatenate([np.zeros((1, r)), np.eye(r)])
    w = np.broadcast_to(w.reshape((r + 1,) + (1,) * (u.ndim - 1) + (r,)), (r + 1,) + u.shape[:-1] + (r,))
    uu = np.broadcast_to(u, (r + 1,) + u.shape)
    q = np.asarray(model.source(model.dims.join(uu, w), eps), float)[..., model.dims.m:]
    return q[0], np.moveaxis(q[1:] - q[0], 0, -1)


def relax_solve(model: RelaxModel, u: np.ndarray, w_star: np.ndarray, a: float, eps: float) -> np.ndarray:
    """Solve ``w = w_star + a q(u, w; eps)`` cell by cell."""
    r = model.dims.r
    eye = np.eye(r)
    if model.source_affine_in_w:
        c, J = _affine_parts(model, u, eps)
        diag = np.diagonal(J, axis1=-2, axis2=-1)
        if np.array_equal(J, diag[..., None] * eye):
            return (w_star + a * c) / (1.0 - a * diag)
        return np.linalg.solve(eye - a * J, (w_star + a * c)[..., None])[..., 0]
    m = model.dims.m
    w = w_star.copy()
    scale = max(1.0, float(np.abs(w_star).max(initial=0.0)))
    for _ in range(NEWTON_MAXIT):
        def g(ww):
            return ww - w_star - a * np.asarray(model.source(model.dims.join(u, ww), eps), float)[..., m:]
        res = g(w)
        if float(np.abs(res).max(initial=0.0)) <= NEWTON_TOL * scale:
            return w
        h = 1e-7 * np.maximum(1.0, np.abs(w))
        cols = []
        for k in range(r):
            dw = np.zeros_like(w)
            dw[..., k] = h[..., k]
            cols.append((g(w + dw) - g(w - dw)) / (2 * h[..., k:k + 1]))
        w = w - np.linalg.solve(np.stack(cols, axis=-1), res[..., None])[..., 0]
    if float(np.abs(g(w)).max(initial=0.0)) <= 1e3 * NEWTON_TOL * scale:
        return w
    raise EvaluationError("Newton iteration for the implicit source did not converge")


# ------------------------------------------------------------------ relaxation solver

def stable_dt(model: RelaxModel, U: np.ndarray, eps: float, grid: Grid, cfl: float) -> float:
    """``cfl * eps / sum_j (rho_j / dx_j)`` with ``rho_j`` the largest speed of ``A_j``."""
    rho = spectral_radii(model, U, eps).reshape(-1, grid.d).max(axis=0)
    rate = float(sum(r / h for r, h in zip(rho, grid.spacing)))
    return cfl * eps / rate if rate > 0 else np.inf


def imex_step(model: RelaxModel, U: np.ndarray, eps: float, dt: float, grid: Grid,
              tableau: ImexTableau, spatial: SpatialName = "central4") -> np.ndarray:
    """One IMEX Runge-Kutta step of size ``dt``."""
    m = model.dims.m
    Ae, be, Ai, bi = tableau.Ae, tableau.be, tableau.Ai, tableau.bi
    s = tableau.stages
    KE = [None] * s
    KI = [None] * s                              # w-part of Q/eps^2 per stage
    for i in range(s):
        Us = U.copy()
        for k in range(i):
            if Ae[i, k]:
                Us += dt * Ae[i, k] * KE[k]
            if Ai[i, k]:
                Us[..., m:] += dt * Ai[i, k] * KI[k]
        needs_ki = bool(np.any(Ai[i + 1:, i]) or bi[i])
        if Ai[i, i]:
            a = dt * Ai[i, i] / eps ** 2
            w_star = Us[..., m:].copy()
            Us[..., m:] = relax_solve(model, Us[..., :m], w_star, a, eps)
            KI[i] = (Us[..., m:] - w_star) / (dt * Ai[i, i])
        elif needs_ki:
            KI[i] = np.asarray(model.source(Us, eps), float)[..., m:] / eps ** 2
        if np.any(Ae[i + 1:, i]) or be[i]:
            KE[i] = convective_rhs(model, Us, eps, grid, spatial)
    out = U.copy()
    for i in range(s):
        if be[i]:
            out += dt * be[i] * KE[i]
        if bi[i]:
            out[..., m:] += dt * bi[i] * KI[i]
    return out


def step_relax(model: RelaxModel, field_: GridField, eps: float, dt: float,
               scheme: SchemeName = "ars233", spatial: SpatialName = "central4") -> GridField:
    if not eps > 0:
        raise ValueError("eps must be positive")
    if scheme not in TABLEAUX:
        raise ValueError(f"unknown scheme {scheme!r}")
    U = imex_step(model, field_.values, eps, dt, field_.grid, TABLEAUX[scheme], spatial)
    if not np.all(np.isfinite(U)):
        raise DivergenceError("non-finite state", 0.0)
    return GridField(field_.grid, U)


def well_prepared(model: RelaxModel, grid: Grid, u: np.ndarray, eps: float) -> np.ndarray:
    """State ``(u, eps w_1(u))`` on the grid, with grid gradients of u."""
    from .criteria.limit import first_corrector
    u = np.asarray(u, float)
    w = eps * first_corrector(model, u, grid_gradient(u, grid))
    return model.dims.join(u, w)


def initial_state(model: RelaxModel, grid: Grid, u: np.ndarray, eps: float,
                  mode: str = "well-prepared") -> GridField:
    if mode == "well-prepared":
        return GridField(grid, well_prepared(model, grid, u, eps))
    if mode == "zero-w":
        u = np.asarray(u, float)
        return GridField(grid, model.dims.join(u, np.zeros(u.shape[:-1] + (model.dims.r,))))
    raise ValueError(f"unknown initialisation {mode!r}; use 'well-prepared' or 'zero-w'")


@dataclass
class RelaxSolution:
    field: GridField
    t: float
    steps: int
    dt_min: float
    dt_max: float
    diagnostics: dict
    snapshots: list = field(default_factory=list)       # (t, GridField)

    @property
    def u(self) -> np.ndarray:
        return self.field.values[..., :self.diagnostics["m"]]


def _diagnostics(model: RelaxModel, init: GridField, final: GridField, eps: float) -> dict:
    from .criteria.limit import first_corrector
    m = model.dims.m
    u = final.values[..., :m]
    w = final.values[..., m:]
    w1 = first_corrector(model, u, grid_gradient(u, final.grid))
    mass0 = init.totals()[:m]
    mass1 = final.totals()[:m]
    drift = np.abs(mass1 - mass0) / np.maximum(np.abs(mass0), 1e-300)
    return {"m": m, "w_minus_eps_w1": float(np.abs(w - eps * w1).max()),
            "max_w": float(np.abs(w).max()), "mass_drift": float(drift.max()),
            "conservative": model.u_flux is not None}


def solve_relax(model: RelaxModel, init: GridField, eps: float, plan: TimePlan,
                snapshot_every: int = 0) -> RelaxSolution:
    """Advance ``init`` to ``plan.t_end``; the last step is shortened to land exactly."""
    if not eps > 0:
        raise ValueError("eps must be positive")
    if init.values.shape[-1] != model.dims.n:
        raise ValueError(f"field has {init.values.shape[-1]} components, model needs {model.dims.n}")
    if init.grid.d != model.dims.d:
        raise ValueError("grid dimension does not match the model")
    tab = TABLEAUX[plan.scheme]
    grid = init.grid
    U = init.values.copy()
    limit = BLOWUP_FACTOR * max(float(np.abs(U).max()), 1.0)
    t, steps = 0.0, 0
    dts = []
    snaps = [(0.0, init)] if snapshot_every else []
    while t < plan.t_end * (1 - 1e-14):
        if steps >= plan.max_steps:
            raise DivergenceError(f"step budget {plan.max_steps} exhausted", t)
        dt = min(stable_dt(model, U, eps, grid, plan.cfl), plan.t_end - t)
        if not (dt > 0 and np.isfinite(dt)):
            raise EvaluationError(f"invalid time step {dt!r} from the CFL rule")
        U = imex_step(model, U, eps, dt, grid, tab, plan.spatial)
        t += dt
        steps += 1
        dts.append(dt)
        if not np.all(np.isfinite(U)) or float(np.abs(U).max()) > limit:
            raise DivergenceError("solution blew up", t)
        if snapshot_every and steps % snapshot_every == 0:
            snaps.append((t, GridField(grid, U.copy())))
    final = GridField(grid, U)
    return RelaxSolution(field=final, t=t, steps=steps, dt_min=min(dts), dt_max=max(dts),
                         diagnostics=_diagnostics(model, init, final, eps), snapshots=snaps)


# ------------------------------------------------------------------ reference solver for the target

def _target_rhs(target: TargetPDE, u: np.ndarray, grid: Grid) -> np.ndarray:
    """``-sum_j a_j d_j u + sum_jk d_j (D_jk d_k u)``, second-order central, diffusion in face form."""
    d = grid.d
    hs = grid.spacing
    a = np.asarray(target.advection(u), float)
    out = np.zeros_like(u)
    grads = [(np.roll(u, -1, j) - np.roll(u, 1, j)) / (2 * hs[j]) for j in range(d)]
    for j in range(d):
        out -= np.einsum("...ab,...b->...a", a[..., j, :, :], grads[j])
        u_face = 0.5 * (u + np.roll(u, -1, j))
        D = np.asarray(target.diffusion(u_face), float)
        flux = np.zeros_like(u)
        for k in range(d):
            if k == j:
                gk = (np.roll(u, -1, j) - u) / hs[j]
            else:
                gk = 0.5 * (grads[k] + np.roll(grads[k], -1, j))
            flux += np.einsum("...ab,...b->...a", D[..., j, k, :, :], gk)
        out += (flux - np.roll(flux, 1, j)) / hs[j]
    return out


def reference_dt(target: TargetPDE, u: np.ndarray, grid: Grid) -> float:
    h = min(grid.spacing)
    d, m = grid.d, target.m
    D = np.asarray(target.diffusion(u), float)
    # Frobenius norms bound the spectral norms from above, so the step stays stable
    dmax = float(np.sqrt((D.reshape(D.shape[:-4] + (-1,)) ** 2).sum(axis=-1)).max())
    a = np.asarray(target.advection(u), float)
    amax = float(np.sqrt((a.reshape(a.shape[:-3] + (d, -1)) ** 2).sum(axis=-1)).max())
    dt = np.inf
    if dmax > 0:
        dt = 0.4 * h * h / (d * dmax)
    if amax > 0:
        dt = min(dt, 0.4 * h / amax)
    return dt


def solve_target_reference(target: TargetPDE, init: GridField, t_end: float,
                           max_steps: int = 5_000_000) -> GridField:
    """SSP-RK3 with central differences; ``init`` holds u only."""
    if not t_end > 0:
        raise ValueError("t_end must be positive")
    grid = init.grid
    u = init.values.copy()
    t, steps = 0.0, 0
    while t < t_end * (1 - 1e-14):
        if steps >= max_steps:
            raise DivergenceError("reference step budget exhausted", t)
        dt = min(reference_dt(target, u, grid), t_end - t)
        if not dt > 0:
            raise DivergenceError("non-positive reference step", t)
        k1 = _target_rhs(target, u, grid)
        if not np.any(k1):
            break                                   # stationary
        u1 = u + dt * k1
        u2 = 0.75 * u + 0.25 * (u1 + dt * _target_rhs(target, u1, grid))
        u = u / 3 + 2 / 3 * (u2 + dt * _target_rhs(target, u2, grid))
        t += dt
        steps += 1
        if not np.all(np.isfinite(u)):
            raise DivergenceError("reference solution blew up", t)
    return GridField(grid, u)


# ------------------------------------------------------------------ output

def write_field_csv(field_: GridField, path, labels: Optional[list] = None) -> Path:
    """One row per node: grid indices, coordinates, then every component."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    grid = field_.grid
    k = field_.values.shape[-1]
    labels = labels or [f"U{i}" for i in range(k)]
    x = grid.coords().reshape(-1, grid.d)
    idx = np.indices(grid.cells).reshape(grid.d, -1).T
    vals = field_.values.reshape(-1, k)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([f"i{j}" for j in range(grid.d)] + [f"x{j}" for j in range(grid.d)] + labels)
        for ii, xx, vv in zip(idx, x, vals):
            w.writerow([*map(int, ii), *(f"{v:.17g}" for v in xx), *(f"{v:.17g}" for v in vv)])
    return path
