"""Chapman-Enskog corrector and the formal limit equation of a relaxation model.

With ``w = eps w_1 + O(eps^2)`` the corrector is

    w_1 = (d_w q)^{-1} [ sum_j A_j^21 d_j u_0 - d_eps q ]

and the limit equation reads

    u_t + sum_j [ A_j^12 d_j w_1 + (d_w A_j^11 . w_1) d_j u_0 + d_eps A_j^11 d_j u_0 ] = 0,

all model quantities taken at ``(u_0, 0; 0)``.  ``limit_residual_compare``
evaluates this operator on a smooth field and sets it against the target
operator ``sum_j a_j d_j u - sum_jk d_j (D_jk d_k u)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from ..core import (
    EvaluationError, JacobianConfig, RelaxModel, TargetPDE, fd_jacobian, jac_flux_block,
    jac_source_wrt_eps, jac_source_wrt_state,
)

Field = Callable[[np.ndarray], np.ndarray]

# larger state step for derivatives of quantities that are themselves FD Jacobians
NESTED_JAC = JacobianConfig(step_scale=1e-4)

# fourth-order central first-derivative stencil
_OFFSETS = np.array([-2.0, -1.0, 1.0, 2.0])
_WEIGHTS = np.array([1.0, -8.0, 8.0, -1.0]) / 12.0


def _equilibrium(model: RelaxModel, u: np.ndarray) -> np.ndarray:
    u = np.asarray(u, float)
    return model.dims.join(u, np.zeros(u.shape[:-1] + (model.dims.r,)))


def _source_blocks(model: RelaxModel, U0: np.ndarray, cfg: JacobianConfig):
    m = model.dims.m
    Qw = jac_source_wrt_state(model, U0, 0.0, cfg)[..., m:, m:]
    Qe = jac_source_wrt_eps(model, U0, cfg)[..., m:]
    return Qw, Qe


def first_corrector(model: RelaxModel, u0: np.ndarray, grad_u0: np.ndarray,
                    cfg: JacobianConfig = JacobianConfig()) -> np.ndarray:
    """``w_1`` at states ``u0 (..., m)`` with gradients ``grad_u0 (..., d, m)``."""
    u0 = np.asarray(u0, float)
    grad_u0 = np.asarray(grad_u0, float)
    U0 = _equilibrium(model, u0)
    Qw, Qe = _source_blocks(model, U0, cfg)
    m = model.dims.m
    A = np.asarray(model.flux_mat(U0, 0.0), float)
    rhs = np.einsum("...jab,...jb->...a", A[..., m:, :m], grad_u0) - Qe
    try:
        w1 = np.linalg.solve(Qw, rhs[..., None])[..., 0]
    except np.linalg.LinAlgError as exc:
        raise EvaluationError("d_w q is singular: condition (ii) is violated") from exc
    if not np.all(np.isfinite(w1)):
        raise EvaluationError("non-finite first corrector")
    return w1


# ------------------------------------------------------------------ finite differences on fields

def _deriv(fn: Field, x: np.ndarray, j: int, h: float) -> np.ndarray:
    shift = np.zeros(x.shape[-1])
    shift[j] = h
    pts = x[None] + _OFFSETS.reshape((4,) + (1,) * x.ndim) * shift
    vals = np.asarray(fn(pts), float)
    return np.tensordot(_WEIGHTS, vals, axes=1) / h


def field_gradient(fn: Field, x: np.ndarray, h: float) -> np.ndarray:
    """Fourth-order FD gradient of a vector field, shape ``(..., d, k)``."""
    x = np.asarray(x, float)
    return np.stack([_deriv(fn, x, j, h) for j in range(x.shape[-1])], axis=-2)


def sample_points(d: int, per_axis: int = 24) -> np.ndarray:
    """Uniform nodes of the periodic box ``[0, 2 pi)^d``, flattened to ``(P, d)``."""
    axis = 2 * np.pi * np.arange(per_axis) / per_axis
    mesh = np.meshgrid(*([axis] * d), indexing="ij")
    return np.stack([g.ravel() for g in mesh], axis=-1)


# ------------------------------------------------------------------ operators

def limit_operator(model: RelaxModel, field_fn: Field, x: np.ndarray, h: float,
                   cfg: JacobianConfig = JacobianConfig()) -> np.ndarray:
    """The relaxation model's formal limit operator applied to ``field_fn`` at ``x``."""
    m, d = model.dims.m, model.dims.d

    def grad(pts):
        return field_gradient(field_fn, pts, h)

    def w1_field(pts):
        return first_corrector(model, field_fn(pts), grad(pts), cfg)

    u = np.asarray(field_fn(x), float)
    gu = grad(x)
    U0 = _equilibrium(model, u)
    A = np.asarray(model.flux_mat(U0, 0.0), float)
    w1 = w1_field(x)
    out = np.zeros_like(u)
    for j in range(d):
        out += np.einsum("...ab,...b->...a", A[..., j, :m, m:], _deriv(w1_field, x, j, h))
        dwA = jac_flux_block(model, U0, 0.0, j, "11", "w", cfg)           # (..., m, m, r)
        deA = jac_flux_block(model, U0, 0.0, j, "11", "eps", cfg)         # (..., m, m)
        coef = np.einsum("...abk,...k->...ab", dwA, w1) + deA
        out += np.einsum("...ab,...b->...a", coef, gu[..., j, :])
    return out


def target_operator(target: TargetPDE, field_fn: Field, x: np.ndarray, h: float) -> np.ndarray:
    """``sum_j a_j d_j u - sum_jk d_j (D_jk d_k u)`` at ``x``."""
    d = target.d

    def grad(pts):
        return field_gradient(field_fn, pts, h)

    def diff_flux(j):
        def fn(pts):
            D = np.asarray(target.diffusion(field_fn(pts)), float)       # (..., d, d, m, m)
            return np.einsum("...kab,...kb->...a", D[..., j, :, :, :], grad(pts))
        return fn

    u = np.asarray(field_fn(x), float)
    a = np.asarray(target.advection(u), float)
    out = np.einsum("...jab,...jb->...a", a, grad(x))
    for j in range(d):
        out -= _deriv(diff_flux(j), x, j, h)
    return out


def limit_coefficients(model: RelaxModel, u: np.ndarray,
                       cfg: JacobianConfig = JacobianConfig(),
                       nested: JacobianConfig = NESTED_JAC) -> tuple[np.ndarray, np.ndarray]:
    """Effective advection ``(..., d, m, m)`` and diffusion ``(..., d, d, m, m)`` of the limit.

    With ``G = (d_w q)^{-1} d_eps q`` and ``M_k = (d_w q)^{-1} A_k^21``:
    ``a_j = -A_j^12 d_u G - G . d_w A_j^11 + d_eps A_j^11`` and
    ``D_jk = -A_j^12 M_k``.  Quadratic-gradient terms are not coefficients and
    are left to the residual comparison.
    """
    m, d = model.dims.m, model.dims.d
    u = np.asarray(u, float)
    U0 = _equilibrium(model, u)

    def G_of(uu):
        Qw, Qe = _source_blocks(model, _equilibrium(model, uu), cfg)
        return np.linalg.solve(Qw, Qe[..., None])[..., 0]

    Qw, _ = _source_blocks(model, U0, cfg)
    G = G_of(u)
    dG = fd_jacobian(G_of, u, nested)                                      # (..., r, m)
    A = np.asarray(model.flux_mat(U0, 0.0), float)
    M = np.linalg.solve(Qw[..., None, :, :], A[..., m:, :m])              # (..., d, r, m)
    a_eff = np.zeros(u.shape[:-1] + (d, m, m))
    D_eff = np.zeros(u.shape[:-1] + (d, d, m, m))
    for j in range(d):
        A12 = A[..., j, :m, m:]
        dwA = jac_flux_block(model, U0, 0.0, j, "11", "w", cfg)
        deA = jac_flux_block(model, U0, 0.0, j, "11", "eps", cfg)
        a_eff[..., j, :, :] = -A12 @ dG - np.einsum("...abk,...k->...ab", dwA, G) + deA
        for k in range(d):
            D_eff[..., j, k, :, :] = -A12 @ M[..., k, :, :]
    return a_eff, D_eff


# ------------------------------------------------------------------ comparison

@dataclass
class LimitComparison:
    """Relative sup-norm mismatches between the formal limit and the target."""

    model: str
    h: float
    advection: list           # per direction j
    diffusion: list           # per (j, k), symmetrised pairs
    residual: float
    discrepancy: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def worst(self) -> float:
        return max([self.residual, *self.advection, *np.ravel(self.diffusion)])

    def to_dict(self) -> dict:
        return {"model": self.model, "h": float(self.h), "residual": float(self.residual),
                "advection": [float(v) for v in self.advection],
                "diffusion": [[float(v) for v in row] for row in self.diffusion]}


def _rel(diff: np.ndarray, ref: np.ndarray, axes) -> np.ndarray:
    num = np.max(np.abs(diff), axis=axes)
    den = np.max(np.abs(ref), axis=axes)
    return num / np.maximum(den, 1e-12)


def limit_residual_compare(model: RelaxModel, target: TargetPDE, field_fn: Field, h: float,
                           points: Optional[np.ndarray] = None,
                           cfg: JacobianConfig = JacobianConfig()) -> LimitComparison:
    """Compare the formal limit of ``model`` with ``target`` on a smooth periodic field."""
    if not h > 0:
        raise ValueError("grid spacing h must be positive")
    d, m = model.dims.d, model.dims.m
    if target.d != d or target.m != m:
        raise ValueError("target dimensions do not match the model")
    x = sample_points(d) if points is None else np.asarray(points, float)
    L_relax = limit_operator(model, field_fn, x, h, cfg)
    L_target = target_operator(target, field_fn, x, h)
    if not (np.all(np.isfinite(L_relax)) and np.all(np.isfinite(L_target))):
        raise EvaluationError("non-finite limit-operator assembly")
    diff = L_relax - L_target
    scale = max(float(np.abs(L_target).max()), float(np.abs(L_relax).max()), 1e-12)
    residual = float(np.abs(diff).max()) / scale

    u = np.asarray(field_fn(x), float)
    a_eff, D_eff = limit_coefficients(model, u, cfg)
    a_tar = np.asarray(target.advection(u), float)
    D_tar = np.asarray(target.diffusion(u), float)
    adv = [float(_rel(a_eff[..., j, :, :] - a_tar[..., j, :, :], np.stack([a_tar, a_eff]),
                      None)) for j in range(d)]
    Ds_eff = 0.5 * (D_eff + np.swapaxes(D_eff, -3, -4))
    Ds_tar = 0.5 * (D_tar + np.swapaxes(D_tar, -3, -4))
    ref = np.stack([Ds_tar, Ds_eff])
    dif = [[float(_rel(Ds_eff[..., j, k, :, :] - Ds_tar[..., j, k, :, :], ref, None))
            for k in range(d)] for j in range(d)]
    return LimitComparison(model=model.name, h=h, advection=adv, diffusion=dif,
                           residual=residual, discrepancy=diff)


@dataclass
class LimitOrderStudy:
    hs: list
    residuals: list
    orders: list
    floor: float = 1e-10

    @property
    def converging(self) -> bool:
        """Order >= 2 between successive spacings, or already at round-off level."""
        if all(r <= self.floor for r in self.residuals):
            return True
        return all(o >= 2.0 or r1 <= self.floor
                   for o, r1 in zip(self.orders, self.residuals[1:]))


def limit_order_study(model: RelaxModel, target: TargetPDE, field_fn: Field,
                      hs: Sequence[float], points: Optional[np.ndarray] = None) -> LimitOrderStudy:
    """Residual discrepancy under successive spacing refinements."""
    res = [limit_residual_compare(model, target, field_fn, h, points).residual for h in hs]
    orders = [float(np.log(r0 / r1) / np.log(h0 / h1)) if r0 > 0 and r1 > 0 else float("inf")
              for r0, r1, h0, h1 in zip(res, res[1:], hs, hs[1:])]
    return LimitOrderStudy(hs=list(hs), residuals=res, orders=orders)
