"""Relaxation of both convective and diffusive fluxes of a viscous conservation law.

Target ``u_t + sum_j f_j(u)_{x_j} = sum_jk d_j (B_jk(u) d_k u)`` for an
``n_t``-vector u.  Relaxation variables ``w_1..w_d`` (each ``n_t`` long) obey
``w_i,t + (1/eps) sum_j (B_ij + eps^2 a^2 I) d_j u = (eps f_i - w_i)/eps^2``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from ..core import ModelDims, RelaxModel, TargetPDE
from ._common import block_diag_batch, is_spd, make_box, require, u_samples

Fn = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class ViscousConsSpec:
    """``f(u) -> (..., d, n_t)``, ``df(u) -> (..., d, n_t, n_t)``,
    ``B(u) -> (..., d, d, n_t, n_t)`` with ``B[..., j, k]`` the block ``B_jk``,
    ``eta_uu(u) -> (..., n_t, n_t)``."""

    d: int
    n_t: int
    f: Fn
    df: Fn
    B: Fn
    eta_uu: Fn
    a: float = 1.0
    u_lo: tuple = (0.5,)
    u_hi: tuple = (2.0,)
    w_bound: float = 1.0


def big_B(B: np.ndarray) -> np.ndarray:
    """Assemble ``(..., d, d, k, k)`` blocks into ``(..., d*k, d*k)``."""
    d, k = B.shape[-3], B.shape[-1]
    return np.swapaxes(B, -3, -2).reshape(B.shape[:-4] + (d * k, d * k))


def relaxed_H(B: np.ndarray, eps: float, a: float) -> np.ndarray:
    d, k = B.shape[-3], B.shape[-1]
    ones = np.kron(np.ones((d, d)), np.eye(k))
    return big_B(B) + (eps * a) ** 2 * ones


def _check_assumptions(spec: ViscousConsSpec) -> None:
    u = u_samples(spec.u_lo, spec.u_hi)
    eta = spec.eta_uu(u)
    require(is_spd(eta), "entropy Hessian eta_uu must be SPD on the state box")
    weighted = np.einsum("...ab,...bc->...ac", block_diag_batch(*[eta] * spec.d), big_B(spec.B(u)))
    require(is_spd(weighted, rel_sym=1e-10), "diag{eta_uu,...} B must be SPD on the state box")
    cond = np.linalg.cond(relaxed_H(spec.B(u), 0.0, spec.a))
    require(bool(np.all(cond < 1e12)), "H is numerically singular on the state box")


def build_viscous_cons(spec: ViscousConsSpec, name: str = "viscous-cons") -> tuple[RelaxModel, TargetPDE]:
    _check_assumptions(spec)
    k, d = spec.n_t, spec.d
    n = k * (1 + d)
    dims = ModelDims(n=n, r=k * d, d=d)
    I = np.eye(k)

    def flux_mat(U, eps):
        U = np.asarray(U, float)
        u = U[..., :k]
        B = spec.B(u)
        A = np.zeros(U.shape[:-1] + (d, n, n))
        for j in range(d):
            A[..., j, :k, k * (1 + j):k * (2 + j)] = I
            for i in range(d):
                A[..., j, k * (1 + i):k * (2 + i), :k] = B[..., i, j, :, :] + (eps * spec.a) ** 2 * I
        return A

    def source(U, eps):
        U = np.asarray(U, float)
        u = U[..., :k]
        w = U[..., k:].reshape(U.shape[:-1] + (d, k))
        Q = np.zeros_like(U)
        Q[..., k:] = (eps * spec.f(u) - w).reshape(U.shape[:-1] + (d * k,))
        return Q

    def symmetrizer(U, eps):
        U = np.asarray(U, float)
        u = U[..., :k]
        eta = spec.eta_uu(u)
        H = relaxed_H(spec.B(u), eps, spec.a)
        E = block_diag_batch(*[eta] * d)
        # diag{eta} H^{-1} = (H^{-T} diag{eta})^T, via LU with partial pivoting
        lower = np.swapaxes(np.linalg.solve(np.swapaxes(H, -1, -2), np.swapaxes(E, -1, -2)), -1, -2)
        return block_diag_batch(eta, lower)

    def u_flux(U, eps):
        U = np.asarray(U, float)
        return U[..., k:].reshape(U.shape[:-1] + (d, k))

    model = RelaxModel(
        name=name, dims=dims, flux_mat=flux_mat, source=source, symmetrizer=symmetrizer,
        state_box=make_box(spec.u_lo, spec.u_hi, spec.w_bound, k * d),
        eps_max=1.0, u_flux=u_flux,
        params={"d": d, "n_t": k, "a": spec.a, "u_lo": list(spec.u_lo), "u_hi": list(spec.u_hi)},
    )
    target = TargetPDE(m=k, d=d, name=name, advection=spec.df, diffusion=spec.B)
    return model, target
