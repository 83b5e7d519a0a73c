"""Relaxation model for a general hyperbolic-parabolic system.

Target ``u_t + sum_j a_j(u) u_{x_j} = sum_jk d_j (D_jk(u) d_k u)`` where
``u = (u_1, u_2)`` with ``u_2`` the last ``s`` entries and only the bottom
``s`` rows of every ``D_jk`` nonzero.  Each flux ``w_j`` (s entries) relaxes
to ``-eps sum_k D_jk d_k u`` and the state is ``U = (u_1, u_2, w_1, .., w_d)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from ..core import ModelDims, RelaxModel, TargetPDE
from ._common import block_diag_batch, is_spd, make_box, require, u_samples

Fn = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class GeneralHpSpec:
    """Callbacks take u of shape ``(..., m)``.

    ``a(u) -> (..., d, m, m)``; ``D21(u) -> (..., d, d, s, m-s)`` and
    ``D22(u) -> (..., d, d, s, s)`` indexed ``[j, k]``; ``a0(u) -> (..., m, m)``.
    ``a_constant`` declares ``a`` independent of u, which gives the u rows a
    conservative flux.
    """

    m: int
    s: int
    d: int
    a: Fn
    D21: Fn
    D22: Fn
    a0: Fn
    a_constant: bool = False
    u_lo: tuple = (0.5,)
    u_hi: tuple = (1.5,)
    w_bound: float = 1.0

    @classmethod
    def constant(cls, a0, a, D21, D22, u_lo=(0.5,), u_hi=(1.5,), w_bound=1.0) -> "GeneralHpSpec":
        a0 = np.asarray(a0, float)
        a = np.asarray(a, float)
        D21 = np.asarray(D21, float)
        D22 = np.asarray(D22, float)
        d, m = a.shape[0], a.shape[1]
        s = D22.shape[-1]

        def const(arr):
            return lambda u: np.broadcast_to(arr, np.asarray(u).shape[:-1] + arr.shape).copy()

        lo = tuple(np.broadcast_to(u_lo, (m,)))
        hi = tuple(np.broadcast_to(u_hi, (m,)))
        return cls(m=m, s=s, d=d, a=const(a), D21=const(D21), D22=const(D22), a0=const(a0),
                   a_constant=True, u_lo=lo, u_hi=hi, w_bound=w_bound)


def full_diffusion(spec: GeneralHpSpec, u) -> np.ndarray:
    """``D_jk`` as full ``m x m`` blocks with zero top rows, shape ``(..., d, d, m, m)``."""
    u = np.asarray(u, float)
    m, s, d = spec.m, spec.s, spec.d
    D = np.zeros(u.shape[:-1] + (d, d, m, m))
    D[..., m - s:, :m - s] = spec.D21(u)
    D[..., m - s:, m - s:] = spec.D22(u)
    return D


def h_matrix(spec: GeneralHpSpec, u) -> np.ndarray:
    """The ``sd x sd`` block matrix of ``D_jk^{22}``."""
    D22 = np.asarray(spec.D22(u), float)
    d, s = spec.d, spec.s
    return np.swapaxes(D22, -3, -2).reshape(D22.shape[:-4] + (d * s, d * s))


def z3_matrix(spec: GeneralHpSpec, u) -> np.ndarray:
    """The ``md x md`` block matrix of ``a0 D_jk``."""
    D = full_diffusion(spec, u)
    a0 = np.asarray(spec.a0(u), float)
    prod = a0[..., None, None, :, :] @ D
    d, m = spec.d, spec.m
    return np.swapaxes(prod, -3, -2).reshape(prod.shape[:-4] + (d * m, d * m))


def b_matrix(spec: GeneralHpSpec, u) -> np.ndarray:
    """``B = diag(a0^22, .., a0^22) H^{-1}``."""
    a0 = np.asarray(spec.a0(u), float)
    s, d = spec.s, spec.d
    E = block_diag_batch(*[a0[..., -s:, -s:]] * d)
    H = h_matrix(spec, u)
    return np.swapaxes(np.linalg.solve(np.swapaxes(H, -1, -2), np.swapaxes(E, -1, -2)), -1, -2)


def check_assumptions(spec: GeneralHpSpec) -> None:
    u = u_samples(spec.u_lo, spec.u_hi)
    a0 = np.asarray(spec.a0(u), float)
    require(is_spd(a0), "a0 must be SPD on the state box")
    a0a = a0[..., None, :, :] @ np.asarray(spec.a(u), float)
    scale = np.maximum(np.abs(a0a).max(axis=(-2, -1), keepdims=True), 1e-300)
    require(bool(np.all(np.abs(a0a - np.swapaxes(a0a, -1, -2)) <= 1e-10 * scale)),
            "assumption (I): a0 a_j must be symmetric")
    z3 = z3_matrix(spec, u)
    zs = np.maximum(np.abs(z3).max(axis=(-2, -1), keepdims=True), 1e-300)
    require(bool(np.all(np.abs(z3 - np.swapaxes(z3, -1, -2)) <= 1e-10 * zs)),
            "assumption (II): the a0 D_jk block matrix must be symmetric")
    eig = np.linalg.eigvalsh(0.5 * (z3 + np.swapaxes(z3, -1, -2)))
    require(bool(np.all(eig[..., 0] >= -1e-10 * np.abs(eig).max(axis=-1))),
            "assumption (II): the a0 D_jk block matrix must be positive semidefinite")
    require(bool(np.all(np.linalg.cond(h_matrix(spec, u)) < 1e12)),
            "assumption (III): H must be invertible")


def build_general_hp(spec: GeneralHpSpec, name: str = "general-hp",
                     check: bool = True) -> tuple[RelaxModel, TargetPDE]:
    """``check=False`` skips the assumption checks (used for mutated instances)."""
    if check:
        check_assumptions(spec)
    m, s, d = spec.m, spec.s, spec.d
    n = m + s * d
    dims = ModelDims(n=n, r=s * d, d=d)
    p = m - s

    def flux_mat(U, eps):
        U = np.asarray(U, float)
        u = U[..., :m]
        A = np.zeros(U.shape[:-1] + (d, n, n))
        A[..., :m, :m] = eps * np.asarray(spec.a(u), float)
        D21 = spec.D21(u)
        D22 = spec.D22(u)
        eye = np.eye(s)
        for j in range(d):
            A[..., j, p:m, m + j * s:m + (j + 1) * s] = eye
            for i in range(d):
                rows = slice(m + i * s, m + (i + 1) * s)
                A[..., j, rows, :p] = D21[..., i, j, :, :]
                A[..., j, rows, p:m] = D22[..., i, j, :, :]
        return A

    def source(U, eps):
        Q = -np.asarray(U, float).copy()
        Q[..., :m] = 0.0
        return Q

    def symmetrizer(U, eps):
        u = np.asarray(U, float)[..., :m]
        return block_diag_batch(np.asarray(spec.a0(u), float), b_matrix(spec, u))

    u_flux = None
    if spec.a_constant:
        def u_flux(U, eps):
            U = np.asarray(U, float)
            u = U[..., :m]
            F = eps * np.einsum("...jab,...b->...ja", spec.a(u), u)
            F[..., p:m] += U[..., m:].reshape(U.shape[:-1] + (d, s))
            return F

    model = RelaxModel(
        name=name, dims=dims, flux_mat=flux_mat, source=source, symmetrizer=symmetrizer,
        state_box=make_box(spec.u_lo, spec.u_hi, spec.w_bound, s * d),
        eps_max=1.0, u_flux=u_flux, a11_is_eps_advection=True,
        params={"m": m, "s": s, "d": d},
    )
    target = TargetPDE(m=m, d=d, name=name, advection=spec.a,
                       diffusion=lambda u: full_diffusion(spec, u))
    return model, target
