"""Diffusive kinetic (BGK-type) relaxation of a nonlinear parabolic system.

Target ``u_t + sum_j F_j(u)_{x_j} = sum_j B(u)_{x_j x_j}`` for a K-vector u.
The kinetic unknowns ``f_1..f_{N+N'}`` relax to the equilibria
``E_l = M_l(u)`` (l <= N) and ``E_{N+m} = B(u)/(N' theta^2)``.  The model is
written in ``U = (u, g_2, .., g_{N+N'})`` with ``g_l = f_l - E_l(u)``; the
missing ``g_1`` equals ``-sum_{l>=2} g_l``.

In these variables ``A_j = P Atilde_j P^{-1}`` with
``Atilde_j = diag(eps lambda_lj, sigma_mj (eps mu + theta sqrt(N'))) (x) I_K``
and ``P = dU/df``, and the symmetrizer is ``P^{-T} Atilde_0 P^{-1}``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from ..core import ModelDims, RelaxModel, TargetPDE
from ._common import make_box, require, u_samples

Fn = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class KineticBgkSpec:
    """Callbacks take u of shape ``(..., K)``.

    ``M -> (..., N, K)``, ``dM -> (..., N, K, K)``, ``B -> (..., K)``,
    ``dB -> (..., K, K)``, ``F -> (..., d, K)``, ``dF -> (..., d, K, K)``.
    ``H_basis(u) -> (..., K, K)`` diagonalises every ``dM_l`` and ``dB``
    (``dM_l = H^{-1} Lambda_l H``); it may be omitted when K = 1.
    """

    K: int
    d: int
    lam: np.ndarray          # (N, d)
    sigma: np.ndarray        # (N', d)
    theta: float
    mu: float
    M: Fn
    dM: Fn
    B: Fn
    dB: Fn
    F: Fn
    dF: Fn
    H_basis: Optional[Fn] = None
    u_lo: tuple = (0.25,)
    u_hi: tuple = (1.75,)
    w_bound: float = 1.0

    @property
    def N(self) -> int:
        return np.asarray(self.lam).shape[0]

    @property
    def N_prime(self) -> int:
        return np.asarray(self.sigma).shape[0]

    @property
    def L(self) -> int:
        return self.N + self.N_prime


def default_scalar_spec(mu: float = 0.0, lam0: float = 3.0, theta: float = 2.0) -> KineticBgkSpec:
    """K = d = 1, two advective and two diffusive velocities, Burgers flux.

    ``F = u^2/2``, ``B = u^2/4`` and ``M_{1,2} = (u - B/theta^2)/2 -+ F/(2 lam0)``.
    """
    s = 1.0 / np.sqrt(2.0)
    th2 = theta ** 2

    def M(u):
        u = np.asarray(u, float)
        base = (u - u ** 2 / (4 * th2)) / 2
        adv = u ** 2 / (4 * lam0)
        return np.stack([base - adv, base + adv], axis=-2)

    def dM(u):
        u = np.asarray(u, float)
        base = (1 - u / (2 * th2)) / 2
        adv = u / (2 * lam0)
        return np.stack([base - adv, base + adv], axis=-2)[..., None]

    return KineticBgkSpec(
        K=1, d=1, lam=np.array([[-lam0], [lam0]]), sigma=np.array([[s], [-s]]),
        theta=theta, mu=mu, M=M, dM=dM,
        B=lambda u: np.asarray(u, float) ** 2 / 4,
        dB=lambda u: (np.asarray(u, float) / 2)[..., None],
        F=lambda u: (np.asarray(u, float) ** 2 / 2)[..., None, :],
        dF=lambda u: np.asarray(u, float)[..., None, :, None],
    )


def _equilibria(spec: KineticBgkSpec, u):
    """``E_l(u)`` stacked, shape ``(..., L, K)``."""
    Np = spec.N_prime
    Bd = spec.B(u)[..., None, :] / (Np * spec.theta ** 2)
    return np.concatenate([spec.M(u), np.repeat(Bd, Np, axis=-2)], axis=-2)


def _equilibrium_jacobians(spec: KineticBgkSpec, u):
    """``dE_l/du`` stacked, shape ``(..., L, K, K)``."""
    Np = spec.N_prime
    dBd = spec.dB(u)[..., None, :, :] / (Np * spec.theta ** 2)
    return np.concatenate([spec.dM(u), np.repeat(dBd, Np, axis=-3)], axis=-3)


def transform_matrix(spec: KineticBgkSpec, u) -> np.ndarray:
    """``P = dU/df``, shape ``(..., K L, K L)``."""
    u = np.asarray(u, float)
    K, L = spec.K, spec.L
    dE = _equilibrium_jacobians(spec, u)
    P = np.zeros(u.shape[:-1] + (L, K, L, K))
    eye = np.eye(K)
    for b in range(L):
        P[..., 0, :, b, :] = eye
        for a in range(1, L):
            P[..., a, :, b, :] = (a == b) * eye - dE[..., a, :, :]
    return P.reshape(u.shape[:-1] + (K * L, K * L))


def speeds(spec: KineticBgkSpec, eps: float) -> np.ndarray:
    """Diagonal of ``Atilde_j`` per kinetic velocity, shape ``(d, L)``."""
    lam = np.asarray(spec.lam, float)
    sig = np.asarray(spec.sigma, float)
    return np.concatenate([eps * lam.T, (eps * spec.mu + spec.theta * np.sqrt(spec.N_prime)) * sig.T], axis=1)


def _basis(spec: KineticBgkSpec, u):
    if spec.H_basis is not None:
        return np.asarray(spec.H_basis(u), float)
    return np.broadcast_to(np.eye(spec.K), u.shape[:-1] + (spec.K, spec.K))


def _check_assumptions(spec: KineticBgkSpec) -> None:
    lam = np.asarray(spec.lam, float)
    sig = np.asarray(spec.sigma, float)
    d = spec.d
    require(lam.shape[1] == d and sig.shape[1] == d, "lambda and sigma need d columns")
    require(spec.N_prime >= d + 1, "need N' >= d + 1 diffusive velocities")
    require(spec.theta > 0 and spec.mu >= 0, "need theta > 0 and mu >= 0")
    require(np.allclose(sig.sum(axis=0), 0.0, atol=1e-14), "sigma columns must sum to zero")
    require(np.allclose(sig.T @ sig, np.eye(d), atol=1e-14), "sigma columns must be orthonormal")
    require(spec.K == 1 or spec.H_basis is not None, "K > 1 needs an explicit common eigenbasis H_basis")
    u = u_samples(spec.u_lo, spec.u_hi)
    M = spec.M(u)
    scale = max(1.0, float(np.abs(u).max()))
    res_mass = np.abs(M.sum(axis=-2) - (u - spec.B(u) / spec.theta ** 2)).max()
    res_flux = np.abs(np.einsum("lj,...lk->...jk", lam, M) - spec.F(u)).max()
    require(max(res_mass, res_flux) <= 1e-8 * scale, "Maxwellian moment constraints violated")
    H = _basis(spec, u)
    require(bool(np.all(np.linalg.cond(H) < 1e12)), "H_basis is numerically singular")
    Lam = _diagonalised(spec, u, H)
    require(bool(np.all(Lam[..., :spec.N, :] > 0)), "Maxwellians are not strictly monotone (SMFF)")
    require(bool(np.all(Lam[..., spec.N:, :] > 0)), "dB must have positive eigenvalues")


def _diagonalised(spec: KineticBgkSpec, u, H) -> np.ndarray:
    """Diagonals of ``Lambda_l = H dE_l H^{-1}``, shape ``(..., L, K)``."""
    dE = _equilibrium_jacobians(spec, u)
    Hl = H[..., None, :, :]
    Lam = np.linalg.solve(np.swapaxes(Hl, -1, -2), np.swapaxes(Hl @ dE, -1, -2))
    Lam = np.swapaxes(Lam, -1, -2)
    diag = np.diagonal(Lam, axis1=-2, axis2=-1)
    off = Lam - diag[..., None] * np.eye(spec.K)
    span = max(1.0, float(np.abs(diag).max()))
    require(float(np.abs(off).max(initial=0.0)) <= 1e-8 * span,
            "H_basis does not diagonalise the equilibrium Jacobians")
    return diag


def build_kinetic_bgk(spec: KineticBgkSpec, name: str = "kinetic-bgk") -> tuple[RelaxModel, TargetPDE]:
    _check_assumptions(spec)
    K, L, d = spec.K, spec.L, spec.d
    n = K * L
    dims = ModelDims(n=n, r=n - K, d=d)

    def _solve_right(X, P):
        # X P^{-1} == (P^{-T} X^T)^T
        return np.swapaxes(np.linalg.solve(np.swapaxes(P, -1, -2), np.swapaxes(X, -1, -2)), -1, -2)

    def flux_mat(U, eps):
        U = np.asarray(U, float)
        P = transform_matrix(spec, U[..., :K])
        diag = np.repeat(speeds(spec, eps), K, axis=1)              # (d, n)
        PA = P[..., None, :, :] * diag[:, None, :]
        return _solve_right(PA, P[..., None, :, :])

    def source(U, eps):
        Q = -np.asarray(U, float).copy()
        Q[..., :K] = 0.0
        return Q

    def symmetrizer(U, eps):
        U = np.asarray(U, float)
        u = U[..., :K]
        H = _basis(spec, u)
        lam = _diagonalised(spec, u, H)                             # (..., L, K)
        Hl = H[..., None, :, :]
        blocks = np.swapaxes(Hl, -1, -2) @ (Hl / lam[..., :, None])  # H^T Lambda^{-1} H
        At0 = np.zeros(U.shape[:-1] + (L, K, L, K))
        for a in range(L):
            At0[..., a, :, a, :] = blocks[..., a, :, :]
        At0 = At0.reshape(U.shape[:-1] + (n, n))
        P = transform_matrix(spec, u)
        left = np.swapaxes(_solve_right(np.swapaxes(At0, -1, -2), P), -1, -2)   # P^{-T} At0
        return _solve_right(left, P)

    def u_flux(U, eps):
        U = np.asarray(U, float)
        u = U[..., :K]
        g = U[..., K:].reshape(U.shape[:-1] + (L - 1, K))
        g = np.concatenate([-g.sum(axis=-2, keepdims=True), g], axis=-2)
        f = g + _equilibria(spec, u)                                # (..., L, K)
        return np.einsum("jl,...lk->...jk", speeds(spec, eps), f)

    eye = np.eye(d)

    def diffusion(u):
        dB = np.asarray(spec.dB(u), float)
        return eye[:, :, None, None] * dB[..., None, None, :, :]

    u_lo = tuple(np.broadcast_to(spec.u_lo, (K,)))
    u_hi = tuple(np.broadcast_to(spec.u_hi, (K,)))
    model = RelaxModel(
        name=name, dims=dims, flux_mat=flux_mat, source=source, symmetrizer=symmetrizer,
        state_box=make_box(u_lo, u_hi, spec.w_bound, n - K),
        eps_max=1.0, u_flux=u_flux,
        params={"K": K, "d": d, "N": spec.N, "N_prime": spec.N_prime,
                "theta": spec.theta, "mu": spec.mu},
    )
    target = TargetPDE(m=K, d=d, name=name, advection=spec.dF, diffusion=diffusion)
    return model, target
