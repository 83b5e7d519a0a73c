"""D2Q5 lattice Boltzmann model for the 2-D convection-diffusion equation.

Kinetic form ``g_i,t + (1/eps) xi_i . grad g_i = (g_i^eq - g_i)/(eps^2 tau)``
with ``g_i^eq = w_i u + 3 eps w_i xi_i . f(u)``.  The model is expressed in
``U = (u, h_2, .., h_5)`` with ``h_i = g_i - w_i u``.

The relaxation time is tied to the target diffusion through ``tau = 3 D``:
the second moment of the D2Q5 weights is ``sum_i w_i xi_i xi_i^T = I/3``,
so the Chapman-Enskog diffusion of this model is ``tau/3``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from ..core import ModelDims, RelaxModel, TargetPDE
from ._common import make_box, require, u_samples

WEIGHTS = np.array([1 / 3, 1 / 6, 1 / 6, 1 / 6, 1 / 6])
VELOCITIES = np.array([[0, 0], [1, 0], [0, 1], [-1, 0], [0, -1]], dtype=float)

Fn = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class LbeD2q5Spec:
    """``f(u) -> (..., 2)``, ``df(u) -> (..., 2)``, ``D(u) -> (...)`` for scalar u."""

    f: Fn
    df: Fn
    D: Fn
    tau_scale: float = 1.0
    u_range: tuple[float, float] = (0.25, 1.75)
    h_bound: float = 1.0

    def tau(self, u):
        return self.tau_scale * 3.0 * np.asarray(self.D(u), float)


def equilibrium(u, eps: float, f: Fn) -> np.ndarray:
    """``g_i^eq`` for all five directions, shape ``(..., 5)``."""
    u = np.asarray(u, float)
    flux = np.asarray(f(u), float)
    return WEIGHTS * u[..., None] + 3.0 * eps * WEIGHTS * np.einsum("id,...d->...i", VELOCITIES, flux)


def transform_matrix() -> np.ndarray:
    """``P`` mapping distributions ``g`` to ``(u, h_2..h_5)``: ``U = P g``."""
    P = np.eye(5) - WEIGHTS[:, None] * np.ones(5)
    P[0, :] = 1.0
    return P


def flux_matrices() -> np.ndarray:
    """The constant direction matrices ``A_1, A_2``, shape ``(2, 5, 5)``."""
    A = np.zeros((2, 5, 5))
    for j in range(2):
        xi = VELOCITIES[:, j]
        rel = xi[1:] - xi[0]
        A[j, 0, 1:] = rel
        for row, i in enumerate(range(1, 5), start=1):
            A[j, row, 0] = WEIGHTS[i] * xi[i]
            A[j, row, 1:] = -WEIGHTS[i] * rel
            A[j, row, row] += xi[i]
    return A


def symmetrizer_matrix() -> np.ndarray:
    A0 = np.zeros((5, 5))
    A0[0, 0] = 1 / 6
    A0[1:, 1:] = 0.5 * np.ones((4, 4)) + np.eye(4)
    return A0


def build_lbe_d2q5(spec: LbeD2q5Spec, name: str = "lbe-d2q5") -> tuple[RelaxModel, TargetPDE]:
    u_chk = u_samples(*spec.u_range)[:, 0]
    require(bool(np.all(np.asarray(spec.D(u_chk)) > 0)), "lbe-d2q5 needs D(u) > 0 on the state box")
    dims = ModelDims(n=5, r=4, d=2)
    A = flux_matrices()
    A0 = symmetrizer_matrix()
    kept = slice(1, 5)

    def flux_mat(U, eps):
        U = np.asarray(U, float)
        return np.broadcast_to(A, U.shape[:-1] + A.shape).copy()

    def source(U, eps):
        U = np.asarray(U, float)
        u = U[..., 0]
        flux = np.asarray(spec.f(u), float)
        drive = 3.0 * eps * WEIGHTS[kept] * np.einsum("id,...d->...i", VELOCITIES[kept], flux)
        Q = np.zeros_like(U)
        Q[..., 1:] = (drive - U[..., 1:]) / spec.tau(u)[..., None]
        return Q

    def symmetrizer(U, eps):
        return np.broadcast_to(A0, np.asarray(U).shape[:-1] + (5, 5)).copy()

    def u_flux(U, eps):
        U = np.asarray(U, float)
        return np.einsum("id,...i->...d", VELOCITIES[kept], U[..., 1:])[..., None]

    def advection(u):
        return np.asarray(spec.df(np.asarray(u)[..., 0]), float)[..., :, None, None]

    def diffusion(u):
        D = np.asarray(spec.D(np.asarray(u)[..., 0]), float)
        return D[..., None, None, None, None] * np.eye(2)[:, :, None, None]

    model = RelaxModel(
        name=name, dims=dims, flux_mat=flux_mat, source=source, symmetrizer=symmetrizer,
        state_box=make_box(spec.u_range[0], spec.u_range[1], spec.h_bound, 4),
        eps_max=1.0, u_flux=u_flux,
        params={"tau_scale": spec.tau_scale, "u_range": list(spec.u_range)},
    )
    return model, TargetPDE(m=1, d=2, name=name, advection=advection, diffusion=diffusion)
