"""Diffusive relaxation of the 1-D convection-diffusion equation.

Target ``u_t + f(u)_x = b(u)_xx``.  With ``w = eps * v`` the relaxation system
reads ``u_t + w_x/eps = 0``, ``w_t + b(u)_x/eps = (-w + eps f(u))/eps^2``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from ..core import ModelDims, RelaxModel, TargetPDE
from ._common import make_box, require, u_samples

Scalar = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class Cde1dSpec:
    f: Scalar
    df: Scalar
    b: Scalar
    db: Scalar
    u_range: tuple[float, float] = (0.1, 2.0)
    w_bound: float = 1.0
    eps_safety: float = 0.9


def subcharacteristic_eps_max(spec: Cde1dSpec, samples: int = 1001) -> float:
    """Largest eps with ``eps |f'| < sqrt(b')`` on the u-range, times the safety factor.

    Capped at 1 since the models are only defined for eps in (0, 1].
    """
    u = np.linspace(*spec.u_range, samples)
    slope = np.abs(spec.df(u))
    speed = np.sqrt(spec.db(u))
    with np.errstate(divide="ignore"):
        bound = np.where(slope > 0, speed / np.where(slope > 0, slope, 1.0), np.inf)
    return float(min(1.0, spec.eps_safety * bound.min()))


def build_cde1d(spec: Cde1dSpec, name: str = "cde1d") -> tuple[RelaxModel, TargetPDE]:
    u_chk = u_samples(*spec.u_range)[:, 0]
    require(bool(np.all(spec.db(u_chk) > 0)), "cde1d needs b'(u) > 0 on the state box")
    dims = ModelDims(n=2, r=1, d=1)

    def flux_mat(U, eps):
        U = np.asarray(U, float)
        A = np.zeros(U.shape[:-1] + (1, 2, 2))
        A[..., 0, 0, 1] = 1.0
        A[..., 0, 1, 0] = spec.db(U[..., 0])
        return A

    def source(U, eps):
        U = np.asarray(U, float)
        Q = np.zeros_like(U)
        Q[..., 1] = -U[..., 1] + eps * spec.f(U[..., 0])
        return Q

    def symmetrizer(U, eps):
        U = np.asarray(U, float)
        u = U[..., 0]
        A0 = np.empty(U.shape[:-1] + (2, 2))
        A0[..., 0, 0] = spec.db(u)
        A0[..., 0, 1] = A0[..., 1, 0] = eps * spec.df(u)
        A0[..., 1, 1] = 1.0
        return A0

    def u_flux(U, eps):
        return np.asarray(U, float)[..., None, 1:2]

    model = RelaxModel(
        name=name, dims=dims, flux_mat=flux_mat, source=source, symmetrizer=symmetrizer,
        state_box=make_box(spec.u_range[0], spec.u_range[1], spec.w_bound, 1),
        eps_max=subcharacteristic_eps_max(spec), u_flux=u_flux,
        params={"u_range": list(spec.u_range), "w_bound": spec.w_bound},
    )
    target = TargetPDE(
        m=1, d=1, name=name,
        advection=lambda u: np.asarray(spec.df(np.asarray(u)[..., 0]))[..., None, None, None],
        diffusion=lambda u: np.asarray(spec.db(np.asarray(u)[..., 0]))[..., None, None, None, None],
    )
    return model, target
