"""Semilinear relaxation of the nonlinear diffusion equation ``u_t = Laplace p(u)``.

Works in the transformed variables ``v = eps * v_hat`` and
``w = w_hat - p(u)``, ordered as ``U = (u, v_1..v_d, w)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from ..core import ModelDims, RelaxModel, TargetPDE
from ._common import make_box, require, u_samples

Scalar = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class NlDiffSpec:
    d: int
    p: Scalar
    dp: Scalar
    a: float
    u_range: tuple[float, float] = (0.5, 1.5)
    w_bound: float = 1.0


def build_nldiff(spec: NlDiffSpec, name: str = "nldiff") -> tuple[RelaxModel, TargetPDE]:
    dp = spec.dp(u_samples(*spec.u_range)[:, 0])
    # the symmetrizer entry 1/(a^2 - p') needs the strict two-sided bound
    require(bool(np.all(dp > 0)), "nldiff needs p'(u) > 0 on the state box")
    require(bool(np.all(dp < spec.a ** 2)), "nldiff needs p'(u) < a^2 on the state box")
    d = spec.d
    n = d + 2
    dims = ModelDims(n=n, r=d + 1, d=d)
    a2 = spec.a ** 2

    def flux_mat(U, eps):
        U = np.asarray(U, float)
        dpu = spec.dp(U[..., 0])
        A = np.zeros(U.shape[:-1] + (d, n, n))
        for j in range(d):
            A[..., j, 0, 1 + j] = 1.0
            A[..., j, 1 + j, 0] = dpu
            A[..., j, 1 + j, d + 1] = 1.0
            A[..., j, d + 1, 1 + j] = a2 - dpu
        return A

    def source(U, eps):
        U = np.asarray(U, float)
        Q = -U.copy()
        Q[..., 0] = 0.0
        return Q

    def symmetrizer(U, eps):
        U = np.asarray(U, float)
        dpu = spec.dp(U[..., 0])
        diag = np.ones(U.shape[:-1] + (n,))
        diag[..., 0] = dpu
        diag[..., -1] = 1.0 / (a2 - dpu)
        return diag[..., :, None] * np.eye(n)

    def u_flux(U, eps):
        return np.asarray(U, float)[..., 1:d + 1][..., :, None]

    eye = np.eye(d)

    def diffusion(u):
        dpu = np.asarray(spec.dp(np.asarray(u)[..., 0]))
        return dpu[..., None, None, None, None] * eye[:, :, None, None]

    def advection(u):
        return np.zeros(np.asarray(u).shape[:-1] + (d, 1, 1))

    model = RelaxModel(
        name=name, dims=dims, flux_mat=flux_mat, source=source, symmetrizer=symmetrizer,
        state_box=make_box(spec.u_range[0], spec.u_range[1], spec.w_bound, d + 1),
        eps_max=1.0, u_flux=u_flux,
        params={"d": d, "a": spec.a, "u_range": list(spec.u_range)},
    )
    return model, TargetPDE(m=1, d=d, name=name, advection=advection, diffusion=diffusion)
