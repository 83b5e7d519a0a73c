"""Two-component adversarial models, each breaking one structural condition.

All share ``n = 2, r = 1, d = 1`` and the heat equation as nominal target.
``control-k`` fails condition ``k`` and passes every other one.  The extra
``cubic`` control (``q = -w^3``) has a singular ``d_w q`` and therefore also
breaks the dissipation condition (iv).
"""

from __future__ import annotations

import numpy as np

from ..core import ModelDims, RelaxModel, TargetPDE
from ._common import make_box

CONTROLS = ("i", "ii", "iii", "iv", "v", "cubic")

_SWAP = np.array([[0.0, 1.0], [1.0, 0.0]])
_ROT = np.array([[0.0, 1.0], [-1.0, 0.0]])


def _const(mat):
    def fn(U, eps):
        return np.broadcast_to(mat, np.asarray(U).shape[:-1] + mat.shape).copy()
    return fn


def _relax(sign=-1.0, power=1):
    def fn(U, eps):
        U = np.asarray(U, float)
        Q = np.zeros_like(U)
        Q[..., 1] = sign * U[..., 1] ** power
        return Q
    return fn


def _leaky(U, eps):
    # nonzero u-row off equilibrium, but flat at w = 0
    U = np.asarray(U, float)
    return np.stack([U[..., 1] ** 2, -U[..., 1]], axis=-1)


def _spurious_equilibria(U, eps):
    # d_w q(u, 0; 0) = -1, yet q vanishes again at w = +-1/2
    U = np.asarray(U, float)
    Q = np.zeros_like(U)
    Q[..., 1] = -U[..., 1] * (1.0 - 4.0 * U[..., 1] ** 2)
    return Q


def _u_dependent_a11(U, eps):
    U = np.asarray(U, float)
    A = np.broadcast_to(_SWAP, U.shape[:-1] + (1, 2, 2)).copy()
    A[..., 0, 0, 0] = U[..., 0]
    return A


def build_control(which: str) -> tuple[RelaxModel, TargetPDE]:
    if which not in CONTROLS:
        raise KeyError(f"unknown control {which!r}; choose from {CONTROLS}")
    flux = _const(_SWAP[None])
    source = _relax()
    affine = True
    if which == "i":
        source = _leaky
    elif which == "ii":
        source = _spurious_equilibria
        affine = False
    elif which == "cubic":
        source = _relax(power=3)
        affine = False
    elif which == "iii":
        flux = _const(_ROT[None])
    elif which == "iv":
        source = _relax(sign=1.0)
    else:
        flux = _u_dependent_a11
    model = RelaxModel(
        name="control-ii:cubic" if which == "cubic" else f"control-{which}", dims=ModelDims(n=2, r=1, d=1), flux_mat=flux, source=source,
        symmetrizer=_const(np.eye(2)), state_box=make_box(0.5, 1.5, 1.0, 1), eps_max=1.0,
        source_affine_in_w=affine,
    )
    target = TargetPDE(
        m=1, d=1, name=model.name,
        advection=lambda u: np.zeros(np.asarray(u).shape[:-1] + (1, 1, 1)),
        diffusion=lambda u: np.ones(np.asarray(u).shape[:-1] + (1, 1, 1, 1)),
    )
    return model, target
