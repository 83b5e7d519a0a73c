"""Relaxation-model and target-PDE abstractions plus finite-difference Jacobians.

A relaxation model is the first-order system

    dU/dt + (1/eps) sum_j A_j(U; eps) dU/dx_j = (1/eps^2) Q(U; eps)

with U = (u, w), u the first ``m`` entries and w the last ``r``.  Every model
callback is vectorised: it accepts states of shape ``(..., n)`` and a scalar
``eps`` and broadcasts over the leading axes.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Literal, Optional

import numpy as np

MACHINE_EPS = np.finfo(float).eps

FluxCallback = Callable[[np.ndarray, float], np.ndarray]


class RelaxLabError(Exception):
    """Base class for errors raised by this package."""


class DomainError(RelaxLabError, ValueError):
    """A state lies outside the model's admissible box."""


class EvaluationError(RelaxLabError, ArithmeticError):
    """A callback or a derived quantity produced non-finite values."""


class ConstructionError(RelaxLabError, ValueError):
    """A model specification failed its construction-time sample checks."""


@dataclass(frozen=True)
class ModelDims:
    n: int
    r: int
    d: int

    def __post_init__(self):
        if self.n < 1:
            raise ConstructionError(f"n must be >= 1, got {self.n}")
        if not 1 <= self.r <= self.n - 1:
            raise ConstructionError(
                f"need 1 <= r <= n-1 (both u and w non-empty), got n={self.n}, r={self.r}")
        if not 1 <= self.d <= 3:
            raise ConstructionError(f"space dimension must be 1..3, got {self.d}")

    @property
    def m(self) -> int:
        return self.n - self.r

    def split(self, U: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Return views ``(u, w)`` of the last axis of ``U``."""
        U = np.asarray(U)
        if U.shape[-1] != self.n:
            raise ValueError(f"state has length {U.shape[-1]}, expected {self.n}")
        return U[..., : self.m], U[..., self.m:]

    def join(self, u: np.ndarray, w: np.ndarray) -> np.ndarray:
        u, w = _align(np.asarray(u, float), np.asarray(w, float))
        return np.concatenate([u, w], axis=-1)


def _align(u, w):
    # broadcast leading axes of u (..., m) and w (..., r) without touching the last axis
    lead = np.broadcast_shapes(u.shape[:-1], w.shape[:-1])
    return (np.broadcast_to(u, lead + u.shape[-1:]), np.broadcast_to(w, lead + w.shape[-1:]))


@dataclass(frozen=True)
class StateBox:
    """Per-entry closed interval ``lo <= U <= hi``."""

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.lo, float)
        hi = np.asarray(self.hi, float)
        if lo.shape != hi.shape or lo.ndim != 1:
            raise ConstructionError("state box bounds must be 1-D arrays of equal length")
        if np.any(lo > hi):
            raise ConstructionError("state box has lo > hi")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    def contains(self, U: np.ndarray, slack: float = 1e-12) -> bool:
        U = np.asarray(U)
        span = np.maximum(1.0, np.abs(self.hi - self.lo))
        return bool(np.all(U >= self.lo - slack * span) & np.all(U <= self.hi + slack * span))

    def sample(self, count: int, rng: np.random.Generator) -> np.ndarray:
        return self.lo + (self.hi - self.lo) * rng.random((count, self.lo.size))

    def u_part(self, m: int) -> "StateBox":
        return StateBox(self.lo[:m], self.hi[:m])


@dataclass(frozen=True)
class RelaxModel:
    """A relaxation system together with its candidate symmetrizer.

    ``flux_mat(U, eps)`` returns all direction matrices stacked, shape
    ``(..., d, n, n)``.  ``source`` returns ``(..., n)`` and ``symmetrizer``
    ``(..., n, n)``.  ``u_flux``, when given, is a conservative flux for the
    first ``m`` rows, shape ``(..., d, m)``, with ``d u_flux / dU`` equal to the
    top rows of ``A_j`` (used by the solver to keep the grid sum of u exact).
    """

    name: str
    dims: ModelDims
    flux_mat: FluxCallback
    source: FluxCallback
    symmetrizer: FluxCallback
    state_box: StateBox
    eps_max: float
    u_flux: Optional[FluxCallback] = None
    source_affine_in_w: bool = True
    # A_j^{11}(U; eps) == eps * a_j(u) with a_j the target advection matrix
    a11_is_eps_advection: bool = False
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.state_box.lo.size != self.dims.n:
            raise ConstructionError(
                f"state box has {self.state_box.lo.size} entries, model has n={self.dims.n}")
        if not self.eps_max > 0:
            raise ConstructionError("eps_max must be positive")

    def check_domain(self, U: np.ndarray) -> None:
        if not self.state_box.contains(U):
            raise DomainError(f"state outside admissible box of model {self.name!r}")


@dataclass(frozen=True)
class TargetPDE:
    """Target system ``u_t + sum_j a_j(u) u_{x_j} = sum_jk d_j (D_jk(u) d_k u)``.

    ``advection(u)`` has shape ``(..., d, m, m)`` and ``diffusion(u)`` shape
    ``(..., d, d, m, m)``.  ``exact_solution(x, t)`` maps points ``(..., d)`` to
    ``(..., m)`` when a closed form is known.
    """

    m: int
    d: int
    advection: Callable[[np.ndarray], np.ndarray]
    diffusion: Callable[[np.ndarray], np.ndarray]
    exact_solution: Optional[Callable[[np.ndarray, float], np.ndarray]] = None
    name: str = ""


@dataclass(frozen=True)
class JacobianConfig:
    step_scale: float = MACHINE_EPS ** (1.0 / 3.0)
    scheme: Literal["central", "forward"] = "central"

    def __post_init__(self):
        if not self.step_scale > 0:
            raise ValueError("step_scale must be positive")
        if self.scheme not in ("central", "forward"):
            raise ValueError(f"unknown difference scheme {self.scheme!r}")


DEFAULT_JAC = JacobianConfig()


def _finite(arr: np.ndarray, what: str) -> np.ndarray:
    if not np.all(np.isfinite(arr)):
        raise EvaluationError(f"non-finite values in {what}")
    return arr


def fd_jacobian(fn: Callable[[np.ndarray], np.ndarray], x: np.ndarray,
                cfg: JacobianConfig = DEFAULT_JAC) -> np.ndarray:
    """Finite-difference Jacobian of a vectorised function.

    ``fn`` maps ``(..., p)`` to ``(..., *out)``; the result has shape
    ``(..., *out, p)``.  The step for entry ``i`` is
    ``step_scale * max(1, |x_i|)``.
    """
    x = np.asarray(x, float)
    p = x.shape[-1]
    h = cfg.step_scale * np.maximum(1.0, np.abs(x))          # (..., p)
    eye = np.eye(p)
    shift = h[..., :, None] * eye                              # (..., p, p): row k = h_k e_k
    base = x[..., None, :]
    if cfg.scheme == "central":
        hi = fn(base + shift)
        lo = fn(base - shift)
        diff = (hi - lo) / _bcast(2.0 * h, hi.ndim)
    else:
        hi = fn(base + shift)
        f0 = fn(base)
        diff = (hi - f0) / _bcast(h, hi.ndim)
    diff = _finite(diff, "finite-difference Jacobian")
    # diff has shape (..., p, *out); move the perturbation axis to the end
    lead = x.ndim - 1
    return np.moveaxis(diff, lead, -1)


def _bcast(h: np.ndarray, ndim: int) -> np.ndarray:
    return h.reshape(h.shape + (1,) * (ndim - h.ndim))


def jac_source_wrt_state(model: RelaxModel, U: np.ndarray, eps: float,
                         cfg: JacobianConfig = DEFAULT_JAC) -> np.ndarray:
    """``dQ/dU`` at ``(U, eps)``, shape ``(..., n, n)``."""
    if eps < 0:
        raise DomainError("eps must be nonnegative")
    model.check_domain(U)
    return fd_jacobian(lambda V: model.source(V, eps), U, cfg)


def jac_source_wrt_eps(model: RelaxModel, U: np.ndarray,
                       cfg: JacobianConfig = DEFAULT_JAC) -> np.ndarray:
    """One-sided ``dQ/deps`` at ``eps = 0`` (the source is undefined for eps < 0)."""
    model.check_domain(U)
    U = np.asarray(U, float)
    h = cfg.step_scale
    d = (model.source(U, h) - model.source(U, 0.0)) / h
    return _finite(d, "eps-derivative of the source")


_BLOCKS = {"11", "12", "21", "22"}


def _block(A: np.ndarray, block: str, m: int) -> np.ndarray:
    rows = slice(None, m) if block[0] == "1" else slice(m, None)
    cols = slice(None, m) if block[1] == "1" else slice(m, None)
    return A[..., rows, cols]


def jac_flux_block(model: RelaxModel, U: np.ndarray, eps: float, j: int, block: str,
                   wrt: Optional[str] = None, cfg: JacobianConfig = DEFAULT_JAC) -> np.ndarray:
    """A block of ``A_j`` (``wrt=None``) or its derivative in ``u``, ``w`` or ``eps``.

    Derivatives in ``u``/``w`` append an axis of length ``m``/``r``.  The
    eps-derivative is one-sided at ``eps = 0`` and central otherwise.
    """
    if block not in _BLOCKS:
        raise ValueError(f"block must be one of {sorted(_BLOCKS)}")
    if not 0 <= j < model.dims.d:
        raise ValueError(f"direction {j} out of range for d={model.dims.d}")
    if eps < 0:
        raise DomainError("eps must be nonnegative")
    model.check_domain(U)
    U = np.asarray(U, float)
    m = model.dims.m

    def blk(V, e=eps):
        return _block(model.flux_mat(V, e)[..., j, :, :], block, m)

    if wrt is None:
        return _finite(blk(U), "flux matrix")
    if wrt in ("u", "w"):
        full = fd_jacobian(blk, U, cfg)
        return full[..., :m] if wrt == "u" else full[..., m:]
    if wrt == "eps":
        h = cfg.step_scale
        if eps == 0.0 or cfg.scheme == "forward":
            return _finite((blk(U, eps + h) - blk(U, eps)) / h, "eps-derivative of A")
        h = min(h, eps)
        return _finite((blk(U, eps + h) - blk(U, eps - h)) / (2 * h), "eps-derivative of A")
    raise ValueError(f"wrt must be None, 'u', 'w' or 'eps', got {wrt!r}")
