"""Closed-form solutions of constant-coefficient limit problems on periodic boxes."""

from __future__ import annotations

from typing import Callable

import numpy as np
from scipy.linalg import expm

ExactFn = Callable[[np.ndarray, float], np.ndarray]


def heat_sine(D: float = 1.0, k: int = 1, base: float = 0.0, amp: float = 1.0) -> ExactFn:
    """``u_t = D u_xx`` with ``u(x, 0) = base + amp sin(k x)``."""
    def fn(x, t):
        x = np.asarray(x, float)
        return (base + amp * np.exp(-D * k * k * t) * np.sin(k * x[..., 0]))[..., None]
    return fn


def advdiff_mode(c=1.0, D: float = 1.0, k=1, base: float = 0.0, amp: float = 1.0) -> ExactFn:
    """``u_t + c . grad u = D Laplace u``: ``base + amp e^{-D|k|^2 t} sin(k.(x - c t))``."""
    c = np.atleast_1d(np.asarray(c, float))
    k = np.broadcast_to(np.asarray(k, float), c.shape)

    def fn(x, t):
        x = np.asarray(x, float)
        phase = (x - c * t) @ k
        return (base + amp * np.exp(-D * float(k @ k) * t) * np.sin(phase))[..., None]
    return fn


def heat_2d_product(D: float = 1.0, k=(1, 1), base: float = 0.0, amp: float = 1.0) -> ExactFn:
    """``u_t = D Laplace u`` in 2-D with ``base + amp sin(k1 x) sin(k2 y)`` data."""
    k1, k2 = k

    def fn(x, t):
        x = np.asarray(x, float)
        decay = np.exp(-D * (k1 * k1 + k2 * k2) * t)
        return (base + amp * decay * np.sin(k1 * x[..., 0]) * np.sin(k2 * x[..., 1]))[..., None]
    return fn


def linear_system_mode(a, D, k, base, amp, phase=None) -> ExactFn:
    """``u_t + sum a_j u_j = sum d_j(D_jk d_k u)`` for constant matrices.

    Initial data ``base_i + amp_i sin(k.x + phase_i)``; evolved exactly with the
    Fourier symbol ``-(i sum k_j a_j + sum k_j k_l D_jl)``.
    """
    a = np.asarray(a, float)
    D = np.asarray(D, float)
    k = np.asarray(k, float)
    base = np.asarray(base, float)
    amp = np.asarray(amp, float)
    phase = np.zeros_like(amp) if phase is None else np.asarray(phase, float)
    symbol = -(1j * np.einsum("j,jab->ab", k, a) + np.einsum("j,l,jlab->ab", k, k, D))
    # sin(k.x + phase) = Im e^{i (k.x + phase)}
    start = amp * np.exp(1j * phase)

    def fn(x, t):
        x = np.asarray(x, float)
        vec = expm(symbol * t) @ start
        wave = np.exp(1j * (x @ k))
        return base + np.imag(wave[..., None] * vec)
    return fn


_LIBRARY = {
    "heat-sine": heat_sine,
    "advdiff-mode": advdiff_mode,
    "heat-2d-product": heat_2d_product,
    "linear-system-mode": linear_system_mode,
}


def exact_solution_library(name: str, **params) -> ExactFn:
    """Look up a closed-form solution family by name and bind its parameters."""
    try:
        family = _LIBRARY[name]
    except KeyError:
        raise KeyError(f"no exact solution named {name!r}; known: {sorted(_LIBRARY)}") from None
    return family(**params)


def library_names() -> list[str]:
    return sorted(_LIBRARY)
