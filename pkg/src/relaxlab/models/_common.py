"""Helpers shared by the model builders."""

from __future__ import annotations

import numpy as np

from ..core import ConstructionError, StateBox

# number of u-samples used by construction-time checks
CHECK_SAMPLES = 65


def u_samples(lo, hi, count: int = CHECK_SAMPLES, seed: int = 0) -> np.ndarray:
    """Deterministic samples of the u-box: a dense line for scalars, random otherwise.

    Box corners are always included.
    """
    lo = np.atleast_1d(np.asarray(lo, float))
    hi = np.atleast_1d(np.asarray(hi, float))
    if lo.size == 1:
        return np.linspace(lo[0], hi[0], count)[:, None]
    rng = np.random.default_rng(seed)
    pts = lo + (hi - lo) * rng.random((count, lo.size))
    corners = np.array(np.meshgrid(*[(a, b) for a, b in zip(lo, hi)], indexing="ij"))
    corners = corners.reshape(lo.size, -1).T
    return np.concatenate([corners, pts])


def make_box(u_lo, u_hi, w_bound, r: int) -> StateBox:
    u_lo = np.atleast_1d(np.asarray(u_lo, float))
    u_hi = np.atleast_1d(np.asarray(u_hi, float))
    wb = np.broadcast_to(np.asarray(w_bound, float), (r,))
    return StateBox(np.concatenate([u_lo, -wb]), np.concatenate([u_hi, wb]))


def require(ok: bool, message: str) -> None:
    if not ok:
        raise ConstructionError(message)


def is_spd(mats: np.ndarray, rel_sym: float = 1e-10, rel_eig: float = 1e-10) -> bool:
    """True when every matrix in the batch is symmetric positive definite."""
    mats = np.asarray(mats, float)
    scale = np.max(np.abs(mats), axis=(-2, -1), keepdims=True)
    if np.any(np.abs(mats - np.swapaxes(mats, -1, -2)) > rel_sym * np.maximum(scale, 1e-300)):
        return False
    eig = np.linalg.eigvalsh(0.5 * (mats + np.swapaxes(mats, -1, -2)))
    return bool(np.all(eig[..., 0] > rel_eig * np.abs(eig[..., -1])) and np.all(eig[..., -1] > 0))


def block_diag_batch(*blocks: np.ndarray) -> np.ndarray:
    """Block-diagonal stacking of batched square matrices with equal leading shape."""
    lead = np.broadcast_shapes(*[b.shape[:-2] for b in blocks])
    size = sum(b.shape[-1] for b in blocks)
    out = np.zeros(lead + (size, size))
    i = 0
    for b in blocks:
        k = b.shape[-1]
        out[..., i:i + k, i:i + k] = b
        i += k
    return out
