"""Sampled certification of the five structural conditions (i)-(v).

Each check evaluates the model on a deterministic set of states and returns a
``ConditionResult``.  A failing result always carries the worst sample as a
witness.  Conditions (ii), (iv) and (v) are statements at equilibrium
``(u, 0; 0)``; (i) uses the full sampled states and (iii) every eps of the plan.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np

from ..core import (
    JacobianConfig, RelaxModel, StateBox, TargetPDE, jac_flux_block, jac_source_wrt_state,
)

SCHEMA_VERSION = 1

TOL_SOURCE_TOP = 1e-14       # (i) relative size of the u-rows of Q
TOL_EQUILIBRIUM = 1e-12      # (ii a) |q(u, 0; 0)|
TOL_SINGULAR = 1e-8          # (ii b) sigma_min / max(sigma_max, 1) of d_w q
SCAN_FACTOR = 1e-3           # (ii c) |q(u, w; 0)| >= SCAN_FACTOR * sigma_min * |w|
TOL_SYMMETRY = 1e-8          # (iii) relative asymmetry of A0 A_j and A0
TOL_EIG_RATIO = 1e-10        # (iii) lambda_min / lambda_max of A0
TOL_DISSIPATION = 1e-8       # (iv) off-diagonal blocks; lambda_min(S) / max(lambda_max(S), abs(A0))
TOL_COMPAT = 1e-8            # (v) A^11 and d_u A^11

CONDITIONS = ("i", "ii", "iii", "iv", "v")


@dataclass(frozen=True)
class SamplePlan:
    """Which states and eps values the checks visit.

    ``box=None`` uses the model's state box; ``eps_values=None`` uses
    ``(0, eps_max/4, eps_max/2, eps_max)``.
    """

    count: int = 32
    seed: int = 0
    box: Optional[StateBox] = None
    eps_values: Optional[tuple] = None

    def __post_init__(self):
        if self.count < 1:
            raise ValueError("sample count must be >= 1")
        if self.eps_values is not None:
            vals = tuple(float(e) for e in self.eps_values)
            if 0.0 not in vals:
                vals = (0.0,) + vals
            if min(vals) < 0:
                raise ValueError("eps values must be nonnegative")
            object.__setattr__(self, "eps_values", vals)

    def states(self, model: RelaxModel) -> np.ndarray:
        box = self.box or model.state_box
        return box.sample(self.count, np.random.default_rng(self.seed))

    def equilibria(self, model: RelaxModel) -> np.ndarray:
        U = self.states(model)
        U[..., model.dims.m:] = 0.0
        return U

    def eps_list(self, model: RelaxModel) -> tuple:
        if self.eps_values is not None:
            return self.eps_values
        e = model.eps_max
        return (0.0, e / 4, e / 2, e)


@dataclass
class ConditionResult:
    condition: str
    passed: bool
    metric: float
    tolerance: float
    witness_state: Optional[list] = None
    witness_eps: Optional[float] = None
    details: dict = field(default_factory=dict)

    @property
    def verdict(self) -> str:
        return "pass" if self.passed else "fail"


@dataclass
class CriteriaReport:
    model: str
    results: list

    @property
    def all_passed(self) -> bool:
        return all(r.passed for r in self.results)

    def result(self, condition: str) -> ConditionResult:
        for r in self.results:
            if r.condition == condition:
                return r
        raise KeyError(condition)

    def to_records(self) -> list[dict]:
        out = []
        for r in self.results:
            rec = asdict(r)
            rec.pop("passed")
            rec["verdict"] = r.verdict
            rec["model"] = self.model
            out.append(rec)
        return out

    def to_json(self) -> str:
        doc = {"schema_version": SCHEMA_VERSION, "model": self.model,
               "all_passed": self.all_passed, "conditions": self.to_records()}
        return json.dumps(_plain(doc), indent=2, sort_keys=True)


def _plain(obj):
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    return obj


def _result(condition, passed, metric, tol, U=None, eps=None, **details) -> ConditionResult:
    return ConditionResult(
        condition=condition, passed=bool(passed), metric=float(metric), tolerance=float(tol),
        witness_state=None if U is None else [float(x) for x in np.asarray(U).ravel()],
        witness_eps=None if eps is None else float(eps),
        details=_plain(details),
    )


def _maxabs(a, axes=(-2, -1)):
    return np.max(np.abs(a), axis=axes)


# ------------------------------------------------------------------ (i)

def check_condition_i(model: RelaxModel, plan: SamplePlan = SamplePlan()) -> ConditionResult:
    """The u-rows of Q vanish identically."""
    U = plan.states(model)
    m = model.dims.m
    worst, w_state, w_eps = -1.0, None, None
    for eps in plan.eps_list(model):
        Q = np.asarray(model.source(U, eps), float)
        scale = np.maximum(1.0, np.max(np.abs(Q), axis=-1))
        rel = np.max(np.abs(Q[..., :m]), axis=-1) / scale
        i = int(np.argmax(rel))
        if rel[i] > worst:
            worst, w_state, w_eps = float(rel[i]), U[i], eps
    ok = worst <= TOL_SOURCE_TOP
    return _result("i", ok, worst, TOL_SOURCE_TOP, w_state, w_eps)


# ------------------------------------------------------------------ (ii)

def _dwq(model: RelaxModel, U: np.ndarray, cfg: JacobianConfig) -> np.ndarray:
    m = model.dims.m
    return jac_source_wrt_state(model, U, 0.0, cfg)[..., m:, m:]


def check_condition_ii(model: RelaxModel, plan: SamplePlan = SamplePlan(),
                       cfg: JacobianConfig = JacobianConfig()) -> ConditionResult:
    """Equilibrium at w = 0, invertible d_w q there, and no other zero of q nearby.

    The global "only if" is certified by a coarse radial scan of the w-box.
    """
    m, r = model.dims.m, model.dims.r
    U0 = plan.equilibria(model)
    q0 = np.asarray(model.source(U0, 0.0), float)[..., m:]
    eq_res = np.max(np.abs(q0), axis=-1) / np.maximum(1.0, np.max(np.abs(U0), axis=-1))
    ia = int(np.argmax(eq_res))

    J = _dwq(model, U0, cfg)
    sv = np.linalg.svd(J, compute_uv=False)
    # floor the reference at 1: q is already scaled by 1/eps^2, so a uniformly tiny
    # Jacobian (r = 1, q = -w^3) is singular even though sigma_min = sigma_max
    ratio = sv[..., -1] / np.maximum(sv[..., 0], 1.0)
    ib = int(np.argmin(ratio))

    # radial scan: coordinate axes and a few seeded random directions, 16 radii each
    rng = np.random.default_rng(plan.seed + 1)
    dirs = np.concatenate([np.eye(r), -np.eye(r), rng.normal(size=(4 * r, r))])
    dirs /= np.linalg.norm(dirs, axis=-1, keepdims=True)
    wb = np.minimum(np.abs(model.state_box.lo[m:]), np.abs(model.state_box.hi[m:]))
    radii = np.linspace(1.0 / 16, 1.0, 16)
    W = (radii[:, None, None] * dirs[None, :, :] * wb).reshape(-1, r)          # (k, r)
    Us = np.repeat(U0[:, None, :], W.shape[0], axis=1)
    Us[..., m:] = W
    q = np.asarray(model.source(Us, 0.0), float)[..., m:]
    c = SCAN_FACTOR * sv[..., -1]
    gap = np.linalg.norm(q, axis=-1) / np.linalg.norm(W, axis=-1) - c[:, None]
    ic = np.unravel_index(int(np.argmin(gap)), gap.shape)

    ok_a = eq_res[ia] <= TOL_EQUILIBRIUM
    ok_b = ratio[ib] > TOL_SINGULAR
    ok_c = gap[ic] >= 0
    details = {"equilibrium_residual": eq_res[ia], "sigma_ratio": ratio[ib], "scan_margin": gap[ic],
               "subchecks": {"a": bool(ok_a), "b": bool(ok_b), "c": bool(ok_c)}}
    if not ok_a:
        return _result("ii", False, eq_res[ia], TOL_EQUILIBRIUM, U0[ia], 0.0, failed="a", **details)
    if not ok_b:
        return _result("ii", False, ratio[ib], TOL_SINGULAR, U0[ib], 0.0, failed="b", **details)
    if not ok_c:
        return _result("ii", False, gap[ic], 0.0, Us[ic], 0.0, failed="c", **details)
    return _result("ii", True, ratio[ib], TOL_SINGULAR, U0[ib], 0.0, **details)


# ------------------------------------------------------------------ (iii)

def check_condition_iii(model: RelaxModel, plan: SamplePlan = SamplePlan()) -> ConditionResult:
    """A0 is SPD and every A0 A_j is symmetric, for all sampled (U, eps)."""
    U = plan.states(model)
    worst_sym = (-1.0, None, None)
    worst_a0 = (-1.0, None, None)
    worst_eig = (np.inf, None, None)
    for eps in plan.eps_list(model):
        A = np.asarray(model.flux_mat(U, eps), float)
        A0 = np.asarray(model.symmetrizer(U, eps), float)
        S = A0[..., None, :, :] @ A
        sym = _maxabs(S - np.swapaxes(S, -1, -2)) / np.maximum(_maxabs(S), 1e-300)
        sym = sym.max(axis=-1)
        a0s = _maxabs(A0 - np.swapaxes(A0, -1, -2)) / np.maximum(_maxabs(A0), 1e-300)
        eig = np.linalg.eigvalsh(0.5 * (A0 + np.swapaxes(A0, -1, -2)))
        ratio = eig[..., 0] / np.maximum(np.abs(eig[..., -1]), 1e-300)
        i = int(np.argmax(sym))
        if sym[i] > worst_sym[0]:
            worst_sym = (float(sym[i]), U[i], eps)
        i = int(np.argmax(a0s))
        if a0s[i] > worst_a0[0]:
            worst_a0 = (float(a0s[i]), U[i], eps)
        i = int(np.argmin(ratio))
        if ratio[i] < worst_eig[0]:
            worst_eig = (float(ratio[i]), U[i], eps, eig[i, 0])
    details = {"symmetry_defect": worst_sym[0], "a0_asymmetry": worst_a0[0], "eig_ratio": worst_eig[0]}
    if worst_sym[0] > TOL_SYMMETRY:
        return _result("iii", False, worst_sym[0], TOL_SYMMETRY, worst_sym[1], worst_sym[2],
                       failed="A0 A_j asymmetric", **details)
    if worst_a0[0] > TOL_SYMMETRY:
        return _result("iii", False, worst_a0[0], TOL_SYMMETRY, worst_a0[1], worst_a0[2],
                       failed="A0 asymmetric", **details)
    if not worst_eig[0] > TOL_EIG_RATIO:
        return _result("iii", False, worst_eig[0], TOL_EIG_RATIO, worst_eig[1], worst_eig[2],
                       failed="A0 not positive definite", min_eigenvalue=worst_eig[3], **details)
    return _result("iii", True, worst_sym[0], TOL_SYMMETRY, worst_sym[1], worst_sym[2], **details)


# ------------------------------------------------------------------ (iv)

def dissipation_matrix(model: RelaxModel, U0: np.ndarray,
                       cfg: JacobianConfig = JacobianConfig()) -> np.ndarray:
    """``M = A0 dQ/dU + (dQ/dU)^T A0`` at ``(u, 0; 0)``."""
    J = jac_source_wrt_state(model, U0, 0.0, cfg)
    A0 = np.asarray(model.symmetrizer(U0, 0.0), float)
    AJ = A0 @ J
    return AJ + np.swapaxes(AJ, -1, -2)


def check_condition_iv(model: RelaxModel, plan: SamplePlan = SamplePlan(),
                       cfg: JacobianConfig = JacobianConfig()) -> ConditionResult:
    """Block form ``M = -diag(0, S)`` with S SPD (the sufficient form)."""
    m = model.dims.m
    U0 = plan.equilibria(model)
    M = dissipation_matrix(model, U0, cfg)
    scale = np.maximum(_maxabs(M), 1e-300)
    off = np.maximum(_maxabs(M[..., :m, :m]), _maxabs(M[..., :m, m:])) / scale
    S = -M[..., m:, m:]
    eig = np.linalg.eigvalsh(0.5 * (S + np.swapaxes(S, -1, -2)))
    # eigenvalues of S are measured against the symmetrizer's own size as well
    ref = np.maximum(eig[..., -1], _maxabs(np.asarray(model.symmetrizer(U0, 0.0), float)))
    ratio = eig[..., 0] / np.maximum(ref, 1e-300)
    io, ie = int(np.argmax(off)), int(np.argmin(ratio))
    details = {"offdiag": off[io], "eig_ratio": ratio[ie]}
    if off[io] > TOL_DISSIPATION:
        return _result("iv", False, off[io], TOL_DISSIPATION, U0[io], 0.0, failed="u-blocks nonzero", **details)
    if not ratio[ie] > TOL_DISSIPATION:
        return _result("iv", False, ratio[ie], TOL_DISSIPATION, U0[ie], 0.0, failed="S not positive definite",
                       min_eigenvalue=eig[ie, 0], **details)
    return _result("iv", True, ratio[ie], TOL_DISSIPATION, U0[ie], 0.0, S=S[ie], **details)


# ------------------------------------------------------------------ (v)

def check_condition_v(model: RelaxModel, plan: SamplePlan = SamplePlan(),
                      target: Optional[TargetPDE] = None,
                      cfg: JacobianConfig = JacobianConfig()) -> ConditionResult:
    """``A_j^11(u, 0; 0) = 0`` and ``d_u A_j^11(u, 0; 0) = 0``.

    Models flagged ``a11_is_eps_advection`` must also satisfy
    ``A_j^11(U; eps) = eps a_j(u)`` on every sampled state (needs ``target``).
    """
    m, d = model.dims.m, model.dims.d
    U0 = plan.equilibria(model)
    A = np.asarray(model.flux_mat(U0, 0.0), float)
    scale = np.maximum(1.0, _maxabs(A, (-3, -2, -1)))
    worst = (-1.0, None, "")
    for j in range(d):
        a11 = _maxabs(A[..., j, :m, :m]) / scale
        da = _maxabs(jac_flux_block(model, U0, 0.0, j, "11", "u", cfg), (-3, -2, -1)) / scale
        for vals, what in ((a11, "A11"), (da, "dA11/du")):
            i = int(np.argmax(vals))
            if vals[i] > worst[0]:
                worst = (float(vals[i]), U0[i], f"{what} direction {j + 1}")
    details = {"a11": worst[0], "location": worst[2]}
    if worst[0] > TOL_COMPAT:
        return _result("v", False, worst[0], TOL_COMPAT, worst[1], 0.0, **details)
    if model.a11_is_eps_advection and target is not None:
        U = plan.states(model)
        a = np.asarray(target.advection(U[..., :m]), float)
        structural = -1.0
        for eps in plan.eps_list(model):
            A = np.asarray(model.flux_mat(U, eps), float)[..., :m, :m]
            dev = _maxabs(A - eps * a, (-3, -2, -1)) / np.maximum(1.0, _maxabs(A, (-3, -2, -1)))
            i = int(np.argmax(dev))
            if dev[i] > structural:
                structural, s_state, s_eps = float(dev[i]), U[i], eps
        details["eps_advection_defect"] = structural
        if structural > TOL_COMPAT:
            return _result("v", False, structural, TOL_COMPAT, s_state, s_eps,
                           failed="A11 differs from eps a_j", **details)
    return _result("v", True, worst[0], TOL_COMPAT, worst[1], 0.0, **details)


def run_all(model: RelaxModel, plan: SamplePlan = SamplePlan(), target: Optional[TargetPDE] = None,
            only: Optional[Sequence[str]] = None) -> CriteriaReport:
    checks = {
        "i": lambda: check_condition_i(model, plan),
        "ii": lambda: check_condition_ii(model, plan),
        "iii": lambda: check_condition_iii(model, plan),
        "iv": lambda: check_condition_iv(model, plan),
        "v": lambda: check_condition_v(model, plan, target),
    }
    names = CONDITIONS if only is None else tuple(only)
    return CriteriaReport(model=model.name, results=[checks[c]() for c in names])
