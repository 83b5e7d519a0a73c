"""Randomised validation of the general hyperbolic-parabolic relaxation model.

Instances are drawn so that the three structural assumptions hold by
construction: with ``C = (a0^12; a0^22)`` (an ``m x s`` column block of a0)
and an SPD ``sd x sd`` matrix ``S``, setting ``[D_jk^21, D_jk^22] = S_jk C^T``
makes the block matrix of ``a0 D_jk`` equal to ``diag(C) S diag(C)^T`` and
gives ``B = S^{-1}``.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from ..core import RelaxLabError
from ..models._common import is_spd
from ..models.general_hp import GeneralHpSpec, b_matrix, build_general_hp, check_assumptions, h_matrix
from .conditions import SamplePlan, run_all

DEFAULT_DIMS = ((2, 1, 1), (2, 2, 2), (3, 2, 2))
TOL_SYM = 1e-8
TOL_Z10 = 1e-10


class GeneratorExhausted(RelaxLabError):
    """The instance generator failed its self-check too many times."""


def _spd(rng: np.random.Generator, k: int, shift: float = 1e-2) -> np.ndarray:
    G = rng.normal(size=(k, k))
    return G @ G.T + shift * np.eye(k)


def _draw(rng: np.random.Generator, m: int, s: int, d: int):
    a0 = _spd(rng, m)
    a = np.stack([np.linalg.solve(a0, 0.5 * (R + R.T)) for R in rng.normal(size=(d, m, m))])
    S = _spd(rng, s * d, shift=0.1)
    return a0, a, S


def instance_from(a0: np.ndarray, a: np.ndarray, S: np.ndarray, s: int) -> GeneralHpSpec:
    """General-hp spec from a symmetrizer, advection matrices and the ``sd x sd`` S."""
    m = a0.shape[0]
    d = a.shape[0]
    Sb = S.reshape(d, s, d, s).transpose(0, 2, 1, 3)                  # S_jk blocks
    D21 = Sb @ a0[m - s:, :m - s]
    D22 = Sb @ a0[m - s:, m - s:]
    return GeneralHpSpec.constant(a0=a0, a=a, D21=D21, D22=D22)


def gen_theorem4_instance(seed: int, m: int, s: int, d: int, retries: int = 10) -> GeneralHpSpec:
    if not 1 <= s <= m:
        raise ValueError(f"need 1 <= s <= m, got m={m}, s={s}")
    if d < 1:
        raise ValueError("need d >= 1")
    rng = np.random.default_rng(seed)
    for _ in range(retries):
        spec = instance_from(*_draw(rng, m, s, d), s=s)
        try:
            check_assumptions(spec)
        except RelaxLabError:
            continue
        return spec
    raise GeneratorExhausted(f"no valid instance after {retries} draws (seed={seed}, dims={(m, s, d)})")


def mutate_flip_s(spec: GeneralHpSpec) -> GeneralHpSpec:
    """Flip the sign of S (and so of every D_jk), breaking assumption (II)."""
    u = np.zeros((1, spec.m))
    return GeneralHpSpec.constant(a0=spec.a0(u)[0], a=spec.a(u)[0],
                                  D21=-spec.D21(u)[0], D22=-spec.D22(u)[0])


def z10_residuals(spec: GeneralHpSpec, u: np.ndarray) -> tuple[float, float]:
    """Max deviations in ``B col(D^21) = diag(a0^12 T)`` and ``B col(D^22) = diag(a0^22 T)``."""
    m, s, d = spec.m, spec.s, spec.d
    B = b_matrix(spec, u)
    a0 = spec.a0(u)
    D21 = spec.D21(u)
    D22 = spec.D22(u)
    big21 = np.swapaxes(D21, -3, -2).reshape(u.shape[:-1] + (d * s, d * (m - s)))
    big22 = h_matrix(spec, u)
    eye = np.eye(d)
    rhs21 = np.einsum("jk,...ab->...jakb", eye, np.swapaxes(a0[..., :m - s, m - s:], -1, -2))
    rhs22 = np.einsum("jk,...ab->...jakb", eye, np.swapaxes(a0[..., m - s:, m - s:], -1, -2))
    rhs21 = rhs21.reshape(big21.shape)
    rhs22 = rhs22.reshape(big22.shape)
    r21 = float(np.abs(B @ big21 - rhs21).max(initial=0.0))
    r22 = float(np.abs(B @ big22 - rhs22).max(initial=0.0))
    return r21, r22


@dataclass
class TrialResult:
    seed: int
    dims: tuple
    a: bool
    b: bool
    c: bool
    conditions: bool
    z10: tuple
    failures: list = field(default_factory=list)
    witness: Optional[dict] = None

    @property
    def passed(self) -> bool:
        return self.a and self.b and self.c and self.conditions


def check_theorem41(spec: GeneralHpSpec, u: np.ndarray, seed: int = 0,
                    plan: Optional[SamplePlan] = None) -> TrialResult:
    """Assert (a) B, A0 SPD, (b) A0 Abar_j and A0 Ahat_j symmetric, (c) A0 Q_U = diag(0, -B) NSD."""
    model, target = build_general_hp(spec, check=False)
    m, d = spec.m, spec.d
    n = model.dims.n
    U = model.dims.join(u, np.zeros(u.shape[:-1] + (model.dims.r,)))
    failures = []
    B = b_matrix(spec, u)
    A0 = model.symmetrizer(U, 0.0)
    ok_a = is_spd(B, rel_sym=TOL_SYM) and is_spd(A0, rel_sym=TOL_SYM)
    if not ok_a:
        failures.append("a")
    # A_j(U; eps) = eps Abar_j + Ahat_j, so Ahat = A(.; 0) and Abar = A(.; 1) - A(.; 0)
    Ahat = model.flux_mat(U, 0.0)
    Abar = model.flux_mat(U, 1.0) - Ahat
    ok_b = True
    for mats in (Abar, Ahat):
        P = A0[..., None, :, :] @ mats
        defect = np.abs(P - np.swapaxes(P, -1, -2)).max()
        ok_b &= bool(defect <= TOL_SYM * max(1.0, float(np.abs(P).max())))
    if not ok_b:
        failures.append("b")
    QU = -np.diag(np.r_[np.zeros(m), np.ones(n - m)])
    AQ = A0 @ QU
    expect = np.zeros_like(AQ)
    expect[..., m:, m:] = -B
    sym_ok = np.abs(AQ - np.swapaxes(AQ, -1, -2)).max() <= TOL_SYM * max(1.0, float(np.abs(AQ).max()))
    eig = np.linalg.eigvalsh(0.5 * (AQ + np.swapaxes(AQ, -1, -2)))
    ok_c = bool(sym_ok and np.abs(AQ - expect).max() <= TOL_SYM * max(1.0, float(np.abs(B).max()))
                and eig[..., -1].max() <= TOL_SYM * max(1.0, float(np.abs(eig).max())))
    if not ok_c:
        failures.append("c")
    report = run_all(model, plan or SamplePlan(count=8, seed=seed), target)
    if not report.all_passed:
        failures.extend(f"condition-{r.condition}" for r in report.results if not r.passed)
    witness = None
    if failures:
        witness = {"a0": spec.a0(u[:1])[0].tolist(), "a": spec.a(u[:1])[0].tolist(),
                   "H": h_matrix(spec, u[:1])[0].tolist(), "B": B[0].tolist()}
    return TrialResult(seed=seed, dims=(m, spec.s, d), a=ok_a, b=ok_b, c=ok_c,
                       conditions=report.all_passed, z10=z10_residuals(spec, u), failures=failures,
                       witness=witness)


@dataclass
class Theorem4Report:
    trials: list
    wall_s: float

    @property
    def pass_rate(self) -> float:
        return sum(t.passed for t in self.trials) / max(1, len(self.trials))

    @property
    def all_passed(self) -> bool:
        return bool(self.trials) and all(t.passed for t in self.trials)

    @property
    def max_z10(self) -> float:
        return max((max(t.z10) for t in self.trials), default=0.0)

    def to_dict(self) -> dict:
        return {
            "pass_rate": self.pass_rate, "n_trials": len(self.trials), "max_z10_residual": self.max_z10,
            "trials": [{"seed": t.seed, "dims": list(t.dims), "passed": t.passed, "a": t.a, "b": t.b,
                        "c": t.c, "conditions": t.conditions, "z10": list(t.z10),
                        "failures": t.failures, "witness": t.witness} for t in self.trials],
        }


def validate_theorem4(trials: int = 100, seed: int = 0, dims_list: Sequence[tuple] = DEFAULT_DIMS,
                      mutate: bool = False) -> Theorem4Report:
    """Generate ``trials`` instances cycling through ``dims_list`` and check each one.

    Trial ``i`` uses seed ``seed + i``.  ``mutate=True`` flips the sign of S in
    every instance before checking (negative control).
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    start = time.perf_counter()
    out = []
    for i in range(trials):
        m, s, d = dims_list[i % len(dims_list)]
        spec = gen_theorem4_instance(seed + i, m, s, d)
        if mutate:
            spec = mutate_flip_s(spec)
        u = np.full((1, m), 1.0)
        out.append(check_theorem41(spec, u, seed=seed + i))
    return Theorem4Report(trials=out, wall_s=time.perf_counter() - start)
