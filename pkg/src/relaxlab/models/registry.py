"""Named model presets, addressable as ``"<model>"`` or ``"<model>:<preset>"``."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from ..core import RelaxModel, TargetPDE
from ..exact import ExactFn, exact_solution_library
from .cde1d import Cde1dSpec, build_cde1d
from .controls import CONTROLS, build_control
from .general_hp import GeneralHpSpec, build_general_hp, full_diffusion
from .kinetic import build_kinetic_bgk, default_scalar_spec
from .lbe import LbeD2q5Spec, build_lbe_d2q5
from .nldiff import NlDiffSpec, build_nldiff
from .viscous import ViscousConsSpec, build_viscous_cons

MODEL_NAMES = ("cde1d", "viscous-cons", "nldiff", "lbe-d2q5", "kinetic-bgk", "general-hp")

# relative amplitude of the smooth test fields inside the u-box
FIELD_AMPLITUDE = 0.3


@dataclass(frozen=True)
class Preset:
    """A buildable parameter set plus the smooth problem used for limits and sweeps.

    ``base``/``amp`` fix the initial data ``base_i + amp_i sin(k.x + i)`` with
    ``k = (1, 2, 3)[:d]``; when omitted they come from the u-box.
    ``exact(params, base, amp)`` returns the limit solution when known.
    """

    key: str
    description: str
    factory: Callable[[dict], tuple[RelaxModel, TargetPDE]]
    params: dict = field(default_factory=dict)
    base: Optional[tuple] = None
    amp: Optional[tuple] = None
    exact: Optional[Callable[[dict, np.ndarray, np.ndarray], ExactFn]] = None

    def resolve(self, overrides: Optional[dict] = None) -> dict:
        params = dict(self.params)
        for k, v in (overrides or {}).items():
            if k not in params:
                raise KeyError(f"preset {self.key!r} has no parameter {k!r}; known: {sorted(params)}")
            params[k] = type(params[k])(v) if isinstance(params[k], (int, float)) else v
        return params

    def build(self, overrides: Optional[dict] = None) -> tuple[RelaxModel, TargetPDE]:
        return self.factory(self.resolve(overrides))

    def field_coefficients(self, model: RelaxModel) -> tuple[np.ndarray, np.ndarray]:
        m = model.dims.m
        lo = model.state_box.lo[:m]
        hi = model.state_box.hi[:m]
        base = np.asarray(self.base, float) if self.base is not None else 0.5 * (lo + hi)
        amp = np.asarray(self.amp, float) if self.amp is not None else FIELD_AMPLITUDE * 0.5 * (hi - lo)
        return np.broadcast_to(base, (m,)).copy(), np.broadcast_to(amp, (m,)).copy()

    def exact_solution(self, model: RelaxModel, overrides: Optional[dict] = None) -> Optional[ExactFn]:
        if self.exact is None:
            return None
        base, amp = self.field_coefficients(model)
        return self.exact(self.resolve(overrides), base, amp)


def smooth_field(base: np.ndarray, amp: np.ndarray, d: int) -> Callable[[np.ndarray], np.ndarray]:
    """``x (..., d) -> u (..., m)`` with ``u_i = base_i + amp_i sin(k.x + i)``."""
    k = np.arange(1, d + 1, dtype=float)
    phase = np.arange(len(base), dtype=float)

    def fn(x):
        x = np.asarray(x, float)
        return base + amp * np.sin((x @ k)[..., None] + phase)
    return fn


# ---------------------------------------------------------------- cde1d

def _cde1d(p):
    kind = p["kind"]
    if kind == "burgers":
        spec = Cde1dSpec(f=lambda u: u ** 2 / 2, df=lambda u: u, b=lambda u: u ** 2 / 2, db=lambda u: u,
                         u_range=(p["u_lo"], p["u_hi"]))
    elif kind == "heat":
        spec = Cde1dSpec(f=lambda u: 0 * u, df=lambda u: 0 * u, b=lambda u: u, db=lambda u: 1 + 0 * u,
                         u_range=(p["u_lo"], p["u_hi"]))
    elif kind == "linear":
        spec = Cde1dSpec(f=lambda u: u, df=lambda u: 1 + 0 * u, b=lambda u: u ** 2 / 2, db=lambda u: u,
                         u_range=(p["u_lo"], p["u_hi"]))
    else:
        raise KeyError(f"unknown cde1d kind {kind!r}")
    return build_cde1d(spec)


# ---------------------------------------------------------------- viscous-cons

def _viscous(p):
    if p["d"] == 1:
        spec = ViscousConsSpec(
            d=1, n_t=1, a=p["a"],
            f=lambda u: (u ** 2 / 2)[..., None, :],
            df=lambda u: u[..., None, :, None],
            B=lambda u: (u / 2)[..., None, None, :, None],
            eta_uu=lambda u: np.ones(u.shape[:-1] + (1, 1)),
            u_lo=(p["u_lo"],), u_hi=(p["u_hi"],),
        )
        return build_viscous_cons(spec)
    # d = 2, two components: Burgers-like fluxes, weakly coupled constant-plus-linear viscosity
    base = np.array([[0.6, 0.1], [0.1, 0.4]])
    cross = 0.1 * np.eye(2)

    def B(u):
        scale = 1.0 + 0.1 * u[..., 0]
        out = np.zeros(u.shape[:-1] + (2, 2, 2, 2))
        for j in range(2):
            out[..., j, j, :, :] = scale[..., None, None] * base
        out[..., 0, 1, :, :] = cross
        out[..., 1, 0, :, :] = cross
        return out

    def f(u):
        u1, u2 = u[..., 0], u[..., 1]
        return np.stack([np.stack([u1 ** 2 / 2, u1 * u2], -1), np.stack([u1 * u2, u2 ** 2 / 2], -1)], -2)

    def df(u):
        u1, u2 = u[..., 0], u[..., 1]
        z = 0 * u1
        J1 = np.stack([np.stack([u1, z], -1), np.stack([u2, u1], -1)], -2)
        J2 = np.stack([np.stack([u2, u1], -1), np.stack([z, u2], -1)], -2)
        return np.stack([J1, J2], -3)

    spec = ViscousConsSpec(
        d=2, n_t=2, a=p["a"], f=f, df=df, B=B,
        eta_uu=lambda u: np.broadcast_to(np.eye(2), u.shape[:-1] + (2, 2)).copy(),
        u_lo=(p["u_lo"],) * 2, u_hi=(p["u_hi"],) * 2,
    )
    return build_viscous_cons(spec, name="viscous-cons")


# ---------------------------------------------------------------- nldiff

def _nldiff(p):
    power = p["power"]
    spec = NlDiffSpec(
        d=p["d"], a=p["a"],
        p=lambda u: u ** power, dp=lambda u: power * u ** (power - 1),
        u_range=(p["u_lo"], p["u_hi"]),
    )
    return build_nldiff(spec)


# ---------------------------------------------------------------- lbe-d2q5

def _lbe(p):
    cx, cy, D = p["cx"], p["cy"], p["D"]
    if p["kind"] == "linear":
        spec = LbeD2q5Spec(
            f=lambda u: np.stack([cx * u, cy * u], -1),
            df=lambda u: np.stack([cx + 0 * u, cy + 0 * u], -1),
            D=lambda u: D + 0 * u, tau_scale=p["tau_scale"], u_range=(p["u_lo"], p["u_hi"]))
    else:
        spec = LbeD2q5Spec(
            f=lambda u: np.stack([cx * u ** 2 / 2, cy * u ** 2 / 2], -1),
            df=lambda u: np.stack([cx * u, cy * u], -1),
            D=lambda u: D * (1 + u ** 2) / 2, tau_scale=p["tau_scale"], u_range=(p["u_lo"], p["u_hi"]))
    return build_lbe_d2q5(spec)


def _lbe_exact(p, base, amp):
    if p["kind"] != "linear" or p["tau_scale"] != 1.0:
        return None
    return exact_solution_library("advdiff-mode", c=(p["cx"], p["cy"]), D=p["D"], k=(1, 2),
                                  base=float(base[0]), amp=float(amp[0]))


# ---------------------------------------------------------------- kinetic-bgk

def _kinetic(p):
    return build_kinetic_bgk(default_scalar_spec(mu=p["mu"], lam0=p["lam0"], theta=p["theta"]))


# ---------------------------------------------------------------- general-hp

_DEMO_A0 = np.array([[2.0, 0.5], [0.5, 1.0]])
_DEMO_S = 0.8


def demo_general_hp_spec() -> GeneralHpSpec:
    """m = 2, s = 1, d = 1 with a coupled constant symmetrizer."""
    a = np.linalg.solve(_DEMO_A0, np.array([[0.6, 0.2], [0.2, -0.3]]))
    D21 = _DEMO_S * _DEMO_A0[1:, :1]
    D22 = _DEMO_S * _DEMO_A0[1:, 1:]
    return GeneralHpSpec.constant(a0=_DEMO_A0, a=a[None], D21=D21[None, None], D22=D22[None, None])


def trivial_general_hp_spec() -> GeneralHpSpec:
    """m = s = d = 1, a0 = 1, a = 0, D^{22} = 1."""
    return GeneralHpSpec.constant(a0=[[1.0]], a=[[[0.0]]], D21=np.zeros((1, 1, 1, 0)), D22=[[[[1.0]]]],
                                  u_lo=(0.1,), u_hi=(2.0,))


def _general(p):
    if p["kind"] == "trivial":
        return build_general_hp(trivial_general_hp_spec())
    return build_general_hp(demo_general_hp_spec())


def _general_exact(p, base, amp):
    spec = trivial_general_hp_spec() if p["kind"] == "trivial" else demo_general_hp_spec()
    u = np.zeros((1, spec.m))
    return exact_solution_library("linear-system-mode", a=spec.a(u)[0], D=full_diffusion(spec, u)[0],
                                  k=[1.0], base=base, amp=amp, phase=np.arange(spec.m))


# ---------------------------------------------------------------- table

def _heat_exact(p, base, amp):
    return exact_solution_library("heat-sine", D=1.0, base=float(base[0]), amp=float(amp[0]))


def _control(which):
    key = "control-ii:cubic" if which == "cubic" else f"control-{which}"
    what = "conditions (ii) and (iv)" if which == "cubic" else f"condition ({which})"
    return Preset(key=key, description=f"negative control failing {what}", factory=lambda p: build_control(which))


PRESETS: dict[str, Preset] = {
    "cde1d": Preset("cde1d", "u_t + (u^2/2)_x = (u^2/2)_xx", _cde1d,
                    {"kind": "burgers", "u_lo": 0.1, "u_hi": 2.0}, base=(1.0,), amp=(0.5,)),
    "cde1d:heat": Preset("cde1d:heat", "u_t = u_xx", _cde1d,
                         {"kind": "heat", "u_lo": 0.1, "u_hi": 2.5}, base=(1.5,), amp=(0.5,),
                         exact=_heat_exact),
    "cde1d:linear": Preset("cde1d:linear", "u_t + u_x = (u^2/2)_xx", _cde1d,
                           {"kind": "linear", "u_lo": 0.5, "u_hi": 1.5}),
    "viscous-cons": Preset("viscous-cons", "scalar u_t + (u^2/2)_x = (u/2 u_x)_x", _viscous,
                           {"d": 1, "a": 1.0, "u_lo": 0.5, "u_hi": 2.0}, base=(1.0,), amp=(0.4,)),
    "viscous-cons:2d": Preset("viscous-cons:2d", "two-component 2-D viscous system", _viscous,
                              {"d": 2, "a": 1.0, "u_lo": 0.5, "u_hi": 2.0}),
    "nldiff": Preset("nldiff", "u_t = (u^3)_xx", _nldiff,
                     {"d": 1, "power": 3, "a": 3.0, "u_lo": 0.5, "u_hi": 1.5}),
    "nldiff:2d": Preset("nldiff:2d", "u_t = Laplace u^3 in 2-D", _nldiff,
                        {"d": 2, "power": 3, "a": 3.0, "u_lo": 0.5, "u_hi": 1.5}),
    "nldiff:heat": Preset("nldiff:heat", "u_t = u_xx", _nldiff,
                          {"d": 1, "power": 1, "a": 2.0, "u_lo": 0.5, "u_hi": 1.5}, exact=_heat_exact),
    "lbe-d2q5": Preset("lbe-d2q5", "u_t + c.grad u = D Laplace u, constant c and D", _lbe,
                       {"kind": "linear", "cx": 1.0, "cy": 0.5, "D": 0.1, "tau_scale": 1.0,
                        "u_lo": 0.25, "u_hi": 1.75}, exact=_lbe_exact),
    "lbe-d2q5:nonlinear": Preset("lbe-d2q5:nonlinear", "Burgers-type flux, u-dependent D", _lbe,
                                 {"kind": "nonlinear", "cx": 1.0, "cy": 0.5, "D": 0.1, "tau_scale": 1.0,
                                  "u_lo": 0.25, "u_hi": 1.75}),
    "kinetic-bgk": Preset("kinetic-bgk", "scalar kinetic model, F = u^2/2, B = u^2/4", _kinetic,
                          {"mu": 0.0, "lam0": 3.0, "theta": 2.0}),
    "kinetic-bgk:mu": Preset("kinetic-bgk:mu", "as default with mu = 1", _kinetic,
                             {"mu": 1.0, "lam0": 3.0, "theta": 2.0}),
    "general-hp": Preset("general-hp", "trivial instance m = s = d = 1", _general,
                         {"kind": "trivial"}, exact=_general_exact),
    "general-hp:demo": Preset("general-hp:demo", "m = 2, s = 1 coupled instance", _general,
                              {"kind": "demo"}, exact=_general_exact),
    **{_control(w).key: _control(w) for w in CONTROLS},
}


def get_preset(name: str) -> Preset:
    try:
        return PRESETS[name]
    except KeyError:
        raise KeyError(f"unknown model {name!r}; known: {', '.join(sorted(PRESETS))}") from None


def build_model(name: str, **overrides) -> tuple[RelaxModel, TargetPDE]:
    return get_preset(name).build(overrides)


def list_presets() -> list[str]:
    return sorted(PRESETS)
