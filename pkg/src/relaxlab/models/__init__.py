"""Builtin relaxation models and their presets."""

from .cde1d import Cde1dSpec, build_cde1d
from .controls import build_control
from .general_hp import GeneralHpSpec, build_general_hp
from .kinetic import KineticBgkSpec, build_kinetic_bgk, default_scalar_spec
from .lbe import LbeD2q5Spec, build_lbe_d2q5
from .nldiff import NlDiffSpec, build_nldiff
from .registry import MODEL_NAMES, PRESETS, Preset, build_model, get_preset, list_presets, smooth_field
from .viscous import ViscousConsSpec, build_viscous_cons

__all__ = [
    "Cde1dSpec", "GeneralHpSpec", "KineticBgkSpec", "LbeD2q5Spec", "NlDiffSpec", "ViscousConsSpec",
    "build_cde1d", "build_control", "build_general_hp", "build_kinetic_bgk", "build_lbe_d2q5",
    "build_nldiff", "build_viscous_cons", "default_scalar_spec",
    "MODEL_NAMES", "PRESETS", "Preset", "build_model", "get_preset", "list_presets", "smooth_field",
]
