"""relaxlab: a verification lab for relaxation approximations of hyperbolic-parabolic systems."""

__version__ = "0.1.0"

from .core import (  # noqa: E402
    ConstructionError, DomainError, EvaluationError, JacobianConfig, ModelDims, RelaxLabError,
    RelaxModel, StateBox, TargetPDE,
)
from .models import MODEL_NAMES, build_model, get_preset, list_presets  # noqa: E402

__all__ = [
    "__version__", "ConstructionError", "DomainError", "EvaluationError", "JacobianConfig", "ModelDims",
    "RelaxLabError", "RelaxModel", "StateBox", "TargetPDE", "MODEL_NAMES", "build_model", "get_preset",
    "list_presets",
]
