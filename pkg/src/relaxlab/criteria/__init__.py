"""Condition checks, limit-equation extraction and the Theorem-4 validator."""

from .conditions import (
    CONDITIONS, ConditionResult, CriteriaReport, SamplePlan, check_condition_i, check_condition_ii,
    check_condition_iii, check_condition_iv, check_condition_v, run_all,
)
from .limit import (
    LimitComparison, LimitOrderStudy, first_corrector, limit_coefficients, limit_order_study,
    limit_residual_compare,
)
from .theorem4 import (
    GeneratorExhausted, Theorem4Report, gen_theorem4_instance, instance_from, mutate_flip_s,
    validate_theorem4, z10_residuals,
)

__all__ = [
    "CONDITIONS", "ConditionResult", "CriteriaReport", "SamplePlan", "check_condition_i",
    "check_condition_ii", "check_condition_iii", "check_condition_iv", "check_condition_v", "run_all",
    "LimitComparison", "LimitOrderStudy", "first_corrector", "limit_coefficients", "limit_order_study",
    "limit_residual_compare", "GeneratorExhausted", "Theorem4Report", "gen_theorem4_instance",
    "instance_from", "mutate_flip_s", "validate_theorem4", "z10_residuals",
]
