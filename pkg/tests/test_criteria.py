import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from relaxlab.criteria import (
    CONDITIONS, SamplePlan, check_condition_i, check_condition_ii, check_condition_v, first_corrector,
    gen_theorem4_instance, limit_order_study, limit_residual_compare, mutate_flip_s, run_all,
    validate_theorem4, z10_residuals,
)
from relaxlab.criteria.theorem4 import check_theorem41, instance_from
from relaxlab.models import build_model, get_preset, smooth_field
from relaxlab.models.controls import build_control
from relaxlab.models.general_hp import b_matrix, build_general_hp, h_matrix

from conftest import cde1d

BUILTIN = ["cde1d", "cde1d:heat", "cde1d:linear", "viscous-cons", "viscous-cons:2d", "nldiff", "nldiff:2d",
           "nldiff:heat", "lbe-d2q5", "lbe-d2q5:nonlinear", "kinetic-bgk", "kinetic-bgk:mu", "general-hp",
           "general-hp:demo"]


# ---------------------------------------------------------------- conditions

@pytest.mark.parametrize("name", BUILTIN)
def test_builtin_presets_pass_every_condition(name):
    model, target = build_model(name)
    report = run_all(model, SamplePlan(count=32), target)
    assert report.all_passed, report.to_json()


@pytest.mark.parametrize("which", ["i", "ii", "iii", "iv", "v"])
def test_each_control_fails_exactly_its_condition(which):
    model, target = build_control(which)
    report = run_all(model, SamplePlan(), target)
    failed = [r.condition for r in report.results if not r.passed]
    assert failed == [which]


def test_cubic_source_fails_singular_jacobian_check():
    model, target = build_control("cubic")
    res = check_condition_ii(model)
    assert not res.passed and "b" in json.dumps(res.details)
    assert not run_all(model, SamplePlan(), target).result("iv").passed


def test_failures_carry_witnesses():
    for which in ("i", "ii", "iii", "iv", "v"):
        model, target = build_control(which)
        for r in run_all(model, SamplePlan(), target).results:
            if not r.passed:
                assert r.witness_state is not None and r.witness_eps is not None


def test_condition_i_witness_value_zero_for_cde1d(heat_cde1d):
    res = check_condition_i(heat_cde1d[0])
    assert res.passed and res.metric == 0


def test_condition_v_cde1d_and_kinetic():
    for name in ("cde1d", "kinetic-bgk"):
        model, target = build_model(name)
        assert check_condition_v(model, SamplePlan(), target).passed


def test_report_json_schema():
    model, target = build_model("cde1d")
    doc = json.loads(run_all(model, SamplePlan(count=4), target).to_json())
    assert doc["schema_version"] == 1 and doc["model"] == "cde1d"
    assert [c["condition"] for c in doc["conditions"]] == list(CONDITIONS)
    for c in doc["conditions"]:
        assert {"verdict", "metric", "tolerance", "witness_state", "witness_eps"} <= set(c)


def test_sample_plan_is_seeded_and_adds_zero():
    model, _ = build_model("nldiff")
    a = SamplePlan(seed=4).states(model)
    b = SamplePlan(seed=4).states(model)
    np.testing.assert_array_equal(a, b)
    assert SamplePlan(eps_values=(0.5,)).eps_values == (0.0, 0.5)
    with pytest.raises(ValueError):
        SamplePlan(count=0)


# ---------------------------------------------------------------- first corrector

@given(st.floats(0.2, 1.8), st.floats(-3, 3))
def test_first_corrector_heat_case(u, g):
    model, _ = cde1d()
    w1 = first_corrector(model, np.array([u]), np.array([[g]]))
    assert w1[0] == pytest.approx(-g, abs=1e-8)


def test_first_corrector_zero_gradient_no_flux(heat_cde1d):
    w1 = first_corrector(heat_cde1d[0], np.array([[1.0]]), np.zeros((1, 1, 1)))
    assert np.abs(w1).max() < 1e-12


def test_first_corrector_lbe_constant_state():
    from relaxlab.models.lbe import VELOCITIES, WEIGHTS
    model, _ = build_model("lbe-d2q5")
    w1 = first_corrector(model, np.array([1.0]), np.zeros((2, 1)))
    expect = 3 * WEIGHTS[1:] * (VELOCITIES[1:] @ np.array([1.0, 0.5]))
    np.testing.assert_allclose(w1, expect, rtol=1e-7)


# ---------------------------------------------------------------- limit oracle

H_FINE = 2 * np.pi / 128


def _field(name, **kw):
    preset = get_preset(name)
    model, target = preset.build(kw)
    base, amp = preset.field_coefficients(model)
    return model, target, smooth_field(base, amp, model.dims.d)


def test_limit_cde1d_burgers_manufactured_field():
    model, target, _ = _field("cde1d", u_hi=2.5)
    fn = smooth_field(np.array([1.5]), np.array([0.5]), 1)
    assert limit_residual_compare(model, target, fn, H_FINE).worst <= 1e-5


def test_limit_linear_nldiff_is_exact():
    model, target, fn = _field("nldiff:heat")
    assert limit_residual_compare(model, target, fn, H_FINE).worst <= 1e-8


def test_limit_lbe_detects_wrong_relaxation_time():
    model, target, fn = _field("lbe-d2q5")
    assert limit_residual_compare(model, target, fn, H_FINE).worst <= 1e-5
    model, target, fn = _field("lbe-d2q5", tau_scale=1.1)
    assert limit_residual_compare(model, target, fn, H_FINE).worst > 1e-2


def test_limit_order_study_converges():
    model, target, fn = _field("viscous-cons")
    study = limit_order_study(model, target, fn, [2 * np.pi / n for n in (32, 64, 128)])
    assert study.converging and min(study.orders) >= 2


def test_limit_rejects_bad_spacing():
    model, target, fn = _field("cde1d")
    with pytest.raises(ValueError):
        limit_residual_compare(model, target, fn, 0.0)


# ---------------------------------------------------------------- theorem 4

def test_trivial_instance_from_generator_pieces():
    spec = instance_from(np.eye(1), np.zeros((1, 1, 1)), np.eye(1), s=1)
    u = np.ones((1, 1))
    assert h_matrix(spec, u)[0, 0, 0] == 1
    assert check_theorem41(spec, u).passed


@given(st.integers(0, 10_000), st.sampled_from([(2, 1, 1), (2, 2, 2), (3, 2, 2), (3, 1, 2)]))
def test_generated_instances_are_valid(seed, dims):
    spec = gen_theorem4_instance(seed, *dims)
    u = np.ones((1, spec.m))
    assert abs(np.linalg.det(h_matrix(spec, u)[0])) > 0
    assert max(z10_residuals(spec, u)) <= 1e-10
    res = check_theorem41(spec, u, seed=seed)
    assert res.a and res.b and res.c


def test_generator_is_deterministic():
    a = gen_theorem4_instance(7, 3, 2, 2)
    b = gen_theorem4_instance(7, 3, 2, 2)
    u = np.ones((1, 3))
    np.testing.assert_array_equal(b_matrix(a, u), b_matrix(b, u))


def test_generator_rejects_bad_dims():
    with pytest.raises(ValueError):
        gen_theorem4_instance(0, 1, 2, 1)


def test_validator_hundred_trials_and_mutant():
    rep = validate_theorem4(trials=100, seed=0)
    assert rep.pass_rate == 1.0 and rep.max_z10 <= 1e-10
    bad = validate_theorem4(trials=6, seed=0, mutate=True)
    assert bad.pass_rate == 0.0
    assert all(not t.a and t.witness is not None for t in bad.trials)


def test_mutated_instance_breaks_conditions():
    spec = mutate_flip_s(gen_theorem4_instance(3, 2, 1, 1))
    model, target = build_general_hp(spec, check=False)
    assert not run_all(model, SamplePlan(count=8), target).all_passed


def test_validator_rejects_zero_trials():
    with pytest.raises(ValueError):
        validate_theorem4(trials=0)
