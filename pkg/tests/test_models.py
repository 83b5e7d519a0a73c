import numpy as np
import pytest
from hypothesis import given, strategies as st

from relaxlab.core import ConstructionError
from relaxlab.criteria import SamplePlan, check_condition_iii, check_condition_iv, limit_coefficients
from relaxlab.models import (
    MODEL_NAMES, NlDiffSpec, ViscousConsSpec, build_model, build_nldiff, build_viscous_cons,
    default_scalar_spec, list_presets,
)
from relaxlab.models import kinetic, lbe
from relaxlab.models.cde1d import Cde1dSpec, subcharacteristic_eps_max
from relaxlab.models.general_hp import b_matrix, h_matrix
from relaxlab.models.registry import trivial_general_hp_spec

from conftest import cde1d


# ---------------------------------------------------------------- registry

def test_every_builtin_model_has_a_preset():
    names = list_presets()
    for m in MODEL_NAMES:
        assert m in names


def test_unknown_preset_and_parameter():
    with pytest.raises(KeyError):
        build_model("nosuch")
    with pytest.raises(KeyError):
        build_model("cde1d", bogus=1)


# ---------------------------------------------------------------- cde1d

def test_cde1d_heat_symmetrizer_is_identity(heat_cde1d):
    model, _ = heat_cde1d
    U = np.array([[1.0, 0.3]])
    np.testing.assert_array_equal(model.symmetrizer(U, 0.4)[0], np.eye(2))
    A = model.flux_mat(U, 0.4)[0, 0]
    np.testing.assert_array_equal(A, [[0, 1], [1, 0]])


def test_cde1d_eps_max_from_subcharacteristic_bound():
    spec = Cde1dSpec(f=lambda u: u, df=lambda u: 1 + 0 * u, b=lambda u: u ** 2 / 2, db=lambda u: u,
                     u_range=(0.5, 1.5))
    assert subcharacteristic_eps_max(spec) == pytest.approx(0.9 * np.sqrt(0.5), rel=1e-12)


def test_cde1d_symmetrizer_value():
    model, _ = cde1d(f=lambda u: u, df=lambda u: 1 + 0 * u, b=lambda u: u ** 2, db=lambda u: 2 * u)
    np.testing.assert_allclose(model.symmetrizer(np.array([1.0, 0.0]), 0.1), [[2, 0.1], [0.1, 1]])


@given(st.floats(0.2, 1.9), st.floats(0.0, 3.0))
def test_cde1d_symmetrizer_definite_iff_subcharacteristic(u, eps):
    model, _ = cde1d(f=lambda v: v ** 2 / 2, df=lambda v: v, b=lambda v: v ** 2 / 2, db=lambda v: v)
    lam = np.linalg.eigvalsh(model.symmetrizer(np.array([u, 0.0]), eps))
    margin = np.sqrt(u) - eps * u
    if abs(margin) > 1e-9:
        assert (lam.min() > 0) == (margin > 0)


def test_cde1d_boundary_witness():
    model, _ = build_model("cde1d")
    bad = SamplePlan(eps_values=(10.0,))
    res = check_condition_iii(model, bad)
    assert not res.passed and res.witness_state is not None and res.witness_eps == 10.0


# ---------------------------------------------------------------- viscous-cons

def test_viscous_scalar_symmetrizer_by_hand():
    nu = 0.7
    spec = ViscousConsSpec(d=1, n_t=1, a=1.0, f=lambda u: 0 * u[..., None, :], df=lambda u: 0 * u[..., None, :, None],
                           B=lambda u: nu + 0 * u[..., None, None, :, None],
                           eta_uu=lambda u: np.ones(u.shape[:-1] + (1, 1)))
    model, _ = build_viscous_cons(spec)
    eps = 0.3
    np.testing.assert_allclose(model.symmetrizer(np.array([1.0, 0.0]), eps),
                               np.diag([1.0, 1.0 / (nu + eps ** 2)]), rtol=1e-14)


def test_viscous_pure_diffusion_limit_is_B():
    model, target = build_model("viscous-cons:2d")
    u = model.state_box.u_part(2).sample(6, np.random.default_rng(0))
    _, D = limit_coefficients(model, u)
    np.testing.assert_allclose(D, target.diffusion(u), atol=1e-8)


def test_viscous_2d_symmetry_at_32_states():
    model, _ = build_model("viscous-cons:2d")
    U = model.state_box.sample(32, np.random.default_rng(3))
    for eps in (0.0, 0.5, 1.0):
        P = model.symmetrizer(U, eps)[:, None] @ model.flux_mat(U, eps)
        defect = np.abs(P - np.swapaxes(P, -1, -2)).max(axis=(-2, -1))
        assert np.all(defect <= 1e-8 * np.abs(P).max(axis=(-2, -1)))


# ---------------------------------------------------------------- nldiff

def _nldiff_linear():
    return build_nldiff(NlDiffSpec(d=1, p=lambda u: u, dp=lambda u: 1 + 0 * u, a=2.0))


def test_nldiff_symmetrizer_linear_case():
    model, _ = _nldiff_linear()
    np.testing.assert_allclose(model.symmetrizer(np.array([1.0, 0, 0]), 0.0), np.diag([1, 1, 1 / 3]))


def test_nldiff_dissipation_matrix_linear_case():
    from relaxlab.core import jac_source_wrt_state
    model, _ = _nldiff_linear()
    U = np.array([1.0, 0, 0])
    M = model.symmetrizer(U, 0.0) @ jac_source_wrt_state(model, U, 0.0)
    np.testing.assert_allclose(M, np.diag([0, -1, -1 / 3]), atol=1e-9)
    res = check_condition_iv(model)
    assert res.passed
    np.testing.assert_allclose(res.details["S"], np.diag([2, 2 / 3]), atol=1e-8)


def test_nldiff_limit_diffusion_is_p_prime():
    model, _ = build_model("nldiff")
    _, D = limit_coefficients(model, np.array([[1.0]]))
    assert D[0, 0, 0, 0, 0] == pytest.approx(3.0, rel=1e-8)


def test_nldiff_rejects_subcharacteristic_violation():
    with pytest.raises(ConstructionError):
        build_nldiff(NlDiffSpec(d=1, p=lambda u: u ** 3, dp=lambda u: 3 * u ** 2, a=1.0))


# ---------------------------------------------------------------- lbe-d2q5

def test_lbe_weights_sum_to_one():
    assert lbe.WEIGHTS.sum() == pytest.approx(1.0, abs=1e-15)


@given(st.floats(0.1, 2.0), st.floats(0.0, 1.0), st.floats(-2, 2), st.floats(-2, 2))
def test_lbe_moment_identities(u, eps, fx, fy):
    g = lbe.equilibrium(np.array(u), eps, lambda v: np.array([fx, fy]) * (1 + 0 * v[..., None]))
    assert g.sum() == pytest.approx(u, abs=1e-14 * max(1, abs(u)))
    np.testing.assert_allclose(lbe.VELOCITIES.T @ g, [eps * fx, eps * fy], atol=1e-14)


def test_lbe_first_moment_example():
    g = lbe.equilibrium(np.array(0.8), 0.1, lambda v: np.array([1.0, 0.0]))
    np.testing.assert_allclose(lbe.VELOCITIES.T @ g, [0.1, 0.0], atol=1e-15)


def test_lbe_transform_determinant():
    assert np.linalg.det(lbe.transform_matrix()) == pytest.approx(1.0, abs=1e-10)


def test_lbe_symmetrizer_symmetrises_both_directions():
    A0 = lbe.symmetrizer_matrix()
    for A in lbe.flux_matrices():
        np.testing.assert_allclose(A0 @ A, (A0 @ A).T, atol=1e-14)


def test_lbe_dissipation_block():
    from relaxlab.core import jac_source_wrt_state
    model, _ = build_model("lbe-d2q5")
    U = np.array([1.0, 0, 0, 0, 0])
    M = model.symmetrizer(U, 0.0) @ jac_source_wrt_state(model, U, 0.0)
    tau = 3 * 0.1
    np.testing.assert_allclose(-M[1:, 1:], (0.5 * np.ones((4, 4)) + np.eye(4)) / tau, atol=1e-8)


# ---------------------------------------------------------------- kinetic-bgk

def test_kinetic_default_maxwellians():
    spec = default_scalar_spec()
    u = np.linspace(0.3, 1.7, 9)[:, None]
    M = spec.M(u)[..., 0]
    np.testing.assert_allclose(M.sum(-1), u[:, 0] - spec.B(u)[:, 0] / spec.theta ** 2, atol=1e-15)
    np.testing.assert_allclose(M @ spec.lam[:, 0], spec.F(u)[:, 0, 0], atol=1e-14)


def test_kinetic_sigma_relations():
    sig = default_scalar_spec().sigma[:, 0]
    assert sig.sum() == pytest.approx(0, abs=1e-15)
    assert (sig ** 2).sum() == pytest.approx(1, abs=1e-15)


def test_kinetic_transform_determinant():
    spec = default_scalar_spec()
    u = np.linspace(0.3, 1.7, 5)[:, None]
    np.testing.assert_allclose(np.linalg.det(kinetic.transform_matrix(spec, u)), 1.0, atol=1e-10)


def test_kinetic_similarity_identity():
    spec = default_scalar_spec(mu=0.5)
    model, _ = kinetic.build_kinetic_bgk(spec)
    u = np.linspace(0.3, 1.7, 5)[:, None]
    U = np.concatenate([u, np.zeros((5, model.dims.r))], -1)
    P = kinetic.transform_matrix(spec, u)
    for eps in (0.0, 0.3):
        A = model.flux_mat(U, eps)[:, 0]
        At = np.eye(spec.L) * kinetic.speeds(spec, eps)[0]
        np.testing.assert_allclose(A @ P, P @ At, atol=1e-12)


# ---------------------------------------------------------------- general-hp

def test_general_hp_trivial_matches_heat_cde1d():
    gmodel, _ = build_model("general-hp")
    cmodel, _ = cde1d()
    U = np.array([[1.0, 0.2], [0.5, -0.4]])
    for eps in (0.0, 0.4):
        np.testing.assert_allclose(gmodel.flux_mat(U, eps), cmodel.flux_mat(U, eps))
        np.testing.assert_allclose(gmodel.source(U, eps), cmodel.source(U, eps))
        np.testing.assert_allclose(gmodel.symmetrizer(U, eps), np.broadcast_to(np.eye(2), (2, 2, 2)))
    spec = trivial_general_hp_spec()
    u = np.ones((1, 1))
    assert h_matrix(spec, u)[0, 0, 0] == 1 and b_matrix(spec, u)[0, 0, 0] == 1
