import numpy as np
import pytest
from hypothesis import given, strategies as st

from relaxlab.core import (
    DomainError, EvaluationError, JacobianConfig, ModelDims, fd_jacobian, jac_flux_block,
    jac_source_wrt_eps, jac_source_wrt_state,
)
from relaxlab.models import build_model

from conftest import cde1d


def test_dims_split_join_round_trip():
    dims = ModelDims(n=5, r=4, d=2)
    U = np.arange(10.0).reshape(2, 5)
    u, w = dims.split(U)
    assert u.shape == (2, 1) and w.shape == (2, 4)
    np.testing.assert_array_equal(dims.join(u, w), U)


def test_dims_reject_bad_sizes():
    with pytest.raises(ValueError):
        ModelDims(n=2, r=3, d=1)


def test_source_jacobian_linear_heat_case():
    model, _ = cde1d()
    J = jac_source_wrt_state(model, np.array([1.0, 0.0]), 0.0)
    np.testing.assert_allclose(J, [[0, 0], [0, -1]], atol=1e-9)


def test_source_jacobian_burgers_flux_by_hand():
    # q = -w + eps f(u) with f = u^2/2, so dq/du = eps u = 2 at u = 2, eps = 1
    model, _ = cde1d(f=lambda u: u ** 2 / 2, df=lambda u: u, u_range=(0.1, 3.0))
    J = jac_source_wrt_state(model, np.array([2.0, 0.0]), 1.0)
    np.testing.assert_allclose(J, [[0, 0], [2, -1]], atol=1e-8)


def test_source_jacobian_step_halving_is_second_order():
    model, _ = build_model("kinetic-bgk")
    U = model.state_box.sample(4, np.random.default_rng(1))
    big = jac_source_wrt_state(model, U, 0.3, JacobianConfig(step_scale=1e-3))
    small = jac_source_wrt_state(model, U, 0.3, JacobianConfig(step_scale=5e-4))
    assert np.abs(big - small).max() <= 1e-5


def test_eps_derivative_equals_flux():
    model, _ = cde1d(f=lambda u: u, df=lambda u: 1 + 0 * u, u_range=(0.1, 4.0))
    np.testing.assert_allclose(jac_source_wrt_eps(model, np.array([3.0, 0.0])), [0, 3], atol=1e-7)


def test_eps_derivative_zero_without_flux(heat_cde1d):
    model, _ = heat_cde1d
    U = model.state_box.sample(8, np.random.default_rng(0))
    assert np.abs(jac_source_wrt_eps(model, U)).max() == 0


def test_eps_derivative_lbe_equilibrium_pattern():
    from relaxlab.models.lbe import VELOCITIES, WEIGHTS
    model, _ = build_model("lbe-d2q5", cx=1.0, cy=0.0)
    U = np.array([1.0, 0, 0, 0, 0])
    tau = 3 * 0.1
    expect = 3 * WEIGHTS[1:] * VELOCITIES[1:, 0] * 1.0 / tau
    np.testing.assert_allclose(jac_source_wrt_eps(model, U)[1:], expect, rtol=1e-6)


def test_flux_block_21_of_cde1d_is_db():
    model, _ = cde1d(b=lambda u: u ** 2 / 2, db=lambda u: u)
    u = np.linspace(0.2, 1.8, 7)
    U = np.stack([u, 0 * u], -1)
    np.testing.assert_allclose(jac_flux_block(model, U, 0.0, 0, "21")[..., 0, 0], u)


def test_flux_block_12_of_nldiff():
    model, _ = build_model("nldiff")
    blk = jac_flux_block(model, np.array([1.0, 0, 0]), 0.0, 0, "12")
    np.testing.assert_array_equal(blk, [[1.0, 0.0]])


def test_linear_model_flux_derivative_vanishes():
    model, _ = build_model("lbe-d2q5")
    U = model.state_box.sample(5, np.random.default_rng(2))
    dA = jac_flux_block(model, U, 0.2, 1, "22", "w")
    assert np.abs(dA).max() < 1e-9


def test_domain_checks():
    model, _ = cde1d()
    with pytest.raises(DomainError):
        jac_source_wrt_state(model, np.array([50.0, 0.0]), 0.0)
    with pytest.raises(DomainError):
        jac_source_wrt_state(model, np.array([1.0, 0.0]), -0.1)
    with pytest.raises(ValueError):
        jac_flux_block(model, np.array([1.0, 0.0]), 0.0, 0, "13")


def test_non_finite_jacobian_raises():
    with pytest.raises(EvaluationError), np.errstate(invalid="ignore", divide="ignore"):
        fd_jacobian(lambda x: np.log(x), np.array([0.0]))


@given(st.lists(st.floats(-2, 2), min_size=3, max_size=3))
def test_fd_jacobian_matches_analytic(x):
    x = np.asarray(x)
    fn = lambda v: np.stack([np.sin(v[..., 0]) * v[..., 1], v[..., 2] ** 3], -1)
    J = fd_jacobian(fn, x)
    exact = np.array([[np.cos(x[0]) * x[1], np.sin(x[0]), 0], [0, 0, 3 * x[2] ** 2]])
    np.testing.assert_allclose(J, exact, atol=1e-8)
