import numpy as np
import pytest
from hypothesis import given, strategies as st

from relaxlab.core import TargetPDE
from relaxlab.exact import advdiff_mode, exact_solution_library, heat_2d_product, heat_sine, library_names
from relaxlab.models import build_model, get_preset, smooth_field
from relaxlab.solver import (
    TABLEAUX, DivergenceError, Grid, GridField, TimePlan, exact_solution_library as reexported,
    imex_step, initial_state, solve_relax, solve_target_reference, spectral_radii, stable_dt, step_relax,
    write_field_csv,
)

from conftest import cde1d


def _const_target(a, D):
    return TargetPDE(m=1, d=1, advection=lambda u: np.full(np.shape(u)[:-1] + (1, 1, 1), float(a)),
                     diffusion=lambda u: np.full(np.shape(u)[:-1] + (1, 1, 1, 1), float(D)))


# ---------------------------------------------------------------- grid and field

def test_grid_basics():
    g = Grid.uniform(2, 16)
    assert g.spacing == pytest.approx((2 * np.pi / 16,) * 2)
    assert g.coords().shape == (16, 16, 2)
    assert g.coords()[1, 0, 0] == pytest.approx(2 * np.pi / 16)
    with pytest.raises(ValueError):
        Grid.uniform(1, 4)


def test_field_rejects_non_finite_and_wrong_shape():
    g = Grid.uniform(1, 8)
    with pytest.raises(Exception):
        GridField(g, np.full((8, 1), np.nan))
    with pytest.raises(ValueError):
        GridField(g, np.zeros((9, 1)))


def test_time_plan_validation():
    with pytest.raises(ValueError):
        TimePlan(0.0)
    with pytest.raises(ValueError):
        TimePlan(1.0, cfl=1.5)
    with pytest.raises(ValueError):
        TimePlan(1.0, scheme="rk4")


# ---------------------------------------------------------------- relaxation steps

def test_constant_state_is_steady(heat_cde1d):
    model, _ = heat_cde1d
    g = Grid.uniform(1, 16)
    f0 = GridField(g, np.tile([1.3, 0.0], (16, 1)))
    for sch in TABLEAUX:
        f1 = step_relax(model, f0, 0.1, 0.01, scheme=sch)
        np.testing.assert_array_equal(f1.values, f0.values)


@pytest.mark.parametrize("scheme", ["imex1", "imex2"])
def test_stiff_step_relaxes_to_local_equilibrium(scheme):
    model, _ = cde1d(f=lambda u: u ** 2 / 2, df=lambda u: u)
    g = Grid.uniform(1, 16)
    eps, u = 1e-3, 1.2
    f0 = GridField(g, np.tile([u, 0.7], (16, 1)))
    w = step_relax(model, f0, eps, 0.1, scheme=scheme).values[:, 1]
    # (w* + a eps f)/(1 + a) with a = dt gamma / eps^2 ~ 1e4
    assert np.all(np.abs(w - eps * u ** 2 / 2) < 1e-4)


def test_default_scheme_damps_stiff_deviation():
    # ARS(2,3,3) is not stiffly accurate: a stiff deviation shrinks by |R(inf)| ~ 0.732 per step
    model, _ = cde1d(f=lambda u: u ** 2 / 2, df=lambda u: u)
    g = Grid.uniform(1, 16)
    eps, u = 1e-4, 1.2
    U = np.tile([u, 0.7], (16, 1))
    dev0 = abs(U[0, 1] - eps * u ** 2 / 2)
    for _ in range(10):
        U = imex_step(model, U, eps, 0.1, g, TABLEAUX["ars233"])
    assert abs(U[0, 1] - eps * u ** 2 / 2) < 0.75 ** 10 * dev0


@given(st.floats(0.2, 1.8), st.floats(0.01, 1.0))
def test_spectral_radius_of_cde1d(u, eps):
    model, _ = cde1d(b=lambda v: v ** 2 / 2, db=lambda v: v)
    rho = spectral_radii(model, np.array([[u, 0.0]]), eps)
    assert rho[0, 0] == pytest.approx(np.sqrt(u), rel=1e-12)


def test_stable_dt_rule(heat_cde1d):
    model, _ = heat_cde1d
    g = Grid.uniform(1, 64)
    U = np.tile([1.0, 0.0], (64, 1))
    assert stable_dt(model, U, 0.05, g, 0.9) == pytest.approx(0.9 * 0.05 * g.spacing[0])


def test_linear_stability_ten_thousand_steps(heat_cde1d):
    model, _ = heat_cde1d
    g = Grid.uniform(1, 64)
    rng = np.random.default_rng(0)
    U = np.stack([1 + 0.3 * rng.standard_normal(64), 0.3 * rng.standard_normal(64)], -1)
    ref = np.array([U[:, 0].mean(), 0.0])
    e0 = np.sum((U - ref) ** 2)
    eps = 0.1
    dt = stable_dt(model, U, eps, g, 0.9)
    tab = TABLEAUX["ars233"]
    for _ in range(10_000):
        U = imex_step(model, U, eps, dt, g, tab)
    assert np.sum((U - ref) ** 2) <= e0


@pytest.mark.parametrize("name", ["cde1d", "viscous-cons", "nldiff", "kinetic-bgk", "general-hp:demo",
                                  "lbe-d2q5:nonlinear", "nldiff:2d"])
@pytest.mark.parametrize("spatial", ["central4", "llf"])
def test_conservation_of_u(name, spatial):
    preset = get_preset(name)
    model, _ = preset.build()
    d = model.dims.d
    g = Grid.uniform(d, 32 if d == 1 else 16)
    base, amp = preset.field_coefficients(model)
    init = initial_state(model, g, smooth_field(base, amp, d)(g.coords()), 0.05, "zero-w")
    sol = solve_relax(model, init, 0.05, TimePlan(0.05, spatial=spatial))
    assert sol.diagnostics["mass_drift"] <= 1e-12
    assert sol.t == pytest.approx(0.05, rel=1e-14)


def test_well_prepared_start_is_close_to_corrector():
    preset = get_preset("cde1d")
    model, _ = preset.build()
    g = Grid.uniform(1, 128)
    base, amp = preset.field_coefficients(model)
    init = initial_state(model, g, smooth_field(base, amp, 1)(g.coords()), 0.02)
    sol = solve_relax(model, init, 0.02, TimePlan(0.05))
    assert sol.diagnostics["w_minus_eps_w1"] < 1e-3


def test_divergence_is_reported_with_time(heat_cde1d):
    model, _ = heat_cde1d
    g = Grid.uniform(1, 32)
    rng = np.random.default_rng(1)
    init = GridField(g, np.stack([1 + 0.1 * rng.standard_normal(32), np.zeros(32)], -1))
    with pytest.raises(DivergenceError) as exc:
        solve_relax(model, init, 1.0, TimePlan(50.0, scheme="imex1", spatial="central4"))
    assert exc.value.t > 0


def test_initial_state_validation(heat_cde1d):
    model, _ = heat_cde1d
    g = Grid.uniform(1, 16)
    with pytest.raises(ValueError):
        initial_state(model, g, np.ones((16, 1)), 0.1, "bogus")
    with pytest.raises(ValueError):
        solve_relax(model, GridField(g, np.ones((16, 1))), 0.1, TimePlan(0.1))


# ---------------------------------------------------------------- reference solver

def test_reference_heat_sine():
    g = Grid.uniform(1, 512)
    x = g.coords()
    out = solve_target_reference(_const_target(0, 1), GridField(g, np.sin(x)), 0.1)
    assert np.abs(out.values - np.exp(-0.1) * np.sin(x)).max() <= 1e-3


def test_reference_identity_without_terms():
    g = Grid.uniform(1, 32)
    u0 = np.sin(g.coords())
    np.testing.assert_array_equal(solve_target_reference(_const_target(0, 0), GridField(g, u0), 1.0).values, u0)


def test_reference_second_order_convergence():
    exact = advdiff_mode(c=1.0, D=0.5, k=1)
    errs = []
    for n in (32, 64, 128):
        g = Grid.uniform(1, n)
        out = solve_target_reference(_const_target(1, 0.5), GridField(g, exact(g.coords(), 0.0)), 0.2)
        errs.append(np.abs(out.values - exact(g.coords(), 0.2)).max())
    orders = np.log2(np.array(errs[:-1]) / errs[1:])
    assert np.all(orders > 1.8)


# ---------------------------------------------------------------- exact solutions

def test_exact_advdiff_mode_formula():
    fn = exact_solution_library("advdiff-mode", c=0.7, D=0.3, k=2)
    x = np.linspace(0, 6, 11)[:, None]
    t = 0.4
    np.testing.assert_allclose(fn(x, t)[:, 0], np.exp(-0.3 * 4 * t) * np.sin(2 * x[:, 0] - 2 * 0.7 * t))


@given(st.floats(0, 6.3), st.floats(0, 6.3), st.floats(0.01, 1))
def test_exact_heat_2d_satisfies_pde(x, y, t):
    fn = heat_2d_product(D=0.5, k=(1, 2))
    h = 1e-3
    p = np.array([x, y])
    dt = (fn(p, t + h) - fn(p, t - h)) / (2 * h)
    lap = sum((fn(p + h * e, t) - 2 * fn(p, t) + fn(p - h * e, t)) / h ** 2 for e in np.eye(2))
    assert dt[0] == pytest.approx(0.5 * lap[0], abs=1e-3)


def test_exact_linear_system_mode_matches_scalar_case():
    a = np.array([[[0.7]]])
    D = np.array([[[[0.3]]]])
    fn = exact_solution_library("linear-system-mode", a=a, D=D, k=[1.0], base=[0.0], amp=[1.0])
    x = np.linspace(0, 6, 7)[:, None]
    np.testing.assert_allclose(fn(x, 0.5), advdiff_mode(0.7, 0.3, 1)(x, 0.5), atol=1e-13)


def test_exact_library_lookup():
    assert reexported is exact_solution_library
    assert {"heat-sine", "advdiff-mode", "heat-2d-product"} <= set(library_names())
    with pytest.raises(KeyError):
        exact_solution_library("nosuch")
    assert heat_sine(D=2)(np.array([[np.pi / 2]]), 0.0)[0, 0] == pytest.approx(1.0)


# ---------------------------------------------------------------- csv

def test_snapshot_csv(tmp_path):
    g = Grid.uniform(2, 8)
    f = GridField(g, np.arange(128.0).reshape(8, 8, 2))
    path = write_field_csv(f, tmp_path / "a.csv", ["u", "w"])
    lines = path.read_text().splitlines()
    assert lines[0] == "i0,i1,x0,x1,u,w" and len(lines) == 65
    again = write_field_csv(f, tmp_path / "b.csv", ["u", "w"])
    assert path.read_bytes() == again.read_bytes()
