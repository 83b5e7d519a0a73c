import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from relaxlab.harness import SweepConfig, fit_order, load_sweep_csv, persist_result, run_sweep

HEAT = dict(model="cde1d:heat", cells=128, t_end=0.05)


# ---------------------------------------------------------------- order fit

def test_fit_order_exact_power_laws():
    assert fit_order([(0.1, 0.1), (0.05, 0.05), (0.025, 0.025)])[0] == pytest.approx(1.0, abs=1e-12)
    s, _, r = fit_order([(0.1, 0.01), (0.05, 0.0025), (0.025, 0.000625)])
    assert s == pytest.approx(2.0, abs=1e-12) and r < 1e-12


@given(st.floats(0.3, 3.0), st.floats(1e-3, 10.0))
def test_fit_order_recovers_slope(p, c):
    eps = np.array([0.1, 0.05, 0.025, 0.0125])
    assert fit_order(list(zip(eps, c * eps ** p)))[0] == pytest.approx(p, abs=1e-9)


def test_fit_order_with_seeded_noise():
    rng = np.random.default_rng(0)
    eps = 0.1 * 0.5 ** np.arange(6)
    err = eps * np.exp(0.02 * rng.standard_normal(6))
    assert abs(fit_order(list(zip(eps, err)))[0] - 1.0) < 0.05


@pytest.mark.parametrize("pts", [[(0.1, 1.0), (0.05, 0.5)], [(0.1, 1.0)] * 3, [(0.1, 0.0), (0.05, 1), (0.02, 1)]])
def test_fit_order_rejects_degenerate_input(pts):
    with pytest.raises(ValueError):
        fit_order(pts)


# ---------------------------------------------------------------- config

@pytest.mark.parametrize("kw", [dict(eps=(0.1, 0.05)), dict(eps=(0.05, 0.1, 0.01)), dict(eps=(0.1, 0.1, 0.05)),
                                dict(norm="H1"), dict(scheme="euler"), dict(init="random")])
def test_config_rejects(kw):
    with pytest.raises(ValueError):
        SweepConfig(model="cde1d", **kw)


def test_eps_above_model_bound_is_rejected():
    with pytest.raises(ValueError):
        run_sweep(SweepConfig(model="cde1d:heat", eps=(100.0, 50.0, 25.0)))


# ---------------------------------------------------------------- sweeps

@pytest.fixture(scope="module")
def heat_result():
    return run_sweep(SweepConfig(**HEAT))


def test_sweep_errors_decrease(heat_result):
    r = heat_result
    assert r.reference_kind == "exact" and not r.failed and r.monotone
    assert all(ratio > 1.5 for ratio in r.ratios)
    assert r.slope >= 0.8
    assert all(d["mass_drift"] <= 1e-12 for d in r.diagnostics)


def test_zero_w_start_keeps_the_rate(heat_result):
    z = run_sweep(SweepConfig(**HEAT, init="zero-w"))
    assert z.monotone and abs(z.slope - heat_result.slope) < 0.3


def test_error_is_insensitive_to_grid():
    r = run_sweep(SweepConfig(**HEAT, grid_check=True))
    assert r.grid_check["relative_change"] < 0.10 and r.grid_check["passed"]


def test_numerical_reference_agrees_with_exact(heat_result):
    num = run_sweep(SweepConfig(**HEAT, reference="numerical"))
    assert num.reference_kind == "numerical"
    np.testing.assert_allclose(num.errors, heat_result.errors, rtol=0, atol=1e-6)


def test_slope_window_decides_pass(heat_result):
    r = heat_result
    assert r.passed == (0.8 <= r.slope <= 1.3)
    wide = run_sweep(SweepConfig(**HEAT, slope_window=(0.8, 2.5)))
    assert wide.passed


def test_divergence_marks_the_sweep_failed():
    r = run_sweep(SweepConfig(model="cde1d:heat", eps=(0.9, 0.5, 0.3), cells=64, t_end=40.0,
                              scheme="imex1"))
    assert r.failed and not r.passed and "eps=" in r.message


# ---------------------------------------------------------------- persistence

def test_persist_round_trip_and_bytes(tmp_path, heat_result):
    c1, j1 = persist_result(heat_result, tmp_path / "a")
    rows = load_sweep_csv(c1)
    assert [r["eps"] for r in rows] == heat_result.eps
    assert [r["error"] for r in rows] == heat_result.errors
    assert all(r["wall_ms"] is None for r in rows)
    man = json.loads(j1.read_text())
    assert man["schema_version"] == 1 and man["seed"] == 0 and man["config"]["model"] == "cde1d:heat"
    again = run_sweep(SweepConfig(**HEAT))
    c2, j2 = persist_result(again, tmp_path / "b")
    assert c1.read_bytes() == c2.read_bytes() and j1.read_bytes() == j2.read_bytes()


def test_timing_fills_wall_column(tmp_path):
    r = run_sweep(SweepConfig(model="cde1d:heat", cells=64, t_end=0.02, timing=True))
    c, _ = persist_result(r, tmp_path)
    assert all(row["wall_ms"] is not None and row["wall_ms"] >= 0 for row in load_sweep_csv(c))


@pytest.mark.parametrize("name,cells", [("cde1d", 128), ("nldiff", 128), ("viscous-cons", 128), ("lbe-d2q5", 48)])
def test_convergence_is_at_least_first_order(name, cells):
    r = run_sweep(SweepConfig(model=name, cells=cells))
    assert not r.failed and r.monotone and r.slope >= 0.8
