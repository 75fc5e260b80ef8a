import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from koopman_lift.comparators import (
    ConvergenceError,
    SindyModel,
    baseline_hermite_dictionary,
    estimate_derivatives,
    fit_baseline,
    lasso_cd,
    sindy_fit,
    sindy_fit_arrays,
    sindy_labels,
    sindy_library,
    sindy_rollout,
)
from koopman_lift.data import Trajectory, TrajectoryDataset
from koopman_lift.dictionary import combined_size
from koopman_lift.systems import integrate

DT = 0.01


def autonomous_dataset(rhs, x0s=np.linspace(-3, 3, 10), n=1000):
    trajs = []
    for x0 in x0s:
        x = integrate(lambda p, x, u: rhs(x), None, [x0], np.zeros((n - 1, 0)), DT)
        trajs.append(Trajectory(x, np.zeros((n - 1, 0))))
    return TrajectoryDataset(tuple(trajs), DT, ("x",), ())


@pytest.fixture(scope="module")
def decay_model():
    return sindy_fit(autonomous_dataset(lambda x: -x), 1e-3)


def test_library_layout():
    z = np.array([[0.5, -2.0]])
    lib = sindy_library(z)
    assert lib.shape == (1, 9)
    np.testing.assert_allclose(lib[0], [1, 0.5, -2, 0.25, 4, np.sin(0.5), np.sin(-2), np.cos(0.5), np.cos(-2)])
    assert sindy_labels(["a", "b"]) == ["1", "a", "b", "a^2", "b^2", "sin(a)", "sin(b)", "cos(a)", "cos(b)"]


def test_baseline_dictionary_widths():
    sd, ud = baseline_hermite_dictionary(3, 2)
    assert combined_size(sd, ud) == 11
    sd1, ud0 = baseline_hermite_dictionary(1, 0)
    np.testing.assert_allclose(sd1.evaluate([2.0]), [1, 2, 3])
    assert combined_size(sd1, ud0) == 3


def test_baseline_fit_shape(small_diffdrive):
    model = fit_baseline(small_diffdrive)
    assert model.K.shape == (11, 7)
    assert model.state_operator().shape == (7, 7)


def test_decay_selects_linear_term(decay_model):
    coef = decay_model.coef[:, 0]
    assert abs(coef[1] + 1) < 0.02
    assert np.count_nonzero(coef) == 1 == decay_model.nonzeros


def test_sine_column_dominates():
    model = sindy_fit(autonomous_dataset(np.sin), 1e-3)
    coef = np.abs(model.coef[:, 0])
    assert coef.argmax() == 3  # sin(x)
    assert coef[3] > 10 * np.delete(coef, 3).max()


def test_rollouts(decay_model):
    ro = sindy_rollout(decay_model, [1.0], steps=100)
    assert ro.states.shape == (101, 1)
    assert ro.states[-1, 0] == pytest.approx(np.exp(-1), abs=0.02)
    zero = SindyModel(np.zeros((9, 2)), 2, 0, 0.1, 0.0)
    out = sindy_rollout(zero, [0.3, -0.4], steps=7).states
    np.testing.assert_array_equal(out, np.tile([0.3, -0.4], (8, 1)))


def test_exact_derivative_recovery():
    rng = np.random.default_rng(0)
    # wide range keeps z and sin(z) distinguishable; the step-size stopping
    # rule leaves errors of order cond(Gram) * 1e-8
    z = rng.uniform(-4, 4, (500, 3))
    theta = sindy_library(z)
    true = np.zeros((13, 2))
    true[1, 0], true[2, 0], true[3, 1], true[1, 1] = -0.5, 1.5, 2.0, 0.25
    model = sindy_fit_arrays(theta, theta @ true, 0.0, 2, 1, 0.1)
    np.testing.assert_allclose(model.coef, true, atol=1e-6)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**31 - 1), st.floats(1e-4, 1e-1))
def test_lasso_objective_monotone(seed, lam):
    rng = np.random.default_rng(seed)
    X = sindy_library(rng.uniform(-2, 2, (200, 2)))
    y = X @ rng.standard_normal(X.shape[1]) + 0.1 * rng.standard_normal(200)
    hist = []
    lasso_cd(X, y, lam, history=hist)
    assert all(b <= a + 1e-12 * max(1.0, abs(a)) for a, b in zip(hist, hist[1:]))


def test_regularisation_monotone_residual():
    rng = np.random.default_rng(1)
    X = sindy_library(rng.uniform(-2, 2, (300, 2)))
    y = X @ rng.standard_normal(X.shape[1]) + 0.05 * rng.standard_normal(300)
    res = [np.sum((y - X @ lasso_cd(X, y, lam)) ** 2) for lam in (0.0, 1e-3, 1e-2, 1e-1)]
    assert all(a <= b + 1e-9 for a, b in zip(res, res[1:]))
    ls = np.linalg.lstsq(X, y, rcond=None)[0]
    assert res[0] == pytest.approx(np.sum((y - X @ ls) ** 2), rel=1e-6)


def test_lasso_non_convergence():
    rng = np.random.default_rng(2)
    X = sindy_library(rng.uniform(-2, 2, (100, 2)))
    with pytest.raises(ConvergenceError):
        lasso_cd(X, X @ np.ones(X.shape[1]), 1e-6, max_sweeps=2)


def test_negative_sparsity_rejected():
    with pytest.raises(ValueError):
        sindy_fit_arrays(np.ones((3, 2)), np.ones((3, 1)), -1.0, 1, 0, 0.1)


def test_derivative_estimates():
    t = np.arange(6) * 0.5
    x = (t**2)[:, None]
    fwd = estimate_derivatives(x, 0.5, "forward")
    np.testing.assert_allclose(fwd[:, 0], (t[1:] ** 2 - t[:-1] ** 2) / 0.5)
    ctr = estimate_derivatives(x, 0.5, "central")
    np.testing.assert_allclose(ctr[1:-1, 0], 2 * t[1:-1])
    with pytest.raises(ValueError):
        estimate_derivatives(x, 0.5, "spline")
