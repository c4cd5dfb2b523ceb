import numpy as np
import pytest

from ticc.lsq import nonlinear_least_squares, scaling_fit_model


def test_noiseless_cosine_recovers_energy():
    e_true = 2.0
    ts = np.linspace(0.1, 1.0, 12)
    ys = np.cos(e_true * ts)
    fit = nonlinear_least_squares(lambda x, e: np.cos(e * x), [1.8], ts, ys)
    assert fit.converged
    assert fit.params[0] == pytest.approx(e_true, abs=1e-10)


def test_weighted_linear_fit_matches_closed_form():
    rng = np.random.default_rng(0)
    xs = np.linspace(1.0, 5.0, 20)
    sigmas = rng.uniform(0.1, 0.5, size=20)
    a_true = 1.37
    ys = a_true * xs + sigmas * rng.normal(size=20)
    fit = nonlinear_least_squares(lambda x, a: a * x, [1.0], xs, ys, sigmas)
    w = 1.0 / sigmas ** 2
    a_closed = np.sum(w * xs * ys) / np.sum(w * xs * xs)
    var_closed = 1.0 / np.sum(w * xs * xs)
    assert fit.params[0] == pytest.approx(a_closed, abs=2e-9)
    assert fit.covariance[0, 0] == pytest.approx(var_closed, rel=1e-8)


def test_scaling_fit_recovers_known_parameters():
    # noiseless inverse crime: regenerate data from known coefficients
    true = (0.192, 1.083, 0.367, -1.57)
    ts = np.array([0.5, 0.6, 0.75, 0.9])
    eps = np.geomspace(1e-6, 1e-2, 8)
    grid_t, grid_e = np.meshgrid(ts, eps)
    xs = np.vstack([grid_t.ravel(), grid_e.ravel()])
    ys = scaling_fit_model(xs, *true)
    fit = nonlinear_least_squares(scaling_fit_model, [0.1, 1.0, 0.5, 0.0], xs, ys)
    assert fit.converged
    assert np.allclose(fit.params, true, atol=1e-6)


def test_singular_information_flagged():
    # duplicated parameter direction: model depends on a+b only
    xs = np.linspace(0, 1, 10)
    ys = 2.0 * xs
    fit = nonlinear_least_squares(lambda x, a, b: (a + b) * x, [1.0, 1.0], xs, ys)
    assert fit.singular


def test_too_few_samples_rejected():
    with pytest.raises(ValueError):
        nonlinear_least_squares(lambda x, a, b: a * x + b, [1.0, 1.0], [1.0], [2.0])
    with pytest.raises(ValueError):
        nonlinear_least_squares(lambda x, a: a * x, [1.0], [1.0, 2.0], [1.0, 2.0], [1.0, -1.0])
