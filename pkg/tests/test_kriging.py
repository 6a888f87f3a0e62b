import warnings

import numpy as np
import pytest

from covlab.gram import Configuration, certify_pd, cholesky_simulate, gram_matrix
from covlab.io import synth_generate
from covlab.models import DomainSpec, evaluate, exponential, stable, triangle
from covlab.kriging import (
    EmpiricalCovariance,
    FieldData,
    NegativeVarianceWarning,
    SingularCovarianceError,
    empirical_covariance,
    fit_model,
    grid_targets,
    simple_krige,
)


def field(model, n=30, seed=0, box=3.0):
    rng = np.random.default_rng(seed)
    config = Configuration(rng.uniform(0, box, (n, 2)), np.zeros(n))
    z = cholesky_simulate(model, config, mean=2.0, count=1, seed=seed)[0]
    return FieldData(config, z)


def unit_grid(k):
    g = np.arange(k, dtype=float)
    x, y = np.meshgrid(g, g)
    return Configuration(np.c_[x.ravel(), y.ravel()], np.zeros(k * k))


def test_exact_at_data_sites():
    model = exponential(1.0, alpha0=0.5)
    data = field(model)
    res = simple_krige(model, data, data.config)
    np.testing.assert_allclose(res.predictions, data.values, rtol=1e-8)
    assert np.all(np.abs(res.variances) <= res.tolerance)


def test_far_target_reverts_to_mean_and_sill():
    model = exponential(1.0, alpha0=0.5)
    data = FieldData(field(model).config, field(model).values, mean=1.25)
    far = Configuration([[1.5 + 50.0, 1.5]], [0.0])
    res = simple_krige(model, data, far)
    assert abs(res.predictions[0] - 1.25) < 1e-6
    assert abs(res.variances[0] - 2.0) < 1e-6


def test_default_mean_is_sample_mean():
    model = exponential(1.0)
    data = field(model)
    far = Configuration([[1e4, 0.0]], [0.0])
    assert simple_krige(model, data, far).predictions[0] == pytest.approx(data.values.mean(), abs=1e-12)


def test_variance_bounds_for_valid_models():
    model = stable(1.5, alpha_g=2.0)
    for seed in range(10):
        data = field(model, n=25, seed=seed)
        assert certify_pd(model, data.config).is_pd
        rng = np.random.default_rng(100 + seed)
        targets = Configuration(rng.uniform(-1, 4, (100, 2)), np.zeros(100))
        res = simple_krige(model, data, targets)
        assert np.all(res.variances >= -res.tolerance)
        assert np.all(res.variances <= model.sill + res.tolerance)


def test_permutation_invariance_is_exact():
    model = exponential(0.8)
    data = field(model, n=40, seed=3)
    targets = grid_targets((0, 3), (0, 3), 7, 7)
    perm = np.random.default_rng(1).permutation(40)
    shuffled = FieldData(data.config.subset(perm), data.values[perm])
    a = simple_krige(model, data, targets)
    b = simple_krige(model, shuffled, targets)
    assert np.array_equal(a.predictions, b.predictions)
    assert np.array_equal(a.variances, b.variances)


def test_duplicate_samples_are_named():
    config = Configuration([[0.0, 0.0], [1.0, 0.0], [0.0, 0.0]], [0, 0, 0])
    with pytest.raises(SingularCovarianceError, match=r"\(0, 2\)"):
        simple_krige(exponential(1.0), FieldData(config, [1.0, 2.0, 3.0]), config)


def test_triangle_gives_negative_variances_on_synthetic_layout():
    table = synth_generate(100, 1000.0, exponential(1 / 200), seed=0)
    data = FieldData(table.config(), table.values)
    targets = grid_targets((0, 1000), (0, 1000), 50, 50)
    with warnings.catch_warnings():
        warnings.simplefilter("error", NegativeVarianceWarning)
        ok = simple_krige(exponential(1 / 200), data, targets)
    assert ok.n_negative == 0
    with pytest.warns(NegativeVarianceWarning):
        bad = simple_krige(triangle(1 / 300), data, targets)
    assert bad.n_negative >= 1
    # reported verbatim, not clipped
    assert bad.variances.min() < -bad.tolerance


def test_field_data_validation():
    c = Configuration([[0.0], [1.0]], [0, 0])
    with pytest.raises(ValueError):
        FieldData(c, [1.0])
    with pytest.raises(ValueError):
        FieldData(c, [1.0, np.inf])


def test_empirical_examples():
    c = Configuration(np.arange(10.0)[:, None], np.zeros(10))
    emp = empirical_covariance(FieldData(c, np.full(10, 3.7)), 1.0, 5.0)
    assert np.all(emp.estimates[emp.nonempty] == 0)

    two = Configuration([[0.0], [5.5]], [0, 0])
    emp = empirical_covariance(FieldData(two, [1.0, -1.0]), 1.0, 6.0)
    assert emp.estimates[5] == -1.0
    assert emp.counts.tolist() == [2, 0, 0, 0, 0, 1]
    assert emp.estimates[0] == 1.0
    assert np.isnan(emp.estimates[1])
    with pytest.raises(ValueError):
        empirical_covariance(FieldData(two, [1.0, -1.0]), 0.0, 6.0)


def test_empirical_within_monte_carlo_error():
    model = exponential(0.5)
    config = unit_grid(20)
    draws = cholesky_simulate(model, config, count=201, seed=12)
    ests = np.array(
        [empirical_covariance(FieldData(config, z), 1.0, 6.0).estimates for z in draws]
    )
    se = ests[1:].std(axis=0)
    emp = empirical_covariance(FieldData(config, draws[0]), 1.0, 6.0)
    truth = evaluate(model, emp.lags)
    assert np.all(np.abs(emp.estimates - truth) <= 3 * se)


def test_fit_recovers_exact_curve():
    edges = np.arange(0, 401, 20.0)
    centers = 0.5 * (edges[:-1] + edges[1:])
    emp = EmpiricalCovariance.from_curve(edges, evaluate(exponential(0.01), centers))
    fit = fit_model(emp, "exponential", init=exponential(0.02, alpha0=2.0))
    assert fit.alpha_g == pytest.approx(0.01, abs=1e-6)
    assert fit.sill == pytest.approx(1.0, abs=1e-6)


def test_fit_triangle_on_linear_decay():
    edges = np.linspace(0, 50, 11)
    centers = 0.5 * (edges[:-1] + edges[1:])
    emp = EmpiricalCovariance.from_curve(edges, 2.0 * (1 - centers / 80))
    fit = fit_model(emp, "triangle", init=triangle(1 / 40))
    # C(h) = sill (1 - alpha_g h): the line's slope is sill * alpha_g = 2 / 80
    assert fit.sill * fit.alpha_g == pytest.approx(2 / 80, rel=0.05)


def test_fit_stable_respects_domain_box():
    edges = np.linspace(0, 4, 9)
    centers = 0.5 * (edges[:-1] + edges[1:])
    emp = EmpiricalCovariance.from_curve(edges, evaluate(stable(1.8, 1.0), centers))
    fit = fit_model(emp, "stable", init=stable(0.9, 1.0), domain=DomainSpec("sphere", 3))
    assert 0 < fit.alpha2 <= 1.0
    with pytest.raises(ValueError):
        fit_model(emp, "stable", init=stable(1.5), domain=DomainSpec("sphere", 3))


def test_fit_errors():
    emp = EmpiricalCovariance.from_curve([0, 1, 2, 3], [1.0, 0.5, np.nan], [4, 3, 0])
    with pytest.raises(ValueError):
        fit_model(emp, "exponential")
    emp = EmpiricalCovariance.from_curve([0, 1, 2, 3], [1.0, 0.5, 0.2])
    with pytest.raises(ValueError):
        fit_model(emp, "brc")
    with pytest.raises(ValueError):
        fit_model(emp, "exponential", init=stable(0.5))


def test_estimation_round_trip_single_seed():
    model = exponential(1.0)
    config = unit_grid(20)
    z = cholesky_simulate(model, config, count=1, seed=0)[0]
    emp = empirical_covariance(FieldData(config, z), 1.0, 4.0)
    fit = fit_model(emp, "exponential", init=exponential(1.0))
    assert fit.alpha_g == pytest.approx(1.0, rel=0.25)


def test_gram_of_kriging_inputs_is_symmetric():
    data = field(exponential(1.0))
    C = gram_matrix(exponential(1.0), data.config)
    assert np.array_equal(C, C.T)
