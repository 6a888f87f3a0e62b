import json

import numpy as np
import pytest

from covlab.gram import (
    Configuration,
    NotPositiveDefiniteError,
    PDCertificate,
    certificate_from_matrix,
    certify_pd,
    cholesky_simulate,
    counterexample_search,
    cross_gram,
    eig_tolerance,
    gram_matrix,
    grid_312,
    iter_random_configurations,
    min_eigenvalue,
)
from covlab.io import SampleTable, parse_samples
from covlab.metrics import MetricSpec
from covlab.models import (
    DomainSpec,
    brc,
    evaluate_pair,
    exponential,
    modified_brc,
    product_of,
    stable,
    sum_of,
    triangle,
)

# smallest eigenvalue of the nine-sample grid, mpmath eigsy at 40 digits
LMIN_312 = {"radians": -3.01333165522e-7, "degrees": -5.72041132936e-6}
LMIN_312_KM = -1.84033835974e-5
GRID_BRC = brc(1.01, alpha_g=1 / 300, alpha_e=1 / 300)


def line(n, spacing=1.0):
    return Configuration(np.arange(n)[:, None] * spacing, np.zeros(n))


def test_gram_trivial_cases():
    c = Configuration([[0.3, 0.1]], [0.0])
    assert gram_matrix(stable(1.0, alpha0=4.0), c).tolist() == [[0.25]]
    two = Configuration([[1.0, 2.0], [1.0, 2.0]], [0, 0])
    assert gram_matrix(stable(1.5), two).tolist() == [[1, 1], [1, 1]]


def test_min_eigenvalue_examples():
    assert min_eigenvalue(np.eye(2)) == 1.0
    assert min_eigenvalue([[1.0, 1.0], [1.0, 1.0]]) == pytest.approx(0, abs=1e-15)
    with pytest.raises(ValueError):
        min_eigenvalue([[1.0, np.nan], [np.nan, 1.0]])
    with pytest.raises(ValueError):
        min_eigenvalue([[1.0, 0.5], [0.4, 1.0]])


@pytest.mark.parametrize("unit", ["radians", "degrees"])
def test_grid_312_matrix(unit):
    config = grid_312(unit)
    M = gram_matrix(GRID_BRC, config)
    assert M.shape == (9, 9)
    assert np.array_equal(M, M.T)
    assert np.all(np.diag(M) == 1.0)
    lam = min_eigenvalue(M)
    assert lam == pytest.approx(LMIN_312[unit], rel=1e-4)
    assert certify_pd(GRID_BRC, config).verdict == "not-pd"


def test_grid_312_in_kilometres():
    # distances on an Earth of radius 6371 km, folded into alpha_g
    model = GRID_BRC.with_params(alpha_g=6371 / 300)
    lam = min_eigenvalue(gram_matrix(model, grid_312("radians")))
    assert lam == pytest.approx(LMIN_312_KM, rel=1e-4)


def test_gram_entries_match_scalar_route():
    rng = np.random.default_rng(4)
    ll = np.c_[rng.uniform(-180, 180, 12), rng.uniform(-90, 90, 12)]
    config = Configuration(ll, rng.uniform(0, 1, 12), MetricSpec("great-circle"))
    model = brc(0.7, alpha_g=2.0, alpha_e=0.5)
    M = gram_matrix(model, config)
    s = config.samples
    for i in range(12):
        for j in range(12):
            ref = evaluate_pair(model, s[i], s[j], config.metric)
            assert M[i, j] == pytest.approx(ref, rel=1e-9, abs=1e-12)

    xy = Configuration(rng.normal(size=(8, 2)), rng.normal(size=8), MetricSpec("joint-rescaled", alpha_g=2, alpha_e=0.5))
    M = gram_matrix(modified_brc(1.5), xy)
    s = xy.samples
    assert M[1, 6] == pytest.approx(evaluate_pair(modified_brc(1.5), s[1], s[6], xy.metric), rel=1e-12)


@pytest.mark.parametrize(
    "model",
    [stable(0.5, 3.0, alpha0=0.5), exponential(2.0), triangle(0.8), brc(0.9, 1.0, 3.0, alpha0=2),
     sum_of(stable(1.0), stable(2.0)), product_of(stable(1.0), triangle(1.0))],
    ids=lambda m: m.family,
)
def test_entries_bounded_by_sill(model):
    rng = np.random.default_rng(2)
    config = Configuration(rng.uniform(0, 3, (40, 2)), rng.uniform(0, 3, 40))
    M = gram_matrix(model, config)
    assert np.max(np.abs(M)) <= model.sill * (1 + 1e-15)


def test_incompatible_metric_propagates():
    config = Configuration([[0.0, 0.0], [1.0, 1.0]], [0, 0])
    with pytest.raises(ValueError):
        gram_matrix(modified_brc(1.0), config)


def test_certify_examples():
    rng = np.random.default_rng(0)
    config = Configuration(rng.uniform(0, 1, (50, 2)), np.zeros(50))
    cert = certify_pd(exponential(1.0), config)
    assert cert.verdict == "pd" and cert.witness is None
    assert cert.tolerance == eig_tolerance(50, cert.lambda_max)
    assert certify_pd(triangle(1 / 10), line(30)).verdict in ("pd", "psd-boundary")


def test_certify_does_not_mutate():
    config = grid_312()
    before = config.to_dict()
    certify_pd(GRID_BRC, config)
    assert config.to_dict() == before
    with pytest.raises(ValueError):
        config.sites[0, 0] = 1.0


def test_certificate_verdict_rules():
    assert certificate_from_matrix(np.diag([1.0, 1e-20])).verdict == "psd-boundary"
    assert certificate_from_matrix(np.diag([1.0, -1e-3])).verdict == "not-pd"
    assert certificate_from_matrix(np.eye(3)).verdict == "pd"


def test_certificate_json_and_witness_csv_round_trip(tmp_path):
    config = grid_312("degrees")
    cert = certify_pd(GRID_BRC, config)
    back = PDCertificate.from_dict(json.loads(json.dumps(cert.to_dict())))
    assert back == cert
    assert back.witness == config
    table = parse_samples(SampleTable.from_configuration(config).to_csv())
    assert table.config("degrees") == config


def test_search_finds_invalid_euclidean_stable():
    found = counterexample_search(stable(2.5), DomainSpec("euclidean", 2), budget=1000, seed=0)
    assert found is not None
    config, cert = found
    assert len(config) <= 30
    assert cert.verdict == "not-pd" and cert.lambda_min < -cert.tolerance
    # the witness certifies independently
    assert certify_pd(stable(2.5), config) == cert


def test_search_finds_invalid_sphere_stable():
    found = counterexample_search(stable(1.2, alpha_g=0.1), DomainSpec("sphere", 3), budget=1000, seed=0)
    assert found is not None


def test_search_valid_model_finds_nothing():
    assert counterexample_search(stable(1.0), DomainSpec("euclidean", 2), budget=1000, seed=0) is None


def test_search_is_deterministic():
    a = counterexample_search(triangle(1.0), DomainSpec("euclidean", 2), budget=300, seed=7)
    b = counterexample_search(triangle(1.0), DomainSpec("euclidean", 2), budget=300, seed=7)
    assert a is not None and a[0] == b[0] and a[1] == b[1]


def test_search_rejects_zero_budget():
    with pytest.raises(ValueError):
        counterexample_search(stable(1.0), DomainSpec(), budget=0)


def test_cholesky_single_point_is_standard_normal():
    z = cholesky_simulate(stable(1.0), Configuration([[0.0]], [0.0]), mean=0.0, count=20000, seed=1)
    assert z.shape == (20000, 1)
    assert abs(z.mean()) < 0.03
    assert abs(z.var() - 1) < 0.04


def test_cholesky_is_deterministic_and_shifts_mean():
    c = line(5, 0.4)
    a = cholesky_simulate(exponential(1.0), c, mean=3.0, count=4, seed=11)
    b = cholesky_simulate(exponential(1.0), c, mean=3.0, count=4, seed=11)
    assert np.array_equal(a, b)
    assert a.shape == (4, 5)


def test_cholesky_sample_covariance_converges():
    rng = np.random.default_rng(5)
    config = Configuration(rng.uniform(0, 2, (10, 2)), np.zeros(10))
    model = stable(1.0)
    z = cholesky_simulate(model, config, count=100_000, seed=3)
    err = np.linalg.norm(np.cov(z, rowvar=False, bias=True) - gram_matrix(model, config))
    assert err < 0.1


def test_cholesky_refuses_invalid_model():
    found = counterexample_search(triangle(1.0), DomainSpec("euclidean", 2), budget=1000, seed=0)
    assert found is not None
    with pytest.raises(NotPositiveDefiniteError) as info:
        cholesky_simulate(triangle(1.0), found[0], count=1, seed=0)
    assert info.value.certificate.verdict == "not-pd"
    assert "lambda_min" in str(info.value)


def test_quadratic_form_matches_simulated_variance():
    rng = np.random.default_rng(8)
    config = Configuration(rng.uniform(0, 1, (8, 2)), np.zeros(8))
    model = exponential(1.5)
    M = gram_matrix(model, config)
    z = cholesky_simulate(model, config, count=100_000, seed=9)
    for _ in range(5):
        lam = rng.normal(size=8)
        y = z @ lam
        q = lam @ M @ lam
        # standard error of a Gaussian sample variance is q * sqrt(2 / N)
        assert abs(y.var() - q) <= 3 * q * np.sqrt(2 / len(y))


def test_random_configurations_are_reproducible():
    d = DomainSpec("sphere", 3, with_env=True)
    m = MetricSpec("great-circle")
    a = list(iter_random_configurations(d, 5, 3, 1, m))
    b = list(iter_random_configurations(d, 5, 3, 1, m))
    assert all(x == y for x, y in zip(a, b))
    assert a[0] != a[1]


def test_cross_gram_matches_gram_block():
    rng = np.random.default_rng(6)
    c = Configuration(rng.uniform(size=(6, 2)), rng.uniform(size=6))
    model = brc(0.6, 1.0, 2.0)
    full = gram_matrix(model, c)
    cross = cross_gram(model, c.subset(slice(0, 3)), c.subset(slice(3, 6)))
    np.testing.assert_allclose(cross, full[:3, 3:], rtol=1e-14)
