import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from covlab.gram import Configuration, gram_matrix
from covlab.metrics import MetricSpec
from covlab.models import brc, evaluate, modified_brc
from covlab.variograms import (
    BRCExponent,
    CrossTerm,
    DirectSum,
    Linear,
    LogOnePlus,
    LogOnePlusSq,
    OneMinusCos,
    Power,
    PowerNorm,
    Quadratic,
    SquaredNorm,
    bernstein_from_dict,
    eval_variogram,
    neg_def_test,
    restrict,
    schoenberg_cov,
    schoenberg_search,
    subadditivity_check,
    subordinate,
    variogram_from_dict,
)

CATALOG = [
    SquaredNorm(3),
    Quadratic([[2.0, 0.5], [0.5, 1.0]]),
    OneMinusCos([1.0, -2.0]),
    LogOnePlusSq(2),
    PowerNorm(1.3, 2),
    BRCExponent(0.7, 2),
    DirectSum(PowerNorm(1.0, 2), SquaredNorm(1)),
    subordinate(Power(0.5), SquaredNorm(2)),
    subordinate(LogOnePlus(), BRCExponent(1.0, 1)),
    restrict(BRCExponent(0.5, 2), [0, 2]),
]


def test_eval_examples():
    assert eval_variogram(SquaredNorm(2), [3, 4]) == 25.0
    assert eval_variogram(BRCExponent(0.5, 2), [3, 4, 2]) == pytest.approx(math.sqrt(7), rel=1e-15)
    for g in CATALOG:
        assert eval_variogram(g, np.zeros(g.dim)) == 0.0
    with pytest.raises(ValueError):
        eval_variogram(SquaredNorm(2), [1, 2, 3])


def test_construction_rules():
    with pytest.raises(ValueError):
        PowerNorm(0.0, 2)
    with pytest.raises(ValueError):
        BRCExponent(-1)
    with pytest.raises(ValueError):
        Quadratic([[1.0, 2.0], [2.0, 1.0]])  # indefinite
    with pytest.raises(ValueError):
        Quadratic([[1.0, 0.1], [0.0, 1.0]])  # not symmetric
    with pytest.raises(ValueError):
        Power(1.5)
    with pytest.raises(ValueError):
        Linear(-1)
    with pytest.raises(ValueError):
        restrict(SquaredNorm(3), [])


def test_subordination_examples():
    rng = np.random.default_rng(0)
    pts = rng.normal(size=(50, 3))
    g = BRCExponent(1.0, 2)
    np.testing.assert_array_equal(subordinate(Linear(1.0), g)(pts), g(pts))
    np.testing.assert_allclose(subordinate(Power(0.6), g)(pts), BRCExponent(0.6, 2)(pts), rtol=1e-14)
    np.testing.assert_allclose(
        subordinate(LogOnePlus(), SquaredNorm(3))(pts), LogOnePlusSq(3)(pts), rtol=1e-14
    )


def test_restrict_examples():
    assert restrict(SquaredNorm(3), [0, 1])([3, 4]) == 25.0
    rng = np.random.default_rng(1)
    pts = rng.normal(size=(50, 2))
    np.testing.assert_allclose(restrict(BRCExponent(1.0, 2), [0, 1])(pts), PowerNorm(1.0, 2)(pts), rtol=1e-15)


@pytest.mark.parametrize("gamma", CATALOG, ids=repr)
def test_catalog_closure(gamma):
    rng = np.random.default_rng(2)
    v = rng.normal(size=(1000, gamma.dim)) * rng.uniform(0, 10, (1000, 1))
    val = gamma(v)
    assert np.all(val >= 0)
    np.testing.assert_allclose(val, gamma(-v), rtol=1e-14, atol=0)


@pytest.mark.parametrize(
    "gamma",
    [SquaredNorm(2), PowerNorm(1.0, 2), PowerNorm(2.0, 3), LogOnePlusSq(2), OneMinusCos([1.0, 0.3]),
     BRCExponent(0.5, 2), DirectSum(PowerNorm(1.5, 2), PowerNorm(1.0, 1)),
     subordinate(Power(0.4), SquaredNorm(2)), Quadratic([[1.0, 0.0], [0.0, 0.0]])],
    ids=repr,
)
def test_valid_variograms_pass(gamma):
    assert neg_def_test(gamma, trials=100, seed=3).passed


def test_two_point_form_is_nonpositive():
    # a = (1, -1): form is -2 gamma(x2 - x1)
    g = SquaredNorm(2)
    x = np.array([[0.0, 0.0], [1.0, 2.0]])
    a = np.array([1.0, -1.0])
    G = g(x[None] - x[:, None])
    assert a @ G @ a == -2 * g(x[1] - x[0])


@pytest.mark.parametrize("gamma", [BRCExponent(1.5, 1), BRCExponent(1.5, 2), PowerNorm(2.5, 2)], ids=repr)
def test_invalid_variograms_fail(gamma):
    res = neg_def_test(gamma, trials=200, seed=0)
    assert not res.passed
    w = res.witness
    assert abs(w["weights"].sum()) < 1e-12
    assert w["form"] > res.tolerance


def test_neg_def_test_is_deterministic():
    a = neg_def_test(BRCExponent(1.1, 2), seed=5)
    b = neg_def_test(BRCExponent(1.1, 2), seed=5)
    assert a.trials == b.trials and np.array_equal(a.witness["points"], b.witness["points"])
    with pytest.raises(ValueError):
        neg_def_test(SquaredNorm(1), trials=0)


def test_restriction_inherits_validity():
    for parent in (BRCExponent(0.75, 2), DirectSum(PowerNorm(1.0, 2), SquaredNorm(1))):
        if neg_def_test(parent, trials=50, seed=1).passed:
            assert neg_def_test(restrict(parent, [0, 1]), trials=50, seed=1).passed
            assert neg_def_test(restrict(parent, [2]), trials=50, seed=1).passed


def test_subadditivity_examples():
    assert subadditivity_check(PowerNorm(1.0, 3), trials=10_000).passed
    assert subadditivity_check(BRCExponent(1.0, 2), trials=10_000).passed
    # the square root of (|eta| + |tau|)^2 is a norm, so the full function is subadditive
    assert subadditivity_check(BRCExponent(2.0, 2), trials=10_000).passed
    # its mixed term |eta| |tau| is not
    res = subadditivity_check(CrossTerm(2), trials=10_000)
    assert not res.passed
    assert res.witness["lhs"] > res.witness["rhs"]


def test_schoenberg_examples():
    rng = np.random.default_rng(4)
    p, q = rng.normal(size=(2, 3))
    K = schoenberg_cov(BRCExponent(1.0, 2), 1.0)
    assert K(p, p) == 1.0
    # exp(-(|eta| + |tau|)) is the BRC model with unit parameters and alpha2 = 1
    h, u = np.linalg.norm(p[:2] - q[:2]), abs(p[2] - q[2])
    assert K(p, q) == pytest.approx(evaluate(brc(1.0), h, u), rel=1e-14)
    with pytest.raises(ValueError):
        schoenberg_cov(SquaredNorm(2), 0.0)


def test_schoenberg_matches_gram_lab():
    rng = np.random.default_rng(5)
    x = rng.normal(size=(15, 3))
    K = schoenberg_cov(SquaredNorm(3), 1.0).gram(x)
    c = Configuration(x[:, :2], x[:, 2], MetricSpec("joint-rescaled"))
    np.testing.assert_allclose(K, gram_matrix(modified_brc(2.0), c), rtol=1e-13)
    assert np.linalg.eigvalsh(K)[0] > -15 * np.finfo(float).eps * np.linalg.eigvalsh(K)[-1]


def test_schoenberg_search_contrapositive():
    assert not schoenberg_search(BRCExponent(1.5, 2), budget=1000, seed=0).passed
    assert schoenberg_search(BRCExponent(0.5, 2), budget=200, seed=0).passed


@settings(max_examples=60, deadline=None)
@given(st.sampled_from(CATALOG[:7]), st.integers(0, 10_000))
def test_growth_bound(gamma, seed):
    rng = np.random.default_rng(seed)
    v = rng.normal(size=gamma.dim)
    v /= np.linalg.norm(v)
    t = 2.0 ** np.arange(0, 7)
    ratios = gamma(np.outer(t, v)) / t**2
    # sqrt(gamma) subadditive gives gamma(2v) <= 4 gamma(v): the ratio never grows along doublings
    assert np.all(ratios <= ratios[0] * (1 + 1e-12))


@pytest.mark.parametrize("f", [Linear(2.0), Power(0.3), Power(1.0), LogOnePlus()], ids=repr)
def test_bernstein_shape(f):
    assert f(0.0) == 0.0
    assert f.check_shape()
    assert bernstein_from_dict(json.loads(json.dumps(f.to_dict()))).to_dict() == f.to_dict()


@pytest.mark.parametrize("gamma", CATALOG, ids=repr)
def test_json_round_trip(gamma):
    d = json.loads(json.dumps(gamma.to_dict()))
    back = variogram_from_dict(d)
    assert back.to_dict() == gamma.to_dict()
    pts = np.random.default_rng(6).normal(size=(20, gamma.dim))
    np.testing.assert_array_equal(back(pts), gamma(pts))


def test_unknown_form_rejected():
    with pytest.raises(ValueError):
        variogram_from_dict({"form": "spline"})
    with pytest.raises(ValueError):
        bernstein_from_dict({"form": "exp"})
