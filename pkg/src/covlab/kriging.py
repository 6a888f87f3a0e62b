"""Simple kriging, binned empirical covariance and least-squares model fits.

Kriging uses a general LU solve rather than a Cholesky factorization so
that an invalid covariance model still yields output. Negative kriging
variances are reported as computed and flagged with
:class:`NegativeVarianceWarning`; they are never clipped.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg
from scipy.optimize import minimize

from .gram import EPS, Configuration, _lags, cross_gram, gram_matrix
from .models import CovarianceModel, DomainSpec, evaluate, validity_range

__all__ = [
    "FieldData",
    "KrigingResult",
    "EmpiricalCovariance",
    "NegativeVarianceWarning",
    "SingularCovarianceError",
    "simple_krige",
    "empirical_covariance",
    "fit_model",
    "grid_targets",
]


class NegativeVarianceWarning(UserWarning):
    pass


class SingularCovarianceError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class FieldData:
    config: Configuration
    values: np.ndarray
    mean: float | None = None

    def __post_init__(self):
        z = np.asarray(self.values, dtype=float).ravel()
        if len(z) != len(self.config):
            raise ValueError(f"{len(z)} values for {len(self.config)} samples")
        if not np.all(np.isfinite(z)):
            raise ValueError("values must be finite")
        object.__setattr__(self, "values", z)

    @property
    def known_mean(self) -> float:
        """The caller's mean, or the sample mean when none was given."""
        if self.mean is not None:
            return float(self.mean)
        # fsum is exactly rounded, so the mean does not depend on sample order
        return math.fsum(self.values) / len(self.values)


@dataclass(frozen=True, eq=False)
class KrigingResult:
    predictions: np.ndarray
    variances: np.ndarray
    tolerance: float

    @property
    def negative(self) -> np.ndarray:
        return self.variances < -self.tolerance

    @property
    def n_negative(self) -> int:
        return int(self.negative.sum())


def _duplicates(config: Configuration) -> list[tuple[int, int]]:
    keys: dict[tuple, int] = {}
    dups = []
    for i, (s, e) in enumerate(zip(map(tuple, config.sites), config.env)):
        k = s + (e,)
        if k in keys:
            dups.append((keys[k], i))
        else:
            keys[k] = i
    return dups


def simple_krige(
    model: CovarianceModel, data: FieldData, targets: Configuration
) -> KrigingResult:
    """Simple kriging with known mean ``m``.

    prediction(t) = m + c_t' C^-1 (z - m)
    variance(t)   = C(t, t) - c_t' C^-1 c_t
    """
    dups = _duplicates(data.config)
    if dups:
        raise SingularCovarianceError(f"duplicated samples (index pairs) {dups[:10]}")
    # canonical sample order makes the result independent of input order, bit for bit
    cfg = data.config
    order = np.lexsort((cfg.env, *cfg.sites.T[::-1]))
    data = FieldData(cfg.subset(order), data.values[order], data.mean)
    C = gram_matrix(model, data.config)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(C)
    if np.any(np.diag(lu) == 0):
        raise SingularCovarianceError("covariance matrix of the data is exactly singular")
    c = cross_gram(model, data.config, targets)
    w = scipy.linalg.lu_solve((lu, piv), c)

    m = data.known_mean
    pred = m + w.T @ (data.values - m)
    var = model.sill - np.einsum("ij,ij->j", c, w)

    n = len(C)
    tol = n * EPS * float(np.linalg.cond(C)) * max(1.0, model.sill)
    res = KrigingResult(pred, var, tol)
    if res.n_negative:
        warnings.warn(
            f"{res.n_negative} of {len(var)} kriging variances are negative "
            f"(min {var.min():.6g}); the covariance model is not positive-definite",
            NegativeVarianceWarning,
            stacklevel=2,
        )
    return res


def grid_targets(
    x_range, y_range, nx: int, ny: int, env: float = 0.0, metric=None
) -> Configuration:
    """Regular nx by ny grid of target sites, x varying fastest."""
    xs = np.linspace(*x_range, nx)
    ys = np.linspace(*y_range, ny)
    gx, gy = np.meshgrid(xs, ys)
    sites = np.c_[gx.ravel(), gy.ravel()]
    kw = {} if metric is None else {"metric": metric}
    return Configuration(sites, np.full(len(sites), float(env)), **kw)


# -- estimation -------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class EmpiricalCovariance:
    bin_edges: np.ndarray
    estimates: np.ndarray  # NaN where a bin is empty
    counts: np.ndarray
    lags: np.ndarray  # mean pair lag per bin, bin center when empty

    @property
    def nonempty(self) -> np.ndarray:
        return self.counts > 0

    @classmethod
    def from_curve(cls, bin_edges, estimates, counts=None) -> "EmpiricalCovariance":
        """Build from known per-bin values, taking lags at the bin centers."""
        edges = np.asarray(bin_edges, dtype=float)
        est = np.asarray(estimates, dtype=float)
        counts = np.ones(len(est), dtype=int) if counts is None else np.asarray(counts)
        return cls(edges, est, counts, 0.5 * (edges[:-1] + edges[1:]))


def empirical_covariance(data: FieldData, bin_width: float, max_lag: float) -> EmpiricalCovariance:
    """Binned covariance estimate around the global sample mean.

    Every unordered pair (i <= j) contributes (z_i - mean)(z_j - mean) to the
    bin holding its lag; the i == j pairs land in the first bin.
    """
    if bin_width <= 0 or max_lag <= 0:
        raise ValueError("bin_width and max_lag must be > 0")
    nbins = int(np.ceil(max_lag / bin_width - 1e-12))
    edges = bin_width * np.arange(nbins + 1)
    h, u = _lags(data.config)
    lag = h if data.config.metric.kind != "joint-rescaled" else np.sqrt(h * h + u * u)
    i, j = np.triu_indices(len(data.config))
    lag = lag[i, j]
    r = data.values - math.fsum(data.values) / len(data.values)
    prod = r[i] * r[j]
    keep = lag < edges[-1]
    idx = np.floor(lag[keep] / bin_width).astype(int)
    idx = np.minimum(idx, nbins - 1)
    counts = np.bincount(idx, minlength=nbins)
    sums = np.bincount(idx, weights=prod[keep], minlength=nbins)
    lag_sums = np.bincount(idx, weights=lag[keep], minlength=nbins)
    with np.errstate(invalid="ignore", divide="ignore"):
        est = np.where(counts > 0, sums / counts, np.nan)
        lags = np.where(counts > 0, lag_sums / counts, 0.5 * (edges[:-1] + edges[1:]))
    return EmpiricalCovariance(edges, est, counts, lags)


_FIT_PARAMS = {
    "stable": ("sill", "alpha_g", "alpha2"),
    "exponential": ("sill", "alpha_g"),
    "triangle": ("sill", "alpha_g"),
}


def _alpha2_cap(family: str, domain: DomainSpec) -> float:
    if family != "stable":
        return np.inf
    # largest exponent inside the declared domain's validity region
    probe = CovarianceModel("stable", alpha2=1.0)
    for cap in (2.0, 1.0):
        if validity_range(probe.with_params(alpha2=cap), domain).status == "known-valid":
            return cap
    raise ValueError(f"no valid stable exponent on {domain.label()}")


def fit_model(
    emp: EmpiricalCovariance,
    family: str,
    init: CovarianceModel | None = None,
    domain: DomainSpec = DomainSpec(),
    maxiter: int = 4000,
) -> CovarianceModel:
    """Weighted least-squares fit of a single-lag family to binned estimates.

    Minimizes sum_k counts_k (emp_k - C(lag_k))^2. The sill enters
    linearly, so for each shape it is solved in closed form (clamped
    positive) and Nelder-Mead refines only log(alpha_g) and, for
    ``stable``, alpha2 boxed to the validity range of ``domain``. The
    sill of ``init`` is not used.
    """
    if family not in _FIT_PARAMS:
        raise ValueError(f"cannot fit family {family!r}; choose from {sorted(_FIT_PARAMS)}")
    ok = emp.nonempty & np.isfinite(emp.estimates)
    if ok.sum() < 3:
        raise ValueError("need at least 3 nonempty bins to fit")
    lags, y, w = emp.lags[ok], emp.estimates[ok], emp.counts[ok].astype(float)
    scale = float(np.sum(w * y * y)) or 1.0

    if init is None:
        init = CovarianceModel(family, alpha_g=1.0 / max(lags.max(), 1e-12))
    if init.family != family:
        raise ValueError(f"init is a {init.family} model, expected {family}")
    cap = _alpha2_cap(family, domain)
    if family == "stable" and not 0 < init.alpha2 <= cap:
        raise ValueError(f"initial alpha2={init.alpha2} outside (0, {cap}]")

    def shape(theta) -> CovarianceModel:
        kw = {"alpha_g": float(np.exp(theta[0]))}
        if family == "stable":
            kw["alpha2"] = float(theta[1])
        return CovarianceModel(family, **kw)

    def best_sill(f) -> float:
        ff = float(np.sum(w * f * f))
        s = float(np.sum(w * f * y)) / ff if ff > 0 else 0.0
        return max(s, 1e-300)

    def loss(theta):
        if not abs(theta[0]) < 700:  # exp() would leave the float range
            return np.inf
        f = evaluate(shape(theta), lags)
        return float(np.sum(w * (y - best_sill(f) * f) ** 2)) / scale

    theta0 = [np.log(init.alpha_g)]
    bounds = [(None, None)]
    if family == "stable":
        theta0.append(init.alpha2)
        bounds.append((1e-3, cap))
    best = np.array(theta0, dtype=float)
    prev = np.inf
    # restart from the incumbent until restarts stop paying off
    for _ in range(10):
        res = minimize(
            loss, best, method="Nelder-Mead", bounds=bounds,
            options={"maxiter": maxiter, "xatol": 1e-12, "fatol": 1e-16},
        )
        best = res.x
        if prev - res.fun <= 1e-8 * max(prev, 1e-300) or res.fun == 0:
            break
        prev = res.fun
    unit = shape(best)
    return unit.with_params(alpha0=1.0 / best_sill(evaluate(unit, lags)))

