"""Gram matrices, positive-definiteness certificates and Cholesky simulation.

A covariance model is valid only if every Gram matrix it produces has a
nonnegative quadratic form, i.e. no negative eigenvalue. :func:`certify_pd`
checks one configuration; :func:`counterexample_search` looks for a
configuration that breaks it. Nothing here adds jitter or a nugget, since
that would hide the very defect being tested for.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
import scipy.linalg

from .metrics import (
    EuclideanPoint,
    GeoPoint,
    JointSample,
    MetricSpec,
    lonlat_to_unit,
    pairwise_env,
    pairwise_euclidean,
    pairwise_great_circle,
)
from .models import CovarianceModel, DomainSpec, _check_metric, evaluate

__all__ = [
    "Configuration",
    "PDCertificate",
    "NotPositiveDefiniteError",
    "gram_matrix",
    "cross_gram",
    "min_eigenvalue",
    "eig_tolerance",
    "certify_pd",
    "counterexample_search",
    "cholesky_simulate",
    "grid_312",
]

EPS = np.finfo(float).eps


@dataclass(frozen=True, eq=False)
class Configuration:
    """Samples stored column-wise.

    ``sites`` is (n, d) Euclidean coordinates, or (n, 2) lon/lat degrees
    when the metric is great-circle. ``env`` has length n.
    """

    sites: np.ndarray
    env: np.ndarray
    metric: MetricSpec = MetricSpec()

    def __post_init__(self):
        sites = np.atleast_2d(np.array(self.sites, dtype=float))
        env = np.array(self.env, dtype=float).ravel()
        if len(sites) < 1:
            raise ValueError("configuration needs at least one sample")
        if len(env) != len(sites):
            raise ValueError(f"{len(sites)} sites but {len(env)} env values")
        if not (np.all(np.isfinite(sites)) and np.all(np.isfinite(env))):
            raise ValueError("non-finite coordinates")
        if self.metric.spherical:
            if sites.shape[1] != 2:
                raise ValueError("great-circle configurations hold (lon, lat) pairs")
            if np.any(np.abs(sites[:, 0]) > 180) or np.any(np.abs(sites[:, 1]) > 90):
                raise ValueError("lon/lat out of range")
        sites.setflags(write=False)
        env.setflags(write=False)
        object.__setattr__(self, "sites", sites)
        object.__setattr__(self, "env", env)

    def __len__(self):
        return len(self.env)

    def __eq__(self, other):
        if not isinstance(other, Configuration):
            return NotImplemented
        return (
            self.metric == other.metric
            and np.array_equal(self.sites, other.sites)
            and np.array_equal(self.env, other.env)
        )

    @property
    def dim(self) -> int:
        return self.sites.shape[1]

    @classmethod
    def from_samples(cls, samples: Sequence[JointSample], metric: MetricSpec | None = None):
        samples = list(samples)
        if not samples:
            raise ValueError("configuration needs at least one sample")
        geo = isinstance(samples[0].site, GeoPoint)
        if any(isinstance(s.site, GeoPoint) != geo for s in samples):
            raise TypeError("mixed site types in one configuration")
        if metric is None:
            metric = MetricSpec("great-circle") if geo else MetricSpec("euclidean")
        if geo != metric.spherical:
            raise TypeError(f"{metric.kind} metric does not match the site type")
        if geo:
            sites = [(s.site.lon, s.site.lat) for s in samples]
        else:
            dims = {s.site.dim for s in samples}
            if len(dims) != 1:
                raise ValueError(f"mixed dimensions {sorted(dims)}")
            sites = [s.site.coords for s in samples]
        return cls(np.array(sites), np.array([s.env for s in samples]), metric)

    @property
    def samples(self) -> list[JointSample]:
        if self.metric.spherical:
            return [JointSample(GeoPoint(lo, la), e) for (lo, la), e in zip(self.sites, self.env)]
        return [JointSample(EuclideanPoint(tuple(x)), e) for x, e in zip(self.sites, self.env)]

    def subset(self, index) -> "Configuration":
        return Configuration(self.sites[index], self.env[index], self.metric)

    def to_dict(self) -> dict:
        cols = ("lon", "lat") if self.metric.spherical else _xy_names(self.dim)
        rows = [
            {**dict(zip(cols, map(float, s))), "e": float(e)} for s, e in zip(self.sites, self.env)
        ]
        return {"metric": self.metric.to_dict(), "samples": rows}

    @classmethod
    def from_dict(cls, d: dict) -> "Configuration":
        metric = MetricSpec.from_dict(d["metric"])
        rows = d["samples"]
        cols = ("lon", "lat") if metric.spherical else tuple(k for k in rows[0] if k != "e")
        sites = [[r[c] for c in cols] for r in rows]
        return cls(np.array(sites), np.array([r.get("e", 0.0) for r in rows]), metric)


def _xy_names(d: int) -> tuple[str, ...]:
    if d <= 3:
        return ("x", "y", "z")[:d]
    return tuple(f"x{i + 1}" for i in range(d))


def _lags(config: Configuration, other: Configuration | None = None):
    """Geographic and environmental lag matrices, weighted for joint-rescaled."""
    m = config.metric
    if other is not None and other.metric != m:
        raise ValueError("configurations use different metrics")
    if m.spherical:
        v = lonlat_to_unit(config.sites)
        w = None if other is None else lonlat_to_unit(other.sites)
        h = pairwise_great_circle(v, w, m.angle_unit)
    else:
        h = pairwise_euclidean(config.sites, None if other is None else other.sites)
    u = pairwise_env(config.env, None if other is None else other.env)
    if m.kind == "joint-rescaled":
        h = h * math.sqrt(m.alpha_g)
        u = u * math.sqrt(m.alpha_e)
    return h, u


def gram_matrix(model: CovarianceModel, config: Configuration) -> np.ndarray:
    """Covariance matrix of the samples in ``config``; exactly symmetric."""
    _check_metric(model, config.metric)
    h, u = _lags(config)
    n = len(config)
    i, j = np.triu_indices(n, k=1)
    out = np.empty((n, n))
    vals = evaluate(model, h[i, j], u[i, j])
    out[i, j] = vals
    out[j, i] = vals
    out[np.diag_indices(n)] = evaluate(model, np.zeros(n), np.zeros(n))
    return out


def cross_gram(model: CovarianceModel, a: Configuration, b: Configuration) -> np.ndarray:
    """Covariances between every sample of ``a`` (rows) and of ``b`` (columns)."""
    _check_metric(model, a.metric)
    h, u = _lags(a, b)
    return np.asarray(evaluate(model, h, u), dtype=float).reshape(len(a), len(b))


def min_eigenvalue(M) -> float:
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError("expected a square matrix")
    if not np.all(np.isfinite(M)):
        raise ValueError("matrix has non-finite entries")
    if not np.array_equal(M, M.T):
        raise ValueError("matrix is not symmetric")
    return float(np.linalg.eigvalsh(M)[0])


def eig_tolerance(n: int, lambda_max: float) -> float:
    """Backward-error scale below which an eigenvalue is numerically zero."""
    return n * EPS * max(1.0, abs(lambda_max))


@dataclass(frozen=True)
class PDCertificate:
    n: int
    lambda_min: float
    lambda_max: float
    verdict: str  # "pd" | "psd-boundary" | "not-pd"
    tolerance: float
    witness: Configuration | None = None

    @property
    def is_pd(self) -> bool:
        return self.verdict == "pd"

    def to_dict(self) -> dict:
        d = {
            "n": self.n,
            "lambda_min": self.lambda_min,
            "lambda_max": self.lambda_max,
            "verdict": self.verdict,
            "tolerance": self.tolerance,
        }
        if self.witness is not None:
            d["witness"] = self.witness.to_dict()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "PDCertificate":
        w = d.get("witness")
        return cls(
            n=int(d["n"]),
            lambda_min=float(d["lambda_min"]),
            lambda_max=float(d["lambda_max"]),
            verdict=d["verdict"],
            tolerance=float(d["tolerance"]),
            witness=None if w is None else Configuration.from_dict(w),
        )

    def summary(self) -> str:
        return (
            f"{self.verdict}: n={self.n}, lambda_min={self.lambda_min:.6g}, "
            f"lambda_max={self.lambda_max:.6g}, tol={self.tolerance:.3g}"
        )


class NotPositiveDefiniteError(ValueError):
    def __init__(self, certificate: PDCertificate, what: str = "operation"):
        self.certificate = certificate
        super().__init__(f"{what} refused, covariance matrix is not positive-definite ({certificate.summary()})")


def certificate_from_matrix(M: np.ndarray, witness: Configuration | None = None) -> PDCertificate:
    ev = np.linalg.eigvalsh(M)
    lo, hi = float(ev[0]), float(ev[-1])
    tol = eig_tolerance(len(M), hi)
    if lo < -tol:
        verdict = "not-pd"
    elif lo <= tol:
        verdict = "psd-boundary"
    else:
        verdict = "pd"
    return PDCertificate(len(M), lo, hi, verdict, tol, witness if verdict == "not-pd" else None)


def certify_pd(model: CovarianceModel, config: Configuration) -> PDCertificate:
    return certificate_from_matrix(gram_matrix(model, config), witness=config)


# -- counterexample search ---------------------------------------------------


def default_metric(model: CovarianceModel, domain: DomainSpec, angle_unit="radians") -> MetricSpec:
    if model.family == "modified-brc":
        if domain.base != "euclidean":
            raise ValueError("modified-brc needs Euclidean sites")
        return MetricSpec("joint-rescaled")
    if domain.base == "sphere":
        return MetricSpec("great-circle", angle_unit=angle_unit)
    return MetricSpec("euclidean")


def _unit_to_lonlat(v: np.ndarray) -> np.ndarray:
    lon = np.degrees(np.arctan2(v[:, 1], v[:, 0]))
    lat = np.degrees(np.arcsin(np.clip(v[:, 2], -1.0, 1.0)))
    return np.c_[lon, lat]


def _random_rotation(rng) -> np.ndarray:
    q, r = np.linalg.qr(rng.standard_normal((3, 3)))
    return q * np.sign(np.diag(r))


def _lattice(n: int, d: int, rng, box: float) -> np.ndarray:
    """Jittered hexagonal (d >= 2) or evenly spaced (d == 1) lattice."""
    spacing = rng.uniform(0.3, 1.2) * box
    if d == 1:
        pts = np.arange(n, dtype=float)[:, None]
    else:
        cols = math.ceil(math.sqrt(n))
        j, i = np.divmod(np.arange(n), cols)
        x = i + 0.5 * (j % 2)
        y = j * math.sqrt(3) / 2
        pts = np.zeros((n, d))
        pts[:, 0], pts[:, 1] = x, y
    return pts * spacing + rng.normal(scale=0.02 * spacing, size=pts.shape)


def _sphere_sites(mode: str, n: int, rng) -> np.ndarray:
    if mode == "lattice":
        # evenly spaced points on a randomly oriented great circle
        t = np.arange(n) * 2 * np.pi / n + rng.uniform(0, 2 * np.pi)
        v = np.c_[np.cos(t), np.sin(t), np.zeros(n)] @ _random_rotation(rng).T
    else:
        v = rng.standard_normal((n, 3))
        v /= np.linalg.norm(v, axis=1, keepdims=True)
    return _unit_to_lonlat(v)


def _random_configuration(mode, n, domain, metric, rng, box) -> Configuration:
    spherical = domain.base == "sphere"
    if mode == "grid":
        k = max(2, math.ceil(math.sqrt(n)))
        step = rng.uniform(0.05, 0.5)
        if spherical:
            lon0, lat0 = rng.uniform(-170, 170), rng.uniform(-80, 80)
            line = np.c_[lon0 + step * np.arange(k), np.full(k, lat0)]
        else:
            direction = rng.standard_normal(domain.dim)
            direction /= np.linalg.norm(direction)
            line = rng.uniform(0, box, domain.dim) + np.outer(np.arange(k), direction) * step * box
        env_vals = rng.uniform(0, 1) + rng.uniform(0.05, 0.5) * np.arange(k)
        sites = np.repeat(line, k, axis=0)
        env = np.tile(env_vals, k) if domain.with_env else np.zeros(k * k)
        return Configuration(sites, env, metric)
    if spherical:
        sites = _sphere_sites(mode, n, rng)
    elif mode == "lattice":
        sites = _lattice(n, domain.dim, rng, box)
    else:
        sites = rng.uniform(0, box, (n, domain.dim))
    env = rng.uniform(0, 1, n) if domain.with_env else np.zeros(n)
    return Configuration(sites, env, metric)


def counterexample_search(
    model: CovarianceModel,
    domain: DomainSpec,
    budget: int = 1000,
    seed: int = 0,
    *,
    max_size: int = 30,
    min_size: int = 3,
    grid: bool = False,
    box: float = 1.0,
    metric: MetricSpec | None = None,
) -> tuple[Configuration, PDCertificate] | None:
    """Random search for a configuration on which ``model`` is not PD.

    Restart ``k`` draws from its own stream seeded by ``(seed, k)`` and
    cycles through uniform, lattice (great circles on the sphere) and,
    if ``grid`` is set, product-grid layouts; the configuration size grows
    from ``min_size`` to ``max_size`` over the budget. Returns the first
    witness, or None. Finding nothing is not a proof of validity.
    """
    if budget < 1:
        raise ValueError("budget must be >= 1")
    if domain.base == "sphere" and domain.dim != 3:
        raise ValueError("only the 2-sphere is supported for search")
    if metric is None:
        metric = default_metric(model, domain)
    modes = ("uniform", "lattice") + (("grid",) if grid else ())
    span = max_size - min_size + 1
    for k in range(budget):
        rng = np.random.default_rng([seed, k])
        n = min(max_size, min_size + (k * span) // budget)
        config = _random_configuration(modes[k % len(modes)], n, domain, metric, rng, box)
        cert = certify_pd(model, config)
        if cert.verdict == "not-pd":
            return config, cert
    return None


def grid_312(angle_unit="radians") -> Configuration:
    """The nine-sample product grid: three sites at 60N, spaced 0.1 degree
    in longitude, crossed with environmental values 0.1, 0.2, 0.3."""
    sites = [(-60.0, 60.0), (-60.1, 60.0), (-60.2, 60.0)]
    env = [0.1, 0.2, 0.3]
    return Configuration(
        np.repeat(sites, len(env), axis=0),
        np.tile(env, len(sites)),
        MetricSpec("great-circle", angle_unit=angle_unit),
    )


# -- simulation ---------------------------------------------------------------


def cholesky_simulate(
    model: CovarianceModel,
    config: Configuration,
    mean: float = 0.0,
    count: int = 1,
    seed: int | None = None,
) -> np.ndarray:
    """Draw ``count`` Gaussian vectors with covariance ``gram_matrix(model, config)``.

    Returns an array of shape (count, n). Refuses with
    :class:`NotPositiveDefiniteError` unless the Gram matrix certifies as PD.
    """
    M = gram_matrix(model, config)
    cert = certificate_from_matrix(M, witness=config)
    if not cert.is_pd:
        raise NotPositiveDefiniteError(cert, "Cholesky simulation")
    L = scipy.linalg.cholesky(M, lower=True)
    z = np.random.default_rng(seed).standard_normal((count, len(config)))
    return mean + z @ L.T


def iter_random_configurations(
    domain: DomainSpec, n: int, count: int, seed: int, metric: MetricSpec
) -> Iterable[Configuration]:
    """Uniform configurations (unit box or whole sphere), one stream per index."""
    for k in range(count):
        rng = np.random.default_rng([seed, k])
        yield _random_configuration("uniform", n, domain, metric, rng, 1.0)
