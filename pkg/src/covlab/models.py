"""Parametric covariance models and their known validity ranges.

All families share the parametrisation

    C(h, u) = (1 / alpha0) * rho(h, u)

where ``h`` is a geographic lag and ``u`` an environmental lag:

==============  =========================================================
family          rho(h, u)
==============  =========================================================
stable          exp(-(alpha_g h) ** alpha2)
exponential     exp(-alpha_g h)
triangle        max(0, 1 - alpha_g h)
brc             exp(-(alpha_g h + alpha_e u) ** alpha2)
modified-brc    exp(-sqrt(h**2 + u**2) ** alpha2)
sum             C_geo(h) + C_env(u)
product         C_geo(h) * C_env(u)
==============  =========================================================

For ``modified-brc`` the weights of the joint distance are carried by the
joint-rescaled :class:`~covlab.metrics.MetricSpec`, not by the model.
Children of ``sum``/``product`` are single-lag families tagged with the axis
they act on; an ``env`` child reads its ``alpha_g`` as the scale of ``u``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Literal

import numpy as np

from .metrics import (
    EuclideanPoint,
    GeoPoint,
    JointSample,
    MetricSpec,
    env_distance,
    euclidean_distance,
    great_circle_distance,
)

__all__ = [
    "CovarianceModel",
    "DomainSpec",
    "ValidityVerdict",
    "stable",
    "exponential",
    "triangle",
    "brc",
    "modified_brc",
    "sum_of",
    "product_of",
    "evaluate",
    "evaluate_pair",
    "validity_range",
]

SINGLE_LAG = ("stable", "exponential", "triangle")
FAMILIES = SINGLE_LAG + ("brc", "modified-brc", "sum", "product")
COMPOSITE = ("sum", "product")

# the continuity argument for BRC on the sphere starts here
SPHERE_BRC_INVALID_FROM = 1.001


@dataclass(frozen=True)
class CovarianceModel:
    family: str
    alpha0: float = 1.0
    alpha_g: float = 1.0
    alpha_e: float = 0.0
    alpha2: float = 1.0
    children: tuple["CovarianceModel", ...] = ()
    axis: Literal["geo", "env"] = "geo"

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}")
        object.__setattr__(self, "children", tuple(self.children))
        if self.family in COMPOSITE:
            self._check_composite()
            return
        if self.children:
            raise ValueError(f"{self.family} takes no children")
        for name in ("alpha0", "alpha_g", "alpha2"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be > 0, got {v}")
        if not (math.isfinite(self.alpha_e) and self.alpha_e >= 0):
            raise ValueError(f"alpha_e must be >= 0, got {self.alpha_e}")
        if self.family == "exponential" and self.alpha2 != 1.0:
            raise ValueError("exponential has alpha2 = 1")
        if self.family == "modified-brc" and (self.alpha_g != 1.0 or self.alpha_e not in (0.0, 1.0)):
            raise ValueError("modified-brc weights belong to the joint-rescaled metric")
        if self.axis not in ("geo", "env"):
            raise ValueError(f"axis must be 'geo' or 'env', got {self.axis!r}")

    def _check_composite(self):
        if len(self.children) != 2:
            raise ValueError(f"{self.family} needs exactly two children")
        axes = sorted(c.axis for c in self.children)
        if axes != ["env", "geo"]:
            raise ValueError(f"{self.family} needs one geo child and one env child")
        for c in self.children:
            if c.family not in SINGLE_LAG:
                raise ValueError(f"composite child must be one of {SINGLE_LAG}, got {c.family}")

    @property
    def composite(self) -> bool:
        return self.family in COMPOSITE

    @property
    def geo_child(self) -> "CovarianceModel":
        return next(c for c in self.children if c.axis == "geo")

    @property
    def env_child(self) -> "CovarianceModel":
        return next(c for c in self.children if c.axis == "env")

    @property
    def sill(self) -> float:
        """C(0, 0)."""
        if self.family == "sum":
            return sum(c.sill for c in self.children)
        if self.family == "product":
            return math.prod(c.sill for c in self.children)
        return 1.0 / self.alpha0

    def with_params(self, **kw) -> "CovarianceModel":
        return replace(self, **kw)

    def to_dict(self) -> dict:
        d = {
            "family": self.family,
            "alpha0": self.alpha0,
            "alphaG": self.alpha_g,
            "alphaE": self.alpha_e,
            "alpha2": self.alpha2,
            "children": [c.to_dict() for c in self.children],
        }
        if self.axis != "geo":
            d["axis"] = self.axis
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "CovarianceModel":
        return cls(
            family=d["family"],
            alpha0=float(d.get("alpha0", 1.0)),
            alpha_g=float(d.get("alphaG", 1.0)),
            alpha_e=float(d.get("alphaE", 0.0)),
            alpha2=float(d.get("alpha2", 1.0)),
            children=tuple(cls.from_dict(c) for c in d.get("children", [])),
            axis=d.get("axis", "geo"),
        )


def stable(alpha2, alpha_g=1.0, alpha0=1.0, axis="geo") -> CovarianceModel:
    return CovarianceModel("stable", alpha0=alpha0, alpha_g=alpha_g, alpha2=alpha2, axis=axis)


def exponential(alpha_g=1.0, alpha0=1.0, axis="geo") -> CovarianceModel:
    return CovarianceModel("exponential", alpha0=alpha0, alpha_g=alpha_g, axis=axis)


def triangle(alpha_g=1.0, alpha0=1.0, axis="geo") -> CovarianceModel:
    return CovarianceModel("triangle", alpha0=alpha0, alpha_g=alpha_g, axis=axis)


def brc(alpha2, alpha_g=1.0, alpha_e=1.0, alpha0=1.0) -> CovarianceModel:
    return CovarianceModel("brc", alpha0=alpha0, alpha_g=alpha_g, alpha_e=alpha_e, alpha2=alpha2)


def modified_brc(alpha2, alpha0=1.0) -> CovarianceModel:
    return CovarianceModel("modified-brc", alpha0=alpha0, alpha_e=1.0, alpha2=alpha2)


def _as_env(child: CovarianceModel) -> CovarianceModel:
    return child if child.axis == "env" else replace(child, axis="env")


def sum_of(geo: CovarianceModel, env: CovarianceModel) -> CovarianceModel:
    """C_geo(h) + C_env(u)."""
    return CovarianceModel("sum", children=(replace(geo, axis="geo"), _as_env(env)))


def product_of(geo: CovarianceModel, env: CovarianceModel) -> CovarianceModel:
    """C_geo(h) * C_env(u)."""
    return CovarianceModel("product", children=(replace(geo, axis="geo"), _as_env(env)))


def _rho_single(m: CovarianceModel, lag):
    s = m.alpha_g * lag
    if m.family == "triangle":
        return np.maximum(0.0, 1.0 - s)
    if m.family == "exponential":
        return np.exp(-s)
    return np.exp(-(s**m.alpha2))


def _evaluate(model: CovarianceModel, h, u):
    f = model.family
    if f == "sum":
        return _evaluate(model.geo_child, h, u) + _evaluate(model.env_child, h, u)
    if f == "product":
        return _evaluate(model.geo_child, h, u) * _evaluate(model.env_child, h, u)
    if f == "brc":
        rho = np.exp(-((model.alpha_g * h + model.alpha_e * u) ** model.alpha2))
    elif f == "modified-brc":
        rho = np.exp(-(np.sqrt(h * h + u * u) ** model.alpha2))
    else:
        rho = _rho_single(model, u if model.axis == "env" else h)
    return rho / model.alpha0


def evaluate(model: CovarianceModel, h, u=0.0):
    """Covariance at geographic lag ``h`` and environmental lag ``u``.

    Accepts scalars or broadcastable arrays; scalars in give a float out.
    """
    h_arr = np.asarray(h, dtype=float)
    u_arr = np.asarray(u, dtype=float)
    if np.any(np.isnan(h_arr)) or np.any(np.isnan(u_arr)):
        raise ValueError("lags must not be NaN")
    if np.any(h_arr < 0) or np.any(u_arr < 0):
        raise ValueError("lags must be nonnegative")
    out = _evaluate(model, h_arr, u_arr)
    if np.ndim(out) == 0:
        return float(out)
    return out


def _check_metric(model: CovarianceModel, metric: MetricSpec):
    if model.family == "modified-brc":
        if metric.kind != "joint-rescaled":
            raise ValueError("modified-brc requires the joint-rescaled metric")
    elif metric.kind == "joint-rescaled":
        raise ValueError(f"{model.family} is not defined on the joint-rescaled metric")


def evaluate_pair(model: CovarianceModel, a: JointSample, b: JointSample, metric: MetricSpec) -> float:
    """Covariance between two samples, with lags measured by ``metric``."""
    _check_metric(model, metric)
    if metric.kind == "great-circle":
        if not (isinstance(a.site, GeoPoint) and isinstance(b.site, GeoPoint)):
            raise TypeError("great-circle metric needs GeoPoint sites")
        h = great_circle_distance(a.site, b.site, metric.angle_unit)
    else:
        if not (isinstance(a.site, EuclideanPoint) and isinstance(b.site, EuclideanPoint)):
            raise TypeError(f"{metric.kind} metric needs EuclideanPoint sites")
        h = euclidean_distance(a.site, b.site)
    u = env_distance(a, b)
    if metric.kind == "joint-rescaled":
        h *= math.sqrt(metric.alpha_g)
        u *= math.sqrt(metric.alpha_e)
    return evaluate(model, h, u)


# -- validity ---------------------------------------------------------------


@dataclass(frozen=True)
class DomainSpec:
    """Euclidean R^d or the sphere S^(d-1) in R^d, optionally crossed with R."""

    base: Literal["euclidean", "sphere"] = "euclidean"
    dim: int = 2
    with_env: bool = False

    def __post_init__(self):
        if self.base not in ("euclidean", "sphere"):
            raise ValueError(f"unknown base {self.base!r}")
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        if self.base == "sphere" and self.dim < 2:
            raise ValueError("sphere needs ambient dim >= 2")

    def label(self) -> str:
        b = f"R^{self.dim}" if self.base == "euclidean" else f"S^{self.dim - 1}"
        return b + (" x R" if self.with_env else "")

    @classmethod
    def parse(cls, name: str, dim: int | None = None) -> "DomainSpec":
        """Parse ``euclidean``, ``sphere``, ``euclidean-env`` or ``sphere-env``."""
        base, _, env = name.partition("-")
        if base not in ("euclidean", "sphere") or env not in ("", "env"):
            raise ValueError(f"unknown domain {name!r}")
        if dim is None:
            dim = 3 if base == "sphere" else 2
        return cls(base=base, dim=dim, with_env=bool(env))


@dataclass(frozen=True)
class ValidityVerdict:
    status: Literal["known-valid", "known-invalid", "unknown"]
    source: str
    note: str = ""

    def to_dict(self) -> dict:
        return {"status": self.status, "source": self.source, "note": self.note}


_CONJECTURE = (
    "BRC on the sphere crossed with R: validity for alpha2 <= 1 is conjectured, not proven"
)


def _single_lag_verdict(m: CovarianceModel, base: str, dim: int) -> ValidityVerdict:
    """Verdict for a one-lag family on R^dim or S^(dim-1)."""
    if m.family == "triangle":
        if base == "sphere":
            raise ValueError("no validity result for the triangle model on the sphere")
        if dim == 1:
            return ValidityVerdict("known-valid", "triangle model", "valid on R^1")
        return ValidityVerdict("known-invalid", "triangle model", "valid in one dimension only")
    a = m.alpha2
    if base == "euclidean":
        ok = a <= 2.0
        return ValidityVerdict(
            "known-valid" if ok else "known-invalid", "stable row", "alpha in (0, 2] on R^d"
        )
    ok = a <= 1.0
    return ValidityVerdict(
        "known-valid" if ok else "known-invalid", "stable row", "alpha in (0, 1] on the sphere"
    )


def validity_range(model: CovarianceModel, domain: DomainSpec) -> ValidityVerdict:
    """Look up whether ``model`` is a valid covariance on ``domain``.

    Geographic-only families ignore the environmental axis when the domain
    has one. Raises ``ValueError`` for combinations with no known result.
    """
    f = model.family
    if f in SINGLE_LAG:
        if model.axis == "env":
            return _single_lag_verdict(model, "euclidean", 1)
        return _single_lag_verdict(model, domain.base, domain.dim)

    if f == "brc":
        if not domain.with_env or model.alpha_e == 0:
            # BRC collapses to the stable model in h
            v = _single_lag_verdict(stable(model.alpha2), domain.base, domain.dim)
            return ValidityVerdict(v.status, "stable row (BRC with no environmental term)", v.note)
        a = model.alpha2
        if domain.base == "euclidean":
            return ValidityVerdict(
                "known-valid" if a <= 1.0 else "known-invalid",
                "BRC row",
                "alpha in (0, 1] on R^d x R",
            )
        if a >= SPHERE_BRC_INVALID_FROM:
            return ValidityVerdict(
                "known-invalid",
                "BRC row, sphere counterexample",
                f"not valid for alpha2 >= {SPHERE_BRC_INVALID_FROM}",
            )
        note = _CONJECTURE if a <= 1.0 else f"no result in (1, {SPHERE_BRC_INVALID_FROM})"
        return ValidityVerdict("unknown", "BRC row", note)

    if f == "modified-brc":
        if domain.base != "euclidean":
            raise ValueError("modified-brc needs a Euclidean site component")
        return ValidityVerdict(
            "known-valid" if model.alpha2 <= 2.0 else "known-invalid",
            "modified BRC row",
            "alpha in (0, 2] on R^d x R",
        )

    # sum / product
    if not domain.with_env:
        raise ValueError(f"{f} model needs a domain with an environmental axis")
    vg = _single_lag_verdict(model.geo_child, domain.base, domain.dim)
    ve = _single_lag_verdict(model.env_child, "euclidean", 1)
    statuses = {vg.status, ve.status}
    if "known-invalid" in statuses:
        status = "known-invalid"
    elif statuses == {"known-valid"}:
        status = "known-valid"
    else:
        status = "unknown"
    row = "sum of stable models row" if f == "sum" else "product of stable models row"
    return ValidityVerdict(status, row, f"geo: {vg.note}; env: {ve.note}")
