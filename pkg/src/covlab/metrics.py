"""Distances on Euclidean space, the unit sphere and the environmental axis.

Scalar functions work on the point types below; the ``pairwise_*`` helpers
work on coordinate arrays and are what Gram assembly uses.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal, Union

import numpy as np

__all__ = [
    "EuclideanPoint",
    "GeoPoint",
    "JointSample",
    "MetricSpec",
    "euclidean_distance",
    "great_circle_distance",
    "env_distance",
    "joint_rescaled_distance",
    "lonlat_to_unit",
    "pairwise_euclidean",
    "pairwise_great_circle",
    "pairwise_env",
]

MetricKind = Literal["euclidean", "great-circle", "joint-rescaled"]
AngleUnit = Literal["radians", "degrees"]


@dataclass(frozen=True)
class EuclideanPoint:
    coords: tuple[float, ...]

    def __post_init__(self):
        coords = tuple(float(c) for c in self.coords)
        if len(coords) < 1:
            raise ValueError("EuclideanPoint needs at least one coordinate")
        if not all(math.isfinite(c) for c in coords):
            raise ValueError(f"non-finite coordinate in {coords}")
        object.__setattr__(self, "coords", coords)

    @property
    def dim(self) -> int:
        return len(self.coords)


@dataclass(frozen=True)
class GeoPoint:
    """Longitude/latitude in degrees."""

    lon: float
    lat: float

    def __post_init__(self):
        lon, lat = float(self.lon), float(self.lat)
        if not (-180.0 <= lon <= 180.0):
            raise ValueError(f"longitude {lon} outside [-180, 180]")
        if not (-90.0 <= lat <= 90.0):
            raise ValueError(f"latitude {lat} outside [-90, 90]")
        object.__setattr__(self, "lon", lon)
        object.__setattr__(self, "lat", lat)

    def unit_vector(self) -> np.ndarray:
        return lonlat_to_unit(np.array([[self.lon, self.lat]]))[0]


Site = Union[EuclideanPoint, GeoPoint]


@dataclass(frozen=True)
class JointSample:
    """A site together with a scalar environmental value."""

    site: Site
    env: float = 0.0

    def __post_init__(self):
        env = float(self.env)
        if not math.isfinite(env):
            raise ValueError("environmental value must be finite")
        object.__setattr__(self, "env", env)


@dataclass(frozen=True)
class MetricSpec:
    """How the geographic part of a pair of samples is measured.

    ``angle_unit`` only matters for ``great-circle``; ``alpha_g`` and
    ``alpha_e`` only for ``joint-rescaled``.
    """

    kind: MetricKind = "euclidean"
    angle_unit: AngleUnit = "radians"
    alpha_g: float = 1.0
    alpha_e: float = 1.0

    def __post_init__(self):
        if self.kind not in ("euclidean", "great-circle", "joint-rescaled"):
            raise ValueError(f"unknown metric kind {self.kind!r}")
        if self.angle_unit not in ("radians", "degrees"):
            raise ValueError(f"unknown angle unit {self.angle_unit!r}")
        if self.kind == "joint-rescaled":
            if self.alpha_g < 0 or self.alpha_e < 0:
                raise ValueError("joint-rescaled weights must be >= 0")
            if self.alpha_g == 0 and self.alpha_e == 0:
                raise ValueError("joint-rescaled weights cannot both be zero")

    @property
    def spherical(self) -> bool:
        return self.kind == "great-circle"

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "angle_unit": self.angle_unit,
            "alpha_g": self.alpha_g,
            "alpha_e": self.alpha_e,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MetricSpec":
        return cls(
            kind=d.get("kind", "euclidean"),
            angle_unit=d.get("angle_unit", "radians"),
            alpha_g=float(d.get("alpha_g", 1.0)),
            alpha_e=float(d.get("alpha_e", 1.0)),
        )


def lonlat_to_unit(lonlat) -> np.ndarray:
    """Map an (n, 2) array of degrees (lon, lat) to unit vectors in R^3.

    Uses v = (cos lat cos lon, cos lat sin lon, sin lat).
    """
    lonlat = np.asarray(lonlat, dtype=float)
    lon = np.radians(lonlat[..., 0])
    lat = np.radians(lonlat[..., 1])
    return np.stack(
        [np.cos(lat) * np.cos(lon), np.cos(lat) * np.sin(lon), np.sin(lat)], axis=-1
    )


def _angle(dot, unit: AngleUnit):
    theta = np.arccos(np.clip(dot, -1.0, 1.0))
    if unit == "degrees":
        theta = np.degrees(theta)
    return theta


def euclidean_distance(a: EuclideanPoint, b: EuclideanPoint) -> float:
    if a.dim != b.dim:
        raise ValueError(f"dimension mismatch: {a.dim} vs {b.dim}")
    return math.sqrt(sum((x - y) ** 2 for x, y in zip(a.coords, b.coords)))


def great_circle_distance(a: GeoPoint, b: GeoPoint, unit: AngleUnit = "radians") -> float:
    """Angle between two sites on the unit sphere, arccos of the clamped dot product."""
    if unit not in ("radians", "degrees"):
        raise ValueError(f"unknown angle unit {unit!r}")
    if a == b:
        return 0.0
    va, vb = a.unit_vector(), b.unit_vector()
    dot = va[0] * vb[0] + va[1] * vb[1] + va[2] * vb[2]
    return float(_angle(dot, unit))


def env_distance(a: JointSample, b: JointSample) -> float:
    return abs(a.env - b.env)


def joint_rescaled_distance(
    a: JointSample, b: JointSample, alpha_g: float = 1.0, alpha_e: float = 1.0
) -> float:
    """sqrt(alpha_g * |x - x'|^2 + alpha_e * (e - e')^2) for Euclidean sites.

    There is no valid way to glue a geodesic distance to the environmental
    axis like this, so spherical sites are rejected.
    """
    if not (isinstance(a.site, EuclideanPoint) and isinstance(b.site, EuclideanPoint)):
        raise TypeError("joint-rescaled distance requires Euclidean sites")
    if alpha_g < 0 or alpha_e < 0 or (alpha_g == 0 and alpha_e == 0):
        raise ValueError("weights must be >= 0 and not both zero")
    h = euclidean_distance(a.site, b.site)
    u = env_distance(a, b)
    return math.sqrt(alpha_g * h * h + alpha_e * u * u)


# -- array versions -------------------------------------------------------


def pairwise_euclidean(x, y=None) -> np.ndarray:
    """Distance matrix between the rows of ``x`` (and ``y`` if given).

    With a single argument the result is exactly symmetric: each unordered
    pair is computed once and mirrored.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if y is not None:
        y = np.atleast_2d(np.asarray(y, dtype=float))
        if x.shape[1] != y.shape[1]:
            raise ValueError("dimension mismatch")
        return np.sqrt(((x[:, None, :] - y[None, :, :]) ** 2).sum(-1))
    n = len(x)
    out = np.zeros((n, n))
    i, j = np.triu_indices(n, k=1)
    d = np.sqrt(((x[i] - x[j]) ** 2).sum(-1))
    out[i, j] = d
    out[j, i] = d
    return out


def pairwise_great_circle(v, w=None, unit: AngleUnit = "radians") -> np.ndarray:
    """Great-circle distances between rows of unit vectors ``v`` (and ``w``)."""
    v = np.atleast_2d(np.asarray(v, dtype=float))
    if w is not None:
        w = np.atleast_2d(np.asarray(w, dtype=float))
        same = np.all(v[:, None, :] == w[None, :, :], axis=-1)
        return np.where(same, 0.0, _angle((v[:, None, :] * w[None, :, :]).sum(-1), unit))
    n = len(v)
    out = np.zeros((n, n))
    i, j = np.triu_indices(n, k=1)
    d = _angle((v[i] * v[j]).sum(-1), unit)
    out[i, j] = d
    out[j, i] = d
    return out


def pairwise_env(e, f=None) -> np.ndarray:
    e = np.asarray(e, dtype=float).ravel()
    if f is None:
        return np.abs(e[:, None] - e[None, :])
    f = np.asarray(f, dtype=float).ravel()
    return np.abs(e[:, None] - f[None, :])

