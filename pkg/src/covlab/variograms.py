"""Variograms, Bernstein functions and randomized checks of their properties.

A variogram (negative definite function) gamma satisfies

    sum_ij a_i a_j gamma(x_j - x_i) <= 0   whenever   sum_i a_i = 0,

and exp(-r * gamma) is then a covariance for every r > 0. Composing a
variogram with a Bernstein function gives another variogram
(subordination); adding variograms on separate axis blocks gives a
variogram on the product space.

The checks below are randomized searches: a failure comes with a witness,
a pass is evidence, not proof.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

__all__ = [
    "Variogram",
    "SquaredNorm",
    "Quadratic",
    "OneMinusCos",
    "LogOnePlusSq",
    "PowerNorm",
    "BRCExponent",
    "CrossTerm",
    "DirectSum",
    "Subordinated",
    "Restriction",
    "BernsteinFunction",
    "Linear",
    "Power",
    "LogOnePlus",
    "eval_variogram",
    "subordinate",
    "restrict",
    "neg_def_test",
    "subadditivity_check",
    "schoenberg_cov",
    "schoenberg_search",
    "SchoenbergKernel",
    "CheckResult",
    "variogram_from_dict",
    "bernstein_from_dict",
]

EPS = np.finfo(float).eps


def _norm(p):
    return np.sqrt(np.sum(p * p, axis=-1))


class Variogram:
    """Base class. Subclasses set ``form`` and ``dim`` and implement ``_eval``."""

    form: str = ""
    dim: int = 1

    def __call__(self, points) -> np.ndarray:
        p = np.asarray(points, dtype=float)
        if p.shape[-1] != self.dim:
            raise ValueError(f"{self.form} expects {self.dim}-vectors, got shape {p.shape}")
        out = self._eval(p)
        return float(out) if np.ndim(out) == 0 else out

    def _eval(self, p):
        raise NotImplementedError

    def params(self) -> dict:
        return {}

    def children(self) -> list:
        return []

    def to_dict(self) -> dict:
        return {
            "form": self.form,
            "params": self.params(),
            "children": [c.to_dict() for c in self.children()],
        }

    def __repr__(self):
        args = ", ".join(f"{k}={v!r}" for k, v in self.params().items())
        kids = ", ".join(map(repr, self.children()))
        return f"{type(self).__name__}({', '.join(x for x in (args, kids) if x)})"


class SquaredNorm(Variogram):
    form = "squared-norm"

    def __init__(self, dim: int):
        self.dim = int(dim)

    def _eval(self, p):
        return np.sum(p * p, axis=-1)

    def params(self):
        return {"dim": self.dim}


class Quadratic(Variogram):
    """eta . Q eta with Q symmetric positive semi-definite."""

    form = "quadratic"

    def __init__(self, Q):
        Q = np.atleast_2d(np.asarray(Q, dtype=float))
        if Q.shape[0] != Q.shape[1] or not np.allclose(Q, Q.T):
            raise ValueError("Q must be square and symmetric")
        if np.linalg.eigvalsh(Q)[0] < -len(Q) * EPS * max(1.0, np.abs(Q).max()):
            raise ValueError("Q must be positive semi-definite")
        self.Q = Q
        self.dim = len(Q)

    def _eval(self, p):
        return np.einsum("...i,ij,...j->...", p, self.Q, p)

    def params(self):
        return {"Q": self.Q.tolist()}


class OneMinusCos(Variogram):
    """1 - cos(y . eta)."""

    form = "one-minus-cos"

    def __init__(self, y):
        self.y = np.atleast_1d(np.asarray(y, dtype=float))
        self.dim = len(self.y)

    def _eval(self, p):
        return 1.0 - np.cos(p @ self.y)

    def params(self):
        return {"y": self.y.tolist()}


class LogOnePlusSq(Variogram):
    """log(1 + |eta|^2)."""

    form = "log-one-plus-sq"

    def __init__(self, dim: int):
        self.dim = int(dim)

    def _eval(self, p):
        return np.log1p(np.sum(p * p, axis=-1))

    def params(self):
        return {"dim": self.dim}


class PowerNorm(Variogram):
    """|eta|^alpha.

    A variogram for 0 < alpha <= 2. Larger exponents are admitted so they
    can be shown to fail the checks.
    """

    form = "power-norm"

    def __init__(self, alpha: float, dim: int):
        if alpha <= 0:
            raise ValueError("alpha must be > 0")
        self.alpha = float(alpha)
        self.dim = int(dim)

    def _eval(self, p):
        return _norm(p) ** self.alpha

    def params(self):
        return {"alpha": self.alpha, "dim": self.dim}


class BRCExponent(Variogram):
    """(|eta| + |tau|)^alpha on R^d x R; the last coordinate is tau."""

    form = "brc-exponent"

    def __init__(self, alpha: float, spatial_dim: int = 2):
        if alpha <= 0:
            raise ValueError("alpha must be > 0")
        self.alpha = float(alpha)
        self.spatial_dim = int(spatial_dim)
        self.dim = self.spatial_dim + 1

    def _eval(self, p):
        return (_norm(p[..., :-1]) + np.abs(p[..., -1])) ** self.alpha

    def params(self):
        return {"alpha": self.alpha, "spatial_dim": self.spatial_dim}


class CrossTerm(Variogram):
    """|eta| * |tau|, the mixed term of (|eta| + |tau|)^2."""

    form = "cross-term"

    def __init__(self, spatial_dim: int = 2):
        self.spatial_dim = int(spatial_dim)
        self.dim = self.spatial_dim + 1

    def _eval(self, p):
        return _norm(p[..., :-1]) * np.abs(p[..., -1])

    def params(self):
        return {"spatial_dim": self.spatial_dim}


class DirectSum(Variogram):
    """gamma_1(eta_1) + gamma_2(eta_2) + ... on consecutive axis blocks."""

    form = "direct-sum"

    def __init__(self, *parts: Variogram):
        if len(parts) < 1:
            raise ValueError("direct sum needs at least one part")
        self.parts = list(parts)
        self.dim = sum(g.dim for g in parts)

    def _eval(self, p):
        out = 0.0
        start = 0
        for g in self.parts:
            out = out + g._eval(p[..., start : start + g.dim])
            start += g.dim
        return out

    def children(self):
        return self.parts


class Subordinated(Variogram):
    """f(gamma(eta)) for a Bernstein function f."""

    form = "subordinated"

    def __init__(self, f: "BernsteinFunction", child: Variogram):
        self.f = f
        self.child = child
        self.dim = child.dim

    def _eval(self, p):
        return self.f(self.child._eval(p))

    def params(self):
        return {"bernstein": self.f.to_dict()}

    def children(self):
        return [self.child]


class Restriction(Variogram):
    """gamma evaluated with zeros on every axis not in ``kept_axes``."""

    form = "restriction"

    def __init__(self, child: Variogram, kept_axes):
        kept = [int(a) for a in kept_axes]
        if not kept:
            raise ValueError("kept_axes must be nonempty")
        if len(set(kept)) != len(kept) or min(kept) < 0 or max(kept) >= child.dim:
            raise ValueError(f"bad axes {kept} for a {child.dim}-dimensional variogram")
        self.child = child
        self.kept_axes = kept
        self.dim = len(kept)

    def _eval(self, p):
        full = np.zeros(p.shape[:-1] + (self.child.dim,))
        full[..., self.kept_axes] = p
        return self.child._eval(full)

    def params(self):
        return {"kept_axes": self.kept_axes}

    def children(self):
        return [self.child]


# -- Bernstein functions -----------------------------------------------------


class BernsteinFunction:
    form = ""

    def __call__(self, lam):
        lam = np.asarray(lam, dtype=float)
        out = self._eval(lam)
        return float(out) if np.ndim(out) == 0 else out

    def params(self) -> dict:
        return {}

    def to_dict(self) -> dict:
        return {"form": self.form, "params": self.params()}

    def __repr__(self):
        args = ", ".join(f"{k}={v!r}" for k, v in self.params().items())
        return f"{type(self).__name__}({args})"

    def check_shape(self, grid=None) -> bool:
        """f(0) = 0, nondecreasing and concave on a grid of [0, inf)."""
        if grid is None:
            grid = np.concatenate([[0.0], np.geomspace(1e-6, 1e6, 2000)])
        grid = np.sort(np.asarray(grid, dtype=float))
        v = self._eval(grid)
        if grid[0] == 0 and v[0] != 0:
            return False
        slopes = np.diff(v) / np.diff(grid)
        scale = 64 * EPS * np.maximum(1.0, np.abs(slopes[:-1]))
        return bool(np.all(np.diff(v) >= 0) and np.all(np.diff(slopes) <= scale))


class Linear(BernsteinFunction):
    form = "linear"

    def __init__(self, b: float = 1.0):
        if b < 0:
            raise ValueError("b must be >= 0")
        self.b = float(b)

    def _eval(self, lam):
        return self.b * lam

    def params(self):
        return {"b": self.b}


class Power(BernsteinFunction):
    form = "power"

    def __init__(self, alpha: float):
        if not 0 < alpha <= 1:
            raise ValueError("Bernstein power needs 0 < alpha <= 1")
        self.alpha = float(alpha)

    def _eval(self, lam):
        return lam**self.alpha

    def params(self):
        return {"alpha": self.alpha}


class LogOnePlus(BernsteinFunction):
    form = "log-one-plus"

    def _eval(self, lam):
        return np.log1p(lam)


def subordinate(f: BernsteinFunction, gamma: Variogram) -> Variogram:
    return Subordinated(f, gamma)


def restrict(gamma: Variogram, kept_axes) -> Variogram:
    return Restriction(gamma, kept_axes)


def eval_variogram(gamma: Variogram, point):
    return gamma(point)


# -- serialization -------------------------------------------------------------

_BERNSTEIN = {"linear": Linear, "power": Power, "log-one-plus": LogOnePlus}


def bernstein_from_dict(d: dict) -> BernsteinFunction:
    try:
        cls = _BERNSTEIN[d["form"]]
    except KeyError:
        raise ValueError(f"unknown Bernstein form {d.get('form')!r}") from None
    return cls(**d.get("params", {}))


def variogram_from_dict(d: dict) -> Variogram:
    """Rebuild a variogram from its ``{form, params, children}`` tree."""
    form = d.get("form")
    p = dict(d.get("params", {}))
    kids = [variogram_from_dict(c) for c in d.get("children", [])]
    simple = {
        "squared-norm": SquaredNorm,
        "quadratic": Quadratic,
        "one-minus-cos": OneMinusCos,
        "log-one-plus-sq": LogOnePlusSq,
        "power-norm": PowerNorm,
        "brc-exponent": BRCExponent,
        "cross-term": CrossTerm,
    }
    if form in simple:
        return simple[form](**p)
    if form == "direct-sum":
        return DirectSum(*kids)
    if form == "subordinated":
        if len(kids) != 1:
            raise ValueError("subordinated takes one child")
        return Subordinated(bernstein_from_dict(p["bernstein"]), kids[0])
    if form == "restriction":
        if len(kids) != 1:
            raise ValueError("restriction takes one child")
        return Restriction(kids[0], p["kept_axes"])
    raise ValueError(f"unknown variogram form {form!r}")


# -- randomized checks ---------------------------------------------------------


@dataclass
class CheckResult:
    """Outcome of a randomized property check.

    ``witness`` is populated on failure and holds whatever the check needs
    to reproduce the violation.
    """

    passed: bool
    trials: int
    worst: float
    tolerance: float
    witness: dict = field(default_factory=dict)

    def __bool__(self):
        return self.passed

    def to_dict(self) -> dict:
        w = {k: (v.tolist() if isinstance(v, np.ndarray) else v) for k, v in self.witness.items()}
        return {
            "passed": self.passed,
            "trials": self.trials,
            "worst": self.worst,
            "tolerance": self.tolerance,
            "witness": w,
        }


def increment_matrix(gamma: Variogram, points: np.ndarray) -> np.ndarray:
    """G[i, j] = gamma(x_j - x_i)."""
    points = np.asarray(points, dtype=float)
    return np.asarray(gamma._eval(points[None, :, :] - points[:, None, :]))


def _zero_sum_basis(n: int) -> np.ndarray:
    """Orthonormal (n, n - 1) basis of {a : sum(a) = 0}."""
    return scipy.linalg.null_space(np.ones((1, n)))


def neg_def_test(
    gamma: Variogram,
    trials: int = 200,
    points_per_trial: int = 12,
    seed: int = 0,
    box: float = 1.0,
) -> CheckResult:
    """Look for zero-sum weights making sum_ij a_i a_j gamma(x_j - x_i) positive.

    Each trial draws ``points_per_trial`` points uniformly in ``[0, box]^dim``
    and tests two unit-norm zero-sum weight vectors: centered Gaussian
    draws, and the maximizer of the quadratic form over all zero-sum
    weights (top eigenvector of the increment matrix restricted to that subspace).
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    n = int(points_per_trial)
    if n < 2:
        raise ValueError("need at least two points per trial")
    basis = _zero_sum_basis(n)
    worst, tol = -np.inf, 0.0
    for k in range(trials):
        rng = np.random.default_rng([seed, k])
        x = rng.uniform(0.0, box, (n, gamma.dim))
        G = increment_matrix(gamma, x)
        G = 0.5 * (G + G.T)
        tol = n * EPS * max(1.0, float(np.abs(G).max()))

        a = rng.standard_normal(n)
        a -= a.mean()
        a /= np.linalg.norm(a)
        ev, vecs = np.linalg.eigh(basis.T @ G @ basis)
        b = basis @ vecs[:, -1]
        for w in (a, b):
            q = float(w @ G @ w)
            worst = max(worst, q / max(1.0, float(np.abs(G).max())))
            if q > tol:
                return CheckResult(
                    False, k + 1, worst, tol, {"points": x, "weights": w, "form": q}
                )
    return CheckResult(True, trials, worst, tol)


def subadditivity_check(
    gamma: Variogram, trials: int = 10_000, seed: int = 0, scale: float = 1.0
) -> CheckResult:
    """Check sqrt(gamma(a + b)) <= sqrt(gamma(a)) + sqrt(gamma(b)) on random pairs.

    Half of the pairs put ``a`` and ``b`` on complementary random sets of
    axes, which is where block-structured functions tend to break.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((trials, gamma.dim)) * scale
    b = rng.standard_normal((trials, gamma.dim)) * scale
    half = trials // 2
    mask = rng.random((half, gamma.dim)) < 0.5
    a[:half] *= mask
    b[:half] *= ~mask
    lhs = np.sqrt(gamma._eval(a + b))
    rhs = np.sqrt(gamma._eval(a)) + np.sqrt(gamma._eval(b))
    tol = 64 * EPS * np.maximum(1.0, rhs)
    excess = lhs - rhs
    bad = np.flatnonzero(excess > tol)
    worst = float(excess.max())
    if bad.size:
        i = bad[0]
        return CheckResult(
            False, int(i) + 1, worst, float(tol[i]),
            {"a": a[i], "b": b[i], "lhs": float(lhs[i]), "rhs": float(rhs[i])},
        )
    return CheckResult(True, trials, worst, float(tol.max()))


class SchoenbergKernel:
    """K(p, q) = exp(-r * gamma(p - q))."""

    def __init__(self, gamma: Variogram, r: float):
        if not r > 0:
            raise ValueError("r must be > 0")
        self.gamma = gamma
        self.r = float(r)

    def __call__(self, p, q):
        d = np.asarray(p, dtype=float) - np.asarray(q, dtype=float)
        out = np.exp(-self.r * self.gamma._eval(d))
        return float(out) if np.ndim(out) == 0 else out

    def gram(self, points) -> np.ndarray:
        points = np.asarray(points, dtype=float)
        G = increment_matrix(self.gamma, points)
        K = np.exp(-self.r * 0.5 * (G + G.T))
        return K


def schoenberg_cov(gamma: Variogram, r: float = 1.0) -> SchoenbergKernel:
    return SchoenbergKernel(gamma, r)


def schoenberg_search(
    gamma: Variogram,
    rs=(0.5, 1.0, 2.0, 8.0),
    budget: int = 1000,
    seed: int = 0,
    max_points: int = 20,
    box_range=(1e-3, 1.0),
) -> CheckResult:
    """Look for a configuration where exp(-r * gamma) has a negative eigenvalue.

    Box sizes are log-uniform over ``box_range``: near the origin
    exp(-r gamma) ~ 1 - r gamma, so small configurations expose a failure of
    negative definiteness that large ones can hide. ``passed`` is True when
    nothing is found.
    """
    lo, hi = np.log(box_range[0]), np.log(box_range[1])
    worst, tol = np.inf, 0.0
    for k in range(budget):
        rng = np.random.default_rng([seed, k])
        n = min(max_points, 3 + (k * (max_points - 2)) // budget)
        x = rng.uniform(0.0, np.exp(rng.uniform(lo, hi)), (n, gamma.dim))
        for r in rs:
            ev = np.linalg.eigvalsh(SchoenbergKernel(gamma, r).gram(x))
            tol = n * EPS * max(1.0, ev[-1])
            worst = min(worst, float(ev[0]))
            if ev[0] < -tol:
                return CheckResult(
                    False, k + 1, float(ev[0]), tol, {"points": x, "r": r, "lambda_min": float(ev[0])}
                )
    return CheckResult(True, budget, worst, tol)
