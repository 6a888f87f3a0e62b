"""CSV sample tables, synthetic data and run reports.

Sample files are UTF-8 CSV with a header row. Recognised columns are
``id``, ``x``, ``y``, ``z``, ``lon``, ``lat``, ``e`` and ``value``; a file
uses either Euclidean (``x`` [, ``y`` [, ``z``]]) or spherical
(``lon``, ``lat``) coordinates, never both. Numbers are written with 17
significant digits so a write/read cycle is exact.
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
import os
import platform
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .gram import Configuration, cholesky_simulate
from .metrics import MetricSpec
from .models import CovarianceModel

__all__ = [
    "DataError",
    "SampleTable",
    "load_samples",
    "write_samples",
    "clustered_layout",
    "synth_generate",
    "atomic_write_text",
    "file_digest",
    "run_report",
]

EUCLIDEAN_COLS = ("x", "y", "z")
SPHERE_COLS = ("lon", "lat")
KNOWN_COLS = {"id", "e", "value", *EUCLIDEAN_COLS, *SPHERE_COLS}


class DataError(ValueError):
    pass


def fmt(v: float) -> str:
    return format(float(v), ".17g")


@dataclass(eq=False)
class SampleTable:
    ids: list[str]
    coords: np.ndarray
    coord_names: tuple[str, ...]
    env: np.ndarray | None = None
    values: np.ndarray | None = None

    def __post_init__(self):
        self.coords = np.atleast_2d(np.asarray(self.coords, dtype=float))
        if self.coords.shape[1] != len(self.coord_names):
            raise DataError("coordinate columns do not match coord_names")
        n = len(self.coords)
        if len(self.ids) != n:
            raise DataError("ids do not match row count")
        for name in ("env", "values"):
            v = getattr(self, name)
            if v is not None:
                v = np.asarray(v, dtype=float).ravel()
                if len(v) != n:
                    raise DataError(f"{name} does not match row count")
                setattr(self, name, v)

    def __len__(self):
        return len(self.ids)

    def __eq__(self, other):
        if not isinstance(other, SampleTable):
            return NotImplemented

        def same(a, b):
            return (a is None and b is None) or (
                a is not None and b is not None and np.array_equal(a, b)
            )

        return (
            self.ids == other.ids
            and self.coord_names == other.coord_names
            and np.array_equal(self.coords, other.coords)
            and same(self.env, other.env)
            and same(self.values, other.values)
        )

    @property
    def spherical(self) -> bool:
        return self.coord_names == SPHERE_COLS

    def config(self, angle_unit: str = "radians") -> Configuration:
        """Configuration with the metric implied by the coordinate columns."""
        metric = MetricSpec("great-circle", angle_unit=angle_unit) if self.spherical else MetricSpec()
        env = np.zeros(len(self)) if self.env is None else self.env
        return Configuration(self.coords, env, metric)

    @classmethod
    def from_configuration(cls, config: Configuration, values=None, ids=None) -> "SampleTable":
        names = SPHERE_COLS if config.metric.spherical else EUCLIDEAN_COLS[: config.dim]
        if len(names) != config.dim:
            raise DataError(f"cannot write {config.dim}-dimensional sites")
        if ids is None:
            width = len(str(len(config)))
            ids = [f"s{i:0{width}d}" for i in range(len(config))]
        return cls(list(ids), np.array(config.sites), names, np.array(config.env), values)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        header = ["id", *self.coord_names]
        if self.env is not None:
            header.append("e")
        if self.values is not None:
            header.append("value")
        w.writerow(header)
        for k in range(len(self)):
            row = [self.ids[k], *map(fmt, self.coords[k])]
            if self.env is not None:
                row.append(fmt(self.env[k]))
            if self.values is not None:
                row.append(fmt(self.values[k]))
            w.writerow(row)
        return buf.getvalue()


def _parse_float(text: str, col: str, line: int) -> float:
    try:
        v = float(text)
    except ValueError:
        raise DataError(f"line {line}: column {col!r} is not a number: {text!r}") from None
    if not np.isfinite(v):
        raise DataError(f"line {line}: column {col!r} is not finite")
    return v


def parse_samples(text: str, require_values: bool = False) -> SampleTable:
    rows = list(csv.reader(io.StringIO(text)))
    rows = [r for r in rows if any(c.strip() for c in r)]
    if not rows:
        raise DataError("empty sample file")
    header = [c.strip() for c in rows[0]]
    unknown = set(header) - KNOWN_COLS
    if unknown:
        raise DataError(f"unknown columns {sorted(unknown)}")
    if len(set(header)) != len(header):
        raise DataError("duplicate column names")
    has_xy = [c for c in EUCLIDEAN_COLS if c in header]
    has_ll = [c for c in SPHERE_COLS if c in header]
    if has_xy and has_ll:
        raise DataError("file mixes x/y and lon/lat coordinates")
    if has_ll:
        if len(has_ll) != 2:
            raise DataError("lon/lat files need both columns")
        names = SPHERE_COLS
    elif has_xy:
        names = tuple(EUCLIDEAN_COLS[: len(has_xy)])
        if tuple(has_xy) != names:
            raise DataError("Euclidean columns must be x, then y, then z")
    else:
        raise DataError("no coordinate columns")
    if require_values and "value" not in header:
        raise DataError("a 'value' column is required")
    if len(rows) == 1:
        raise DataError("sample file has a header but no rows")

    col = {c: i for i, c in enumerate(header)}
    ids, coords, env, values = [], [], [], []
    for line, r in enumerate(rows[1:], start=2):
        if len(r) != len(header):
            raise DataError(f"line {line}: expected {len(header)} fields, got {len(r)}")
        ids.append(r[col["id"]].strip() if "id" in col else str(line - 2))
        pt = [_parse_float(r[col[c]], c, line) for c in names]
        if names == SPHERE_COLS and not (-180 <= pt[0] <= 180 and -90 <= pt[1] <= 90):
            raise DataError(f"line {line}: lon/lat out of range")
        coords.append(pt)
        if "e" in col:
            env.append(_parse_float(r[col["e"]], "e", line))
        if "value" in col:
            values.append(_parse_float(r[col["value"]], "value", line))
    return SampleTable(
        ids,
        np.array(coords),
        names,
        np.array(env) if "e" in col else None,
        np.array(values) if "value" in col else None,
    )


def load_samples(path, require_values: bool = False) -> SampleTable:
    return parse_samples(Path(path).read_text(encoding="utf-8"), require_values)


def atomic_write_text(path, text: str) -> None:
    """Write via a temporary file in the same directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_samples(table: SampleTable, path) -> None:
    atomic_write_text(path, table.to_csv())


def clustered_layout(n: int, box: float, rng, n_clusters: int | None = None) -> np.ndarray:
    """Sites scattered around random cluster centres inside [0, box]^2."""
    if n_clusters is None:
        n_clusters = max(1, n // 10)
    centres = rng.uniform(0.1 * box, 0.9 * box, (n_clusters, 2))
    which = rng.integers(0, n_clusters, n)
    pts = centres[which] + rng.normal(scale=box / 15, size=(n, 2))
    return np.clip(pts, 0.0, box)


def synth_generate(
    n: int,
    box_km: float,
    model: CovarianceModel,
    seed: int = 0,
    mean: float = 0.0,
    n_clusters: int | None = None,
) -> SampleTable:
    """Clustered synthetic sites in a ``box_km`` square with Gaussian values.

    Values come from :func:`cholesky_simulate`, so a model whose Gram
    matrix is not positive-definite on the layout is refused.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng([seed, 0])
    sites = clustered_layout(n, box_km, rng, n_clusters)
    config = Configuration(sites, np.zeros(n), MetricSpec())
    values = cholesky_simulate(model, config, mean=mean, count=1, seed=np.random.default_rng([seed, 1]))
    table = SampleTable.from_configuration(config, values[0])
    table.env = None
    return table


def file_digest(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def versions() -> dict:
    return {
        "covlab": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
    }


def run_report(command: str, argv: list[str], inputs: dict, seed, model=None, result=None) -> dict:
    """Self-contained record of one run: arguments, input digests, outputs."""
    return {
        "command": command,
        "argv": list(argv),
        "inputs": {k: {"path": str(p), "sha256": file_digest(p)} for k, p in inputs.items()},
        "seed": seed,
        "model": None if model is None else model.to_dict(),
        "result": result,
        "versions": versions(),
    }


def dump_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"
