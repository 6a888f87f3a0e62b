"""Command-line front end: ``covlab <command> [options]``.

Exit codes: 0 success (or model valid), 1 usage or data error, 2 the run
witnessed invalidity (a certificate or witness is emitted).
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import warnings
from pathlib import Path

import numpy as np

from .gram import (
    Configuration,
    NotPositiveDefiniteError,
    certify_pd,
    cholesky_simulate,
    counterexample_search,
    grid_312,
)
from .io import (
    DataError,
    SampleTable,
    atomic_write_text,
    dump_json,
    file_digest,
    fmt,
    load_samples,
    run_report,
    synth_generate,
    write_samples,
)
from .metrics import MetricSpec
from .kriging import (
    FieldData,
    NegativeVarianceWarning,
    SingularCovarianceError,
    empirical_covariance,
    fit_model,
    grid_targets,
    simple_krige,
)
from .models import CovarianceModel, DomainSpec, stable, validity_range
from .variograms import neg_def_test, subadditivity_check, variogram_from_dict

EXIT_OK, EXIT_ERROR, EXIT_INVALID = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def default_seed() -> int:
    return int(os.environ.get("COVLAB_SEED", "0"))


# -- argument groups ---------------------------------------------------------


def _add_model_args(p):
    g = p.add_argument_group("model")
    g.add_argument("--model-file", help="JSON model {family, alpha0, alphaG, alphaE, alpha2, children}")
    g.add_argument("--family", choices=["stable", "exponential", "triangle", "brc", "modified-brc", "sum", "product"])
    for flag in ("--alpha0", "--alpha-g", "--alpha-e", "--alpha2"):
        g.add_argument(flag, type=float, help="default 1")
    g.add_argument("--beta", type=float, help="exponent of the environmental child (sum/product), default 1")


def _add_domain_args(p):
    p.add_argument("--domain", default="euclidean",
                   choices=["euclidean", "sphere", "euclidean-env", "sphere-env"])
    p.add_argument("--dim", type=int, default=None,
                   help="ambient dimension (default 2, or 3 for the sphere)")


def _add_io_args(p, output=True):
    if output:
        p.add_argument("--output", help="primary output file")
    p.add_argument("--report", help="run report path (default: next to the output)")
    p.add_argument("--seed", type=int, default=None, help="random seed (env COVLAB_SEED)")


def _model_from_args(a) -> CovarianceModel:
    if a.model_file:
        return CovarianceModel.from_dict(json.loads(Path(a.model_file).read_text()))
    if not a.family:
        raise UsageError("give --model-file or --family")
    f = a.family
    v = {k: 1.0 if getattr(a, k) is None else getattr(a, k)
         for k in ("alpha0", "alpha_g", "alpha_e", "alpha2", "beta")}
    if f in ("sum", "product"):
        return CovarianceModel(
            f,
            children=(
                stable(v["alpha2"], alpha_g=v["alpha_g"], alpha0=v["alpha0"]),
                stable(v["beta"], alpha_g=v["alpha_e"], axis="env"),
            ),
        )
    if f == "modified-brc":
        return CovarianceModel(f, alpha0=v["alpha0"], alpha_e=1.0, alpha2=v["alpha2"])
    if f == "brc":
        return CovarianceModel(f, alpha0=v["alpha0"], alpha_g=v["alpha_g"],
                               alpha_e=v["alpha_e"], alpha2=v["alpha2"])
    if f in ("exponential", "triangle"):
        return CovarianceModel(f, alpha0=v["alpha0"], alpha_g=v["alpha_g"])
    return CovarianceModel(f, alpha0=v["alpha0"], alpha_g=v["alpha_g"], alpha2=v["alpha2"])


def _config_for_model(table: SampleTable, model: CovarianceModel, angle_unit: str) -> Configuration:
    config = table.config(angle_unit)
    if model.family == "modified-brc":
        if table.spherical:
            raise DataError("modified-brc needs x/y coordinates")
        config = Configuration(config.sites, config.env, MetricSpec("joint-rescaled"))
    return config


class _Run:
    """Collects what a command read and wrote, then writes its report."""

    def __init__(self, command, argv, args):
        self.command = command
        self.argv = argv
        self.args = args
        self.inputs: dict[str, str] = {}
        self.outputs: dict[str, str] = {}
        self.seed = getattr(args, "seed", None)
        if self.seed is None and hasattr(args, "seed"):
            self.seed = default_seed()

    def write(self, key, path, text):
        atomic_write_text(path, text)
        self.outputs[key] = str(path)

    def finish(self, model=None, result=None):
        report_path = getattr(self.args, "report", None)
        if report_path is None and getattr(self.args, "output_dir", None):
            report_path = str(Path(self.args.output_dir) / "report.json")
        if report_path is None:
            primary = next(iter(self.outputs.values()), None)
            report_path = (
                f"{primary}.report.json" if primary else f"covlab-{self.command}.report.json"
            )
        rep = run_report(self.command, self.argv, self.inputs, self.seed, model, result)
        rep["outputs"] = {k: {"path": p, "sha256": file_digest(p)} for k, p in self.outputs.items()}
        atomic_write_text(report_path, dump_json(rep))


def _emit(run, key, text):
    out = getattr(run.args, "output", None)
    if out:
        run.write(key, out, text)
    else:
        sys.stdout.write(text)


# -- commands ------------------------------------------------------------------


def cmd_validate(a, run):
    model = _model_from_args(a)
    domain = DomainSpec.parse(a.domain, a.dim)
    verdict = validity_range(model, domain)
    result = {"domain": domain.label(), **verdict.to_dict()}
    _emit(run, "verdict", dump_json(result))
    run.finish(model, result)
    return EXIT_OK


def cmd_gram(a, run):
    model = _model_from_args(a)
    table = load_samples(a.samples)
    run.inputs["samples"] = a.samples
    cert = certify_pd(model, _config_for_model(table, model, a.angle_unit))
    _emit(run, "certificate", dump_json(cert.to_dict()))
    run.finish(model, cert.to_dict())
    return EXIT_INVALID if cert.verdict == "not-pd" else EXIT_OK


def _prediction_csv(targets: Configuration, pred, var) -> str:
    names = ["lon", "lat"] if targets.metric.spherical else ["x", "y", "z"][: targets.dim]
    with_env = bool(np.any(targets.env != 0))
    lines = [",".join(names + (["e"] if with_env else []) + ["prediction", "variance"])]
    for s, e, p, v in zip(targets.sites, targets.env, pred, var):
        row = [fmt(c) for c in s] + ([fmt(e)] if with_env else []) + [fmt(p), fmt(v)]
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def cmd_krige(a, run):
    model = _model_from_args(a)
    table = load_samples(a.samples, require_values=True)
    run.inputs["samples"] = a.samples
    config = _config_for_model(table, model, a.angle_unit)
    data = FieldData(config, table.values, a.mean)
    if a.targets:
        tt = load_samples(a.targets)
        run.inputs["targets"] = a.targets
        targets = _config_for_model(tt, model, a.angle_unit)
    else:
        if config.dim != 2:
            raise DataError("--grid needs two-dimensional sites; use --targets")
        nx, ny = (int(v) for v in a.grid.split(","))
        lo, hi = config.sites.min(0), config.sites.max(0)
        targets = grid_targets((lo[0], hi[0]), (lo[1], hi[1]), nx, ny, metric=config.metric)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", NegativeVarianceWarning)
        res = simple_krige(model, data, targets)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    _emit(run, "predictions", _prediction_csv(targets, res.predictions, res.variances))
    result = {
        "n_targets": len(targets),
        "mean": data.known_mean,
        "min_variance": float(res.variances.min()),
        "max_variance": float(res.variances.max()),
        "n_negative_variances": res.n_negative,
        "tolerance": res.tolerance,
    }
    run.finish(model, result)
    return EXIT_INVALID if res.n_negative else EXIT_OK


def cmd_simulate(a, run):
    model = _model_from_args(a)
    table = load_samples(a.samples)
    run.inputs["samples"] = a.samples
    config = _config_for_model(table, model, a.angle_unit)
    try:
        draws = cholesky_simulate(model, config, a.mean, a.count, run.seed)
    except NotPositiveDefiniteError as exc:
        print(str(exc), file=sys.stderr)
        cert = exc.certificate.to_dict()
        _emit(run, "certificate", dump_json(cert))
        run.finish(model, cert)
        return EXIT_INVALID
    cols = [f"sim{k + 1}" for k in range(a.count)]
    lines = [",".join(["id", *table.coord_names, *cols])]
    for i in range(len(table)):
        lines.append(",".join([table.ids[i], *map(fmt, table.coords[i]), *map(fmt, draws[:, i])]))
    _emit(run, "simulations", "\n".join(lines) + "\n")
    run.finish(model, {"count": a.count, "n": len(table)})
    return EXIT_OK


def cmd_fit(a, run):
    table = load_samples(a.samples, require_values=True)
    run.inputs["samples"] = a.samples
    data = FieldData(table.config(a.angle_unit), table.values)
    emp = empirical_covariance(data, a.bin_width, a.max_lag)
    init = None
    if a.init_file:
        init = CovarianceModel.from_dict(json.loads(Path(a.init_file).read_text()))
    domain = DomainSpec.parse(a.domain, a.dim)
    model = fit_model(emp, a.family, init, domain)
    _emit(run, "model", dump_json(model.to_dict()))
    emp_d = {
        "bin_edges": emp.bin_edges.tolist(),
        "lags": emp.lags.tolist(),
        "estimates": [None if not np.isfinite(v) else float(v) for v in emp.estimates],
        "counts": emp.counts.tolist(),
    }
    run.finish(model, {"empirical": emp_d, "validity": validity_range(model, domain).to_dict()})
    return EXIT_OK


GRID_312_MODEL = {"alpha0": 1.0, "alpha_g": 1 / 300, "alpha_e": 1 / 300, "alpha2": 1.01}


def cmd_counterexample(a, run):
    if a.grid_312:
        kw = {k: d if getattr(a, k) is None else getattr(a, k) for k, d in GRID_312_MODEL.items()}
        model = CovarianceModel(
            "brc", alpha0=kw["alpha0"], alpha_g=kw["alpha_g"] * a.radius,
            alpha_e=kw["alpha_e"], alpha2=kw["alpha2"],
        )
        config = grid_312(a.angle_unit)
        cert = certify_pd(model, config)
        found = (config, cert) if cert.verdict == "not-pd" else None
        summary = {"mode": "grid-312", "angle_unit": a.angle_unit, "radius": a.radius, **cert.to_dict()}
    else:
        model = _model_from_args(a)
        domain = DomainSpec.parse(a.domain, a.dim)
        found = counterexample_search(
            model, domain, a.budget, run.seed, max_size=a.max_size, grid=a.grid
        )
        summary = {"mode": "search", "budget": a.budget, "found": found is not None}
        if found:
            summary.update(found[1].to_dict())
    outdir = Path(a.output_dir)
    if found:
        config, cert = found
        run.write("witness", outdir / "witness.csv", SampleTable.from_configuration(config).to_csv())
        run.write("certificate", outdir / "certificate.json", dump_json(cert.to_dict()))
        print(cert.summary())
    else:
        print("no witness found (this is not a proof of validity)")
    run.finish(model, summary)
    return EXIT_INVALID if found else EXIT_OK


def cmd_nd_test(a, run):
    gamma = variogram_from_dict(json.loads(Path(a.variogram_file).read_text()))
    run.inputs["variogram"] = a.variogram_file
    if a.subadditivity:
        res = subadditivity_check(gamma, a.trials, run.seed)
    else:
        res = neg_def_test(gamma, a.trials, a.points, run.seed)
    out = {"check": "subadditivity" if a.subadditivity else "negative-definite", **res.to_dict()}
    _emit(run, "result", dump_json(out))
    run.finish(None, out)
    return EXIT_OK if res.passed else EXIT_INVALID


def cmd_synth(a, run):
    model = _model_from_args(a)
    try:
        table = synth_generate(a.n, a.box_km, model, run.seed, a.mean)
    except NotPositiveDefiniteError as exc:
        print(str(exc), file=sys.stderr)
        run.finish(model, exc.certificate.to_dict())
        return EXIT_INVALID
    if a.output:
        write_samples(table, a.output)
        run.outputs["samples"] = a.output
    else:
        sys.stdout.write(table.to_csv())
    run.finish(model, {"n": len(table)})
    return EXIT_OK


# -- parser ---------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="covlab", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    s = sub.add_parser("validate", help="look up the validity range of a model")
    _add_model_args(s)
    _add_domain_args(s)
    _add_io_args(s)

    s = sub.add_parser("gram", help="certify positive-definiteness on a sample file")
    _add_model_args(s)
    s.add_argument("--samples", required=True)
    s.add_argument("--angle-unit", choices=["radians", "degrees"], default="radians")
    _add_io_args(s)

    s = sub.add_parser("krige", help="simple kriging onto targets or a grid")
    _add_model_args(s)
    s.add_argument("--samples", required=True)
    t = s.add_mutually_exclusive_group()
    t.add_argument("--targets")
    t.add_argument("--grid", default="50,50", help="NX,NY grid over the data bounding box")
    s.add_argument("--mean", type=float, default=None, help="known mean (default: sample mean)")
    s.add_argument("--angle-unit", choices=["radians", "degrees"], default="radians")
    _add_io_args(s)

    s = sub.add_parser("simulate", help="Gaussian draws by Cholesky factorization")
    _add_model_args(s)
    s.add_argument("--samples", required=True)
    s.add_argument("--count", type=int, default=1)
    s.add_argument("--mean", type=float, default=0.0)
    s.add_argument("--angle-unit", choices=["radians", "degrees"], default="radians")
    _add_io_args(s)

    s = sub.add_parser("fit", help="fit a model to the empirical covariance")
    s.add_argument("--samples", required=True)
    s.add_argument("--family", required=True, choices=["stable", "exponential", "triangle"])
    s.add_argument("--bin-width", type=float, required=True)
    s.add_argument("--max-lag", type=float, required=True)
    s.add_argument("--init-file")
    s.add_argument("--angle-unit", choices=["radians", "degrees"], default="radians")
    _add_domain_args(s)
    _add_io_args(s)

    s = sub.add_parser("counterexample", help="search for a non-PD configuration")
    _add_model_args(s)
    _add_domain_args(s)
    s.add_argument("--budget", type=int, default=1000)
    s.add_argument("--max-size", type=int, default=30)
    s.add_argument("--grid", action="store_true", help="include product-grid layouts")
    s.add_argument("--grid-312", action="store_true",
                   help="certify the fixed nine-sample sphere grid with BRC alpha2=1.01")
    s.add_argument("--angle-unit", choices=["radians", "degrees"], default="radians")
    s.add_argument("--radius", type=float, default=1.0,
                   help="sphere radius multiplying the geographic scale (6371 for km)")
    s.add_argument("--output-dir", default=".")
    _add_io_args(s, output=False)

    s = sub.add_parser("nd-test", help="randomized variogram checks on a JSON expression tree")
    s.add_argument("--variogram-file", required=True)
    s.add_argument("--trials", type=int, default=200)
    s.add_argument("--points", type=int, default=12)
    s.add_argument("--subadditivity", action="store_true")
    _add_io_args(s)

    s = sub.add_parser("synth", help="clustered synthetic data set")
    _add_model_args(s)
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--box-km", type=float, default=1000.0)
    s.add_argument("--mean", type=float, default=0.0)
    _add_io_args(s)
    return p


COMMANDS = {
    "validate": cmd_validate,
    "gram": cmd_gram,
    "krige": cmd_krige,
    "simulate": cmd_simulate,
    "fit": cmd_fit,
    "counterexample": cmd_counterexample,
    "nd-test": cmd_nd_test,
    "synth": cmd_synth,
}


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        run = _Run(args.command, argv, args)
        return COMMANDS[args.command](args, run)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_ERROR
    except (DataError, SingularCovarianceError, ValueError, TypeError, OSError, KeyError) as exc:
        print(f"covlab: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


def replay(report_path) -> int:
    """Re-run the command recorded in a run report."""
    rep = json.loads(Path(report_path).read_text())
    argv = list(rep["argv"])
    # a seed taken from COVLAB_SEED is pinned so the environment cannot change it
    if rep.get("seed") is not None and "--seed" not in argv:
        argv += ["--seed", str(rep["seed"])]
    return main(argv)


if __name__ == "__main__":
    sys.exit(main())
