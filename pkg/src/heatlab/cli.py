"""Command-line laboratory bench: config in, deterministic reports out.

Seven subcommands (spectrum, trace, fit, classify, weyl, invariants,
isospec), each a thin orchestration of one module. A run is a pure function
of its config file plus the seed: reports embed the sha256 of the effective
config and the package version, never a timestamp, so rerunning a command
yields byte-identical files — including under different --threads caps.

Exit codes: 0 success, 2 config parse, 3 tolerance violation, 4 file I/O,
5 validation (bad values, unmet preconditions). Failures print one
machine-readable JSON object on stderr."""

import argparse
import json
import math
import os
import sys

import numpy as np

from . import kernels, reports
from .models import build_circle, build_flat_torus, build_sphere
from . import fields
from . import operators
from .heattrace import heat_trace, default_t_grid, DEFAULT_REL_TOL
from . import asymptotics
from . import weyl as weyl_mod
from . import parametrix
from . import isospectral

EXIT_CONFIG = 2
EXIT_TOLERANCE = 3
EXIT_IO = 4
EXIT_VALIDATION = 5

RNG_NAME = "numpy.random.default_rng(PCG64)"


class CliError(Exception):
    def __init__(self, code, kind, message):
        super().__init__(message)
        self.code = code
        self.kind = kind


def _fail(code, kind, message):
    raise CliError(code, kind, message)


# ----------------------------------------------------------------------
# config plumbing
# ----------------------------------------------------------------------

def load_config(path):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            cfg = json.load(fh)
    except OSError as exc:
        _fail(EXIT_IO, "io", f"cannot read config {path}: {exc}")
    except json.JSONDecodeError as exc:
        _fail(EXIT_CONFIG, "config_parse", f"config {path} is not valid JSON: {exc}")
    if not isinstance(cfg, dict):
        _fail(EXIT_CONFIG, "config_parse", "config root must be an object")
    return cfg


def apply_overrides(cfg, args):
    """CLI flags override config keys; the merged dict is what gets hashed."""
    if args.seed is not None:
        cfg["seed"] = int(args.seed)
    for item in args.tolerance or []:
        if "=" not in item:
            _fail(EXIT_CONFIG, "config_parse",
                  f"--tolerance expects NAME=VALUE, got {item!r}")
        name, _, raw = item.partition("=")
        try:
            val = float(raw)
        except ValueError:
            _fail(EXIT_CONFIG, "config_parse",
                  f"--tolerance {name}: {raw!r} is not a number")
        cfg.setdefault("tolerances", {})[name] = val
    return cfg


def _tol(cfg, name, default=None):
    return (cfg.get("tolerances") or {}).get(name, default)


def build_model(cfg):
    spec = cfg.get("model")
    if not isinstance(spec, dict) or "kind" not in spec:
        _fail(EXIT_CONFIG, "config_parse", "config needs model.kind")
    kind = spec["kind"]
    try:
        if kind == "circle":
            return build_circle(float(spec.get("circumference", 2.0 * math.pi)),
                                band_limit=int(spec.get("band_limit", 64)))
        if kind == "torus":
            edges = tuple(float(v) for v in spec["edge_lengths"])
            return build_flat_torus(edges, band_limit=int(spec.get("band_limit", 16)))
        if kind == "sphere":
            return build_sphere(float(spec.get("radius", 1.0)),
                                band_limit=int(spec.get("band_limit", 32)))
    except (KeyError, TypeError) as exc:
        _fail(EXIT_CONFIG, "config_parse", f"bad model params: {exc}")
    except ValueError as exc:
        _fail(EXIT_VALIDATION, "validation", f"model rejected: {exc}")
    _fail(EXIT_CONFIG, "config_parse", f"unknown model kind {kind!r}")


def _rng_of(cfg):
    seed = cfg.get("seed")
    if seed is None:
        return None, None
    rng = np.random.default_rng(int(seed))
    return rng, {"seed": int(seed), "generator": RNG_NAME}


def build_field(model, cfg, key, rng):
    spec = cfg.get(key)
    if spec is None:
        return None
    try:
        return fields.field_from_config(model, spec, rng=rng)
    except (KeyError, TypeError) as exc:
        _fail(EXIT_CONFIG, "config_parse", f"bad {key} config: {exc}")
    except ValueError as exc:
        _fail(EXIT_VALIDATION, "validation", f"{key} rejected: {exc}")


def build_spectrum(model, cfg, rng):
    """Operator selection: laplace (exact modes), schrodinger, or drifting."""
    op = cfg.get("operator") or {"kind": "laplace"}
    kind = op.get("kind", "laplace")
    n_basis = int(op.get("n_basis", min(model.n_modes, 256)))
    trusted = op.get("trusted_count")
    trusted = int(trusted) if trusted is not None else None
    route = op.get("route", "auto")
    try:
        if kind == "laplace":
            return operators.exact_spectrum(model, count=op.get("count"))
        if kind == "schrodinger":
            V = build_field(model, cfg, "potential", rng)
            if V is None:
                _fail(EXIT_CONFIG, "config_parse",
                      "schrodinger operator needs a potential")
            return operators.schrodinger_spectrum(model, V, n_basis,
                                                  trusted_count=trusted,
                                                  route=route)
        if kind == "drifting_conjugated":
            f = build_field(model, cfg, "drift", rng)
            if f is None:
                _fail(EXIT_CONFIG, "config_parse", "drifting operator needs a drift")
            H = operators.assemble_drifting_conjugated(model, f, n_basis, route=route)
            return operators.eigen_decompose(H, "drifting_conjugated",
                                             trusted_count=trusted,
                                             model_ref=model.ref())
        if kind == "drifting_galerkin":
            f = build_field(model, cfg, "drift", rng)
            if f is None:
                _fail(EXIT_CONFIG, "config_parse", "drifting operator needs a drift")
            pair = operators.assemble_drifting_galerkin(model, f, n_basis)
            return operators.eigen_decompose(pair, "drifting_galerkin",
                                             trusted_count=trusted,
                                             model_ref=model.ref())
    except CliError:
        raise
    except ValueError as exc:
        _fail(EXIT_VALIDATION, "validation", f"operator rejected: {exc}")
    except NotImplementedError as exc:
        _fail(EXIT_VALIDATION, "validation", str(exc))
    _fail(EXIT_CONFIG, "config_parse", f"unknown operator kind {kind!r}")


def t_grid_from(cfg):
    spec = cfg.get("t_grid")
    if spec is None:
        return default_t_grid()
    try:
        return default_t_grid(float(spec.get("start", 1e-4)),
                              float(spec.get("stop", 1.0)),
                              per_decade=int(spec.get("per_decade", 40)))
    except (TypeError, ValueError) as exc:
        _fail(EXIT_CONFIG, "config_parse", f"bad t_grid: {exc}")


def _spectrum_summary(spectrum):
    js = spectrum.to_json()
    ev = js.pop("eigenvalues")
    js["n_eigenvalues"] = len(ev)
    js["smallest"] = ev[: min(8, len(ev))]
    js["largest_trusted"] = (float(spectrum.trusted[-1])
                             if spectrum.trusted_count else None)
    return js


def _write(outdir, name, obj):
    path = os.path.join(outdir, name)
    try:
        reports.write_json(path, obj)
    except OSError as exc:
        _fail(EXIT_IO, "io", f"cannot write {path}: {exc}")
    return path


def _write_csv(outdir, name, header, rows):
    path = os.path.join(outdir, name)
    try:
        reports.write_csv(path, header, rows)
    except OSError as exc:
        _fail(EXIT_IO, "io", f"cannot write {path}: {exc}")
    return path


# ----------------------------------------------------------------------
# commands
# ----------------------------------------------------------------------

def cmd_spectrum(cfg, outdir):
    rng, rng_info = _rng_of(cfg)
    model = build_model(cfg)
    spectrum = build_spectrum(model, cfg, rng)
    payload = {"spectrum": _spectrum_summary(spectrum), "rng": rng_info}
    paths = [_write(outdir, "spectrum.json", reports.report_envelope(cfg, payload)),
             _write_csv(outdir, "spectrum.csv", ("k", "eigenvalue", "trusted"),
                        ((k, float(v), k < spectrum.trusted_count)
                         for k, v in enumerate(spectrum.eigenvalues)))]
    return paths


def cmd_trace(cfg, outdir):
    rng, rng_info = _rng_of(cfg)
    model = build_model(cfg)
    spectrum = build_spectrum(model, cfg, rng)
    rel_tol = float(_tol(cfg, "trace_rel_tol", DEFAULT_REL_TOL))
    curve = heat_trace(spectrum, t_grid_from(cfg), rel_tol=rel_tol)
    js = curve.to_json()
    for key in ("t_grid", "values", "tail_bounds", "flagged"):
        js.pop(key)
    payload = {"trace": js, "n_points": int(curve.t_grid.shape[0]),
               "spectrum": _spectrum_summary(spectrum), "rng": rng_info}
    paths = [_write(outdir, "trace.json", reports.report_envelope(cfg, payload)),
             _write_csv(outdir, "trace.csv",
                        ("t", "theta", "tail_bound", "trusted"),
                        ((float(t), float(v), float(b), bool(tr))
                         for t, v, b, tr in zip(curve.t_grid, curve.values,
                                                curve.tail_bounds,
                                                curve.trusted_mask)))]
    return paths


def _check_expected(cfg, fitted, unc):
    """Optional closure gates: config expected.{a0,a1,a2} with tolerances
    tolerances.{a0,a1,a2}_abs / _rel. Violation exits 3."""
    expected = cfg.get("expected") or {}
    names = ("a0", "a1", "a2", "a3")
    for name, value in expected.items():
        if name not in names[: len(fitted)]:
            _fail(EXIT_CONFIG, "config_parse", f"expected.{name} not fitted")
        idx = names.index(name)
        got = fitted[idx]
        abs_tol = _tol(cfg, f"{name}_abs")
        rel_tol = _tol(cfg, f"{name}_rel")
        if abs_tol is None and rel_tol is None:
            abs_tol = 1e-6
        err = abs(got - float(value))
        if abs_tol is not None and err > abs_tol:
            _fail(EXIT_TOLERANCE, "tolerance",
                  f"{name} = {got:.12g} misses {value} by {err:.3g} "
                  f"(abs tolerance {abs_tol:g})")
        if rel_tol is not None and err > rel_tol * abs(float(value)):
            _fail(EXIT_TOLERANCE, "tolerance",
                  f"{name} = {got:.12g} misses {value} relatively "
                  f"({err / abs(float(value)):.3g} > {rel_tol:g})")


def cmd_fit(cfg, outdir):
    rng, rng_info = _rng_of(cfg)
    model = build_model(cfg)
    V = build_field(model, cfg, "potential", rng)
    f = build_field(model, cfg, "drift", rng)
    spectrum = build_spectrum(model, cfg, rng)
    curve = heat_trace(spectrum, t_grid_from(cfg),
                       rel_tol=float(_tol(cfg, "trace_rel_tol", DEFAULT_REL_TOL)))
    fit_cfg = cfg.get("fit") or {}
    window = fit_cfg.get("window")
    window = tuple(float(v) for v in window) if window else None
    m = int(fit_cfg.get("n_terms", 2))
    try:
        n_hat = asymptotics.estimate_dimension(curve)
        fit = asymptotics.fit_coefficients(curve, model.dim, m=m, window=window)
    except ValueError as exc:
        _fail(EXIT_VALIDATION, "validation", f"fit rejected: {exc}")
    predicted = asymptotics.predicted_coefficients(model, V=V, f=f)
    payload = {"n_hat_measured": float(n_hat), "fit": fit,
               "predicted": predicted, "rng": rng_info}
    path = _write(outdir, "fit.json", reports.report_envelope(cfg, payload))
    _check_expected(cfg, fit.coefficients, fit.uncertainties)
    return [path]


def cmd_classify(cfg, outdir):
    rng, rng_info = _rng_of(cfg)
    model = build_model(cfg)
    V = build_field(model, cfg, "potential", rng)
    if V is None:
        _fail(EXIT_CONFIG, "config_parse", "classify needs a potential")
    opts = cfg.get("classify") or {}
    try:
        result = asymptotics.classify_h1(model, V,
                                         eps=float(opts.get("eps", 0.1)),
                                         n_points=int(opts.get("n_points", 25)))
    except ValueError as exc:
        _fail(EXIT_VALIDATION, "validation", f"classifier rejected: {exc}")
    payload = {"classification": result, "field": V.name, "rng": rng_info}
    path = _write(outdir, "classify.json", reports.report_envelope(cfg, payload))
    expect = opts.get("expect")
    if expect is not None and result.classification != expect:
        _fail(EXIT_TOLERANCE, "tolerance",
              f"classified {result.classification!r}, expected {expect!r}")
    return [path]


def cmd_weyl(cfg, outdir):
    rng, rng_info = _rng_of(cfg)
    model = build_model(cfg)
    spectrum = build_spectrum(model, cfg, rng)
    if spectrum.trusted_count == 0:
        _fail(EXIT_VALIDATION, "validation", "no trusted eigenvalues")
    opts = cfg.get("weyl") or {}
    lam_top = float(spectrum.trusted[-1])
    fractions = [float(v) for v in opts.get("lambda_fractions", (0.25, 0.5, 1.0))]
    ratio_rows = []
    for frac in fractions:
        lam = frac * lam_top
        if lam <= 0:
            continue
        N = weyl_mod.counting_function(spectrum, lam)
        ratio_rows.append((lam, N, weyl_mod.weyl_ratio(spectrum, model, lam)))

    alpha = model.dim / 2.0
    tseq = opts.get("t_sequence") or {}
    ts = np.geomspace(float(tseq.get("start", 1e-4)),
                      float(tseq.get("stop", 3e-3)),
                      int(tseq.get("count", 8)))
    try:
        karamata = {
            "constant": weyl_mod.karamata_check(
                spectrum, alpha, weyl_mod.constant_g(), ts, model=model),
            "counting": weyl_mod.karamata_check(
                spectrum, alpha, weyl_mod.indicator_counting_g(), ts, model=model),
        }
    except ValueError as exc:
        _fail(EXIT_VALIDATION, "validation", f"karamata rejected: {exc}")
    payload = {"ratios": [{"lam": l, "count": n, "ratio": r}
                          for l, n, r in ratio_rows],
               "karamata": karamata, "rng": rng_info}
    paths = [_write(outdir, "weyl.json", reports.report_envelope(cfg, payload)),
             _write_csv(outdir, "weyl_counting.csv", ("lambda", "count", "ratio"),
                        ratio_rows),
             _write_csv(outdir, "weyl_karamata.csv",
                        ("g", "t", "F", "G", "gap", "trusted"),
                        ((name, row["t"], row["F"], rep["G"], row["gap"],
                          row["trusted"])
                         for name, rep in sorted(karamata.items())
                         for row in rep["rows"]))]
    gap_tol = _tol(cfg, "karamata_rel_gap")
    if gap_tol is not None:
        worst = karamata["counting"]["rel_gap_at_smallest_trusted"]
        if not worst <= gap_tol:
            _fail(EXIT_TOLERANCE, "tolerance",
                  f"karamata rel gap {worst:.3g} exceeds {gap_tol:g}")
    return paths


def cmd_invariants(cfg, outdir):
    rng, rng_info = _rng_of(cfg)
    model = build_model(cfg)
    f = build_field(model, cfg, "drift", rng)
    V = build_field(model, cfg, "potential", rng)
    try:
        invariants = parametrix.heat_invariants(model, f=f)
    except (ValueError, NotImplementedError) as exc:
        _fail(EXIT_VALIDATION, "validation", f"invariants rejected: {exc}")
    predicted = asymptotics.predicted_coefficients(model, V=V, f=f)
    payload = {"invariants": invariants, "predicted": predicted, "rng": rng_info}
    return [_write(outdir, "invariants.json", reports.report_envelope(cfg, payload))]


def cmd_isospec(cfg, outdir):
    sides = []
    for key in ("first", "second"):
        side = cfg.get(key)
        if not isinstance(side, dict):
            _fail(EXIT_CONFIG, "config_parse", f"isospec needs {key!r} config")
        rng, _ = _rng_of(side)
        model = build_model(side)
        spectrum = build_spectrum(model, side, rng)
        f = build_field(model, side, "drift", rng)
        dnorm = side.get("dirichlet_norm")
        if dnorm is None:
            dnorm = fields.dirichlet_norm(model, f) if f is not None else 0.0
        sides.append((spectrum, float(dnorm)))
    rel_tol = float(_tol(cfg, "compare_rel_tol", 1e-9))
    try:
        report = isospectral.isospectral_report(
            sides[0][0], sides[1][0], rel_tol=rel_tol,
            dirichlet_norms=(sides[0][1], sides[1][1]))
    except ValueError as exc:
        _fail(EXIT_VALIDATION, "validation", f"inference rejected: {exc}")
    path = _write(outdir, "isospec.json", reports.report_envelope(cfg, report))
    expect = cfg.get("expect_verdict")
    if expect is not None and bool(report["verdict"]) != bool(expect):
        _fail(EXIT_TOLERANCE, "tolerance",
              f"isospectral verdict {report['verdict']} != expected {expect}")
    return [path]


COMMANDS = {
    "spectrum": cmd_spectrum,
    "trace": cmd_trace,
    "fit": cmd_fit,
    "classify": cmd_classify,
    "weyl": cmd_weyl,
    "invariants": cmd_invariants,
    "isospec": cmd_isospec,
}


def build_parser():
    parser = argparse.ArgumentParser(
        prog="heatlab",
        description="heat-trace laboratory: spectra, traces, expansion fits, "
                    "Weyl/Karamata checks, parametrix invariants, and "
                    "spectral inference on model manifolds")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, help=f"run the {name} pipeline")
        p.add_argument("--config", required=True, help="JSON config file")
        p.add_argument("--out", default=None,
                       help="output directory (default: $HEATLAB_OUT or cwd)")
        p.add_argument("--threads", type=int, default=None,
                       help="cap worker threads (results are identical)")
        p.add_argument("--seed", type=int, default=None,
                       help="override the config's random seed")
        p.add_argument("--tolerance", action="append", metavar="NAME=VALUE",
                       help="override a tolerance (repeatable)")
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.threads is not None:
            kernels.set_threads(args.threads)
        cfg = apply_overrides(load_config(args.config), args)
        outdir = args.out or os.environ.get("HEATLAB_OUT") or os.getcwd()
        try:
            os.makedirs(outdir, exist_ok=True)
        except OSError as exc:
            _fail(EXIT_IO, "io", f"cannot create output dir {outdir}: {exc}")
        paths = COMMANDS[args.command](cfg, outdir)
    except CliError as exc:
        sys.stderr.write(reports.canonical_json(
            {"error": {"exit_code": exc.code, "kind": exc.kind,
                       "message": str(exc)}}))
        return exc.code
    for p in paths:
        print(p)
    return 0


if __name__ == "__main__":
    sys.exit(main())
