"""Command-line entry point: ``python -m hedgehog <command> [options]``.

Options may come from a JSON file given with ``--config``; flags given on
the command line override it.  Exit status is 0 on success, 1 for invalid
input (with a JSON error document on stderr) and 2 when a solver fails.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import io
from .analysis import (
    a2_interval,
    check_bounds,
    farfield_fit,
    farfield_residuals,
    gradient_bound,
    reduced_energy,
    tensor_residual,
)
from .model import DomainError, PhysicalParams, derive_model_params, nondimensionalize
from .perturbation import (
    DIRECTIONS,
    FAMILIES,
    amplitude_family,
    biaxial_delta,
    second_variation_general,
    stability_map,
    stability_threshold,
)
from .profile import RTOL, ATOL, SolverError, classify_shot, solve_finite_ball, solve_semi_infinite

OUT_DIR_ENV = "HEDGEHOG_OUT_DIR"

DEFAULTS = {
    "t": None,
    "physical": None,
    "relaxed": False,
    "semi_infinite": False,
    "R": None,
    "r_max": 50.0,
    "tol": 1e-12,
    "n_grid": 2001,
    "format": None,
    "out": None,
    # command specific
    "a2": None,
    "sigma": 10.0,
    "inner": 0.0,
    "family": "rational",
    "n_panels": 400,
    "t_grid": None,
    "R_grid": None,
    "workers": 1,
    "radii": [1.0, 5.0, 20.0],
    "spacing": 1e-3,
    "window": [25.0, 45.0],
}

COMMANDS = {
    "params": "derived model constants (h_plus, lambda_t^2, C_t, far-field coefficient) "
              "and, from material constants, the reduced temperature and radii",
    "solve": "hedgehog profile by series launch and shooting; writes r,h,dh CSV plus a JSON "
             "sidecar with a2 and solver metadata",
    "shoot": "classify single shots from the core amplitude a2 as P (turns back), "
             "R (overshoots 1) or Q (converges)",
    "energy": "reduced radial energy of the solved profile against the constant-profile "
              "value 3R",
    "verify": "check battery on a solved profile: pointwise envelopes, a2 interval, "
              "monotonicity, far-field coefficient and residuals, gradient maximum, "
              "tensor-equation residual and energy bound",
    "biaxial": "energy change from a localized biaxial perturbation of the hedgehog, with "
               "the solved profile and with its upper envelope",
    "stability": "small-ball stability radius and, for a given R, second variations for "
                 "each amplitude family and tensor direction",
    "map": "sweep over (t, R): threshold flag and sign of the biaxial energy change, as CSV",
    "residual": "finite-difference defect of the full tensor equations for the "
                "reconstructed hedgehog",
}


class ValidationError(Exception):
    pass


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _add_model(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", default=argparse.SUPPRESS,
                   help="JSON file with option values; flags override it")
    g = p.add_argument_group("model")
    g.add_argument("--t", type=float, help="reduced temperature (t > 1)")
    g.add_argument("--relaxed", action="store_true", default=None,
                   help="allow t >= 1 (boundary case)")


def _add_geometry(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("geometry")
    g.add_argument("--semi-infinite", dest="semi_infinite", action="store_true", default=None,
                   help="approximate the unbounded domain on [0, r_max]")
    g.add_argument("--R", type=float, help="ball radius (reduced units)")
    g.add_argument("--r-max", dest="r_max", type=float, help="truncation radius (default 50)")
    g.add_argument("--tol", type=float, help="bisection tolerance on a2 (default 1e-12)")
    g.add_argument("--n-grid", dest="n_grid", type=int, help="output grid points (default 2001)")


def _add_output(p: argparse.ArgumentParser, formats=("json", "table")) -> None:
    g = p.add_argument_group("output")
    g.add_argument("--format", choices=formats)
    g.add_argument("--out", help=f"output path (default: stdout, or ${OUT_DIR_ENV}/<command>.<ext>)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hedgehog", description=__doc__.splitlines()[0])
    parser.add_argument("--config", help="JSON file with option values; flags override it")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("params", help=COMMANDS["params"], description=COMMANDS["params"])
    _add_model(p)
    _add_output(p)

    p = sub.add_parser("solve", help=COMMANDS["solve"], description=COMMANDS["solve"])
    _add_model(p)
    _add_geometry(p)
    _add_output(p, ("csv", "json"))

    p = sub.add_parser("shoot", help=COMMANDS["shoot"], description=COMMANDS["shoot"])
    _add_model(p)
    p.add_argument("--a2", type=_floats, help="comma-separated core amplitudes")
    p.add_argument("--r-max", dest="r_max", type=float)
    _add_output(p, ("json", "table", "csv"))

    for name in ("energy", "verify"):
        p = sub.add_parser(name, help=COMMANDS[name], description=COMMANDS[name])
        _add_model(p)
        _add_geometry(p)
        if name == "verify":
            p.add_argument("--window", type=_floats, help="far-field window r1,r2")
        _add_output(p)

    p = sub.add_parser("biaxial", help=COMMANDS["biaxial"], description=COMMANDS["biaxial"])
    _add_model(p)
    _add_geometry(p)
    p.add_argument("--sigma", type=float, help="outer support radius (default 10)")
    p.add_argument("--inner", type=float, help="inner support radius (default 0)")
    p.add_argument("--family", choices=FAMILIES)
    p.add_argument("--n-panels", dest="n_panels", type=int)
    _add_output(p)

    p = sub.add_parser("stability", help=COMMANDS["stability"],
                       description=COMMANDS["stability"])
    _add_model(p)
    p.add_argument("--R", type=float, help="ball radius to test")
    p.add_argument("--n-panels", dest="n_panels", type=int)
    _add_output(p)

    p = sub.add_parser("map", help=COMMANDS["map"], description=COMMANDS["map"])
    p.add_argument("--config", default=argparse.SUPPRESS,
                   help="JSON file with option values; flags override it")
    p.add_argument("--t-grid", dest="t_grid", type=_floats)
    p.add_argument("--R-grid", dest="R_grid", type=_floats)
    p.add_argument("--sigma", type=float)
    p.add_argument("--workers", type=int)
    _add_output(p, ("csv", "json"))

    p = sub.add_parser("residual", help=COMMANDS["residual"], description=COMMANDS["residual"])
    _add_model(p)
    _add_geometry(p)
    p.add_argument("--radii", type=_floats, help="sample radii (default 1,5,20)")
    p.add_argument("--spacing", type=float, help="stencil spacing (default 1e-3)")
    _add_output(p)
    return parser


# --------------------------------------------------------------------------
# configuration


def resolve_config(args: argparse.Namespace) -> dict:
    cfg = dict(DEFAULTS)
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                loaded = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ValidationError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(loaded, dict):
            raise ValidationError("config file must hold a JSON object")
        loaded.pop("command", None)
        unknown = sorted(set(loaded) - set(DEFAULTS))
        if unknown:
            raise ValidationError(f"unknown config keys: {', '.join(unknown)}")
        cfg.update(loaded)
    for key, val in vars(args).items():
        if key in DEFAULTS and val is not None:
            cfg[key] = val
    cfg["command"] = args.command
    return cfg


def _check_positive(cfg: dict, *keys: str) -> None:
    for k in keys:
        v = cfg.get(k)
        if v is not None and not (isinstance(v, (int, float)) and v > 0 and math.isfinite(v)):
            raise ValidationError(f"{k} must be positive, got {v!r}")


def _model(cfg: dict):
    geom = None
    if cfg.get("physical") is not None:
        try:
            phys = PhysicalParams(**cfg["physical"])
        except TypeError as exc:
            raise ValidationError(f"physical block: {exc}") from exc
        t, geom = nondimensionalize(phys, relaxed=bool(cfg["relaxed"]))
        if cfg.get("t") is not None and not math.isclose(cfg["t"], t, rel_tol=1e-12):
            raise ValidationError("both t and a physical block given, and they disagree")
    else:
        t = cfg.get("t")
        if t is None:
            raise ValidationError("reduced temperature required: give --t or a physical block")
    return derive_model_params(float(t), relaxed=bool(cfg["relaxed"])), geom


def _solve(cfg: dict, m):
    _check_positive(cfg, "tol", "r_max", "R", "n_grid")
    if cfg["semi_infinite"] and cfg["R"] is not None:
        raise ValidationError("choose exactly one geometry: --semi-infinite or --R")
    if not cfg["semi_infinite"] and cfg["R"] is None:
        raise ValidationError("choose exactly one geometry: --semi-infinite or --R")
    if cfg["semi_infinite"]:
        return solve_semi_infinite(m, float(cfg["r_max"]), float(cfg["tol"]), int(cfg["n_grid"]))
    return solve_finite_ball(m, float(cfg["R"]), float(cfg["tol"]), int(cfg["n_grid"]))


def _prov(cfg: dict) -> dict:
    hashed = {k: v for k, v in cfg.items() if k not in ("out", "format")}
    tols = {"a2_tol": cfg["tol"], "rtol": RTOL, "atol": ATOL}
    return io.provenance(hashed, tols)


def _destination(cfg: dict, ext: str) -> Path | None:
    if cfg.get("out"):
        return Path(cfg["out"])
    base = os.environ.get(OUT_DIR_ENV)
    if base:
        return Path(base) / f"{cfg['command']}.{ext}"
    return None


def _emit(cfg: dict, text: str, ext: str, stdout) -> Path | None:
    dest = _destination(cfg, ext)
    if dest is None:
        stdout.write(text)
        return None
    io.write_text(dest, text)
    return dest


def _table(rows: list[tuple]) -> str:
    cells = [[c if isinstance(c, str) else (io.fmt_float(c) if isinstance(c, float) else str(c))
              for c in row] for row in rows]
    widths = [max(len(r[i]) for r in cells) for i in range(len(cells[0]))]
    return "".join("  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() + "\n"
                   for r in cells)


def _report(cfg: dict, doc: dict, rows: list[tuple], stdout) -> None:
    fmt = cfg.get("format") or "json"
    if fmt == "table":
        _emit(cfg, _table(rows), "txt", stdout)
    else:
        doc = dict(doc, provenance=_prov(cfg))
        _emit(cfg, io.dumps(doc), "json", stdout)


# --------------------------------------------------------------------------
# commands


def cmd_params(cfg, stdout):
    m, geom = _model(cfg)
    doc = {"t": m.t, "h_plus": m.h_plus, "lambda_t_sq": m.lambda_t_sq, "C_t": m.C_t,
           "farfield_coeff": m.farfield_coeff, "cubic_ratio": m.cubic_ratio,
           "R_threshold": stability_threshold(m, geom).R_threshold}
    if geom is not None:
        doc["geometry"] = geom
    _report(cfg, doc, [(k, v) for k, v in doc.items() if not isinstance(v, (dict, tuple))]
            if geom is None else [(k, v) for k, v in doc.items() if k != "geometry"], stdout)
    return 0


def cmd_solve(cfg, stdout):
    m, _ = _model(cfg)
    prof = _solve(cfg, m)
    prov = _prov(cfg)
    lo, hi = a2_interval(m)
    fmt = cfg.get("format")
    dest = _destination(cfg, "csv" if fmt != "json" else "json")
    if fmt is None and dest is not None:
        fmt = "json" if dest.suffix == ".json" else "csv"
    fmt = fmt or "csv"
    sidecar = {"a2": prof.a2, "a2_interval": [lo, hi], "t": m.t, "domain": prof.domain,
               "solver_meta": prof.solver_meta, "provenance": prov}
    if fmt == "csv":
        text = io.profile_csv(prof, prov)
        if dest is None:
            stdout.write(text)
        else:
            io.write_text(dest, text)
            io.write_text(dest.with_suffix(".json"), io.dumps(sidecar))
    else:
        text = io.profile_json(prof, prov)
        if dest is None:
            stdout.write(text)
        else:
            io.write_text(dest, text)
    return 0


def cmd_shoot(cfg, stdout):
    m, _ = _model(cfg)
    if not cfg.get("a2"):
        raise ValidationError("--a2 required")
    values = cfg["a2"] if isinstance(cfg["a2"], list) else [cfg["a2"]]
    _check_positive(cfg, "r_max")
    rows = []
    for a in values:
        if not a > 0:
            raise ValidationError("a2 values must be positive")
        out = classify_shot(float(a), m, float(cfg["r_max"]))
        rows.append((float(a), out.cls, out.witness_r))
    fmt = cfg.get("format") or "json"
    if fmt == "csv":
        _emit(cfg, io.rows_csv(["a2", "class", "witness_r"], rows, _prov(cfg)), "csv", stdout)
    else:
        doc = {"t": m.t, "r_max": cfg["r_max"],
               "shots": [{"a2": a, "class": c, "witness_r": w} for a, c, w in rows]}
        _report(cfg, doc, [("a2", "class", "witness_r")] + rows, stdout)
    return 0


def cmd_energy(cfg, stdout):
    m, _ = _model(cfg)
    prof = _solve(cfg, m)
    rep = reduced_energy(prof, m)
    doc = {"a2": prof.a2, "domain": prof.domain, "energy": rep,
           "below_3R": bool(rep.I_h < rep.bound_3R)}
    rows = [("I_h", rep.I_h), ("I_tensor", rep.I_tensor), ("3R", rep.bound_3R),
            ("quadrature_error", rep.quadrature_error)]
    _report(cfg, doc, rows, stdout)
    return 0


def run_checks(prof, m, window=(25.0, 45.0)) -> list[dict]:
    """Check battery used by ``verify``; each entry has name, value, limit, passed."""
    checks = []

    def add(name, value, limit, passed):
        checks.append({"name": name, "value": float(value), "limit": limit, "passed": bool(passed)})

    R = prof.r_end
    large = prof.domain.get("kind") == "semi-infinite" or R >= 20
    if large:
        bc = check_bounds(prof, m)
        add("lower envelope r^2/(r^2+14)", bc.max_lower_violation, 1e-6, bc.lower_ok)
        add("upper envelope r^2/(r^2+t lambda^2)", bc.max_upper_violation, 1e-6, bc.upper_ok)
        lo, hi = a2_interval(m)
        add("a2 within envelope interval", prof.a2, [lo, hi], lo <= prof.a2 <= hi)
    interior = prof.dh[1:-1]
    add("h' > 0 on interior grid", float(interior.min()), 0.0, bool(np.all(interior > 0)))
    if prof.domain.get("kind") == "semi-infinite" and window[1] <= R:
        ff = farfield_fit(prof, m, tuple(window))
        add("far-field coefficient (relative error)", ff.relative_error, 0.01,
            ff.relative_error < 0.01)
        r_chk = min(40.0, R)
        res = farfield_residuals(prof, m, r_chk)
        worst = max(res["curvature"], res["slope"], res["balance"])
        add(f"far-field residuals at r={r_chk:g}", worst, 0.05, worst < 0.05)
    g = gradient_bound(prof, (min(1.0, R / 2), R))
    add("gradient maximum (reported)", g, None, math.isfinite(g))
    radii = [r for r in (1.0, 5.0, 20.0) if r + 0.01 < R] or [R / 2]
    res = tensor_residual(prof, m, radii)
    add("tensor-equation residual", res, 1e-5, res < 1e-5)
    en = reduced_energy(prof, m)
    add("energy below 3R", en.I_h, en.bound_3R, en.I_h < en.bound_3R)
    return checks


def cmd_verify(cfg, stdout):
    m, _ = _model(cfg)
    prof = _solve(cfg, m)
    window = cfg.get("window") or [25.0, 45.0]
    if len(window) != 2:
        raise ValidationError("--window takes two radii")
    import warnings

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        checks = run_checks(prof, m, window)
    ok = all(c["passed"] for c in checks)
    fmt = cfg.get("format") or "table"
    if fmt == "table":
        rows = [("check", "value", "limit", "result")]
        for c in checks:
            lim = c["limit"]
            lim_s = "-" if lim is None else (
                "[" + ", ".join(io.fmt_float(x) for x in lim) + "]" if isinstance(lim, list)
                else io.fmt_float(lim))
            rows.append((c["name"], io.fmt_float(c["value"]), lim_s,
                         "PASS" if c["passed"] else "FAIL"))
        _emit(cfg, _table(rows), "txt", stdout)
    else:
        _report(cfg, {"a2": prof.a2, "domain": prof.domain, "checks": checks, "all_passed": ok},
                [], stdout)
    return 0 if ok else 1


def cmd_biaxial(cfg, stdout):
    m, _ = _model(cfg)
    if cfg["R"] is None:
        cfg["semi_infinite"] = True
    _check_positive(cfg, "sigma", "n_panels")
    pert = amplitude_family(cfg["family"], float(cfg["sigma"]), float(cfg["inner"]))
    prof = _solve(cfg, m)
    rep = biaxial_delta(pert, prof, m, int(cfg["n_panels"]))
    doc = {"t": m.t, "a2": prof.a2, "family": cfg["family"], "sigma": cfg["sigma"],
           "inner": cfg["inner"], "report": rep}
    rows = [("delta_I_exact", rep.delta_I_exact), ("delta_I_bound", rep.delta_I_bound),
            ("quadratic_part", rep.quadratic_part), ("verdict", rep.verdict)]
    _report(cfg, doc, rows, stdout)
    return 0


def cmd_stability(cfg, stdout):
    m, geom = _model(cfg)
    _check_positive(cfg, "R", "n_panels")
    R = cfg.get("R")
    verdict = stability_threshold(m, geom, R)
    doc = {"t": m.t, "verdict": verdict}
    rows = [("R_threshold", verdict.R_threshold)]
    if verdict.R_threshold_real is not None:
        rows.append(("R_threshold_real", verdict.R_threshold_real))
    if R is not None:
        prof = solve_finite_ball(m, float(R))
        sv = {}
        for fam in FAMILIES:
            pert = amplitude_family(fam, float(R))
            for d in DIRECTIONS:
                v = second_variation_general(pert, prof, m, float(R), d, int(cfg["n_panels"]))
                sv[f"{fam}/{d}"] = v
                rows.append((f"second variation {fam}/{d}", v))
        doc.update(R=R, a2=prof.a2, second_variation=sv,
                   all_positive=bool(all(v > 0 for v in sv.values())))
        rows.append(("below threshold", str(verdict.stable)))
    _report(cfg, doc, rows, stdout)
    return 0


def cmd_map(cfg, stdout):
    if not cfg.get("t_grid") or not cfg.get("R_grid"):
        raise ValidationError("--t-grid and --R-grid are required")
    _check_positive(cfg, "sigma", "workers")
    for R in cfg["R_grid"]:
        if not R > 0:
            raise ValidationError("R values must be positive")
    cells = stability_map(cfg["t_grid"], cfg["R_grid"], float(cfg["sigma"]), int(cfg["workers"]))
    fmt = cfg.get("format") or "csv"
    if fmt == "csv":
        rows = [(c.t, c.R, c.threshold_flag, "" if c.delta_sign is None else c.delta_sign,
                 c.status) for c in cells]
        cols = ["t", "R", "threshold_flag", "delta_sign", "status"]
        _emit(cfg, io.rows_csv(cols, rows, _prov(cfg)),
              "csv", stdout)
    else:
        _report(cfg, {"cells": cells}, [], stdout)
    return 0


def cmd_residual(cfg, stdout):
    m, _ = _model(cfg)
    _check_positive(cfg, "spacing")
    prof = _solve(cfg, m)
    vals = [(float(r), tensor_residual(prof, m, [r], float(cfg["spacing"]))) for r in cfg["radii"]]
    doc = {"t": m.t, "spacing": cfg["spacing"],
           "residuals": [{"r": r, "residual": v} for r, v in vals],
           "max": max(v for _, v in vals)}
    _report(cfg, doc, [("r", "residual")] + vals, stdout)
    return 0


HANDLERS = {
    "params": cmd_params,
    "solve": cmd_solve,
    "shoot": cmd_shoot,
    "energy": cmd_energy,
    "verify": cmd_verify,
    "biaxial": cmd_biaxial,
    "stability": cmd_stability,
    "map": cmd_map,
    "residual": cmd_residual,
}


def _error(kind: str, exc: Exception, command: str | None, stderr) -> None:
    stderr.write(io.dumps({"error": {"type": kind, "class": type(exc).__name__,
                                     "message": str(exc), "command": command}}))


def main(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve_config(args)
        return HANDLERS[args.command](cfg, stdout)
    except (ValidationError, DomainError, ValueError, TypeError) as exc:
        _error("validation", exc, args.command, stderr)
        return 1
    except SolverError as exc:
        _error("solver", exc, args.command, stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
