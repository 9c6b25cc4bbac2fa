"""Command-line interface: every diagnostic as a subcommand, emitting CSV or
JSON tables suitable for plotting.

Angles accept literals like ``pi/2`` or ``2pi/3``; ranges are written
``lo:hi:count`` (angle literals allowed for the endpoints). A JSON config
file passed with --config supplies defaults for any long flag (flags given
on the command line win). Exit codes: 0 success, 2 usage error, 1 runtime
failure (with a JSON error record on stderr).
"""
from __future__ import annotations

import argparse
import json
import math
import os
import re
import sys
from datetime import datetime, timezone

import numpy as np

from . import __version__
from .chaos import (chaotic_area, fibonacci_sphere, lyapunov_qr,
                    phase_space_similarity)
from .classical import trajectory, unit_vector
from .floquet import SpinRepresentation
from .params import ModelParams
from .qchaos import (fit_quantum_lyapunov, floquet_gamma,
                     localization_delta, otoc_series)
from .scan import METRICS, ScanSpec, resume, run_scan
from .stability import classify_fixed_point, find_fixed_points

PROG = "pspin"


class UsageError(Exception):
    """Invalid flag value; carries the offending flag name."""

    def __init__(self, flag: str, message: str):
        super().__init__(f"{flag}: {message}")
        self.flag = flag


_ANGLE_RE = re.compile(r"^\s*(-?)(\d+(?:\.\d+)?)?\s*\*?\s*pi\s*(?:/\s*(\d+(?:\.\d+)?))?\s*$")


def parse_angle(text: str) -> float:
    """Parse an angle literal: plain float, 'pi', 'pi/2', '2pi/3', '0.5pi'."""
    if isinstance(text, (int, float)):
        return float(text)
    m = _ANGLE_RE.match(text)
    if m:
        sign = -1.0 if m.group(1) == "-" else 1.0
        coeff = float(m.group(2)) if m.group(2) else 1.0
        den = float(m.group(3)) if m.group(3) else 1.0
        return sign * coeff * math.pi / den
    try:
        return float(text)
    except ValueError:
        raise ValueError(f"cannot parse angle {text!r} (use e.g. 1.57, pi/2, 2pi/3)")


def parse_range(text: str) -> tuple[float, float, int]:
    """Parse 'lo:hi:count' with angle literals allowed for lo and hi."""
    parts = str(text).split(":")
    if len(parts) != 3:
        raise ValueError(f"expected lo:hi:count, got {text!r}")
    lo, hi = parse_angle(parts[0]), parse_angle(parts[1])
    count = int(parts[2])
    if count < 1:
        raise ValueError("range count must be >= 1")
    return (lo, hi, count)


def parse_int_range(text: str) -> tuple[int, int]:
    parts = str(text).split(":")
    if len(parts) != 2:
        raise ValueError(f"expected lo:hi, got {text!r}")
    return (int(parts[0]), int(parts[1]))


def parse_point(text: str) -> np.ndarray:
    parts = [float(v) for v in str(text).split(",")]
    if len(parts) != 3:
        raise ValueError(f"expected x,y,z, got {text!r}")
    return unit_vector(np.array(parts))


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def render_csv(rows: list[dict], fieldnames: list[str]) -> str:
    lines = [",".join(fieldnames)]
    for row in rows:
        lines.append(",".join(_fmt(row.get(name)) for name in fieldnames))
    return "\n".join(lines) + "\n"


def render_json(command: str, options: dict, rows: list[dict],
                extra: dict | None = None, timestamp: bool = True,
                seed=None) -> str:
    def clean(v):
        if isinstance(v, (np.integer,)):
            return int(v)
        if isinstance(v, (np.floating,)):
            return float(v)
        if isinstance(v, (np.bool_,)):
            return bool(v)
        if isinstance(v, np.ndarray):
            return v.tolist()
        if isinstance(v, tuple):
            return list(v)
        return v

    provenance = {"version": __version__, "seed": seed}
    if timestamp:
        provenance["timestamp"] = datetime.now(timezone.utc).isoformat()
    payload = {
        "spec": {"command": command,
                 **{k: clean(v) for k, v in sorted(options.items())}},
        "provenance": provenance,
        "data": [{k: clean(v) for k, v in row.items()} for row in rows],
    }
    if extra:
        payload["summary"] = {k: clean(v) for k, v in extra.items()}
    return json.dumps(payload, sort_keys=True) + "\n"


def _emit(opts, command, rows, fieldnames, extra=None):
    if opts["format"] == "csv":
        text = render_csv(rows, fieldnames)
    else:
        echo = {k: v for k, v in opts.items()
                if k not in ("format", "out", "config", "no_timestamp")}
        text = render_json(command, echo, rows, extra=extra,
                           timestamp=not opts["no_timestamp"],
                           seed=opts.get("seed"))
    out = opts.get("out")
    if out:
        with open(out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# option tables: (flag, converter, default, help); required options have the
# _REQUIRED sentinel as default
# ---------------------------------------------------------------------------

_REQUIRED = object()

_COMMON = [
    ("format", str, "json", "output format: csv or json"),
    ("out", str, None, "output path (stdout when omitted)"),
    ("config", str, None, "JSON config file with defaults for any flag"),
    ("no_timestamp", bool, False, "omit the timestamp from JSON provenance"),
]

_OPTIONS = {
    "portrait": [
        ("p", int, _REQUIRED, "interaction order"),
        ("k", float, _REQUIRED, "kick strength"),
        ("alpha", parse_angle, _REQUIRED, "precession angle"),
        ("ntot", int, 200, "number of initial conditions"),
        ("kicks", int, 300, "kicks per trajectory"),
    ],
    "fixed-points": [
        ("p", int, _REQUIRED, "interaction order"),
        ("k", float, _REQUIRED, "kick strength"),
        ("alpha", parse_angle, _REQUIRED, "precession angle"),
        ("grid", int, 2000, "bracketing grid resolution"),
    ],
    "classify": [
        ("p", int, _REQUIRED, "interaction order"),
        ("k", float, _REQUIRED, "kick strength"),
        ("alpha", parse_angle, _REQUIRED, "precession angle"),
        ("point", parse_point, _REQUIRED, "fixed point as x,y,z"),
    ],
    "lyapunov": [
        ("p", int, _REQUIRED, "interaction order"),
        ("k", float, _REQUIRED, "kick strength"),
        ("alpha", parse_angle, _REQUIRED, "precession angle"),
        ("steps", int, 100_000, "accumulation steps"),
        ("transient", int, 1000, "transient steps to discard"),
        ("seed", int, 0, "RNG seed choosing the initial condition"),
    ],
    "area": [
        ("p", int, _REQUIRED, "interaction order"),
        ("k", float, _REQUIRED, "kick strength"),
        ("alpha", parse_angle, _REQUIRED, "precession angle"),
        ("ntot", int, 10_000, "number of initial conditions"),
        ("dmin", float, 0.06, "recurrence ball radius (chord distance)"),
        ("tmax", parse_int_range, (120, 140), "t_max list as lo:hi inclusive"),
    ],
    "similarity": [
        ("p", int, _REQUIRED, "interaction order"),
        ("k", float, _REQUIRED, "kick strength"),
        ("alpha", parse_angle, None, "single precession angle"),
        ("alphas", parse_range, None, "angle range lo:hi:count"),
        ("dalpha", float, 5e-4, "angle perturbation"),
        ("dk", float, 0.0, "kick perturbation"),
        ("ntot", int, 1500, "initial conditions"),
        ("kicks", int, 200, "kicks per trajectory"),
    ],
    "scan": [
        ("metric", str, _REQUIRED, f"one of {sorted(METRICS)}"),
        ("p", int, _REQUIRED, "interaction order"),
        ("krange", parse_range, _REQUIRED, "k range lo:hi:count"),
        ("arange", parse_range, _REQUIRED, "alpha range lo:hi:count"),
        ("seed", int, 0, "root seed for per-cell seeding"),
        ("parallelism", int, None, "worker processes (default $PSPIN_THREADS or 1)"),
        ("checkpoint", str, None, "checkpoint path (resumes when it exists)"),
        ("steps", int, None, "lyapunov: steps per seed"),
        ("transient", int, None, "lyapunov: transient steps"),
        ("nseeds", int, None, "lyapunov: seeds per cell"),
        ("ntot", int, None, "area/similarity: initial conditions"),
        ("dmin", float, None, "area: recurrence ball radius"),
        ("tmax", parse_int_range, None, "area: t_max list lo:hi"),
        ("dalpha", float, None, "similarity: angle perturbation"),
        ("dk", float, None, "similarity: kick perturbation"),
        ("kicks", int, None, "similarity: kicks per trajectory"),
        ("ns", int, None, "quantum metrics: number of spins"),
        ("nmax", int, None, "otoc_lyapunov: kicks in the series"),
        ("coesamples", int, None, "otoc_lyapunov: COE normalization samples"),
    ],
    "spectrum": [
        ("p", int, _REQUIRED, "interaction order"),
        ("k", float, _REQUIRED, "kick strength"),
        ("alpha", parse_angle, _REQUIRED, "precession angle"),
        ("ns", int, 512, "number of spins"),
    ],
    "ipr-delta": [
        ("p", int, _REQUIRED, "interaction order"),
        ("k", float, _REQUIRED, "kick strength"),
        ("alpha", parse_angle, _REQUIRED, "precession angle"),
        ("ns", int, 512, "number of spins"),
    ],
    "otoc": [
        ("p", int, _REQUIRED, "interaction order"),
        ("k", float, _REQUIRED, "kick strength"),
        ("alpha", parse_angle, _REQUIRED, "precession angle"),
        ("ns", int, 512, "number of spins"),
        ("nmax", int, 60, "kicks in the series"),
        ("coesamples", int, 20, "COE normalization samples"),
        ("seed", int, 0, "RNG seed for the COE normalization"),
    ],
}

_SCAN_SETTING_FLAGS = {
    "steps": "n_steps", "transient": "n_transient", "nseeds": "n_seeds",
    "ntot": "n_tot", "dmin": "d_min", "dalpha": "d_alpha", "dk": "d_k",
    "kicks": "n_kicks", "ns": "n_spins", "nmax": "n_max",
    "coesamples": "coe_samples",
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog=PROG, description="kicked p-spin diagnostics")
    sub = parser.add_subparsers(dest="command", required=True)
    for command, options in _OPTIONS.items():
        sp = sub.add_parser(command)
        for name, conv, default, help_text in options + _COMMON:
            flag = "--" + name.replace("_", "-")
            if conv is bool:
                sp.add_argument(flag, dest=name, action="store_true",
                                default=argparse.SUPPRESS, help=help_text)
            else:
                sp.add_argument(flag, dest=name, type=str,
                                default=argparse.SUPPRESS, help=help_text)
    return parser


def _resolve_options(command: str, ns: argparse.Namespace) -> dict:
    """Merge defaults < config file < command line, applying converters."""
    table = {name: (conv, default)
             for name, conv, default, _ in _OPTIONS[command] + _COMMON}
    given = vars(ns)
    config = {}
    config_path = given.get("config")
    if config_path:
        try:
            with open(config_path) as fh:
                config = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError("--config", str(exc))
        unknown = set(config) - set(table)
        if unknown:
            raise UsageError("--config", f"unknown keys {sorted(unknown)}")
    opts = {}
    for name, (conv, default) in table.items():
        if name in given and name != "config":
            raw = given[name]
        elif name in config:
            raw = config[name]
        else:
            if default is _REQUIRED:
                raise UsageError("--" + name.replace("_", "-"),
                                 "required option is missing")
            opts[name] = default
            continue
        try:
            if conv is bool:
                opts[name] = bool(raw)
            elif isinstance(raw, str) or conv in (parse_angle, parse_range,
                                                  parse_int_range, parse_point):
                opts[name] = conv(raw)
            else:
                opts[name] = conv(raw)
        except (ValueError, TypeError) as exc:
            raise UsageError("--" + name.replace("_", "-"), str(exc))
    opts["config"] = config_path
    return opts


# ---------------------------------------------------------------------------
# subcommand implementations
# ---------------------------------------------------------------------------


def _params(opts) -> ModelParams:
    try:
        return ModelParams(p=opts["p"], k=opts["k"], alpha=opts["alpha"])
    except (TypeError, ValueError) as exc:
        raise UsageError("--p/--k/--alpha", str(exc))


def _cmd_portrait(opts):
    params = _params(opts)
    points = fibonacci_sphere(opts["ntot"])
    rows = []
    for idx, x0 in enumerate(points):
        orbit = trajectory(x0, params, opts["kicks"]).points
        for step_idx, (x, y, z) in enumerate(orbit):
            rows.append({"p": params.p, "k": params.k, "alpha": params.alpha,
                         "ic": idx, "step": step_idx, "x": x, "y": y, "z": z})
    fields = ["p", "k", "alpha", "ic", "step", "x", "y", "z"]
    _emit(opts, "portrait", rows, fields)


def _cmd_fixed_points(opts):
    params = _params(opts)
    records = find_fixed_points(params, grid_resolution=opts["grid"])
    rows = []
    for rec in records:
        rows.append({
            "p": params.p, "k": params.k, "alpha": params.alpha,
            "x": rec.point[0], "y": rec.point[1], "z": rec.point[2],
            "kind": rec.stability.kind.value,
            "trace": rec.stability.trace,
            "eccentricity": rec.stability.eccentricity,
            "resonance": rec.stability.resonance,
            "eig1_re": rec.block_eigenvalues[0].real,
            "eig1_im": rec.block_eigenvalues[0].imag,
            "eig2_re": rec.block_eigenvalues[1].real,
            "eig2_im": rec.block_eigenvalues[1].imag,
        })
    fields = ["p", "k", "alpha", "x", "y", "z", "kind", "trace",
              "eccentricity", "resonance", "eig1_re", "eig1_im", "eig2_re",
              "eig2_im"]
    _emit(opts, "fixed-points", rows, fields)


def _cmd_classify(opts):
    params = _params(opts)
    v = opts["point"]
    stab = classify_fixed_point(v, params)
    rows = [{"p": params.p, "k": params.k, "alpha": params.alpha,
             "x": v[0], "y": v[1], "z": v[2], "kind": stab.kind.value,
             "trace": stab.trace, "eccentricity": stab.eccentricity,
             "resonance": stab.resonance}]
    fields = ["p", "k", "alpha", "x", "y", "z", "kind", "trace",
              "eccentricity", "resonance"]
    _emit(opts, "classify", rows, fields)


def _cmd_lyapunov(opts):
    params = _params(opts)
    rng = np.random.default_rng(opts["seed"])
    seed_point = unit_vector(rng.normal(size=3))
    result = lyapunov_qr(params, seed_point, opts["steps"], opts["transient"])
    rows = [{"p": params.p, "k": params.k, "alpha": params.alpha,
             "seed": opts["seed"], "n_steps": result.n_steps,
             "transient": result.transient_discarded,
             "value": result.value, "converged": result.converged}]
    fields = ["p", "k", "alpha", "seed", "n_steps", "transient", "value",
              "converged"]
    _emit(opts, "lyapunov", rows, fields)


def _cmd_area(opts):
    params = _params(opts)
    lo, hi = opts["tmax"]
    result = chaotic_area(params, opts["ntot"], opts["dmin"],
                          range(lo, hi + 1))
    rows = [{"p": params.p, "k": params.k, "alpha": params.alpha,
             "n_tot": result.n_tot, "d_min": result.d_min,
             "t_max_min": lo, "t_max_max": hi,
             "n_escaped": result.n_escaped, "a_ch": result.a_ch,
             "a_reg": result.a_reg,
             "a_ch_fraction": result.a_ch / (4.0 * math.pi)}]
    fields = ["p", "k", "alpha", "n_tot", "d_min", "t_max_min", "t_max_max",
              "n_escaped", "a_ch", "a_reg", "a_ch_fraction"]
    _emit(opts, "area", rows, fields)


def _cmd_similarity(opts):
    if (opts["alpha"] is None) == (opts["alphas"] is None):
        raise UsageError("--alpha/--alphas", "give exactly one of them")
    if opts["alphas"] is not None:
        lo, hi, count = opts["alphas"]
        alphas = np.linspace(lo, hi, count)
    else:
        alphas = np.array([opts["alpha"]])
    rows = []
    for alpha in alphas:
        params = ModelParams(p=opts["p"], k=opts["k"], alpha=float(alpha))
        res = phase_space_similarity(params, opts["dalpha"], opts["dk"],
                                     opts["ntot"], opts["kicks"])
        rows.append({"p": params.p, "k": params.k, "alpha": params.alpha,
                     "d_alpha": opts["dalpha"], "d_k": opts["dk"],
                     "n_tot": res.n_tot, "n_kicks": res.n_kicks,
                     "s_bar": res.s_bar, "n_excluded": res.n_excluded})
    fields = ["p", "k", "alpha", "d_alpha", "d_k", "n_tot", "n_kicks",
              "s_bar", "n_excluded"]
    _emit(opts, "similarity", rows, fields)


def _cmd_scan(opts):
    settings = {}
    for flag, setting in _SCAN_SETTING_FLAGS.items():
        value = opts.get(flag)
        if value is None:
            continue
        if flag == "tmax":
            settings["t_max_min"], settings["t_max_max"] = value
        else:
            settings[setting] = value
    try:
        spec = ScanSpec(metric=opts["metric"], p=opts["p"],
                        k_range=opts["krange"], alpha_range=opts["arange"],
                        root_seed=opts["seed"], settings=settings)
    except ValueError as exc:
        raise UsageError("--metric", str(exc))
    parallelism = opts["parallelism"]
    if parallelism is None:
        parallelism = int(os.environ.get("PSPIN_THREADS", "1"))
    table = None
    checkpoint_path = opts["checkpoint"]
    if checkpoint_path and os.path.exists(checkpoint_path):
        table = resume(checkpoint_path)
    table = run_scan(spec, parallelism=parallelism, table=table,
                     checkpoint_path=checkpoint_path)
    rows = []
    k_values = spec.k_values
    alpha_values = spec.alpha_values
    for i in range(spec.shape[0]):
        for j in range(spec.shape[1]):
            rows.append({"metric": spec.metric, "p": spec.p,
                         "alpha_index": i, "k_index": j,
                         "alpha": float(alpha_values[i]),
                         "k": float(k_values[j]),
                         "value": (float(table.values[i, j])
                                   if table.done[i, j] else None),
                         "done": bool(table.done[i, j])})
    fields = ["metric", "p", "alpha_index", "k_index", "alpha", "k", "value",
              "done"]
    extra = {"failures": len(table.failures)}
    _emit(opts, "scan", rows, fields, extra=extra)


def _cmd_spectrum(opts):
    params = _params(opts)
    rep = SpinRepresentation(opts["ns"])
    stats, gamma = floquet_gamma(params, rep)
    rows = [{"p": params.p, "k": params.k, "alpha": params.alpha,
             "n_spins": rep.n_spins, "r_bar": stats.r_bar, "gamma": gamma,
             "excluded_degenerate": stats.excluded_degenerate}]
    fields = ["p", "k", "alpha", "n_spins", "r_bar", "gamma",
              "excluded_degenerate"]
    _emit(opts, "spectrum", rows, fields)


def _cmd_ipr_delta(opts):
    params = _params(opts)
    rep = SpinRepresentation(opts["ns"])
    delta = localization_delta(params, rep)
    rows = [{"p": params.p, "k": params.k, "alpha": params.alpha,
             "n_spins": rep.n_spins, "delta": delta,
             "delta_coe": rep.dim / 3.0}]
    fields = ["p", "k", "alpha", "n_spins", "delta", "delta_coe"]
    _emit(opts, "ipr-delta", rows, fields)


def _cmd_otoc(opts):
    params = _params(opts)
    rep = SpinRepresentation(opts["ns"])
    series = otoc_series(params, rep, n_max=opts["nmax"],
                         coe_samples=opts["coesamples"],
                         rng_seed=opts["seed"])
    fit = fit_quantum_lyapunov(series)
    rows = []
    for n, c in zip(series.n, series.c):
        rows.append({"p": params.p, "k": params.k, "alpha": params.alpha,
                     "n_spins": rep.n_spins, "n": int(n), "c": float(c),
                     "c_normalized": float(c / series.c_coe),
                     "c_coe": series.c_coe,
                     "lam_q": fit.lam_q if fit else None,
                     "fit_n_lo": fit.n_lo if fit else None,
                     "fit_n_hi": fit.n_hi if fit else None})
    fields = ["p", "k", "alpha", "n_spins", "n", "c", "c_normalized",
              "c_coe", "lam_q", "fit_n_lo", "fit_n_hi"]
    extra = {"lam_q": fit.lam_q if fit else None,
             "window": [fit.n_lo, fit.n_hi] if fit else None,
             "residual": fit.residual if fit else None}
    _emit(opts, "otoc", rows, fields, extra=extra)


_DISPATCH = {
    "portrait": _cmd_portrait,
    "fixed-points": _cmd_fixed_points,
    "classify": _cmd_classify,
    "lyapunov": _cmd_lyapunov,
    "area": _cmd_area,
    "similarity": _cmd_similarity,
    "scan": _cmd_scan,
    "spectrum": _cmd_spectrum,
    "ipr-delta": _cmd_ipr_delta,
    "otoc": _cmd_otoc,
}


def main(argv=None) -> int:
    parser = _build_parser()
    ns = parser.parse_args(argv)
    try:
        opts = _resolve_options(ns.command, ns)
        if opts["format"] not in ("csv", "json"):
            raise UsageError("--format", f"unknown format {opts['format']!r}")
    except UsageError as exc:
        print(f"{PROG}: error: {exc}", file=sys.stderr)
        return 2
    try:
        _DISPATCH[ns.command](opts)
    except UsageError as exc:
        print(f"{PROG}: error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:
        record = {"error": str(exc), "type": type(exc).__name__,
                  "command": ns.command}
        print(json.dumps(record, sort_keys=True), file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
