"""Batch front end: run, sweep, verify, plotdata, exponents.

Configs are plain key=value text.  Every run lands in its own directory,
named by a content hash of the configuration, holding series.csv (the
sampled diagnostics, 17 significant digits, LF endings) and manifest.json.
Exit codes for `run`: 0 success, 1 configuration error, 2 physics-guard
abort (the partial CSV ends with a `# aborted: <reason>` trailer).
"""

from __future__ import annotations

import argparse
import hashlib
import itertools
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from datetime import datetime, timezone
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .exponents import (PhysParams, decay_exponent, gn_parameters,
                        holder_exponents, sdc_check)
from .field import EnergyRecord, GridSpec
from .solver import (DiagnosticsSeries, FileSpec, GaussianSpec, RunConfig,
                     SolverAbort, evolve)
from .verify import (CHECK_NAMES, _cumtrapz, check_gradient_bound,
                     find_min_gamma, format_report, rate_fit, run_checks)

KNOWN_KEYS = frozenset({
    "d", "p", "lambda_re", "lambda_im", "n", "half_width", "dt", "t_end",
    "sample_every", "gammas", "data.amplitude", "data.width",
    "data.momentum", "data.file",
})
REQUIRED_KEYS = ("d", "p", "lambda_re", "lambda_im", "n", "half_width", "dt", "t_end")
# list-valued keys cannot serve as sweep axes (their commas are the list syntax)
SWEEPABLE_KEYS = KNOWN_KEYS - {"gammas", "data.momentum"}
PLOT_KINDS = ("decay", "energy", "virial", "critical-compensated")
MIN_RUN_N = 64


class ConfigError(Exception):
    """Configuration or input-file problem; message carries the context."""


def _fmt(x) -> str:
    return "%.17g" % float(x)


def _utcnow() -> str:
    return datetime.now(timezone.utc).isoformat()


def parse_kv_file(path) -> dict[str, tuple[str, int]]:
    """`key = value` lines to {key: (value, line_number)}.

    Blank lines are skipped and `#` starts a comment anywhere on a line.
    """
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as err:
        raise ConfigError(f"cannot read {path}: {err}")
    out: dict[str, tuple[str, int]] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key = value, got '{raw.strip()}'")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key or not value:
            raise ConfigError(f"{path}:{lineno}: empty key or value")
        if key in out:
            raise ConfigError(f"{path}:{lineno}: duplicate key '{key}'")
        out[key] = (value, lineno)
    return out


def _get(kv, key, conv, constraint):
    raw, line = kv[key]
    try:
        return conv(raw)
    except (ValueError, ZeroDivisionError):
        raise ConfigError(f"line {line}: {key} {constraint}, got '{raw}'")


def _floats(raw: str) -> tuple[float, ...]:
    return tuple(float(part) for part in raw.split(","))


def build_config(kv: dict[str, tuple[str, int]]) -> RunConfig:
    """Validated RunConfig from parsed key=value pairs.

    Every violated invariant is reported with the offending key and, where
    one exists, the line it came from.
    """
    for key, (_, line) in kv.items():
        if key not in KNOWN_KEYS:
            raise ConfigError(f"line {line}: unknown key '{key}'")
    for key in REQUIRED_KEYS:
        if key not in kv:
            raise ConfigError(f"missing required key '{key}'")

    d = _get(kv, "d", int, "must be an integer")
    if d not in (1, 2):
        raise ConfigError(f"line {kv['d'][1]}: d must be 1 or 2")
    p = _get(kv, "p", Fraction, "must be a number or fraction")
    if not p > 1:
        raise ConfigError(f"line {kv['p'][1]}: p must exceed 1")
    lam_re = _get(kv, "lambda_re", float, "must be a real number")
    lam_im = _get(kv, "lambda_im", float, "must be a real number")
    if not lam_im < 0:
        raise ConfigError(f"line {kv['lambda_im'][1]}: "
                          "lambda_im must be negative (runs need Im lambda < 0)")
    n = _get(kv, "n", int, "must be an integer")
    if n < MIN_RUN_N:
        raise ConfigError(f"line {kv['n'][1]}: n must be at least {MIN_RUN_N} for runs")
    half_width = _get(kv, "half_width", float, "must be a real number")
    dt = _get(kv, "dt", float, "must be a real number")
    t_end = _get(kv, "t_end", float, "must be a real number")
    sample_every = (_get(kv, "sample_every", int, "must be an integer")
                    if "sample_every" in kv else 10)
    gammas = (_get(kv, "gammas", _floats, "must be comma-separated reals")
              if "gammas" in kv else (0.0, 1.0))

    if "data.file" in kv:
        for key in ("data.amplitude", "data.width", "data.momentum"):
            if key in kv:
                raise ConfigError(f"line {kv[key][1]}: {key} conflicts with data.file")
        data = FileSpec(kv["data.file"][0])
    else:
        for key in ("data.amplitude", "data.width"):
            if key not in kv:
                raise ConfigError(f"missing required key '{key}' (or use data.file)")
        momentum = (_get(kv, "data.momentum", _floats, "must be comma-separated reals")
                    if "data.momentum" in kv else ())
        if momentum and len(momentum) != d:
            raise ConfigError(f"line {kv['data.momentum'][1]}: "
                              f"data.momentum needs {d} components")
        data = GaussianSpec(_get(kv, "data.amplitude", float, "must be a real number"),
                            _get(kv, "data.width", float, "must be a real number"),
                            momentum)

    try:
        params = PhysParams(d, p, lam_re, lam_im)
        grid = GridSpec(d, n, half_width)
        return RunConfig(params, grid, data, dt, t_end, sample_every, gammas)
    except ValueError as err:
        raise ConfigError(str(err))


def config_dict(config: RunConfig) -> dict:
    """JSON-ready echo of a config; p is kept exact as a fraction string."""
    p = config.params.p
    if isinstance(config.data, FileSpec):
        data = {"kind": "file", "path": config.data.path}
    else:
        data = {"kind": "gaussian", "amplitude": config.data.amplitude,
                "width": config.data.width, "momentum": list(config.data.momentum)}
    return {
        "d": config.params.d,
        "p": str(p) if isinstance(p, Fraction) else repr(float(p)),
        "lambda_re": config.params.lambda_re,
        "lambda_im": config.params.lambda_im,
        "n": config.grid.n,
        "half_width": config.grid.half_width,
        "dt": config.dt,
        "t_end": config.t_end,
        "sample_every": config.sample_every,
        "gammas": list(config.gammas),
        "data": data,
    }


def config_from_dict(cfg: dict) -> RunConfig:
    params = PhysParams(int(cfg["d"]), Fraction(cfg["p"]),
                        float(cfg["lambda_re"]), float(cfg["lambda_im"]))
    grid = GridSpec(int(cfg["d"]), int(cfg["n"]), float(cfg["half_width"]))
    raw = cfg["data"]
    if raw["kind"] == "file":
        data = FileSpec(raw["path"])
    else:
        data = GaussianSpec(float(raw["amplitude"]), float(raw["width"]),
                            tuple(float(k) for k in raw["momentum"]))
    return RunConfig(params, grid, data, float(cfg["dt"]), float(cfg["t_end"]),
                     int(cfg["sample_every"]), tuple(cfg["gammas"]))


def run_id(config: RunConfig) -> str:
    blob = json.dumps(config_dict(config), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:16]


def series_header(config: RunConfig) -> list[str]:
    return (["t", "mass", "l2", "grad", "lp1", "lq", "weighted", "energy"]
            + [f"eaug_{g:g}" for g in config.gammas]
            + ["boundary_frac", "mass_residual"])


def write_series_csv(series: DiagnosticsSeries, path, aborted: str | None = None) -> None:
    gammas = series.config.gammas
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(series_header(series.config)) + "\n")
        for t, rec, res in zip(series.times, series.records, series.step_residuals):
            row = [t, rec.mass, rec.l2, rec.grad, rec.lp1, rec.lq,
                   rec.weighted, rec.energy]
            row += [rec.eaug[float(g)] for g in gammas]
            row += [rec.boundary_mass_fraction, res]
            fh.write(",".join(_fmt(v) for v in row) + "\n")
        if aborted is not None:
            fh.write(f"# aborted: {aborted}\n")


def read_series_csv(path, config: RunConfig):
    """(series, abort_reason_or_None) from a series.csv written by this tool."""
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as err:
        raise ConfigError(f"cannot read {path}: {err}")
    expected = series_header(config)
    if not lines or lines[0].split(",") != expected:
        raise ConfigError(f"{path}:1: header does not match the run's configuration")
    rows: list[list[float]] = []
    aborted = None
    for lineno, line in enumerate(lines[1:], start=2):
        if line.startswith("#"):
            if line.startswith("# aborted: "):
                aborted = line[len("# aborted: "):]
            continue
        parts = line.split(",")
        if len(parts) != len(expected):
            raise ConfigError(f"{path}:{lineno}: expected {len(expected)} fields, "
                              f"got {len(parts)}")
        try:
            rows.append([float(part) for part in parts])
        except ValueError:
            raise ConfigError(f"{path}:{lineno}: non-numeric field")
    if not rows:
        raise ConfigError(f"{path}: no data rows")
    data = np.array(rows)
    ng = len(config.gammas)
    records = []
    for row in rows:
        eaug = {float(g): row[8 + j] for j, g in enumerate(config.gammas)}
        records.append(EnergyRecord(row[1], row[2], row[3], row[4], row[5],
                                    row[6], row[7], eaug, row[8 + ng]))
    series = DiagnosticsSeries(config, data[:, 0], records, data[:, 9 + ng])
    return series, aborted


def execute_run(config: RunConfig, outdir: Path):
    """Evolve, persist series.csv and manifest.json, return (status, series).

    A guard abort still writes the partial series (with the trailer) and a
    manifest whose status names the reason.
    """
    rid = run_id(config)
    outdir.mkdir(parents=True, exist_ok=True)
    start = _utcnow()
    try:
        series, aborted = evolve(config), None
    except SolverAbort as err:
        series, aborted = err.partial, str(err)
    except ValueError as err:
        raise ConfigError(str(err))
    end = _utcnow()
    write_series_csv(series, outdir / "series.csv", aborted)
    verification = {r.name: ("INFO" if r.passed is None
                             else "PASS" if r.passed else "FAIL")
                    for r in run_checks(series)}
    status = "ok" if aborted is None else f"aborted: {aborted}"
    manifest = {"run_id": rid, "config": config_dict(config), "start": start,
                "end": end, "code_version": __version__, "status": status,
                "verification": verification}
    (outdir / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return status, series


def load_run(rundir: Path):
    """(manifest, series, abort_reason) for a run directory."""
    mpath = rundir / "manifest.json"
    spath = rundir / "series.csv"
    if not mpath.is_file():
        raise ConfigError(f"{rundir}: no manifest.json (not a run directory?)")
    try:
        manifest = json.loads(mpath.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as err:
        raise ConfigError(f"{mpath}: {err}")
    try:
        config = config_from_dict(manifest["config"])
    except (KeyError, TypeError, ValueError) as err:
        raise ConfigError(f"{mpath}: unusable config ({err})")
    series, aborted = read_series_csv(spath, config)
    return manifest, series, aborted


def cmd_run(args) -> int:
    config = build_config(parse_kv_file(args.config))
    rid = run_id(config)
    outdir = Path(args.out) if args.out else Path("runs") / rid
    status, _ = execute_run(config, outdir)
    print(f"run_id: {rid}")
    print(f"dir: {outdir}")
    print(f"status: {status}")
    return 0 if status == "ok" else 2


def parse_sweep(path):
    """(base_kv, axis_keys, axes, parallelism) from a sweep spec file.

    Axes are `sweep.<key> = v1,v2,...` lines; everything else is the base
    configuration shared by all runs.
    """
    kv = parse_kv_file(path)
    base: dict[str, tuple[str, int]] = {}
    axes: dict[str, list[str]] = {}
    parallelism = 1
    for key, (raw, line) in kv.items():
        if key == "parallelism":
            try:
                parallelism = int(raw)
            except ValueError:
                raise ConfigError(f"line {line}: parallelism must be an integer")
            if parallelism < 1:
                raise ConfigError(f"line {line}: parallelism must be at least 1")
        elif key.startswith("sweep."):
            target = key[len("sweep."):]
            if target not in SWEEPABLE_KEYS:
                raise ConfigError(f"line {line}: '{target}' is not a sweepable key")
            values = [part.strip() for part in raw.split(",") if part.strip()]
            if not values:
                raise ConfigError(f"line {line}: empty sweep axis '{target}'")
            axes[target] = values
        else:
            base[key] = (raw, line)
    size = math.prod(len(v) for v in axes.values())
    if size > 10_000:
        raise ConfigError(f"sweep cross-product has {size} runs, limit is 10000")
    return base, sorted(axes), axes, parallelism


def _series_metrics(series: DiagnosticsSeries | None) -> dict[str, str]:
    """Summary-table cells for one run; empty strings when nothing to report."""
    cells = {name: "" for name in ("slope", "kappa_theory", "min_gamma", "sup_grad")}
    cells.update({name: "" for name in CHECK_NAMES})
    if series is None:
        return cells
    cfg = series.config
    try:
        rate = decay_exponent(cfg.params)
        cells["kappa_theory"] = "critical" if rate.critical else _fmt(rate.kappa)
    except ValueError:
        pass
    try:
        mode = "critical" if cfg.params.is_critical else "subcritical"
        t_end = float(series.times[-1])
        t_min = max(t_end / 10.0, 1.0) if mode == "critical" else t_end / 10.0
        cells["slope"] = _fmt(rate_fit(series, mode, (t_min, t_end)).slope)
    except ValueError:
        pass
    cells["min_gamma"] = _fmt(find_min_gamma(series, 10.0 * cfg.dt * cfg.dt))
    cells["sup_grad"] = _fmt(check_gradient_bound(series).sup)
    for result in run_checks(series):
        if result.name in cells and result.passed is not None:
            cells[result.name] = "PASS" if result.passed else "FAIL"
    return cells


def _clean_cell(value: str) -> str:
    return str(value).replace(",", ";").replace("\n", " ")


def cmd_sweep(args) -> int:
    base, axis_keys, axes, parallelism = parse_sweep(args.spec)
    outroot = Path(args.out)
    threads_cap = os.environ.get("DNLS_THREADS")
    if threads_cap is not None:
        try:
            parallelism = max(1, min(parallelism, int(threads_cap)))
        except ValueError:
            raise ConfigError("DNLS_THREADS must be an integer")

    tasks = []
    failed_rows = []
    seen: set[str] = set()
    for combo in itertools.product(*(axes[k] for k in axis_keys)):
        kv = dict(base)
        for key, value in zip(axis_keys, combo):
            kv[key] = (value, 0)
        try:
            config = build_config(kv)
        except ConfigError as err:
            failed_rows.append(("", combo, f"config-error: {err}", None))
            continue
        rid = run_id(config)
        if rid in seen:
            raise ConfigError(f"sweep produces duplicate run {rid}; axes overlap")
        seen.add(rid)
        tasks.append((rid, combo, config))

    def worker(task):
        rid, combo, config = task
        try:
            status, series = execute_run(config, outroot / rid)
        except Exception as err:  # record the failure, keep the sweep going
            return rid, combo, f"error: {err}", None
        return rid, combo, status, series

    outroot.mkdir(parents=True, exist_ok=True)
    with ThreadPoolExecutor(max_workers=parallelism) as pool:
        rows = list(pool.map(worker, tasks))
    rows += failed_rows
    rows.sort(key=lambda row: (row[0], row[1]))

    header = (["run_id", *axis_keys, "status", "slope", "kappa_theory",
               "min_gamma", "sup_grad", *CHECK_NAMES])
    summary = outroot / "summary.csv"
    with open(summary, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for rid, combo, status, series in rows:
            cells = _series_metrics(series)
            line = [rid, *combo, status, cells["slope"], cells["kappa_theory"],
                    cells["min_gamma"], cells["sup_grad"]]
            line += [cells[name] for name in CHECK_NAMES]
            fh.write(",".join(_clean_cell(cell) for cell in line) + "\n")
    print(f"summary: {summary}")
    return 0


def cmd_verify(args) -> int:
    rundir = Path(args.rundir)
    _, series, _ = load_run(rundir)
    results = run_checks(series)
    text = format_report(results)
    (rundir / "report.txt").write_text(text, encoding="utf-8", newline="\n")
    print(text, end="")
    return 1 if any(r.passed is False for r in results) else 0


def _plot_columns(series: DiagnosticsSeries, kind: str):
    t = series.times
    cfg = series.config
    if kind == "decay":
        try:
            rate = decay_exponent(cfg.params)
        except ValueError:
            raise ConfigError("decay plot needs 1 < p <= 1 + 2/d")
        if rate.critical:
            raise ConfigError("run is at the critical power; use kind "
                              "critical-compensated")
        l2 = series.column("l2")
        if np.any(l2 <= 0):
            raise ConfigError("decay plot needs strictly positive l2 samples")
        x = np.log1p(t)
        y = np.log(l2)
        ref = y[0] - float(rate.kappa) * (x - x[0])
        return ["log1p_t", "log_l2", "theory_slope"], np.column_stack([x, y, ref])
    if kind == "critical-compensated":
        expo = 2.0 / ((cfg.params.d + 2) * (float(cfg.params.p) - 1.0))
        l2 = series.column("l2")
        comp = l2 * np.log1p(t) ** expo
        return ["t", "l2", "compensated_l2"], np.column_stack([t, l2, comp])
    if kind == "energy":
        names = ["t", "energy"] + [f"eaug_{g:g}" for g in cfg.gammas]
        cols = [t, series.column("energy")]
        cols += [series.eaug_column(g) for g in cfg.gammas]
        return names, np.column_stack(cols)
    if kind == "virial":
        w = series.column("weighted")
        g = series.column("grad")
        integral = w[0] + _cumtrapz(g, t)
        linear = (w[0] + g.max()) * (1.0 + t)
        return (["t", "weighted", "integral_bound", "linear_bound"],
                np.column_stack([t, w, integral, linear]))
    raise ConfigError(f"unknown plot kind '{kind}'")


def cmd_plotdata(args) -> int:
    rundir = Path(args.rundir)
    manifest, series, _ = load_run(rundir)
    names, data = _plot_columns(series, args.kind)
    datpath = rundir / f"{args.kind}.dat"
    with open(datpath, "w", encoding="utf-8", newline="") as fh:
        fh.write("# " + " ".join(names) + "\n")
        for row in data:
            fh.write(" ".join(_fmt(v) for v in row) + "\n")
    from .figures import render
    pngpath = rundir / f"{args.kind}.png"
    render(args.kind, names, data, str(pngpath),
           title=f"{args.kind} ({manifest.get('run_id', '?')})")
    print(datpath)
    print(pngpath)
    return 0


def cmd_exponents(args) -> int:
    try:
        p = Fraction(args.p)
    except (ValueError, ZeroDivisionError):
        raise ConfigError(f"cannot parse p value '{args.p}'")
    lam_re = lam_im = 0.0
    if args.lam is not None:
        parts = args.lam.split(",")
        if len(parts) != 2:
            raise ConfigError("lambda must have the form re,im")
        try:
            lam_re, lam_im = float(parts[0]), float(parts[1])
        except ValueError:
            raise ConfigError(f"cannot parse lambda '{args.lam}'")
    try:
        params = PhysParams(args.d, p, lam_re, lam_im)
    except ValueError as err:
        raise ConfigError(str(err))

    lines = [f"d = {params.d}", f"p = {params.p}"]
    h = holder_exponents(params)
    lines += [f"q = {h.q}", f"alpha = {h.alpha}", f"beta = {h.beta}"]
    try:
        g = gn_parameters(params)
        lines += [f"theta = {g.theta}", f"p1 = {g.p1}"]
    except ValueError:
        lines += ["theta = undefined (needs p < 1 + 4/d)",
                  "p1 = undefined (needs p < 1 + 4/d)"]
    try:
        rate = decay_exponent(params)
        if rate.critical:
            lines.append(f"decay = critical, log exponent {rate.log_exp}")
        else:
            lines.append(f"kappa = {rate.kappa}")
    except ValueError:
        lines.append("kappa = undefined (needs p <= 1 + 2/d)")
    if params.dissipative:
        regime = sdc_check(params)
        lines.append(f"sdc = {'satisfied' if regime.sdc_satisfied else 'violated'}")
        lines.append(f"regime = {'attractive' if regime.attractive else 'repulsive'}")
    print("\n".join(lines))
    return 0


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dnls",
        description="Split-step simulator and verification suite for the "
                    "dissipative nonlinear Schrodinger equation.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="integrate one configuration")
    p_run.add_argument("config", help="key=value config file")
    p_run.add_argument("--out", help="output directory (default runs/<run_id>)")
    p_run.set_defaults(func=cmd_run)

    p_sweep = sub.add_parser("sweep", help="run a parameter sweep")
    p_sweep.add_argument("spec", help="sweep spec file (config plus sweep.<key> axes)")
    p_sweep.add_argument("--out", default="runs",
                         help="root directory for run subdirectories (default runs)")
    p_sweep.set_defaults(func=cmd_sweep)

    p_verify = sub.add_parser("verify", help="re-run all checks on a run directory")
    p_verify.add_argument("rundir")
    p_verify.set_defaults(func=cmd_verify)

    p_plot = sub.add_parser("plotdata", help="emit plot-ready columns and a figure")
    p_plot.add_argument("rundir")
    p_plot.add_argument("--kind", required=True, choices=PLOT_KINDS)
    p_plot.set_defaults(func=cmd_plotdata)

    p_exp = sub.add_parser("exponents", help="print derived exponents for (d, p)")
    p_exp.add_argument("--d", type=int, required=True, choices=(1, 2))
    p_exp.add_argument("--p", required=True, help="power, e.g. 2 or 3/2 or 1.5")
    p_exp.add_argument("--lambda", dest="lam", metavar="RE,IM",
                       help="coefficient; enables the regime classification "
                            "(use --lambda=-1,-1 so the minus survives the shell)")
    p_exp.set_defaults(func=cmd_exponents)
    return parser


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


def entry() -> None:
    sys.exit(main())
