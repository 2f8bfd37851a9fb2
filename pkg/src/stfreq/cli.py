"""Batch command-line front end.

Subcommands
-----------
variogram     space-time variogram and covariance table from panel CSVs
fv            frequency variogram per spatial lag, with a nugget summary
fit           pooled spectral fit of the parametric model
test-indep    frequency-domain independence test across stations
simulate      draw synthetic panels or periodogram ensembles
oracle-check  internal consistency checks of the spectral model

Exit codes: 0 success, 2 usage or input error, 3 test rejection
(test-indep only), 4 numerical failure.

``--config run.json`` supplies defaults for any flag (keys are the long
option names with dashes or underscores); explicit flags win over the
config, the config wins over built-in defaults.  ``STFREQ_THREADS`` sets
the worker count when ``--threads`` is absent.  Figures are written next
to the delimited outputs unless ``--no-figures`` is given.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import errors
from .dft import dft_all
from .fv import Kernel, default_kernel, estimate_fv, nugget_scan
from .indeptest import independence_test
from .moments import SpaceTimeLag, matheron_variogram, sample_covariance
from .panel import build_lag_pairs, load_panel, load_stations, write_panel
from .simulate import SimSpec, simulate_from_spec
from .specmodel import (
    QuadratureGrid,
    SpectrumParams,
    bessel_k,
    cross_spectrum,
    CrossSpectrumQuery,
    marginalize_oracle,
    temporal_spectrum,
)
from .whittle import FitOptions, PolySpectrumModel, fit, problem_from_panel

__all__ = ["main", "run", "build_parser"]

_NUMERICAL_ERRORS = (
    errors.GridTooCoarse,
    errors.MaxIterations,
    errors.SingularHessian,
    errors.SingularMatrix,
    errors.NotPositiveDefinite,
    errors.DomainError,
)

_USAGE_ERRORS = (
    errors.StfreqError,
    OSError,
    ValueError,
    KeyError,
    json.JSONDecodeError,
)


def _parse_lag(value):
    """Lag vector from '1,0' or an already-sequenced config entry."""
    if isinstance(value, str):
        parts = [p for p in value.split(",") if p.strip() != ""]
        return np.array([float(p) for p in parts])
    return np.asarray(value, dtype=float).reshape(-1)


def _resolve_threads(args):
    if getattr(args, "threads", None):
        return max(1, int(args.threads))
    env = os.environ.get("STFREQ_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def _parallel_map(fn, items, threads):
    """Order-preserving map, threaded when it can help.

    Ordered results keep numeric outputs byte-identical across thread
    counts.
    """
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=min(threads, len(items))) as pool:
        return list(pool.map(fn, items))


def _fmt(x):
    return repr(float(x))


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)
    return path


def _write_json(path, payload):
    text = json.dumps(payload, indent=2)
    with open(path, "w") as fh:
        fh.write(text + "\n")
    return text


def _outdir(args):
    out = Path(getattr(args, "outdir", ".") or ".")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _require(args, *names):
    for name in names:
        if getattr(args, name, None) is None:
            raise ValueError(
                "missing required option --%s" % name.replace("_", "-")
            )


def _load_inputs(args):
    _require(args, "stations", "panel")
    return load_panel(args.stations, args.panel)


def _kernel_for(args, n):
    if args.bandwidth is None and args.kernel is None:
        return default_kernel(n)
    name = args.kernel or "modified-daniell"
    bw = int(args.bandwidth) if args.bandwidth is not None else int(
        math.ceil(n**0.4)
    )
    return Kernel(name=name, half_width=bw)


def _lag_list(args):
    _require(args, "h")
    return [_parse_lag(h) for h in args.h]


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_variogram(args):
    panel = _load_inputs(args)
    lags = _lag_list(args)
    u_values = list(range(0, int(args.u_max) + 1))
    threads = _resolve_threads(args)

    def one_lag(h):
        pairs = build_lag_pairs(panel.stations, h, args.delta)
        out = []
        for u in u_values:
            lag = SpaceTimeLag(h=h, u=u, delta=args.delta)
            gamma, count = matheron_variogram(panel, lag, pairs=pairs)
            c_hat, _ = sample_covariance(panel, lag, pairs=pairs)
            out.append(
                {
                    "h_norm": float(np.linalg.norm(h)),
                    "u": u,
                    "count": count,
                    "gamma_hat": gamma,
                    "c_hat": c_hat,
                }
            )
        return out

    rows = [row for chunk in _parallel_map(one_lag, lags, threads) for row in chunk]
    outdir = _outdir(args)
    csv_path = outdir / (args.out or "variogram.csv")
    _write_csv(
        csv_path,
        ["h_norm", "u", "count", "gamma_hat", "c_hat"],
        [
            [_fmt(r["h_norm"]), r["u"], r["count"], _fmt(r["gamma_hat"]), _fmt(r["c_hat"])]
            for r in rows
        ],
    )
    print("wrote %s (%d rows)" % (csv_path, len(rows)))
    if not args.no_figures:
        from .plots import variogram_figure

        print("wrote %s" % variogram_figure(rows, outdir / "variogram.png"))
    return 0


def _fv_csv_name(norm, used):
    base = "fv_h%.1f" % norm
    name = base + ".csv"
    k = 2
    while name in used:
        name = "%s_%d.csv" % (base, k)
        k += 1
    used.add(name)
    return name


def cmd_fv(args):
    panel = _load_inputs(args)
    lags = _lag_list(args)
    kernel = _kernel_for(args, panel.n)
    spec = dft_all(panel)
    threads = _resolve_threads(args)

    def one_lag(h):
        pairs = build_lag_pairs(panel.stations, h, args.delta)
        return estimate_fv(spec, pairs, kernel, with_variance=True)

    fvs = _parallel_map(one_lag, lags, threads)
    outdir = _outdir(args)
    used = set()
    lag_entries = []
    for fv in fvs:
        name = _fv_csv_name(float(np.linalg.norm(fv.h)), used)
        _write_csv(
            outdir / name,
            ["omega", "raw", "smoothed", "var"],
            [
                [_fmt(w), _fmt(r), _fmt(s), _fmt(v)]
                for w, r, s, v in zip(fv.freqs, fv.raw, fv.smoothed, fv.variance)
            ],
        )
        print("wrote %s (%d pairs)" % (outdir / name, fv.count))
        lag_entries.append(
            {
                "h": [float(x) for x in fv.h],
                "h_norm": float(np.linalg.norm(fv.h)),
                "count": fv.count,
                "csv": name,
            }
        )
        if not args.no_figures:
            from .plots import fv_figure

            fv_figure(fv, outdir / (name[:-4] + ".png"))

    summary = {
        "kernel": {"name": kernel.name, "half_width": kernel.half_width},
        "lags": lag_entries,
        "nugget": None,
    }
    try:
        scan = nugget_scan(panel, lags, delta=args.delta, kernel=kernel)
        summary["nugget"] = {
            "rows": [
                {
                    "h_norm": r.h_norm,
                    "integrated_fv": r.integrated_fv,
                    "n_pairs": r.n_pairs,
                }
                for r in scan.rows
            ],
            "intercept": scan.intercept,
        }
        if not args.no_figures:
            from .plots import nugget_figure

            nugget_figure(scan, outdir / "nugget.png")
    except errors.InsufficientLags:
        pass
    text = _write_json(outdir / "fv_summary.json", summary)
    print(text)
    return 0


def cmd_fit(args):
    panel = _load_inputs(args)
    lags = _lag_list(args)
    _require(args, "model")
    with open(args.model) as fh:
        model_doc = json.load(fh)
    base = SpectrumParams.from_dict(model_doc)
    free = model_doc.get("free")
    if args.free:
        free = [name.strip() for name in args.free.split(",")]
    model = (
        PolySpectrumModel(base, free=tuple(free))
        if free
        else PolySpectrumModel(base)
    )
    init = dict(model_doc.get("init", {}))
    for name in model.free:
        init.setdefault(name, getattr(base, name))

    problem = problem_from_panel(panel, lags, args.delta, model)
    options = FitOptions(method=args.method, max_iter=int(args.max_iter))
    result = fit(problem, init, options)

    outdir = _outdir(args)
    trace_name = "fit_trace.csv"
    _write_csv(
        outdir / trace_name,
        ["iteration", "best_value"],
        [[i, _fmt(v)] for i, v in enumerate(result.trace)],
    )
    payload = {
        "psi_hat": result.psi_hat,
        "se": result.se,
        "criterion_value": result.criterion_value,
        "converged": result.converged,
        "iterations": result.iterations,
        "grad_norm": result.grad_norm,
        "free": list(model.free),
        "params": result.params.to_dict(),
        "covariance": None
        if result.covariance is None
        else [[float(v) for v in row] for row in result.covariance],
        "trace_path": trace_name,
    }
    text = _write_json(outdir / (args.out or "fit.json"), payload)
    print(text)
    if not args.no_figures:
        from .plots import fit_figure

        fit_figure(problem, result, outdir / "fit.png")
    return 0 if result.converged else 4


def cmd_test_indep(args):
    panel = _load_inputs(args)
    _require(args, "k")
    report = independence_test(panel, k=int(args.k), alpha=args.alpha)
    payload = {
        "lambda_ls": [float(v) for v in report.lambda_ls],
        "lambda_bar": report.lambda_bar,
        "mean": report.mean,
        "variance": report.variance,
        "statistic": report.statistic,
        "p_value": report.p_value,
        "alpha": report.alpha,
        "reject": report.reject,
        "n_used": report.n_used,
        "m": report.m,
        "k": report.k,
        "n_blocks": report.n_blocks,
    }
    outdir = _outdir(args)
    text = _write_json(outdir / (args.out or "indep.json"), payload)
    print(text)
    if not args.no_figures:
        from .plots import indep_figure

        indep_figure(report, outdir / "indep.png")
    return 3 if report.reject else 0


def cmd_simulate(args):
    _require(args, "spec")
    with open(args.spec) as fh:
        doc = json.load(fh)
    if args.seed is not None:
        doc["seed"] = int(args.seed)
    spec = SimSpec.from_dict(doc)
    result = simulate_from_spec(spec)
    outdir = _outdir(args)
    out = outdir / (args.out or "panel.csv")

    if isinstance(result, list):
        rows = []
        for ld in result:
            norm = float(np.linalg.norm(ld.h))
            n = ld.periodograms.shape[1]
            for p in range(ld.periodograms.shape[0]):
                for k in range(n):
                    rows.append(
                        [
                            _fmt(norm),
                            p,
                            k,
                            _fmt(2.0 * np.pi * k / n),
                            _fmt(ld.periodograms[p, k]),
                        ]
                    )
        _write_csv(out, ["lag_norm", "pair", "k", "omega", "value"], rows)
        print("wrote %s (%d rows)" % (out, len(rows)))
        return 0

    stations_out = outdir / (args.stations_out or "stations.csv")
    write_panel(result, stations_out, out)
    print("wrote %s and %s (m=%d, n=%d)" % (stations_out, out, result.m, result.n))
    if not args.no_figures:
        from .plots import panel_figure

        print("wrote %s" % panel_figure(result, outdir / "panel.png"))
    return 0


def _closed_form_k(nu, x):
    base = math.sqrt(math.pi / (2.0 * x)) * math.exp(-x)
    if nu == 0.5:
        return base
    if nu == 1.5:
        return base * (1.0 + 1.0 / x)
    if nu == 2.5:
        return base * (1.0 + 3.0 / x + 3.0 / x**2)
    raise ValueError(nu)


def cmd_oracle_check(args):
    checks = []

    worst = 0.0
    for nu in (0.5, 1.5, 2.5):
        for x in (0.1, 0.5, 1.0, 2.0, 5.0, 10.0):
            ref = _closed_form_k(nu, x)
            worst = max(worst, abs(bessel_k(nu, x) - ref) / ref)
    checks.append(
        {"name": "bessel-half-integer-closed-forms", "max_rel_err": worst, "tol": 1e-12}
    )

    h = np.array([1.0, 0.5])
    grid = QuadratureGrid()
    worst = 0.0
    for nu in (1.0, 1.5, 2.0):
        params = SpectrumParams(sigma_eta2=1.0, nu=nu, d=2, a0=1.0, a1=0.5, c1=0.5)
        for omega in (0.3, 1.0, 2.5):
            closed = temporal_spectrum(omega, params, h)
            quad = marginalize_oracle(omega, params, h, grid=grid)
            worst = max(worst, abs(quad - closed) / closed)
    checks.append(
        {"name": "marginal-vs-closed-form", "max_rel_err": worst, "tol": 1e-4}
    )

    worst = 0.0
    tiny = np.array([1.0, 1.0]) * (1e-6 / math.sqrt(2.0))
    for nu in (1.0, 1.5, 2.0):
        params = SpectrumParams(sigma_eta2=1.0, nu=nu, d=2, a0=1.0, a1=0.5, c1=0.5)
        for omega in (0.3, 1.0, 2.5):
            closed = temporal_spectrum(omega, params, h)
            near = cross_spectrum(
                CrossSpectrumQuery(separation=tiny, omega=omega, params=params), h
            )
            worst = max(worst, abs(near - closed) / closed)
    checks.append(
        {"name": "zero-separation-limit", "max_rel_err": worst, "tol": 1e-5}
    )

    unit = SpectrumParams(sigma_eta2=1.0, nu=1.0, d=2, a0=1.0)
    value = temporal_spectrum(0.0, unit, np.array([1.0, 0.0]))
    ref = 1.0 / (8.0 * math.pi**2)
    checks.append(
        {
            "name": "temporal-checkpoint",
            "max_rel_err": abs(value - ref) / ref,
            "tol": 1e-12,
        }
    )

    all_pass = True
    for check in checks:
        check["pass"] = bool(check["max_rel_err"] <= check["tol"])
        all_pass = all_pass and check["pass"]
        print(
            "%s %s (max rel err %.3e, tol %.1e)"
            % ("PASS" if check["pass"] else "FAIL", check["name"], check["max_rel_err"], check["tol"])
        )

    payload = {"checks": checks, "all_pass": all_pass}
    if args.paper_constants:
        adopted_t = temporal_spectrum(1.0, unit, np.array([1.0, 0.0]))
        legacy_t = temporal_spectrum(
            1.0, unit, np.array([1.0, 0.0]), legacy_constants=True
        )
        query = CrossSpectrumQuery(
            separation=np.array([1.0, 0.0]), omega=1.0, params=unit
        )
        adopted_c = cross_spectrum(query, np.array([1.0, 0.0]))
        legacy_c = cross_spectrum(query, np.array([1.0, 0.0]), legacy_constants=True)
        payload["constant_comparison"] = {
            "temporal_adopted": adopted_t,
            "temporal_legacy": legacy_t,
            "cross_adopted": adopted_c,
            "cross_legacy": legacy_c,
            "ratio": legacy_t / adopted_t,
        }
        print(
            "constant comparison at omega=1: adopted %.6e, legacy %.6e (ratio %.6f)"
            % (adopted_t, legacy_t, legacy_t / adopted_t)
        )
    outdir = _outdir(args)
    _write_json(outdir / (args.out or "oracle_check.json"), payload)
    return 0 if all_pass else 4


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def build_parser(defaults=None):
    """Construct the argument parser.

    ``defaults`` (from ``--config``) override built-in option defaults on
    every subcommand; explicit flags still win.
    """
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file of default option values")
    common.add_argument("--outdir", default=".", help="output directory")
    common.add_argument(
        "--threads",
        type=int,
        help="worker count (default: STFREQ_THREADS or logical cores)",
    )
    common.add_argument(
        "--no-figures",
        action="store_true",
        help="skip writing PNG figures next to the delimited outputs",
    )
    common.add_argument(
        "--paper-constants",
        action="store_true",
        help="comparison output with the legacy spectral constants "
        "(denominator (2 pi)^(d/2) instead of the self-consistent "
        "(2 pi)^(d/2+1)); never used in estimation",
    )

    data = argparse.ArgumentParser(add_help=False)
    data.add_argument("--stations", help="stations CSV (station_id,x1,...,xd)")
    data.add_argument("--panel", help="panel CSV (t,<id1>,...,<idm>)")

    lagopts = argparse.ArgumentParser(add_help=False)
    lagopts.add_argument(
        "--h",
        action="append",
        metavar="H1,H2,...",
        help="spatial lag vector; repeat for several lags",
    )
    lagopts.add_argument(
        "--delta", type=float, default=0.0, help="lag matching tolerance"
    )

    parser = argparse.ArgumentParser(
        prog="stfreq",
        description="Frequency-domain analysis of space-time station panels.",
    )
    sub = parser.add_subparsers(dest="command", metavar="command")

    p = sub.add_parser(
        "variogram",
        parents=[common, data, lagopts],
        help="empirical variogram/covariance table",
    )
    p.add_argument("--u-max", type=int, default=5, help="largest time lag")
    p.add_argument("--out", help="CSV name (default variogram.csv)")
    p.set_defaults(func=cmd_variogram)

    p = sub.add_parser(
        "fv",
        parents=[common, data, lagopts],
        help="frequency variogram per lag with nugget summary",
    )
    p.add_argument(
        "--kernel",
        choices=("daniell", "modified-daniell", "bartlett-window"),
        help="smoothing kernel (default modified-daniell)",
    )
    p.add_argument("--bandwidth", type=int, help="kernel half-width")
    p.set_defaults(func=cmd_fv)

    p = sub.add_parser(
        "fit",
        parents=[common, data, lagopts],
        help="pooled spectral fit",
    )
    p.add_argument("--model", help="JSON model template")
    p.add_argument("--free", help="comma-separated free parameter names")
    p.add_argument(
        "--method",
        choices=("nelder-mead", "bfgs"),
        default="nelder-mead",
    )
    p.add_argument("--max-iter", type=int, default=4000)
    p.add_argument("--out", help="JSON name (default fit.json)")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser(
        "test-indep",
        parents=[common, data],
        help="independence test across stations",
    )
    p.add_argument("--k", type=int, help="smoother half-width")
    p.add_argument("--alpha", type=float, default=0.05, help="test level")
    p.add_argument("--out", help="JSON name (default indep.json)")
    p.set_defaults(func=cmd_test_indep)

    p = sub.add_parser(
        "simulate",
        parents=[common],
        help="draw a synthetic panel or periodogram ensemble",
    )
    p.add_argument("--spec", help="SimSpec JSON file")
    p.add_argument("--seed", type=int, help="override the seed stored in the SimSpec file")
    p.add_argument("--out", help="panel CSV name (default panel.csv)")
    p.add_argument(
        "--stations-out", help="stations CSV name (default stations.csv)"
    )
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser(
        "oracle-check",
        parents=[common],
        help="spectral-model consistency checks",
    )
    p.add_argument("--out", help="JSON name (default oracle_check.json)")
    p.set_defaults(func=cmd_oracle_check)

    if defaults:
        # Subparsers parse into a fresh namespace, so the defaults must be
        # installed on each of them, not only on the root parser.
        parser.set_defaults(**defaults)
        for sp in sub.choices.values():
            sp.set_defaults(**defaults)

    return parser


def _config_defaults(argv):
    """Pull --config out of argv and return its contents as a defaults map."""
    probe = argparse.ArgumentParser(add_help=False)
    probe.add_argument("--config")
    known, _ = probe.parse_known_args(argv)
    if not known.config:
        return {}
    with open(known.config) as fh:
        doc = json.load(fh)
    if not isinstance(doc, dict):
        raise ValueError("config file must hold a JSON object")
    out = {}
    for key, value in doc.items():
        dest = key.replace("-", "_")
        if dest == "h" and not isinstance(value, list):
            value = [value]
        out[dest] = value
    return out


def run(argv):
    defaults = _config_defaults(argv)
    # 'append' options extend their default instead of replacing it, so the
    # lag list from the config is applied after parsing, and only when no
    # --h flag was given.
    h_default = defaults.pop("h", None)
    parser = build_parser(defaults)
    args = parser.parse_args(argv)
    if h_default is not None and getattr(args, "h", None) is None:
        args.h = list(h_default)
    if getattr(args, "command", None) is None:
        parser.print_usage(sys.stderr)
        return 2
    return args.func(args)


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        return run(argv)
    except _NUMERICAL_ERRORS as err:
        print("numerical failure: %s" % err, file=sys.stderr)
        return 4
    except _USAGE_ERRORS as err:
        print("error: %s" % err, file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
