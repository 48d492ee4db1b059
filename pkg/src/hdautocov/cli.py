"""
Command-line front end.

Subcommands ``moments``, ``ecdf``, ``order``, ``tracetest``, ``laws`` and
``simulate``. Reports are JSON on stdout (and in ``--out`` when given);
curves are CSV. Every output carries the configuration hash, seed and
package version and contains no timestamps, so reruns are byte-identical.

Exit codes: 0 success, 2 validation error, 3 capacity error, 4 I/O error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .errors import CapacityError, ConfigurationError, DomainError, HDAutocovError, ValidationError
from .freelimit import limit_moments
from .gammapoly import format_coefficient, parse_polynomial
from .inference import (ThresholdConfig, ar_order_estimate, lag_polynomial, ma_order_estimate,
                        white_noise_trace_test)
from .laws import (StieltjesPoint, biquadratic_residual, cfp_moments, cgf_stieltjes_check, free_bessel_moment,
                   mp_moment, silverstein_residual, stieltjes_from_moments)
from .models import IVARSpec, ModelSpec, builtin_model
from .simkit import (autocov_set, esd, eval_sym_poly, fmt17, simulate_ivar, simulate_ma, trace_statistic)

EXIT_OK, EXIT_VALIDATION, EXIT_CAPACITY, EXIT_IO = 0, 2, 3, 4


def _rational(text: str):
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise ValidationError(f"not a rational number: {text!r}") from None


def parse_model(text: str, y=1):
    """``1``-``6`` for the built-in models, or ``scalar:l1,l2,...`` for ``psi_j = l_j I``."""
    text = str(text).strip()
    if text.startswith("scalar:"):
        body = text[len("scalar:"):].strip()
        lams = tuple(_rational(t) for t in body.split(",") if t.strip()) if body else ()
        return ModelSpec.scalar(lams, y, name=text)
    if text.startswith("ivar:"):
        coeffs = tuple(_rational(t) for t in text[len("ivar:"):].split(",") if t.strip())
        return IVARSpec(coeffs, name=text)
    try:
        number = int(text)
    except ValueError:
        raise ValidationError(f"model must be 1-6, scalar:<l1,...> or ivar:<a1,...>, got {text!r}") from None
    return builtin_model(number, y)


def parse_lags(text: str) -> list[int]:
    """``1,2,4`` or ``1-4`` (or a mix)."""
    out: list[int] = []
    for part in str(text).split(","):
        part = part.strip()
        if not part:
            continue
        if "-" in part:
            a, b = part.split("-", 1)
            out.extend(range(int(a), int(b) + 1))
        else:
            out.append(int(part))
    if not out or any(u < 0 for u in out):
        raise ValidationError(f"invalid lag list {text!r}")
    return sorted(set(out))


def _json_value(v):
    if isinstance(v, Fraction):
        return {"exact": format_coefficient(v), "value": float(v)}
    if isinstance(v, complex):
        return {"re": v.real, "im": v.imag, "abs": abs(v)}
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    return v


def _config_hash(args: argparse.Namespace) -> str:
    cfg = {k: v for k, v in sorted(vars(args).items()) if k not in ("out", "func")}
    blob = json.dumps(cfg, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def _provenance(args) -> dict:
    return {"command": args.command, "config_hash": _config_hash(args), "seed": getattr(args, "seed", None),
            "version": __version__}


def _emit(args, payload: dict, default_name: str) -> None:
    payload = {"provenance": _provenance(args), **payload}
    text = json.dumps(payload, indent=2, sort_keys=True, default=_json_value) + "\n"
    sys.stdout.write(text)
    if args.out:
        out = Path(args.out)
        if out.suffix.lower() != ".json":
            out.mkdir(parents=True, exist_ok=True)
            out = out / default_name
        else:
            out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(text)


def _dims(args, y) -> tuple[int, int]:
    p = args.p if args.p is not None else 300
    n = args.n if args.n is not None else max(1, round(p / float(y)))
    if n < 1 or p < 1:
        raise ValidationError("n and p must be positive")
    return n, p


def _simulate(model, n, p, seed, rep=0):
    if isinstance(model, IVARSpec):
        return simulate_ivar(model, n, p, seed, replicate=rep)
    return simulate_ma(model, n, p, seed, rep)


def cmd_moments(args) -> int:
    y = _rational(args.y)
    poly = parse_polynomial(args.poly)
    model = parse_model(args.model, y)
    if isinstance(model, IVARSpec):
        raise ValidationError("limit moments are available for MA models (1-4 or scalar:...)")
    theo = limit_moments(poly, model, args.h)
    payload = {
        "model": model.name, "polynomial": str(poly), "y": format_coefficient(y),
        "theoretical": [_json_value(v if isinstance(v, Fraction) else float(v)) for v in theo],
    }
    if args.reps > 0:
        n, p = _dims(args, y)
        lags = sorted(poly.lags()) or [0]
        emp = np.zeros((args.reps, args.h))
        for r in range(args.reps):
            X = simulate_ma(model, n, p, args.seed, r)
            ev = esd(eval_sym_poly(poly, autocov_set(X, lags))).values
            emp[r] = [np.mean(ev ** k) for k in range(1, args.h + 1)]
        se = emp.std(axis=0, ddof=1) / np.sqrt(args.reps) if args.reps > 1 else np.full(args.h, np.nan)
        payload["empirical"] = {"n": n, "p": p, "replications": args.reps,
                                "mean": emp.mean(axis=0).tolist(),
                                "standard_error": [None if np.isnan(s) else float(s) for s in se]}
    _emit(args, payload, "moments.json")
    return EXIT_OK


def cmd_ecdf(args) -> int:
    y = _rational(args.y)
    model = parse_model(args.model, y)
    n, p = _dims(args, y)
    X = _simulate(model, n, p, args.seed)
    shape = args.poly if args.poly else None
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    lags = parse_lags(args.lags)
    polys = [lag_polynomial(shape, u) for u in lags]
    g = autocov_set(X, sorted({v for P in polys for v in P.lags()} | {0}))
    files = []
    prov = _provenance(args)
    for u, P in zip(lags, polys):
        F = esd(eval_sym_poly(P, g))
        path = out / f"ecdf_{_slug(model.name)}_lag{u}.csv"
        F.to_csv(path, {**prov, "model": model.name, "n": n, "p": p, "lag": u, "polynomial": str(P)})
        files.append(str(path))
    sys.stdout.write(json.dumps({"provenance": prov, "files": files}, indent=2, sort_keys=True) + "\n")
    return EXIT_OK


def _slug(name: str) -> str:
    return "".join(c if c.isalnum() else "_" for c in name)


def cmd_order(args) -> int:
    model = parse_model(args.model, 1)
    default_p = 500 if args.mode == "ar" else 300
    p = args.p if args.p is not None else default_p
    n = args.n if args.n is not None else p
    X = _simulate(model, n, p, args.seed)
    cfg = ThresholdConfig(R=args.reps if args.reps > 0 else 50)
    if args.mode == "ma":
        rep = ma_order_estimate(X, u_max=args.umax, poly_shape=args.poly or None, threshold_config=cfg)
    else:
        rep = ar_order_estimate(X, s_max=args.smax, threshold_config=cfg)
    _emit(args, {"report": rep.to_dict()}, f"order_{args.mode}.json")
    return EXIT_OK


def cmd_tracetest(args) -> int:
    model = parse_model(args.model, 1)
    p = args.p if args.p is not None else 500
    n = args.n if args.n is not None else p
    reps = max(1, args.reps)
    reports = [white_noise_trace_test(_simulate(model, n, p, args.seed, r), args.stat) for r in range(reps)]
    payload = {"model": model.name, "n": n, "p": p, "report": reports[0].to_dict()}
    if reps > 1:
        payload["replications"] = reps
        payload["rejection_rate"] = float(np.mean([r.reject for r in reports]))
    _emit(args, payload, "tracetest.json")
    return EXIT_OK


def _parse_z(text: str) -> complex:
    try:
        return complex(text.replace(" ", "").replace("i", "j"))
    except ValueError:
        raise ValidationError(f"invalid complex number {text!r}") from None


def cmd_laws(args) -> int:
    y = _rational(args.y)
    check = args.check
    payload: dict = {"check": check, "y": format_coefficient(y)}
    if check == "mp":
        payload["moments"] = [mp_moment(h, y) for h in range(1, args.h + 1)]
    elif check == "bessel":
        payload["moments"] = [free_bessel_moment(h, y) for h in range(1, args.h + 1)]
    elif check in ("cfp", "biquadratic", "silverstein", "cgf"):
        lams = (1,) + tuple(_rational(t) for t in args.lambdas.split(",") if t.strip()) if args.lambdas else (1,)
        z = _parse_z(args.z)
        if check == "cfp":
            payload["moments"] = list(cfp_moments(args.u, lams, y, args.h))
        elif check == "biquadratic":
            mom = cfp_moments(1, (1,), y, args.N)
            m = stieltjes_from_moments((1,) + tuple(mom), z)
            payload.update(z=z, N=args.N, m=m, residual=biquadratic_residual(StieltjesPoint(z, m), y))
        elif check == "silverstein":
            mom = [mp_moment(h, y) for h in range(1, args.N + 1)]
            m = stieltjes_from_moments((1,) + tuple(mom), z)
            payload.update(z=z, N=args.N, m=m, sigma_spectrum=[[1, 1]],
                           residual=silverstein_residual(StieltjesPoint(z, m), y, [(1, 1)]))
        else:
            payload.update(z=z, N=args.N, u=args.u, lambdas=[format_coefficient(v) for v in lams],
                           residual=cgf_stieltjes_check(args.u, lams, y, z, args.N))
    else:
        raise ValidationError(f"unknown check {check!r}")
    _emit(args, payload, f"laws_{check}.json")
    return EXIT_OK


def cmd_simulate(args) -> int:
    y = _rational(args.y)
    model = parse_model(args.model, y)
    n, p = _dims(args, y)
    prov = _provenance(args)
    out = Path(args.out) if args.out else None
    if args.poly:
        if isinstance(model, IVARSpec):
            raise ValidationError("trace replication supports MA models only")
        ts = trace_statistic(args.poly, model, n, p, max(2, args.reps), args.seed)
        meta = {**prov, "model": model.name, "n": n, "p": p, "polynomial": ts.label, "centering": fmt17(ts.centering),
                "analytic_centering": ts.analytic}
        text = ts.to_csv(None, meta)
        summary = {"mean": ts.mean, "variance": ts.variance, "centering": ts.centering,
                   "skewness": ts.skewness, "excess_kurtosis": ts.excess_kurtosis}
        name = "traces.csv"
    else:
        X = _simulate(model, n, p, args.seed)
        lines = [f"# {k}: {v}" for k, v in {**prov, "model": model.name, "n": n, "p": p,
                                              "layout": "rows are coordinates, columns are times"}.items()]
        lines += [",".join(fmt17(v) for v in row) for row in X.data]
        text = "\n".join(lines) + "\n"
        summary = {"n": n, "p": p}
        name = "sample.csv"
    if out is not None:
        if out.suffix.lower() != ".csv":
            out.mkdir(parents=True, exist_ok=True)
            out = out / name
        else:
            out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(text)
        summary["file"] = str(out)
    sys.stdout.write(json.dumps({"provenance": prov, **summary}, indent=2, sort_keys=True) + "\n")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hdautocov",
                                 description="Spectral limits of high-dimensional sample autocovariance matrices.",
                                 epilog="Exit codes: 0 success, 2 validation error, 3 capacity error, 4 I/O error.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(sp, model_default="1"):
        sp.add_argument("--model", default=model_default, help="1-6, scalar:<l1,...> or ivar:<a1,...>")
        sp.add_argument("--n", type=int, default=None, help="sample length (default p/y; p for order and tracetest)")
        sp.add_argument("--p", type=int, default=None, help="dimension (default depends on the command)")
        sp.add_argument("--y", default="1", help="aspect ratio p/n (rational)")
        sp.add_argument("--seed", type=int, default=0, help="base seed; replicate r uses stream (seed, r)")
        sp.add_argument("--reps", type=int, default=0, help="Monte Carlo replicates (0: command default)")
        sp.add_argument("--out", default=None, help="output file or directory")

    s = sub.add_parser("moments", help="theoretical (and empirical) spectral moments")
    common(s)
    s.add_argument("--poly", required=True, help="symmetric polynomial, e.g. 'G1*G1t + G2*G2t'")
    s.add_argument("--h", type=int, default=4, help="highest moment order")
    s.set_defaults(func=cmd_moments)

    s = sub.add_parser("ecdf", help="ESD curves as CSV, one file per lag")
    common(s)
    s.add_argument("--poly", default=None, help="template in {u}, {u1}; default G{u}*G{u}t")
    s.add_argument("--lags", default="1-4")
    s.set_defaults(func=cmd_ecdf)

    s = sub.add_parser("order", help="MA or AR order determination")
    common(s, "2")
    s.add_argument("--mode", choices=("ma", "ar"), default="ma")
    s.add_argument("--umax", type=int, default=3, help="MA mode: compare lags 1..umax+1")
    s.add_argument("--smax", type=int, default=3, help="AR mode: largest order tried")
    s.add_argument("--poly", default=None, help="MA mode: template in {u}, {u1}; default G{u}*G{u}t")
    s.set_defaults(func=cmd_order)

    s = sub.add_parser("tracetest", help="trace-based white-noise test")
    common(s)
    s.add_argument("--stat", choices=("g0", "g1g1t", "g1sym"), default="g0")
    s.set_defaults(func=cmd_tracetest)

    s = sub.add_parser("laws", help="closed-form laws and Stieltjes residual checks")
    common(s)
    s.add_argument("--check", required=True, choices=("mp", "bessel", "cfp", "biquadratic", "silverstein", "cgf"))
    s.add_argument("--z", default="0+4i", help="point in the upper half plane, e.g. 4i or 0.5+2i")
    s.add_argument("--N", type=int, default=12, help="truncation order of the moment series")
    s.add_argument("--h", type=int, default=6, help="number of moments (mp, bessel, cfp)")
    s.add_argument("--u", type=int, default=1, help="lag (cfp, cgf)")
    s.add_argument("--lambdas", default="", help="lambda_1,...,lambda_q for cfp/cgf")
    s.set_defaults(func=cmd_laws)

    s = sub.add_parser("simulate", help="simulate a sample, or replicate traces with --poly")
    common(s)
    s.add_argument("--poly", default=None, help="replicate Tr(poly) instead of writing one sample")
    s.set_defaults(func=cmd_simulate)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    try:
        return args.func(args)
    except CapacityError as exc:
        print(f"capacity error: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except (ValidationError, DomainError, ConfigurationError) as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except HDAutocovError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
