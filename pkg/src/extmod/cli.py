"""Command-line interface.

Subcommands: elliptic (special-function evaluation), modulus (grid modulus
of a shape), bounds (analytic slit-frame solve at one H), sweep (bounds
chain over an H list), verify (invariant suites).  Exit codes: 0 success,
1 invariant failure, 2 input error.  Floats print with 17 significant
digits.  EXTMOD_THREADS caps sweep parallelism.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

from . import canonical, elliptic, geometry, harness
from . import modulus as modgrid

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_INPUT = 2


def _f(x) -> str:
    return f"{x:.17g}"


def _cmd_elliptic(args) -> int:
    fn = args.fn
    try:
        if fn == "K":
            val = elliptic.complete_K(args.k)
        elif fn == "E":
            val = elliptic.complete_E(args.k)
        elif fn == "F":
            if args.x is None:
                raise elliptic.EllipticDomainError("F requires --x")
            val = elliptic.incomplete_F(args.x, args.k)
        elif fn == "Einc":
            if args.x is None:
                raise elliptic.EllipticDomainError("Einc requires --x")
            val = elliptic.incomplete_E(args.x, args.k)
        else:  # pragma: no cover - argparse restricts choices
            raise elliptic.EllipticDomainError(fn)
    except elliptic.EllipticDomainError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    print(_f(val))
    return EXIT_OK


def _parse_marks(text):
    try:
        pieces = text.split(";")
        pts = []
        for piece in pieces:
            xs, ys = piece.split(",")
            pts.append(complex(float(xs), float(ys)))
        if len(pts) != 4:
            raise ValueError("need four points")
        return pts
    except ValueError as exc:
        raise harness.ConfigError(f"bad marks {text!r}: {exc}") from exc


def _cmd_modulus(args) -> int:
    try:
        q = harness.load_shape(args.shape)
        poly = geometry.quadrilateral_polygon(q, interior=args.interior)
        if args.marks:
            marks = _parse_marks(args.marks)
            orient = "interior" if args.interior else "exterior"
            poly = modgrid.MarkedPolygon(
                chain=poly.chain, marks_idx=poly.marks_idx,
                orientation=orient)
            chain = poly.chain
            from .modulus import _embed_marks
            poly = _embed_marks(chain, marks, orient)
    except harness.ConfigError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    if args.interior:
        est = modgrid.interior_modulus(poly, h=args.h)
    else:
        est = modgrid.exterior_modulus(poly, h=args.h)
    record = dict(value=est.value, error=est.error, method=est.method,
                  h=est.h, raw=list(est.raw))
    print(json.dumps(record, default=_f, indent=2))
    return EXIT_OK


def _cmd_bounds(args) -> int:
    try:
        params = canonical.solve_modulus_for_aspect(args.H, args.alpha,
                                                    args.beta)
        params = canonical.solve_mu_for_sigma(params, args.sigma)
    except (ValueError, canonical.BracketError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    record = {
        "H": args.H, "alpha": args.alpha, "beta": args.beta,
        "sigma": args.sigma, "k": params.k, "k_prime": params.k_prime,
        "lambda": params.lam, "mu": params.mu, "ell": params.ell,
        "ell_prime": params.ell_prime, "C": params.C,
        "r1": params.r1, "r2": params.r2,
        "modulus_lower_bound": canonical.modulus_symmetric_frame(params),
        "log_asymptote": canonical.log_asymptote(params),
        "target": math.log(args.H) / math.pi,
    }
    print(json.dumps(record, default=_f, indent=2))
    return EXIT_OK


def _load_config(path) -> harness.RunConfig:
    if path is None:
        return harness.RunConfig()
    return harness.RunConfig.from_json(path)


def _cmd_sweep(args) -> int:
    try:
        config = _load_config(args.config)
        rows = harness.sweep(config)
    except harness.ConfigError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    header = ",".join(harness.CSV_COLUMNS)
    print(f"# schema={harness.SWEEP_SCHEMA}")
    print(header)
    bad = False
    for r in rows:
        d = r.as_dict()
        print(",".join(harness._fmt(d[c]) for c in harness.CSV_COLUMNS))
        bad |= not (r.sandwich_ok and r.quasi_ok)
    return EXIT_FAIL if bad else EXIT_OK


def _cmd_verify(args) -> int:
    try:
        config = _load_config(args.config)
        report = harness.verify_all(config)
    except harness.ConfigError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    print(json.dumps(report, default=str, indent=2))
    return EXIT_OK if report["all_ok"] else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="extmod",
        description="conformal modulus laboratory for stretched "
                    "quadrilaterals")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("elliptic", help="evaluate an elliptic integral")
    pe = p.add_subparsers(dest="elliptic_cmd", required=True)
    pv = pe.add_parser("eval")
    pv.add_argument("--fn", required=True, choices=["K", "E", "F", "Einc"])
    pv.add_argument("--k", type=float, required=True)
    pv.add_argument("--x", type=float, default=None)
    pv.set_defaults(func=_cmd_elliptic)

    p = sub.add_parser("modulus", help="grid modulus of a shape")
    p.add_argument("--shape", required=True,
                   help="preset name or shape JSON path")
    p.add_argument("--marks", default=None,
                   help="four points 'x,y;x,y;x,y;x,y' on the boundary")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--interior", action="store_true")
    g.add_argument("--exterior", dest="interior", action="store_false")
    p.add_argument("--h", type=float, default=1.0 / 96,
                   help="coarsest grid spacing (image units for exterior)")
    p.set_defaults(func=_cmd_modulus)

    p = sub.add_parser("bounds", help="analytic slit-frame solve at one H")
    p.add_argument("--H", type=float, required=True)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--sigma", type=float, required=True)
    p.set_defaults(func=_cmd_bounds)

    p = sub.add_parser("sweep", help="bounds chain over an H list")
    p.add_argument("--config", default=None, help="RunConfig JSON path")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("verify", help="run all invariant suites")
    p.add_argument("--config", default=None, help="RunConfig JSON path")
    p.set_defaults(func=_cmd_verify)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
