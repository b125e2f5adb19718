"""Command-line front end.

Exit codes: 0 all checks passed, 1 usage or I/O error, 2 a bound was violated.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys

import numpy as np

from . import constructors as cons
from . import netcore, verify
from .calculus import net_derivative


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _fmt(v):
    return f"{v:.17g}"


def _vector(text):
    try:
        return np.array([float(t) for t in text.split(",")])
    except ValueError:
        raise UsageError(f"cannot parse vector {text!r}")


def _load(path):
    try:
        return netcore.load(path)
    except OSError as e:
        raise UsageError(f"cannot read {path}: {e.strerror}")
    except (ValueError, KeyError) as e:
        raise UsageError(f"{path}: {e}")


def _write_json(obj, path):
    if path in (None, "-"):
        print(json.dumps(obj, sort_keys=True))
    else:
        verify.write_json(obj, path)


def cmd_build(args):
    kind = args.kind
    try:
        if kind == "sawtooth":
            net = cons.build_sawtooth(args.m)
        elif kind == "square":
            net = cons.build_square(args.m, args.B)
        elif kind == "mult":
            net = cons.build_mult(args.eps, args.b)
        elif kind == "char":
            net = cons.build_char(args.B, args.d)
        else:
            net = cons.build_global_square(args.eps, args.d)
    except ValueError as e:
        raise UsageError(str(e))
    netcore.save(net, args.output)
    print(json.dumps(netcore.size_metrics(net).to_json(), sort_keys=True))
    return 0


def cmd_eval(args):
    net = _load(args.net)
    x = _vector(args.x)
    try:
        y = netcore.realize(net, x)
    except netcore.NetworkError as e:
        raise UsageError(str(e))
    print(json.dumps(y.tolist()))
    return 0


def cmd_jacobian(args):
    net = _load(args.net)
    x = _vector(args.x)
    try:
        J = net_derivative(net, x)
    except netcore.NetworkError as e:
        raise UsageError(str(e))
    out = sys.stdout if args.output in (None, "-") else open(args.output, "w", newline="")
    try:
        w = csv.writer(out)
        for row in J:
            w.writerow([_fmt(v) for v in row])
    finally:
        if out is not sys.stdout:
            out.close()
    return 0


def cmd_compose(args):
    outer, inner = _load(args.outer), _load(args.inner)
    try:
        net = netcore.compose(outer, inner)
    except netcore.NetworkError as e:
        raise UsageError(str(e))
    netcore.save(net, args.output)
    print(json.dumps(netcore.size_metrics(net).to_json(), sort_keys=True))
    return 0


def cmd_report(args):
    net = _load(args.net)
    meta = net.meta
    target_name = args.target or ("product" if meta.get("kind") == "mult" else "square")
    target = cons.TARGETS[target_name]() if target_name != "square" else cons.square_target(net.in_dim)
    B = args.B if args.B is not None else meta.get("b", meta.get("B"))
    if B is None:
        raise UsageError("--B is required for networks without build metadata")
    rep = verify.grid_error_report(net, target, B, args.resolution, keep_points=bool(args.csv))
    value_tol = args.value_tol if args.value_tol is not None else meta.get("value_bound")
    deriv_tol = args.deriv_tol if args.deriv_tol is not None else meta.get("deriv_bound")
    checks = {}
    if value_tol is not None:
        checks["value"] = rep.value_sup_error <= value_tol * (1 + 1e-9) + 1e-12
    if deriv_tol is not None:
        checks["deriv"] = rep.deriv_sup_error <= deriv_tol * (1 + 1e-9) + 1e-12
    out = rep.to_json()
    out.update({"target": target_name, "value_tol": value_tol, "deriv_tol": deriv_tol,
                "checks": checks, "passed": all(checks.values())})
    _write_json(out, args.output)
    if args.csv:
        rep.write_csv(args.csv)
    return 0 if out["passed"] else 2


def cmd_figure1(args):
    net = cons.build_square(args.m, args.B)
    x = np.linspace(-args.B, args.B, args.points)
    X = x[:, None]
    val = netcore.realize(net, X)[:, 0]
    der = net_derivative(net, X)[:, 0, 0]
    try:
        with open(args.output, "w", newline="") as fh:
            fh.write(f"# squaring network m={args.m} B={_fmt(args.B)}; net_deriv at kinks uses "
                     "the activation derivative 0 on kinks (not a one-sided slope)\n")
            w = csv.writer(fh)
            w.writerow(["x", "net_value", "true_value", "net_deriv", "true_deriv"])
            for row in zip(x, val, x * x, der, 2 * x):
                w.writerow([_fmt(v) for v in row])
    except OSError as e:
        raise UsageError(f"cannot write {args.output}: {e.strerror}")
    print(json.dumps(netcore.size_metrics(net).to_json(), sort_keys=True))
    return 0


def cmd_global_check(args):
    net = _load(args.net)
    meta = net.meta
    eps = args.eps if args.eps is not None else meta.get("epsilon")
    if eps is None:
        raise UsageError("--eps is required for networks without build metadata")
    target = cons.square_target(net.in_dim)
    if (args.C is None) != (args.r is None):
        raise UsageError("--C and --r must be given together")
    res = verify.global_bound_check(net, target, eps, args.samples, args.seed, args.C, args.r)
    _write_json(res.to_json(), args.output)
    return 0 if res.passed else 2


def cmd_lipschitz(args):
    net = _load(args.net)
    cert = verify.lipschitz_certificate(net, args.B, args.resolution, args.pairs, args.seed)
    _write_json(cert.to_json(), args.output)
    return 0 if cert.sound and cert.growth_ok else 2


def make_parser():
    p = _Parser(prog="relucalc", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    b = sub.add_parser("build", help="build a network and write it as JSON")
    b.add_argument("kind", choices=["sawtooth", "square", "mult", "char", "global"])
    b.add_argument("--m", type=int, default=4)
    b.add_argument("--B", type=float, default=4.0)
    b.add_argument("--b", type=float, default=1.0)
    b.add_argument("--eps", type=float, default=1e-2)
    b.add_argument("--d", type=int, default=1)
    b.add_argument("-o", "--output", required=True)
    b.set_defaults(func=cmd_build)

    e = sub.add_parser("eval", help="evaluate a network at a point")
    e.add_argument("--net", required=True)
    e.add_argument("--x", required=True, help="comma-separated input vector")
    e.set_defaults(func=cmd_eval)

    j = sub.add_parser("jacobian", help="network derivative at a point as CSV")
    j.add_argument("--net", required=True)
    j.add_argument("--x", required=True)
    j.add_argument("-o", "--output")
    j.set_defaults(func=cmd_jacobian)

    c = sub.add_parser("compose", help="weight-level composition outer(inner(x))")
    c.add_argument("--outer", required=True)
    c.add_argument("--inner", required=True)
    c.add_argument("-o", "--output", required=True)
    c.set_defaults(func=cmd_compose)

    r = sub.add_parser("report", help="grid sup-norm error report against a target")
    r.add_argument("--net", required=True)
    r.add_argument("--target", choices=sorted(cons.TARGETS))
    r.add_argument("--B", type=float)
    r.add_argument("--resolution", type=int, default=10001)
    r.add_argument("--value-tol", type=float)
    r.add_argument("--deriv-tol", type=float)
    r.add_argument("--csv")
    r.add_argument("-o", "--output")
    r.set_defaults(func=cmd_report)

    f = sub.add_parser("figure1", help="squaring network values and derivatives on [-B, B]")
    f.add_argument("-o", "--output", required=True)
    f.add_argument("--m", type=int, default=4)
    f.add_argument("--B", type=float, default=4.0)
    f.add_argument("--points", type=int, default=4001)
    f.set_defaults(func=cmd_figure1)

    g = sub.add_parser("global-check", help="global pointwise bounds of a global approximator")
    g.add_argument("--net", required=True)
    g.add_argument("--eps", type=float)
    g.add_argument("--samples", type=int, default=1000)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--C", type=float)
    g.add_argument("--r", type=float)
    g.add_argument("-o", "--output")
    g.set_defaults(func=cmd_global_check)

    lp = sub.add_parser("lipschitz", help="Lipschitz and linear-growth certificate on a box")
    lp.add_argument("--net", required=True)
    lp.add_argument("--B", type=float, required=True)
    lp.add_argument("--resolution", type=int, default=101)
    lp.add_argument("--pairs", type=int, default=1000)
    lp.add_argument("--seed", type=int, default=0)
    lp.add_argument("-o", "--output")
    lp.set_defaults(func=cmd_lipschitz)
    return p


def main(argv=None):
    args = make_parser().parse_args(argv)
    try:
        return args.func(args)
    except UsageError as e:
        print(f"relucalc: error: {e}", file=sys.stderr)
        return 1
    except OSError as e:
        print(f"relucalc: error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
