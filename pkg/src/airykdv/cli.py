"""Command-line front end.

Single-point evaluation (det), grid scans with regime comparison (scan),
residual suites (check), Tracy-Widom tables (tw), Painlevé II profiles (p2),
the left-tail constant probe (tail-constant), KPZ tail tables (kpz), and the
t -> 0 profile extraction (v-estimate).

Output is CSV (fixed, versioned columns; header always present) or JSON
(with a schema_version field).  Table commands render a companion PNG figure
next to --out unless --no-plot is given.  Grid evaluation parallelizes over a
bounded worker pool; results are emitted in deterministic row-major order, so
output is bitwise identical for any --threads value.

Exit codes: 0 success; 1 a checked quantity exceeded its tolerance; 2 bad
configuration (flags, JSON, ranges); 3 numerical failure (divergent Newton,
non-contractive operator, sign loss in the determinant).
"""

import argparse
import json
import math
import os
import sys

import numpy as np

from .asymptotics import (
    classify,
    kpz_deep_tail,
    kpz_laplace,
    limiting_level,
    log_q_regime_i,
    log_q_regime_iii,
    regime_ii_u,
    v_estimate,
)
from .fredholm import NumericalError, Resolution
from .observables import Engine, FDScheme, observe, parallel_map
from .painleve2 import f_tw, solve_hm, step_engine, tw_left_tail_constant, y_sq_from_determinant
from .residuals import (
    cyl_kdv_residual,
    evolution_residual,
    idpii_residual,
    kdv_residual,
    mkdv_residual,
    phi_identity_gap,
    schrodinger_residual,
)
from .sigma import make_kpz, sigma_from_json
from .specfun import CONSTANTS

SCHEMA_VERSION = 1

CHECK_TOLERANCES = {
    "kdv": 1e-4,
    "schrodinger": 1e-4,
    "idpii": 1e-4,
    "evolution": 5e-4,
    "mkdv": 5e-4,
    "phi-identity": 1e-6,
    "cylkdv": 1e-4,
}
CHECK_NAMES = tuple(CHECK_TOLERANCES) + ("all",)

_COLUMN_DOCS = {
    "det": [
        ("x", "reference-frame position"),
        ("t", "time (positive)"),
        ("log_q", "log of the deformed-kernel Fredholm determinant (clamped <= 0)"),
        ("q", "the determinant itself, exp(log_q)"),
        ("u", "second x-derivative of log_q plus x/(2t): the KdV solution"),
        ("p", "first x-derivative of log_q plus x^2/(4t)"),
        ("phi_sq_int", "integral of phi(r)^2 against d-sigma (equals x/2 - t*u)"),
    ],
    "scan": [
        ("x", "grid position (outer loop)"),
        ("t", "grid time (inner loop)"),
        ("log_q", "log-determinant at (x, t), clamped <= 0"),
        ("u", "KdV solution at (x, t)"),
        ("regime", "small-t regime label from the boundaries x = +/-M t^(1/3), x = K:"
                   " i | ii | iii | outside"),
        ("asym_value", "matching regime formula: leading log_q (= 0) in regime i;"
                       " the Painlevé II u-profile x/2t - t^(-2/3) y^2(-x t^(-1/3))"
                       " in regime ii; the closed-form log_q left tail in regime"
                       " iii; nan outside"),
        ("gap", "measured minus asym_value (log_q-gap in regimes i/iii, u-gap in"
                " regime ii; nan outside)"),
    ],
    "tw": [
        ("s", "distribution argument"),
        ("f_tw", "Tracy-Widom value det(1 - gamma K^Ai on [s, inf)), monotone in s"),
    ],
    "p2": [
        ("s", "Painlevé II argument"),
        ("y_bvp", "Hastings-McLeod solution from the boundary-value solver"
                  " (gamma = 1 only; nan otherwise)"),
        ("y_sq_det", "y^2 from the determinant route -d^2/ds^2 log f_tw(-s)"),
    ],
    "kpz": [
        ("s", "rescaled argument of the Laplace-transform slice"),
        ("T", "KPZ time (fixed per table)"),
        ("log_q", "log-determinant at (x, t) = (s T^(-1/6), T^(-1/2))"),
        ("deep_tail", "closed-form deep-tail expansion -t^(-4) phi(x t)"
                      " - (1/6) sqrt(1 + pi^2 x t); nan where 1 + pi^2 x t < 0"),
    ],
}


def _column_epilog(command):
    lines = ["columns:"]
    for name, doc in _COLUMN_DOCS[command]:
        lines.append(f"  {name:<12}{doc}")
    return "\n".join(lines)


class CliError(Exception):
    """Configuration error: maps to exit code 2."""


def _add_common(p, sigma=True):
    if sigma:
        p.add_argument("--sigma", required=True,
                       help="weight as inline JSON or @file (module sigma schema)")
    p.add_argument("--nodes", type=int, default=None,
                   help="Gauss-Legendre nodes per quadrature panel (default 48)")
    p.add_argument("--panels", type=int, default=None,
                   help="panel refinement factor >= 1 (default 1)")
    p.add_argument("--format", choices=("json", "csv"), default=None,
                   help="output format (default: csv for tables, json for single records)")
    p.add_argument("--out", default=None, help="write output to this path instead of stdout")
    p.add_argument("--threads", type=int, default=None,
                   help="worker threads (default: AIRYKDV_THREADS or 1); output is"
                        " bitwise independent of this")
    p.add_argument("--plot", action="store_true",
                   help="force figure rendering (requires --out)")
    p.add_argument("--no-plot", action="store_true",
                   help="suppress the companion PNG on table commands")


def _range_args(p, var, default_step=None):
    p.add_argument(f"--{var}-from", type=float, default=None)
    p.add_argument(f"--{var}-to", type=float, default=None)
    names = [f"--{var}-step"]
    if var == "s":
        names.append("--step")
    p.add_argument(*names, dest=f"{var}_step", type=float, default=default_step)


def build_parser():
    p = argparse.ArgumentParser(
        prog="airykdv",
        description="Deformed Airy-kernel Fredholm determinants: KdV solutions,"
                    " Schrödinger eigenfunctions, residual suites, and small-time"
                    " asymptotics.",
    )
    sub = p.add_subparsers(dest="command", required=True)

    d = sub.add_parser("det", help="evaluate log_q, q, u, p, phi_sq_int at one (x, t)",
                       epilog=_column_epilog("det"),
                       formatter_class=argparse.RawDescriptionHelpFormatter)
    d.add_argument("--x", type=float, required=True)
    d.add_argument("--t", type=float, required=True)
    _add_common(d)

    s = sub.add_parser("scan", help="grid scan with regime classification",
                       epilog=_column_epilog("scan"),
                       formatter_class=argparse.RawDescriptionHelpFormatter)
    s.add_argument("--x", type=float, default=None, help="single x (alternative to a range)")
    s.add_argument("--t", type=float, default=None, help="single t (alternative to a range)")
    _range_args(s, "x")
    _range_args(s, "t")
    s.add_argument("--M", type=float, default=3.0, help="regime boundary multiplier (default 3)")
    s.add_argument("--K", type=float, default=1.0, help="regime-iii upper boundary (default 1)")
    _add_common(s)

    c = sub.add_parser("check", help="residual suite; exit 1 if any normalized residual"
                                     " exceeds tolerance")
    c.add_argument("which", choices=CHECK_NAMES, help="which identity to check")
    c.add_argument("--x", type=float, default=0.3)
    c.add_argument("--t", type=float, default=0.2)
    c.add_argument("--z", default="-0.5,0,0.7",
                   help="comma-separated spectral points for the eigenfunction checks")
    c.add_argument("--tol", type=float, default=None,
                   help="override every selected check's tolerance")
    _add_common(c)

    tw = sub.add_parser("tw", help="Tracy-Widom distribution table",
                        epilog=_column_epilog("tw"),
                        formatter_class=argparse.RawDescriptionHelpFormatter)
    _range_args(tw, "s")
    tw.add_argument("--gamma", type=float, default=1.0)
    _add_common(tw, sigma=False)

    p2 = sub.add_parser("p2", help="Painlevé II profile table (BVP and determinant routes)",
                        epilog=_column_epilog("p2"),
                        formatter_class=argparse.RawDescriptionHelpFormatter)
    _range_args(p2, "s")
    p2.add_argument("--gamma", type=float, default=1.0)
    _add_common(p2, sigma=False)

    tc = sub.add_parser("tail-constant",
                        help="Richardson-extrapolated Tracy-Widom left-tail constant;"
                             " exit 1 if off the known value by more than --tol")
    tc.add_argument("--gamma", type=float, default=1.0)
    tc.add_argument("--tol", type=float, default=2e-2)
    _add_common(tc, sigma=False)

    k = sub.add_parser("kpz", help="KPZ Laplace-transform slice and deep-tail comparator",
                       epilog=_column_epilog("kpz"),
                       formatter_class=argparse.RawDescriptionHelpFormatter)
    _range_args(k, "s")
    k.add_argument("--T", type=float, required=True, help="KPZ time (positive)")
    _add_common(k, sigma=False)

    v = sub.add_parser("v-estimate", help="extract the t -> 0 profile v(x) by least squares")
    v.add_argument("--x", type=float, required=True)
    v.add_argument("--t-samples", default=None,
                   help="comma-separated t values, each with M t^(1/3) < x "
                        "(default: t = (x/5)^3 and (x/6)^3)")
    v.add_argument("--M", type=float, default=3.0)
    _add_common(v)
    return p


def _parse_sigma(spec):
    if spec.startswith("@"):
        try:
            with open(spec[1:], encoding="utf-8") as fh:
                spec = fh.read()
        except OSError as exc:
            raise CliError(f"cannot read sigma file: {exc}") from exc
    try:
        return sigma_from_json(spec)
    except ValueError as exc:
        raise CliError(f"bad --sigma: {exc}") from exc


def _resolution(args):
    if args.nodes is None and args.panels is None:
        return None
    try:
        return Resolution(
            n_per_panel=args.nodes if args.nodes is not None else 48,
            panel_refine=args.panels if args.panels is not None else 1,
        )
    except ValueError as exc:
        raise CliError(str(exc)) from exc


def _threads(args):
    if args.threads is not None:
        n = args.threads
    else:
        raw = os.environ.get("AIRYKDV_THREADS", "1")
        try:
            n = int(raw)
        except ValueError as exc:
            raise CliError(f"bad AIRYKDV_THREADS value {raw!r}") from exc
    if n < 1:
        raise CliError("--threads must be >= 1")
    return n


def _grid(single, lo, hi, step, name):
    """Inclusive arithmetic grid, or the single value; exactly one must be given."""
    has_range = lo is not None or hi is not None or step is not None
    if single is not None and has_range:
        raise CliError(f"give either --{name} or --{name}-from/to/step, not both")
    if single is not None:
        return [float(single)]
    if not has_range:
        raise CliError(f"missing --{name} or --{name}-from/to/step")
    if lo is None or hi is None or step is None:
        raise CliError(f"--{name}-from/to/step must all be given")
    if step <= 0 or hi < lo:
        raise CliError(f"bad {name} range: need from <= to and step > 0")
    n = int(math.floor((hi - lo) / step + 1e-9)) + 1
    return [lo + i * step for i in range(n)]


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _emit(args, command, columns, rows, extra=None):
    """Write rows as CSV (default) or a JSON document; return the text."""
    fmt = args.format or "csv"
    if fmt == "csv":
        lines = [",".join(columns)]
        lines.extend(",".join(_fmt(r[c]) for c in columns) for r in rows)
        text = "\n".join(lines) + "\n"
    else:
        doc = {"schema_version": SCHEMA_VERSION, "command": command,
               "columns": list(columns), "rows": rows}
        if extra:
            doc.update(extra)
        text = json.dumps(doc, indent=2) + "\n"
    _write(args, text)
    return text


def _write(args, text):
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _figure_path(args):
    if args.no_plot:
        return None
    if not args.out:
        if args.plot:
            raise CliError("--plot needs --out (the figure is written next to it)")
        return None
    root, _ = os.path.splitext(args.out)
    return root + ".png"


def _render_plot(path, command, rows):
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6.0, 4.0), dpi=130)
    if command == "scan":
        ts = sorted({r["t"] for r in rows})
        for t in ts:
            pts = [r for r in rows if r["t"] == t]
            ax.plot([r["x"] for r in pts], [r["u"] for r in pts],
                    marker="." if len(pts) < 40 else None, label=f"t = {t:g}")
        ax.set_xlabel("x")
        ax.set_ylabel("u(x, t)")
        if len(ts) <= 8:
            ax.legend(fontsize=8)
    elif command == "tw":
        ax.plot([r["s"] for r in rows], [r["f_tw"] for r in rows])
        ax.set_xlabel("s")
        ax.set_ylabel("F(s)")
    elif command == "p2":
        ss = [r["s"] for r in rows]
        ax.plot(ss, [r["y_sq_det"] for r in rows], label="y^2 (determinant route)")
        if any(not math.isnan(r["y_bvp"]) for r in rows):
            ax.plot(ss, [r["y_bvp"] ** 2 for r in rows], "--", label="y^2 (BVP route)")
        ax.set_xlabel("s")
        ax.set_ylabel("y(s)^2")
        ax.legend(fontsize=8)
    elif command == "kpz":
        ss = [r["s"] for r in rows]
        ax.plot(ss, [r["log_q"] for r in rows], label="log Q")
        finite = [r for r in rows if not math.isnan(r["deep_tail"])]
        ax.plot([r["s"] for r in finite], [r["deep_tail"] for r in finite],
                "--", label="deep-tail expansion")
        ax.set_xlabel("s")
        ax.set_ylabel("log Q")
        ax.legend(fontsize=8)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def _table_command(args, command, columns, rows, extra=None):
    _emit(args, command, columns, rows, extra)
    fig = _figure_path(args)
    if fig is not None:
        _render_plot(fig, command, rows)
        print(f"figure: {fig}", file=sys.stderr)
    return 0


def _cmd_det(args):
    sigma = _parse_sigma(args.sigma)
    res = _resolution(args)
    obs = observe(sigma, args.x, args.t, res=res)
    record = {
        "x": obs.x, "t": obs.t, "log_q": obs.log_q, "q": obs.q,
        "u": obs.u, "p": obs.p, "phi_sq_int": obs.phi_sq_int,
    }
    if (args.format or "json") == "json":
        doc = {"schema_version": SCHEMA_VERSION, "command": "det",
               "sigma": sigma.label, **record}
        _write(args, json.dumps(doc, indent=2) + "\n")
    else:
        cols = [c for c, _ in _COLUMN_DOCS["det"]]
        _emit(args, "det", cols, [record])
    return 0


def _cmd_scan(args):
    sigma = _parse_sigma(args.sigma)
    res = _resolution(args)
    xs = _grid(args.x, args.x_from, args.x_to, args.x_step, "x")
    ts = _grid(args.t, args.t_from, args.t_to, args.t_step, "t")
    for t in ts:
        if t <= 0:
            raise CliError("t values must be positive")
    eng = Engine(sigma, res)
    fd = FDScheme()
    gamma = limiting_level(sigma)
    points = [(x, t) for x in xs for t in ts]  # row-major: x outer, t inner

    def one(pt):
        x, t = pt
        log_q = min(eng.log_q(x, t), 0.0)
        u = eng.u(x, t, fd)
        regime = classify(x, t, M=args.M, K=args.K)
        if regime == "i":
            asym = log_q_regime_i(x, t)
            gap = log_q - asym
        elif regime == "ii":
            asym = regime_ii_u(x, t, gamma=gamma)
            gap = u - asym
        elif regime == "iii":
            asym = log_q_regime_iii(sigma, x, t)
            gap = log_q - asym
        else:
            asym = math.nan
            gap = math.nan
        return {"x": x, "t": t, "log_q": log_q, "u": u, "regime": regime,
                "asym_value": asym, "gap": gap}

    rows = parallel_map(one, points, _threads(args))
    cols = [c for c, _ in _COLUMN_DOCS["scan"]]
    return _table_command(args, "scan", cols, rows, extra={"sigma": sigma.label})


def _cmd_check(args):
    sigma = _parse_sigma(args.sigma)
    res = _resolution(args)
    try:
        zs = [float(z) for z in args.z.split(",") if z.strip() != ""]
    except ValueError as exc:
        raise CliError(f"bad --z list: {exc}") from exc
    if args.t <= 0:
        raise CliError("--t must be positive")
    names = list(CHECK_TOLERANCES) if args.which == "all" else [args.which]
    eng = Engine(sigma, res)
    x, t = args.x, args.t

    def reports(name):
        if name == "kdv":
            return [kdv_residual(sigma, x, t, engine=eng)]
        if name == "phi-identity":
            return [phi_identity_gap(sigma, x, t, engine=eng)]
        if name == "cylkdv":
            return [cyl_kdv_residual(sigma, -x / t, t**-2, engine=eng)]
        fn = {"schrodinger": schrodinger_residual, "idpii": idpii_residual,
              "evolution": evolution_residual, "mkdv": mkdv_residual}[name]
        return [fn(sigma, x, t, z, engine=eng) for z in zs]

    failed = False
    lines = []
    for name in names:
        tol = args.tol if args.tol is not None else CHECK_TOLERANCES[name]
        for rep in reports(name):
            ok = rep.normalized <= tol
            failed = failed or not ok
            doc = json.loads(rep.to_json())
            doc.update({"schema_version": SCHEMA_VERSION, "tol": tol,
                        "pass": bool(ok)})
            lines.append(json.dumps(doc))
    _write(args, "\n".join(lines) + "\n")
    return 1 if failed else 0


def _cmd_tw(args):
    ss = _grid(None, args.s_from, args.s_to, args.s_step, "s")
    res = _resolution(args)
    eng = step_engine(args.gamma, res)

    def one(s):
        return {"s": s, "f_tw": f_tw(s, args.gamma, engine=eng)}

    rows = parallel_map(one, ss, _threads(args))
    cols = [c for c, _ in _COLUMN_DOCS["tw"]]
    return _table_command(args, "tw", cols, rows, extra={"gamma": args.gamma})


def _cmd_p2(args):
    ss = _grid(None, args.s_from, args.s_to, args.s_step, "s")
    res = _resolution(args)
    eng = step_engine(args.gamma, res)
    sol = solve_hm() if args.gamma == 1.0 else None

    def one(s):
        y = math.nan
        if sol is not None and sol.grid[0] <= s <= sol.grid[-1]:
            y = float(sol(s))
        return {"s": s, "y_bvp": y,
                "y_sq_det": y_sq_from_determinant(args.gamma, s, engine=eng)}

    rows = parallel_map(one, ss, _threads(args))
    cols = [c for c, _ in _COLUMN_DOCS["p2"]]
    return _table_command(args, "p2", cols, rows, extra={"gamma": args.gamma})


def _cmd_tail_constant(args):
    res = _resolution(args)
    result = tw_left_tail_constant(gamma=args.gamma, res=res)
    doc = {"schema_version": SCHEMA_VERSION, "command": "tail-constant",
           "gamma": args.gamma, "tol": args.tol, **result,
           "pass": bool(abs(result["error"]) <= args.tol)}
    _write(args, json.dumps(doc, indent=2) + "\n")
    return 0 if doc["pass"] else 1


def _cmd_kpz(args):
    if args.T <= 0:
        raise CliError("--T must be positive")
    ss = _grid(None, args.s_from, args.s_to, args.s_step, "s")
    res = _resolution(args)
    eng = Engine(make_kpz(), res)
    tcap = args.T
    x_of = tcap ** (-1.0 / 6.0)
    t_kdv = tcap**-0.5

    def one(s):
        log_q = kpz_laplace(s, tcap, engine=eng)
        try:
            deep = kpz_deep_tail(s * x_of, t_kdv)
        except ValueError:
            deep = math.nan
        return {"s": s, "T": tcap, "log_q": log_q, "deep_tail": deep}

    rows = parallel_map(one, ss, _threads(args))
    cols = [c for c, _ in _COLUMN_DOCS["kpz"]]
    return _table_command(args, "kpz", cols, rows)


def _cmd_v_estimate(args):
    sigma = _parse_sigma(args.sigma)
    res = _resolution(args)
    try:
        ts = (None if args.t_samples is None
              else [float(v) for v in args.t_samples.split(",") if v.strip() != ""])
    except ValueError as exc:
        raise CliError(f"bad --t-samples list: {exc}") from exc
    try:
        est = v_estimate(sigma, args.x, ts, M=args.M, res=res)
    except ValueError as exc:
        raise CliError(str(exc)) from exc
    doc = {"schema_version": SCHEMA_VERSION, "command": "v-estimate",
           "sigma": sigma.label, "x": est.x, "v_hat": est.v_hat,
           "c_hat": est.c_hat, "model_residual": est.model_residual,
           "t_samples": list(est.t_samples), "u_samples": list(est.u_samples),
           "eight_x_sq_v_hat": 8.0 * est.x**2 * est.v_hat}
    _write(args, json.dumps(doc, indent=2) + "\n")
    return 0


_DISPATCH = {
    "det": _cmd_det,
    "scan": _cmd_scan,
    "check": _cmd_check,
    "tw": _cmd_tw,
    "p2": _cmd_p2,
    "tail-constant": _cmd_tail_constant,
    "kpz": _cmd_kpz,
    "v-estimate": _cmd_v_estimate,
}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _DISPATCH[args.command](args)
    except CliError as exc:
        print(f"airykdv: config error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"airykdv: config error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"airykdv: numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
