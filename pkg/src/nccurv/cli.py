"""Command-line front end.  Every subcommand prints one JSON report::

    {"command": ..., "version": ..., "config": {...}, "result": ..., "diagnostics": [...]}

Exit codes: 0 success, 2 input error, 3 computation failure (including an
unmatched relaxed-signature search).
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .calculus import directional_derivative, hessian, mixed_hessian
from .curvature import (
    RelaxedSearchConfig,
    c_pm,
    clamped_tangent,
    positivity_membership,
    relaxed_signature,
    subspace_decomposition,
)
from .errors import ComputationFailure, InputError
from .freealg import ORDERING_TAG, NcPoly, parse
from .mateval import MatrixPoint, direct_sum, load_point
from .middlematrix import (
    classify_convexity,
    degree_bound_report,
    hessian_middle,
    relaxed_middle,
    scalar_middle,
    sds_certificate,
)
from .numerics import DEFAULT_TOL
from .variety import SignatureConfig, chsy_codim, minimal_annihilator, variety_signature, word_independence

EXIT_OK, EXIT_INPUT, EXIT_COMPUTE = 0, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_INPUT)


def _grid(text: str) -> tuple:
    try:
        vals = tuple(float(t) for t in text.split(",") if t.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad grid {text!r}") from None
    if not vals or any(v <= 0 for v in vals):
        raise argparse.ArgumentTypeError("grid values must be positive")
    return vals


def _positive_float(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not v > 0:
        raise argparse.ArgumentTypeError("must be positive")
    return v


def _read_poly(args) -> NcPoly:
    text = args.p
    if text is None:
        raise InputError("missing -p")
    if text.startswith("@"):
        try:
            text = Path(text[1:]).read_text()
        except OSError as exc:
            raise InputError(f"cannot read {text[1:]}: {exc}") from exc
    return parse(text.strip(), args.g, getattr(args, "letters", "x"))


def _points(args, need: int = 1) -> list[MatrixPoint]:
    pts = [load_point(f) for f in (args.point or [])]
    if len(pts) < need:
        raise InputError(f"need at least {need} --point file(s)")
    for pt in pts:
        if pt.g != args.g:
            raise InputError(f"point has g={pt.g} but -g {args.g}")
    return pts


def _map(fn, jobs, workers: int):
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            return list(ex.map(fn, jobs))
    return [fn(j) for j in jobs]


def _one_or_many(results):
    return results[0] if len(results) == 1 else results


# -- command implementations (each returns (result, diagnostics)) -------------

def cmd_parse(args):
    p = _read_poly(args)
    return {"poly": str(p), "profile": p.profile(), "symmetric": p.is_symmetric()}, []


def cmd_diff(args):
    p = _read_poly(args)
    out = {"poly": str(p), "order": args.order, "derivative": str(directional_derivative(p, args.order))}
    return out, []


def cmd_hessian(args):
    p = _read_poly(args)
    return {"poly": str(p), "hessian": str(hessian(p)), "mixed_hessian": str(mixed_hessian(p))}, []


def cmd_middle_matrix(args):
    p = _read_poly(args)
    Z = hessian_middle(p)
    if args.lam is not None or args.delta is not None:
        Z = relaxed_middle(p, args.lam or 0.0, args.delta or 0.0, Z)
    out = Z.to_json()
    out["scalar"] = Z.scalar().tolist()
    out["constant"] = Z.is_constant()
    return out, []


def cmd_signature(args):
    p = _read_poly(args)
    rep = degree_bound_report(p, args.tol)
    out = rep.to_json()
    out["mu_zero"] = scalar_middle(p, args.tol).mu_zero
    return out, []


def cmd_sds(args):
    cert = sds_certificate(_read_poly(args), args.tol)
    return cert.to_json(), [] if cert.supported else [cert.reason]


def cmd_convexity(args):
    return classify_convexity(_read_poly(args), args.tol).to_json(), []


def _curv_job(job):
    p, pt, tol = job
    out = c_pm(p, pt, tol).to_json()
    out["tangent"] = clamped_tangent(p, pt, tol).to_json()
    return out


def cmd_curvature(args):
    p = _read_poly(args)
    res = _map(_curv_job, [(p, pt, args.tol) for pt in _points(args)], args.workers)
    return _one_or_many(res), []


def _relaxed_job(job):
    p, pt, cfg, tol = job
    r = relaxed_signature(p, pt, cfg, tol)
    return r.to_json(), list(r.diagnostics)


def cmd_relaxed(args):
    p = _read_poly(args)
    cfg = RelaxedSearchConfig(args.delta_grid, args.lambda_grid, args.negative)
    res = _map(_relaxed_job, [(p, pt, cfg, args.tol) for pt in _points(args)], args.workers)
    diags = [d for _, ds in res for d in ds]
    result = _one_or_many([r for r, _ in res])
    if not all(r["matched"] for r, _ in res):
        raise _Failure(result, diags, "relaxed signature search did not match")
    return result, diags


def _decomp_job(job):
    p, pt, tol, grams = job
    return subspace_decomposition(p, pt, tol).to_json(with_grams=grams)


def cmd_decompose(args):
    p = _read_poly(args)
    res = _map(_decomp_job, [(p, pt, args.tol, args.grams) for pt in _points(args)], args.workers)
    return _one_or_many(res), []


def cmd_direct_sum(args):
    pts = _points(args)
    pts = pts * args.copies
    return direct_sum(pts).to_json(), []


def cmd_independence(args):
    res = [word_independence(pt, args.N, args.tol).to_json() for pt in _points(args)]
    return _one_or_many(res), []


def cmd_annihilator(args):
    res = minimal_annihilator(_points(args), args.N, args.tol)
    if res is None:
        return {"found": False, "N": args.N}, ["word matrices have full column rank up to N"]
    out = res.to_json()
    out["found"] = True
    return out, []


def cmd_chsy(args):
    pt = _points(args, need=0)
    if len(pt) > 1:
        raise InputError("chsy takes at most one point")
    n = pt[0].n if pt else args.n
    if n is None:
        raise InputError("chsy needs -n or --point")
    return chsy_codim(args.g, n, args.r, args.s, pt[0] if pt else None, args.tol), []


def cmd_variety_signature(args):
    p = _read_poly(args)
    pts = _points(args, need=0)
    if len(pts) > 1:
        raise InputError("variety-signature takes at most one point")
    mode = {"scalar-middle": "scalar-middle", "ceiling": "ceiling", "sampled": "sampled"}[args.mode]
    cfg = SignatureConfig(mode=mode, samples=args.samples, n=args.n, seed=args.seed,
                          workers=args.workers, point_filter=args.filter)
    rep = variety_signature(p, cfg, pts[0] if pts else None, args.tol)
    return rep.to_json(), list(rep.diagnostics)


def cmd_membership(args):
    p = _read_poly(args)
    res = [positivity_membership(p, pt.X, args.path_steps, args.tol).to_json() for pt in _points(args)]
    return _one_or_many(res), []


class _Failure(Exception):
    def __init__(self, result, diags, message):
        super().__init__(message)
        self.result, self.diags = result, diags


COMMANDS = {
    "parse": (cmd_parse, "parse and normalize a polynomial"),
    "diff": (cmd_diff, "directional derivative of a given order"),
    "hessian": (cmd_hessian, "Hessian and mixed Hessian"),
    "middle-matrix": (cmd_middle_matrix, "middle matrix of the (relaxed) Hessian"),
    "signature": (cmd_signature, "scalar middle matrix inertia and degree bound"),
    "sds": (cmd_sds, "sum/difference of squares for constant middle matrices"),
    "convexity": (cmd_convexity, "convex / concave / indefinite"),
    "curvature": (cmd_curvature, "c_-, c_+ on the clamped tangent plane"),
    "relaxed": (cmd_relaxed, "relaxed Hessian signature search"),
    "decompose": (cmd_decompose, "N / M / L subspace decomposition"),
    "direct-sum": (cmd_direct_sum, "direct sum of points"),
    "independence": (cmd_independence, "word independence test"),
    "annihilator": (cmd_annihilator, "minimal annihilating polynomial"),
    "chsy": (cmd_chsy, "codimension formula and numeric check"),
    "variety-signature": (cmd_variety_signature, "curvature signature of the variety"),
    "membership": (cmd_membership, "positivity domain membership (sampled)"),
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-g", type=int, default=1, help="number of variables (default 1)")
    common.add_argument("-p", help="polynomial expression or @file")
    common.add_argument("--point", action="append", help="point JSON file (repeatable)")
    common.add_argument("--tol", type=_positive_float, default=DEFAULT_TOL)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--workers", type=int, default=1)
    common.add_argument("--pretty", action="store_true", help="also print a table to stderr")

    ap = _Parser(prog="nccurv", description="Curvature of noncommutative real varieties.")
    ap.add_argument("--version", action="version", version=f"nccurv {__version__}")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)
    ps = {}
    for name, (_, help_) in COMMANDS.items():
        ps[name] = sub.add_parser(name, parents=[common], help=help_)
    ps["parse"].add_argument("--letters", default="x", choices=["x", "xh"])
    ps["diff"].add_argument("--order", type=int, default=1)
    ps["middle-matrix"].add_argument("--lam", type=float)
    ps["middle-matrix"].add_argument("--delta", type=float)
    rc = RelaxedSearchConfig()
    ps["relaxed"].add_argument("--delta-grid", type=_grid, default=rc.delta_grid)
    ps["relaxed"].add_argument("--lambda-grid", type=_grid, default=rc.lambda_grid)
    ps["relaxed"].add_argument("--negative", action="store_true", help="search delta < 0, lambda < 0")
    ps["decompose"].add_argument("--grams", action="store_true", help="include A, Q, E")
    ps["direct-sum"].add_argument("--copies", type=int, default=1)
    for name in ("independence", "annihilator"):
        ps[name].add_argument("-N", type=int, required=True)
    ps["chsy"].add_argument("-n", type=int)
    ps["chsy"].add_argument("-r", type=int, required=True)
    ps["chsy"].add_argument("-s", type=int, required=True)
    vs = ps["variety-signature"]
    vs.add_argument("--mode", default="scalar-middle", choices=["scalar-middle", "ceiling", "sampled"])
    vs.add_argument("--samples", type=int, default=16)
    vs.add_argument("-n", type=int, help="matrix size of sampled points")
    vs.add_argument("--filter", default="all", choices=["all", "full-rank"])
    ps["membership"].add_argument("--path-steps", type=int, default=64)
    return ap


def _config(args) -> dict:
    cfg = {"tol": args.tol, "seed": args.seed, "ordering": ORDERING_TAG, "g": args.g, "workers": args.workers}
    for key in ("mode", "samples", "n", "filter", "order", "N", "r", "s", "lam", "delta",
                "negative", "delta_grid", "lambda_grid", "copies", "path_steps", "letters"):
        if hasattr(args, key):
            val = getattr(args, key)
            cfg[key] = list(val) if isinstance(val, tuple) else val
    return cfg


def _jsonable(x):
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(f"not JSON serializable: {type(x).__name__}")


def dumps(report: dict) -> str:
    return json.dumps(report, sort_keys=True, default=_jsonable)


def _table(report: dict) -> str:
    res = report.get("result")
    lines = [f"{report['command']} (nccurv {report['version']})"]
    items = res.items() if isinstance(res, dict) else enumerate(res or [])
    for k, v in items:
        if isinstance(v, (dict, list)):
            v = json.dumps(v, sort_keys=True, default=_jsonable)
            if len(v) > 70:
                v = v[:67] + "..."
        lines.append(f"  {k:<22} {v}")
    for d in report.get("diagnostics", []):
        lines.append(f"  ! {d}")
    return "\n".join(lines)


def run(argv=None, stdout=None) -> int:
    stdout = stdout or sys.stdout
    ap = build_parser()
    args = ap.parse_args(argv)
    if args.g < 1:
        ap.error("-g must be positive")
    if args.workers < 1:
        ap.error("--workers must be positive")
    fn = COMMANDS[args.command][0]
    report = {"command": args.command, "version": __version__, "config": _config(args),
              "result": None, "diagnostics": []}
    code = EXIT_OK
    try:
        report["result"], report["diagnostics"] = fn(args)
    except _Failure as exc:
        report["result"], report["diagnostics"] = exc.result, exc.diags + [str(exc)]
        code = EXIT_COMPUTE
    except ComputationFailure as exc:
        report["diagnostics"] = [f"computation failure: {exc}"]
        code = EXIT_COMPUTE
    except InputError as exc:
        report["diagnostics"] = [f"input error: {exc}"]
        code = EXIT_INPUT
    print(dumps(report), file=stdout)
    if args.pretty:
        print(_table(report), file=sys.stderr)
    return code


def main(argv=None) -> int:
    return run(argv)


if __name__ == "__main__":
    sys.exit(main())
