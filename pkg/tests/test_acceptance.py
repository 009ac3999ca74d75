"""Acceptance criteria, one test and one PASS/FAIL summary line each."""

import json
import math
import os
import subprocess
import sys
import time
from pathlib import Path

import numpy as np

from gen import instance, random_point
from nccurv import numerics
from nccurv.calculus import derivative, directional_derivative, hessian
from nccurv.curvature import (
    c_pm,
    clamped_tangent,
    relaxed_gram,
    relaxed_parts,
    relaxed_signature,
    subspace_decomposition,
)
from nccurv.freealg import parse
from nccurv.mateval import MatrixPoint, alpha, direct_sum
from nccurv.middlematrix import (
    classify_convexity,
    degree_bound_report,
    hessian_middle,
    lambda_augmentation,
    relaxed_middle,
    scalar_middle,
)
from nccurv.variety import SignatureConfig, chsy_codim, variety_signature, word_independence

ROOT = Path(__file__).resolve().parents[1]
X3 = parse("x1^3", 1)
TOL = 1e-8


def hx(text, g=1):
    return parse(text, g, "xh")


def test_criterion_1_derivative_tables(criterion):
    t0 = time.perf_counter()
    p = parse("x1^4", 1)
    checks = {
        "x^4 first": directional_derivative(p, 1) == hx("h1*x1^3 + x1*h1*x1^2 + x1^2*h1*x1 + x1^3*h1"),
        "x^4 second": directional_derivative(p, 2)
        == hx("2*(h1^2*x1^2 + h1*x1*h1*x1 + h1*x1^2*h1 + x1*h1^2*x1 + x1*h1*x1*h1 + x1^2*h1^2)"),
        "x^4 third": directional_derivative(p, 3) == hx("6*(h1^3*x1 + h1^2*x1*h1 + h1*x1*h1^2 + x1*h1^3)"),
        "x^4 fourth": directional_derivative(p, 4) == hx("24*h1^4"),
        "x^4 fifth": directional_derivative(p, 5).is_zero(),
        "x2 x1 x2 first": derivative(parse("x2*x1*x2", 2)) == hx("h2*x1*x2 + x2*h1*x2 + x2*x1*h2", 2),
        "x1^2 x2 second": hessian(parse("x1^2*x2", 2)) == hx("2*(h1^2*x2 + h1*x1*h2 + x1*h1*h2)", 2),
    }
    elapsed = time.perf_counter() - t0
    checks["runtime < 1s"] = elapsed < 1.0
    criterion(1, "derivative tables", checks, f"{elapsed:.3f}s")


def test_criterion_2_cube_three_point(criterion):
    b, c = 0.5, 0.3
    pt = MatrixPoint((np.diag([1.0, -1.0, -1.0]),), [1.0, b, c])
    rep = c_pm(X3, pt, TOL)
    T = clamped_tangent(X3, pt, TOL)
    displayed = [
        [[b * b, -3 * b, 0], [-3 * b, 1, 0], [0, 0, 0]],
        [[2 * b * c, -3 * c, -3 * b], [-3 * c, 0, 1], [-3 * b, 1, 0]],
        [[c * c, 0, -3 * c], [0, 0, 0], [-3 * c, 0, 1]],
    ]
    got = np.column_stack([M.ravel() for M in T.elements().elements[:, 0]])
    ref = np.column_stack([np.array(M, dtype=float).ravel() for M in displayed])
    angle = float(np.max(numerics.principal_angles(got, ref))) if T.dim == 3 else math.inf
    checks = {
        "c_minus == 0": rep.c_minus == 0,
        "c_plus == 2": rep.c_plus == 2,
        "tangent dim 3": T.dim == 3,
        "principal angles < 1e-8": angle < 1e-8,
    }
    criterion(2, "x^3 at diag(1, -1, -1): signature and tangent plane", checks, f"max angle {angle:.1e}")


def test_criterion_3_cube_five_point(criterion):
    t0 = time.perf_counter()
    pt = MatrixPoint((np.diag([1.0, 1.0, -1.0, -1.0, -1.0]),), [2.0, 0, 0, 0, 1.0])
    one = c_pm(X3, pt, TOL)
    dec = subspace_decomposition(X3, pt, TOL)
    two = c_pm(X3, direct_sum([pt, pt]), TOL)
    elapsed = time.perf_counter() - t0
    checks = {
        "c^5 == (1, 3)": (one.c_minus, one.c_plus) == (1, 3),
        "dims (6, 4, 5, 1, 3)": (dec.dim_N, dec.dim_M, dec.dim_L, dec.dim_M_minus, dec.dim_M_plus) == (6, 4, 5, 1, 3),
        "c^10 == (3, 6)": (two.c_minus, two.c_plus) == (3, 6),
        "strict: 3 > 2 * 1": two.c_minus > 2 * one.c_minus,
        "runtime < 5s": elapsed < 5.0,
    }
    criterion(3, "x^3 at diag(I2, -I3): signature, decomposition, direct sum", checks, f"{elapsed:.3f}s")


def test_criterion_4_middle_matrices(criterion):
    Z3 = hessian_middle(X3)
    grid = [[str(Z3[r, c]) for c in range(Z3.size)] for r in range(Z3.size)]
    aug = lambda_augmentation(X3)
    col = [parse("x1^2", 1), parse("x1", 1), parse("1", 1)]
    aug_ok = all(aug[r, c] == col[r] * col[c] for r in range(3) for c in range(3))
    # the displayed congruence for the relaxed middle matrix at a random point
    rng = np.random.default_rng(0)
    n, lam, dlt = 3, 2.5, 0.25
    X = random_point(rng, 1, n, with_v=False).X[0]
    I, O = np.eye(n), np.zeros((n, n))
    U = np.block([[I, X / 2, X @ X], [O, I, X], [O, O, I]])
    core = np.block([[O, 2 * I, O], [2 * I, O, O], [O, O, lam * I]])
    congruence = np.allclose(relaxed_middle(X3, lam, dlt).evaluate([X]), U @ core @ U.T + dlt * np.eye(3 * n))
    b3, b4 = degree_bound_report(X3), degree_bound_report(parse("x1^4", 1))
    checks = {
        "Z(x^3) == [[2x, 2], [2, 0]]": grid == [["2*x1", "2"], ["2", "0"]],
        "lambda term == col(x^2, x, 1) row": aug_ok,
        "relaxed congruence": congruence,
        "inertia(x^3) == (1, 0, 1)": scalar_middle(Z3).inertia.as_tuple() == (1, 0, 1),
        "3 <= 4": b3.holds and (b3.d, b3.bound_minus) == (3, 4),
        "inertia(x^4) == (1, 0, 2)": scalar_middle(parse("x1^4", 1)).inertia.as_tuple() == (1, 0, 2),
        "4 <= 4 tight": b4.holds and b4.d == b4.bound_minus == 4,
    }
    criterion(4, "middle matrices of x^3 and x^4", checks)


def _property_suite(count: int):
    """Run every property over ``count`` seeded instances; return failures and stats."""
    fails = {k: 0 for k in ("reconstruction", "inertia scaling", "lambda shift", "small delta",
                            "superadditivity", "relaxed match", "not negative definite")}
    unmatched = 0
    for seed in range(count):
        p, pt, rng = instance(seed)
        n = pt.n
        Z = hessian_middle(p)
        sm = scalar_middle(Z, TOL)
        if not (Z.reexpand() == hessian(p) and not Z.structure_violations()):
            fails["reconstruction"] += 1
        if numerics.inertia(Z.evaluate(pt.X), TOL).as_tuple() != sm.inertia.scaled(n):
            fails["inertia scaling"] += 1
        lam = float(10 ** rng.uniform(-1, 2))
        for sign in (1, -1):
            Zl = relaxed_middle(p, sign * lam, 0.0)
            scal = numerics.inertia(Zl.scalar(), TOL)
            at_x = numerics.inertia(Zl.evaluate(pt.X), TOL)
            want = (sm.mu_minus, sm.mu_plus + 1) if sign > 0 else (sm.mu_minus + 1, sm.mu_plus)
            if (scal.neg, scal.pos) != want or (at_x.neg, at_x.pos) != (n * scal.neg, n * scal.pos):
                fails["lambda shift"] += 1
                break
        if numerics.inertia(relaxed_middle(p, lam, 1e-7).evaluate(pt.X), TOL).neg != n * sm.mu_minus:
            fails["small delta"] += 1
        k = int(rng.integers(2, 4))
        one, many = c_pm(p, pt, TOL), c_pm(p, direct_sum([pt] * k), TOL)
        if many.c_minus < k * one.c_minus or many.c_plus < k * one.c_plus:
            fails["superadditivity"] += 1
        sig = relaxed_signature(p, pt, tol=TOL)
        if not sig.matched:
            unmatched += 1
        elif sig.e_minus != one.c_minus:
            fails["relaxed match"] += 1
    # x^3 at n = 4, where n > 2 alpha_{d-2} - 1
    rng = np.random.default_rng(2024)
    for _ in range(count):
        pt = random_point(rng, 1, 4)
        parts = relaxed_parts(X3, pt)
        ok = subspace_decomposition(X3, pt, TOL).dim_N > 0
        for dlt in (1e-2, 1e-5, 1e-8):
            for lam in (1.0, 1e3, 1e6):
                G = relaxed_gram(X3, pt, lam, dlt, parts=parts)
                ok &= float(np.linalg.eigvalsh(G)[-1]) >= -1e-10 * max(1.0, float(np.abs(G).max()))
        if not ok:
            fails["not negative definite"] += 1
    return fails, unmatched


def test_criterion_5_property_suite(criterion):
    count = 200
    t0 = time.perf_counter()
    fails, unmatched = _property_suite(count)
    elapsed = time.perf_counter() - t0
    rate = unmatched / count
    checks = {f"{k} ({v} failures)": v == 0 for k, v in fails.items()}
    checks["n = 4 exceeds 2 alpha_1 - 1"] = 4 > 2 * alpha(1, 1) - 1
    checks[f"unmatched rate {rate:.1%} < 2%"] = rate < 0.02
    checks["runtime < 5 min"] = elapsed < 300
    criterion(5, f"property suite over {count} instances each", checks,
              f"unmatched {unmatched}/{count}, {elapsed:.1f}s")


def test_criterion_6_chsy(criterion):
    vander = MatrixPoint((np.diag([1.0, 2.0, 3.0]),), [1.0, 1.0, 1.0])
    v = chsy_codim(1, 3, 1, 1, vander)
    checks = {"g=1 Vandermonde codim == 1": v["numeric_codim"] == v["formula_exact_r_eq_s"] == 1}
    rng = np.random.default_rng(6)
    for g in (1, 2):
        # independence of alpha_1 words needs n >= alpha_1
        for n in range(alpha(g, 1), 5):
            pt = random_point(rng, g, n)
            ok = word_independence(pt, 1, TOL).independent
            out = chsy_codim(g, n, 1, 1, pt, TOL)
            checks[f"(g,r)=({g},1) n={n}"] = ok and out["numeric_codim"] == out["formula_exact_r_eq_s"]
    criterion(6, "codimension formula against numeric codimension", checks)


def test_criterion_7_end_to_end(criterion):
    p = parse("1 - x1^2", 1)
    pt = MatrixPoint((np.diag([1.0, -1.0]),), np.array([1.0, 1.0]) / math.sqrt(2))
    ceil = variety_signature(p, SignatureConfig(mode="ceiling"), pt, TOL)
    sm = variety_signature(p, SignatureConfig(mode="scalar-middle"), tol=TOL)
    cv = classify_convexity(-p, TOL)
    checks = {
        "threshold n=2 > 1": ceil.n == 2 and ceil.threshold == 1,
        "ceiling (1, 0)": (ceil.C_minus, ceil.C_plus) == (1, 0) and ceil.validity == "certified",
        "scalar-middle (1, 0)": (sm.C_minus, sm.C_plus) == (1, 0),
        "agree": (ceil.C_minus, ceil.C_plus) == (sm.mu_minus, sm.mu_plus),
        "-p convex of degree 2": cv.kind == "convex" and cv.degree == 2,
    }
    criterion(7, "variety signature of 1 - x^2", checks)


SUITE = r"""
import io, sys
from nccurv.cli import run
pts = sys.argv[1]
cmds = [
    ["parse", "-g", "2", "-p", "x1*x2 + x2*x1"],
    ["diff", "-p", "x1^4", "--order", "2"],
    ["hessian", "-p", "x1^3"],
    ["middle-matrix", "-p", "x1^3", "--lam", "2", "--delta", "0.1"],
    ["signature", "-p", "x1^4"],
    ["sds", "-g", "2", "-p", "x1^2 - x2^2"],
    ["convexity", "-p", "x1^3"],
    ["curvature", "-p", "x1^3", "--point", pts + "/cube_n3.json", "--point", pts + "/cube_n5.json", "--workers", "2"],
    ["relaxed", "-p", "x1^3", "--point", pts + "/cube_n5.json"],
    ["decompose", "-p", "x1^3", "--point", pts + "/cube_n5.json", "--grams"],
    ["direct-sum", "--point", pts + "/cube_n5.json", "--copies", "2"],
    ["independence", "--point", pts + "/vandermonde.json", "-N", "2"],
    ["annihilator", "--point", pts + "/circle.json", "-N", "2"],
    ["chsy", "-r", "1", "-s", "1", "--point", pts + "/vandermonde.json"],
    ["variety-signature", "-p", "1 - x1^2", "--mode", "ceiling", "--seed", "11"],
    ["variety-signature", "-p", "x1^3", "--seed", "11"],
    ["variety-signature", "-g", "2", "-p", "1 - x1^2 - x2^2", "--mode", "sampled", "--samples", "6",
     "--seed", "11", "--workers", "2"],
    ["membership", "-p", "1 - x1^2", "--point", pts + "/circle.json"],
]
for c in cmds:
    buf = io.StringIO()
    code = run(c, buf)
    sys.stdout.write(f"{code} {buf.getvalue()}")
"""


def test_criterion_8_determinism(criterion):
    outs = []
    for hashseed in ("0", "1"):
        env = dict(os.environ, PYTHONHASHSEED=hashseed)
        res = subprocess.run([sys.executable, "-c", SUITE, str(ROOT / "points")],
                             capture_output=True, env=env, check=True)
        outs.append(res.stdout)
    lines = outs[0].decode().splitlines()
    checks = {
        "byte-identical": outs[0] == outs[1],
        "18 reports": len(lines) == 18,
        "all exit 0": all(line.startswith("0 ") for line in lines),
        "reports parse": all(json.loads(line[2:])["version"] for line in lines),
    }
    criterion(8, "two runs of the report suite are byte-identical", checks, f"{len(outs[0])} bytes")
