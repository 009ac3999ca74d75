"""Variety-level quantities: word independence, annihilators, the CHSY
codimension count, and the curvature signature of ``V(p)``."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import numerics
from .curvature import PointForms, c_pm, full_rank_point
from .errors import ComputationFailure, InputError
from .freealg import NcPoly, words_upto
from .mateval import Evaluator, MatrixPoint, alpha, direct_sum, evaluate
from .middlematrix import hessian_middle, scalar_middle

__all__ = [
    "alpha",
    "word_matrix",
    "word_independence",
    "minimal_annihilator",
    "chsy_codim",
    "ceiling_threshold",
    "sample_variety_point",
    "variety_signature",
    "IndependenceCertificate",
    "AnnihilatorResult",
    "VarietySignatureReport",
    "SignatureConfig",
]


def word_matrix(point: MatrixPoint, N: int) -> np.ndarray:
    """n x alpha_N matrix with columns ``w(X) v`` over ``|w| <= N`` (graded-lex)."""
    v = point.require_v()
    ev = Evaluator(point.X)
    return np.column_stack([ev.word_vec(w, v) for w in words_upto(point.g, N)])


@dataclass(frozen=True)
class IndependenceCertificate:
    g: int
    n: int
    N: int
    rank: int
    alpha_N: int
    independent: bool
    tol: float

    def to_json(self) -> dict:
        return {
            "g": self.g,
            "n": self.n,
            "N": self.N,
            "rank": self.rank,
            "alpha_N": self.alpha_N,
            "independent": self.independent,
            "tol": self.tol,
        }


def word_independence(point: MatrixPoint, N: int, tol: float = numerics.DEFAULT_TOL) -> IndependenceCertificate:
    if N < 0:
        raise InputError("N must be nonnegative")
    W = word_matrix(point, N)
    r = numerics.rank(W, tol)
    aN = alpha(point.g, N)
    return IndependenceCertificate(point.g, point.n, N, r, aN, r == aN, tol)


@dataclass(frozen=True)
class AnnihilatorResult:
    degree: int
    coefficients: dict  # word string -> coefficient
    poly: NcPoly
    residual: float
    nullity: int
    ranks: tuple  # rank of the stacked word matrix for each degree tried
    tol: float

    def to_json(self) -> dict:
        return {
            "degree": self.degree,
            "q": str(self.poly),
            "coefficients": self.coefficients,
            "residual": self.residual,
            "nullity": self.nullity,
            "ranks": list(self.ranks),
            "tol": self.tol,
        }


def minimal_annihilator(points, N: int, tol: float = numerics.DEFAULT_TOL) -> AnnihilatorResult | None:
    """Lowest-degree ``q`` (``deg q <= N``) with ``q(X) v = 0`` at every point.

    Returns ``None`` when the stacked word matrix has full column rank for
    every degree up to ``N``.  ``q`` is a unit-norm null vector with its
    first nonzero coefficient positive.
    """
    points = list(points)
    if not points:
        raise InputError("need at least one point")
    g = points[0].g
    if any(pt.g != g for pt in points):
        raise InputError("points must share g")
    ranks = []
    for D in range(N + 1):
        W = np.vstack([word_matrix(pt, D) for pt in points])
        r = numerics.rank(W, tol)
        ranks.append(r)
        if r == W.shape[1]:
            continue
        ns = numerics.nullspace_orthonormal(W, tol)
        q = ns[:, 0]
        big = np.flatnonzero(np.abs(q) > tol * max(1.0, float(np.max(np.abs(q)))))
        if q[big[0]] < 0:
            q = -q
        q[np.abs(q) < 1e-15] = 0.0
        words = words_upto(g, D)
        poly = NcPoly(g, dict(zip(words, q.tolist())))
        resid = float(np.max(np.abs(W @ q)))
        coeffs = {str(NcPoly.word(g, w)): float(c) for w, c in zip(words, q) if c != 0.0}
        return AnnihilatorResult(D, coeffs, poly, resid, ns.shape[1], tuple(ranks), tol)
    return None


def chsy_codim(g: int, n: int, r: int, s: int, point: MatrixPoint | None = None,
               tol: float = numerics.DEFAULT_TOL) -> dict:
    """Codimension count for the range of ``H -> col(H_j w(X) v : |w| <= s)``.

    The formula value is ``n g (alpha_s - alpha_r) + g alpha_r (alpha_r - 1) / 2``;
    for ``r = s`` it does not depend on ``n``.  With a point whose words of
    length at most ``r`` are independent, the numeric codimension is added.
    """
    if g < 1 or n < 1 or r < 0 or s < r:
        raise InputError("need g, n >= 1 and s >= r >= 0")
    ar, as_ = alpha(g, r), alpha(g, s)
    out = {
        "g": g,
        "n": n,
        "r": r,
        "s": s,
        "formula_bound": n * g * (as_ - ar) + g * ar * (ar - 1) // 2,
        "formula_exact_r_eq_s": g * ar * (ar - 1) // 2 if r == s else None,
        "numeric_codim": None,
        "independence": None,
    }
    if point is not None:
        if (point.g, point.n) != (g, n):
            raise InputError("point does not match g and n")
        cert = word_independence(point, r, tol)
        out["independence"] = cert.to_json()
        if cert.independent:
            R = PointForms(point).border_map(s)
            out["numeric_codim"] = n * g * as_ - numerics.rank(R, tol)
    return out


def ceiling_threshold(g: int, d: int) -> int:
    """``n`` must exceed this for the ceiling identification."""
    a = alpha(g, d - 1)
    return g * a * (a - 1) // 2


# -- sampling points of the variety ------------------------------------------------

def _goe(rng: np.random.Generator, n: int) -> np.ndarray:
    A = rng.standard_normal((n, n))
    return (A + A.T) / math.sqrt(2.0 * n)


def _neg_count(p: NcPoly, Xs) -> int:
    w = np.linalg.eigvalsh(evaluate(p, Xs))
    return int(np.sum(w < 0))


def sample_variety_point(p: NcPoly, n: int, rng: np.random.Generator, tol: float = numerics.DEFAULT_TOL,
                         max_tries: int = 20, span: float = 4.0, grid: int = 64) -> MatrixPoint | None:
    """Find ``(X, v)`` with ``p(X) v = 0`` by scanning a random line for an
    eigenvalue of ``p`` crossing zero and bisecting on the crossing.

    Returns ``None`` if no crossing is found within ``max_tries`` lines.
    """
    g = p.g
    for _ in range(max_tries):
        X0 = tuple(_goe(rng, n) for _ in range(g))
        w, U = numerics.sym_eig(evaluate(p, X0))
        if np.min(np.abs(w)) <= numerics.zero_threshold(w, tol):
            return MatrixPoint(X0, U[:, int(np.argmin(np.abs(w)))])
        D = tuple(_goe(rng, n) for _ in range(g))
        line = lambda t: tuple(A + t * B for A, B in zip(X0, D))
        ts = np.linspace(-span, span, grid)
        counts = [_neg_count(p, line(t)) for t in ts]
        for k in range(grid - 1):
            if counts[k] == counts[k + 1]:
                continue
            lo, hi, clo = ts[k], ts[k + 1], counts[k]
            for _ in range(200):
                mid = 0.5 * (lo + hi)
                if mid in (lo, hi):
                    break
                if _neg_count(p, line(mid)) == clo:
                    lo = mid
                else:
                    hi = mid
            Xs = line(hi)
            w, U = numerics.sym_eig(evaluate(p, Xs))
            j = int(np.argmin(np.abs(w)))
            if abs(w[j]) <= 1e3 * numerics.zero_threshold(w, 1e-12):
                return MatrixPoint(Xs, U[:, j])
    return None


def _on_variety(p: NcPoly, point: MatrixPoint, tol: float) -> float:
    v = point.require_v()
    M = evaluate(p, point.X)
    resid = float(np.linalg.norm(M @ v))
    scale = max(1.0, float(np.linalg.norm(M, 2))) * float(np.linalg.norm(v))
    if resid > tol * scale * 1e2:
        raise InputError(f"point is not on the variety: |p(X)v| = {resid:.3g}")
    return resid


def _filter(p: NcPoly, kind, tol: float) -> Callable[[MatrixPoint], bool]:
    if kind is None or kind == "all":
        return lambda pt: True
    if kind == "full-rank":
        return lambda pt: full_rank_point(p, pt, tol)
    if callable(kind):
        return kind
    raise InputError(f"unknown point filter {kind!r}")


def _sample_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng([int(seed), int(index)])


# -- signature --------------------------------------------------------------------

@dataclass(frozen=True)
class VarietySignatureReport:
    C_minus: int
    C_plus: int
    method: str  # scalar-middle | ceiling-at-point | sampled-lower-bound
    validity: str  # certified | uncertified | lower-bound
    mu_minus: int
    mu_plus: int
    certificate: IndependenceCertificate | None = None
    annihilator: AnnihilatorResult | None = None
    beta_samples: tuple = ()
    n: int | None = None
    threshold: int | None = None
    c_minus: int | None = None
    c_plus: int | None = None
    diagnostics: tuple = ()
    tol: float = numerics.DEFAULT_TOL

    def to_json(self) -> dict:
        return {
            "C_minus": self.C_minus,
            "C_plus": self.C_plus,
            "method": self.method,
            "validity": self.validity,
            "mu_minus": self.mu_minus,
            "mu_plus": self.mu_plus,
            "certificate": None if self.certificate is None else self.certificate.to_json(),
            "annihilator": None if self.annihilator is None else self.annihilator.to_json(),
            "beta_samples": [list(b) for b in self.beta_samples],
            "n": self.n,
            "threshold": self.threshold,
            "c_minus": self.c_minus,
            "c_plus": self.c_plus,
            "tol": self.tol,
        }


@dataclass(frozen=True)
class SignatureConfig:
    mode: str = "scalar-middle"  # scalar-middle | ceiling | sampled
    samples: int = 16
    n: int | None = None
    seed: int = 0
    workers: int = 1
    point_filter: object = "all"
    max_family: int = 64


def _family_certificate(p: NcPoly, cfg: SignatureConfig, tol: float, diags: list, min_n: int = 0):
    """Grow a family of sampled variety points until its direct sum certifies
    word independence at length ``d - 1`` and has size above ``min_n``.

    If the budget runs out first, an annihilator of the family is returned
    alongside the failed certificate.
    """
    N = p.degree - 1
    target = alpha(p.g, N)
    keep = _filter(p, cfg.point_filter, tol)
    n0 = cfg.n or 2
    family = []
    W = np.zeros((0, target))
    for i in range(cfg.max_family):
        pt = sample_variety_point(p, n0, _sample_rng(cfg.seed, i), tol)
        if pt is None or not keep(pt):
            continue
        family.append(pt)
        W = np.vstack([W, word_matrix(pt, N)])
        if numerics.rank(W, tol) == target and W.shape[0] > min_n:
            cert = word_independence(direct_sum(family), N, tol)
            if cert.independent:
                return family, cert, None
    diags.append(f"no independence certificate from {len(family)} sampled points")
    if not family:
        return family, None, None
    return family, word_independence(direct_sum(family), N, tol), minimal_annihilator(family, N, tol)


def _ceil_ratio(c: int, n: int) -> int:
    return -(-c // n)


def _sampled_one(args):
    p, n, seed, i, tol, filt = args
    pt = sample_variety_point(p, n, _sample_rng(seed, i), tol)
    if pt is None or not _filter(p, filt, tol)(pt):
        return None
    rep = c_pm(p, pt, tol)
    return (i, n, rep.c_minus, rep.c_plus)


def variety_signature(p: NcPoly, cfg: SignatureConfig | None = None, point: MatrixPoint | None = None,
                      tol: float = numerics.DEFAULT_TOL) -> VarietySignatureReport:
    """Curvature signature ``(C_-, C_+)`` of the variety of ``p``.

    * ``scalar-middle``: ``mu_pm`` of the scalar middle matrix, labeled
      certified when a sampled family certifies word independence.
    * ``ceiling``: ``ceil(c_pm^n / n)`` at one point with ``n`` above the
      threshold (the supplied point, or a direct sum of sampled points).
    * ``sampled``: maximum of ``ceil(c_pm^n / n)`` over samples; a lower bound.
    """
    cfg = cfg or SignatureConfig()
    if not p.is_symmetric() or p.letters_used() - {0}:
        raise InputError("expected a symmetric polynomial in x-letters")
    d = p.degree
    if d < 1:
        raise InputError("a constant polynomial has no variety to speak of")
    sm = scalar_middle(hessian_middle(p), tol)
    thr = ceiling_threshold(p.g, d)
    diags: list[str] = []

    if cfg.mode == "scalar-middle":
        _, cert, ann = _family_certificate(p, cfg, tol, diags)
        ok = cert is not None and cert.independent
        return VarietySignatureReport(sm.mu_minus, sm.mu_plus, "scalar-middle",
                                      "certified" if ok else "uncertified", sm.mu_minus, sm.mu_plus,
                                      cert, ann, (), None, thr, None, None, tuple(diags), tol)

    if cfg.mode == "ceiling":
        if point is None:
            family, cert, _ = _family_certificate(p, cfg, tol, diags, min_n=thr)
            if not family or sum(pt.n for pt in family) <= thr:
                raise ComputationFailure("could not sample enough variety points to pass the threshold")
            point = direct_sum(family)
        if point.g != p.g:
            raise InputError("point and polynomial have different g")
        _on_variety(p, point, tol)
        if point.n <= thr:
            raise InputError(f"n = {point.n} does not exceed the threshold {thr}")
        cert = word_independence(point, d - 1, tol)
        if not cert.independent:
            diags.append("word independence fails at this point; ceiling need not equal mu")
        rep = c_pm(p, point, tol)
        n = point.n
        return VarietySignatureReport(_ceil_ratio(rep.c_minus, n), _ceil_ratio(rep.c_plus, n),
                                      "ceiling-at-point", "certified" if cert.independent else "uncertified",
                                      sm.mu_minus, sm.mu_plus, cert, None,
                                      ((n, rep.c_minus / n, rep.c_plus / n),), n, thr,
                                      rep.c_minus, rep.c_plus, tuple(diags), tol)

    if cfg.mode == "sampled":
        n = cfg.n or thr + 1
        filt = cfg.point_filter if isinstance(cfg.point_filter, str) or cfg.point_filter is None else None
        if filt is None and cfg.workers > 1:
            raise InputError("callable point filters need workers=1")
        jobs = [(p, n, cfg.seed, i, tol, cfg.point_filter) for i in range(cfg.samples)]
        if cfg.workers > 1:
            with ProcessPoolExecutor(max_workers=cfg.workers) as ex:
                results = list(ex.map(_sampled_one, jobs))
        else:
            results = [_sampled_one(j) for j in jobs]
        got = [r for r in results if r is not None]
        if not got:
            raise ComputationFailure("no variety point found within the sample budget")
        betas = tuple((nn, cm / nn, cp / nn) for _, nn, cm, cp in got)
        Cm = max(_ceil_ratio(cm, nn) for _, nn, cm, _ in got)
        Cp = max(_ceil_ratio(cp, nn) for _, nn, _, cp in got)
        if len(got) < cfg.samples:
            diags.append(f"{cfg.samples - len(got)} samples produced no usable point")
        return VarietySignatureReport(Cm, Cp, "sampled-lower-bound", "lower-bound", sm.mu_minus, sm.mu_plus,
                                      None, None, betas, n, thr, None, None, tuple(diags), tol)

    raise InputError(f"unknown mode {cfg.mode!r}")
