"""Middle matrix / border vector representation of nc quadratics.

A symmetric ``f(x)[h]`` homogeneous of degree two in ``h`` is written as
``V(x)[h]^T Z(x) V(x)[h]`` where ``V`` stacks the words ``h_j w(x)``
(see :func:`nccurv.mateval.border_entries` for the order).  Because every
border word starts with an ``h`` letter the representation is unique: the
monomial ``a h_i m h_j b`` can only come from the product of
``(h_i reverse(a))^T`` and ``h_j b``, so it contributes ``m`` to the entry at
row ``(i, reverse(a))`` and column ``(j, b)``.  For ``p = x^4``::

    monomial   row      col      entry
    2 hhxx     (h, 1)   (h, xx)  2
    2 hxhx     (h, 1)   (h, x)   2x
    2 hxxh     (h, 1)   (h, 1)   2xx
    2 xhhx     (h, x)   (h, x)   2
    2 xhxh     (h, x)   (h, 1)   2x
    2 xxhh     (h, xx)  (h, 1)   2

which gives ``Z = [[2x^2, 2x, 2], [2x, 2, 0], [2, 0, 0]]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import numerics
from .calculus import derivative, hessian
from .errors import InputError, InvariantViolation
from .freealg import H, K, NcPoly, Word, parse, reverse, word_to_string
from .mateval import Evaluator, alpha, border_entries, border_word

CONSTANT_TOL = 1e-12

Entry = tuple[int, Word]


def entry_label(e: Entry) -> str:
    j, w = e
    return word_to_string(((H, j),) + w)


class MiddleMatrix:
    """Square matrix of x-polynomials indexed by border entries.

    ``s`` is the longest border word; ``source_degree`` records the degree
    of the polynomial whose (relaxed) Hessian this represents, if any.
    Entries are stored sparsely: missing entries are zero.
    """

    def __init__(self, g: int, s: int, entries: dict[tuple[int, int], NcPoly] | None = None,
                 source_degree: int | None = None):
        self.g = g
        self.s = s
        self.border = border_entries(g, s) if s >= 0 else []
        self.index = {e: i for i, e in enumerate(self.border)}
        self.entries = {k: v for k, v in (entries or {}).items() if not v.is_zero()}
        self.source_degree = source_degree

    @property
    def size(self) -> int:
        return len(self.border)

    def __getitem__(self, rc: tuple[int, int]) -> NcPoly:
        return self.entries.get(rc, NcPoly.zero(self.g))

    def block_range(self, i: int) -> range:
        lo = self.g * alpha(self.g, i - 1)
        return range(lo, lo + self.g ** (i + 1))

    def block(self, i: int, j: int) -> list[list[NcPoly]]:
        """The block ``Z_ij`` between length-``i`` and length-``j`` border words."""
        return [[self[r, c] for c in self.block_range(j)] for r in self.block_range(i)]

    def __add__(self, other: "MiddleMatrix") -> "MiddleMatrix":
        if (other.g, other.s) != (self.g, self.s):
            raise InputError("middle matrices over different borders")
        acc = dict(self.entries)
        for k, v in other.entries.items():
            acc[k] = acc[k] + v if k in acc else v
        return MiddleMatrix(self.g, self.s, acc, self.source_degree)

    def scale(self, a: float) -> "MiddleMatrix":
        return MiddleMatrix(self.g, self.s, {k: v.scale(a) for k, v in self.entries.items()},
                            self.source_degree)

    def padded(self, s: int) -> "MiddleMatrix":
        """Same quadratic over a longer border (zero rows and columns added)."""
        if s < self.s:
            raise InputError("cannot shrink the border")
        big = MiddleMatrix(self.g, s, source_degree=self.source_degree)
        entries = {(big.index[self.border[r]], big.index[self.border[c]]): v
                   for (r, c), v in self.entries.items()}
        return MiddleMatrix(self.g, s, entries, self.source_degree)

    # -- numeric views ------------------------------------------------------

    def scalar(self) -> np.ndarray:
        """``Z(0)``: constant terms of every entry."""
        Z0 = np.zeros((self.size, self.size))
        for (r, c), v in self.entries.items():
            Z0[r, c] = v.constant_term()
        return Z0

    def evaluate(self, X, ev: Evaluator | None = None) -> np.ndarray:
        """``Z(X)`` as a block matrix with n x n blocks."""
        ev = ev or Evaluator(tuple(X))
        n = ev.n
        out = np.zeros((self.size * n, self.size * n))
        for (r, c), v in self.entries.items():
            out[r * n:(r + 1) * n, c * n:(c + 1) * n] = ev.poly(v)
        return out

    def nonconstant_size(self) -> float:
        return max((abs(c) for v in self.entries.values() for w, c in v.items() if w), default=0.0)

    def is_constant(self, tol: float = CONSTANT_TOL) -> bool:
        return self.nonconstant_size() < tol if tol > 0 else self.nonconstant_size() == 0.0

    # -- symbolic checks ----------------------------------------------------

    def reexpand(self) -> NcPoly:
        """``V^T Z V`` as a polynomial in (x, h)."""
        acc: dict[Word, float] = {}
        for (r, c), v in self.entries.items():
            left = reverse(border_word(self.border[r]))
            right = border_word(self.border[c])
            for w, coef in v.items():
                word = left + w + right
                acc[word] = acc.get(word, 0.0) + coef
        return NcPoly(self.g, acc)

    def structure_violations(self) -> list[str]:
        """Symmetry and anti-triangular degree pattern of a Hessian middle matrix."""
        out = []
        for (r, c), v in self.entries.items():
            if self[c, r] != v.transpose():
                out.append(f"Z[{r},{c}] != Z[{c},{r}]^T")
            i, j = len(self.border[r][1]), len(self.border[c][1])
            if v.degree > self.s - i - j:
                out.append(f"deg Z_{i}{j} entry ({r},{c}) = {v.degree} > {self.s - i - j}")
        return out

    def to_json(self) -> dict:
        blocks = {}
        for i in range(self.s + 1):
            for j in range(self.s + 1):
                blocks[f"{i},{j}"] = [[str(p) for p in row] for row in self.block(i, j)]
        return {
            "g": self.g,
            "s": self.s,
            "border": [entry_label(e) for e in self.border],
            "blocks": blocks,
        }

    @classmethod
    def from_json(cls, data: dict) -> "MiddleMatrix":
        g, s = int(data["g"]), int(data["s"])
        Z = cls(g, s)
        entries = {}
        for key, rows in data["blocks"].items():
            i, j = (int(t) for t in key.split(","))
            for a, r in enumerate(Z.block_range(i)):
                for b, c in enumerate(Z.block_range(j)):
                    p = parse(rows[a][b], g)
                    if not p.is_zero():
                        entries[(r, c)] = p
        return cls(g, s, entries)


def _split_quadratic(w: Word):
    pos = [i for i, (cls, _) in enumerate(w) if cls == H]
    p1, p2 = pos
    return w[:p1], w[p1][1], w[p1 + 1:p2], w[p2][1], w[p2 + 1:]


def extract_middle(f: NcPoly, s: int | None = None, source_degree: int | None = None,
                   require_symmetric: bool = True) -> MiddleMatrix:
    """Middle matrix of a quadratic ``f(x)[h]`` over the border of length ``s``.

    ``s`` defaults to the shortest border that fits every monomial.
    """
    if K in f.letters_used():
        raise InputError("middle matrix extraction expects letters x and h only")
    if not f.is_homogeneous_in(H, 2):
        raise InputError("expected a polynomial homogeneous of degree 2 in h")
    if require_symmetric and not f.is_symmetric(tol=1e-12 * max(1.0, f.max_abs_coeff())):
        raise InputError("quadratic is not symmetric; its middle matrix would not be")
    parts = [(_split_quadratic(w), c) for w, c in f.items()]
    need = max((max(len(a), len(b)) for (a, _, _, _, b), _ in parts), default=-1)
    if s is None:
        s = need
    elif s < need:
        raise InputError(f"border length {s} too short; need {need}")
    Z = MiddleMatrix(f.g, s, source_degree=source_degree)
    acc: dict[tuple[int, int], dict[Word, float]] = {}
    for (a, i, m, j, b), c in parts:
        rc = (Z.index[(i, reverse(a))], Z.index[(j, b)])
        d = acc.setdefault(rc, {})
        d[m] = d.get(m, 0.0) + c
    return MiddleMatrix(f.g, s, {rc: NcPoly(f.g, d) for rc, d in acc.items()}, source_degree)


def hessian_middle(p: NcPoly, s: int | None = None) -> MiddleMatrix:
    """Middle matrix of ``p''`` over ``V = col(V_0..V_{d-2})`` (or a longer border)."""
    _require_symmetric(p)
    d = p.degree
    return extract_middle(hessian(p), s=max(d - 2, -1) if s is None else s, source_degree=d)


def _require_symmetric(p: NcPoly):
    if p.letters_used() - {0}:
        raise InputError("expected a polynomial in x-letters only")
    if not p.is_symmetric():
        raise InputError("polynomial is not symmetric")


# -- relaxed Hessian ----------------------------------------------------------

def extended_border_poly(p: NcPoly) -> NcPoly:
    """``V~(x)[h]^T V~(x)[h] = sum_j sum_{|w| <= d-1} w^T h_j^2 w``."""
    d = p.degree
    acc = {}
    for e in border_entries(p.g, d - 1):
        bw = border_word(e)
        acc[reverse(bw) + bw] = 1.0
    return NcPoly(p.g, acc)


def relaxed_hessian(p: NcPoly, lam: float, delta: float) -> NcPoly:
    """``p'' + delta V~^T V~ + lam p'^T p'`` as a polynomial in (x, h)."""
    _require_symmetric(p)
    dp = derivative(p, H)
    return hessian(p) + extended_border_poly(p).scale(delta) + (dp.transpose() * dp).scale(lam)


def derivative_row(p: NcPoly) -> dict[Entry, NcPoly]:
    """Row ``R(x)`` over the extended border with ``p'(x)[h] = R(x) V~(x)[h]``."""
    acc: dict[Entry, dict[Word, float]] = {}
    for w, c in derivative(p, H).items():
        pos = next(i for i, (cls, _) in enumerate(w) if cls == H)
        a, j, b = w[:pos], w[pos][1], w[pos + 1:]
        d = acc.setdefault((j, b), {})
        d[a] = d.get(a, 0.0) + c
    return {e: NcPoly(p.g, d) for e, d in acc.items()}


def lambda_augmentation(p: NcPoly) -> MiddleMatrix:
    """Middle matrix of ``p'^T p'`` over the extended border: ``R^T R``."""
    d = p.degree
    aug = MiddleMatrix(p.g, d - 1, source_degree=d)
    R = {aug.index[e]: q for e, q in derivative_row(p).items()}
    entries = {}
    for r, qr in R.items():
        qrt = qr.transpose()
        for c, qc in R.items():
            entries[(r, c)] = qrt * qc
    return MiddleMatrix(p.g, d - 1, entries, d)


def relaxed_middle(p: NcPoly, lam: float, delta: float, Z: MiddleMatrix | None = None) -> MiddleMatrix:
    """``Z_{lam,delta}(x) = Z_lam(x) + delta I`` over the extended border."""
    _require_symmetric(p)
    d = p.degree
    if d < 1:
        return MiddleMatrix(p.g, d - 1, source_degree=d)
    base = (Z or hessian_middle(p)).padded(d - 1)
    out = base + lambda_augmentation(p).scale(lam) if lam != 0 else base
    if delta != 0:
        eye = {(r, r): NcPoly.constant(p.g, delta) for r in range(out.size)}
        out = out + MiddleMatrix(p.g, d - 1, eye, d)
    return out


def lambda_rank_one_check(p: NcPoly, tol: float = numerics.DEFAULT_TOL) -> dict:
    """Scalar part of the lambda term: ``r r^T`` with ``r = R(0)``.

    Confirms it has rank one and that ``r`` is nonzero on the top-length
    border block (where the padded scalar middle matrix vanishes).
    """
    d = p.degree
    aug = lambda_augmentation(p)
    W = aug.scalar()
    rk = numerics.rank(W, tol) if W.size else 0
    top = aug.block_range(d - 1)
    r = np.zeros(aug.size)
    for e, q in derivative_row(p).items():
        r[aug.index[e]] = q.constant_term()
    return {
        "rank": rk,
        "rank_one": rk == 1,
        "top_block_nonzero": bool(np.any(r[list(top)] != 0)),
        "outer_product_residual": float(np.max(np.abs(W - np.outer(r, r)), initial=0.0)),
    }


# -- scalar middle matrix and reports ----------------------------------------

@dataclass(frozen=True)
class ScalarMiddle:
    matrix: np.ndarray
    inertia: numerics.Inertia

    @property
    def mu_minus(self) -> int:
        return self.inertia.neg

    @property
    def mu_plus(self) -> int:
        return self.inertia.pos

    @property
    def mu_zero(self) -> int:
        return self.inertia.zero


def scalar_middle(Z: MiddleMatrix | NcPoly, tol: float = numerics.DEFAULT_TOL) -> ScalarMiddle:
    if isinstance(Z, NcPoly):
        Z = hessian_middle(Z)
    Z0 = Z.scalar()
    return ScalarMiddle(Z0, numerics.inertia(Z0, tol) if Z0.size else numerics.Inertia(0, 0, 0, tol))


@dataclass(frozen=True)
class DegreeBoundReport:
    d: int
    mu_minus: int
    mu_plus: int
    bound_minus: int
    bound_plus: int
    holds: bool
    tol: float

    def to_json(self) -> dict:
        return {
            "d": self.d,
            "mu_minus": self.mu_minus,
            "mu_plus": self.mu_plus,
            "bound_minus": self.bound_minus,
            "bound_plus": self.bound_plus,
            "bound_holds": self.holds,
            "tol": self.tol,
        }


def degree_bound_report(p: NcPoly, tol: float = numerics.DEFAULT_TOL) -> DegreeBoundReport:
    """Compare ``deg p`` with ``2 mu_pm(Z(0)) + 2``.

    Raises :class:`InvariantViolation` if the bound fails, which can only
    happen through a numerical or implementation fault.
    """
    _require_symmetric(p)
    d = p.degree
    sm = scalar_middle(hessian_middle(p), tol)
    bm, bp = 2 * sm.mu_minus + 2, 2 * sm.mu_plus + 2
    holds = d <= 1 or (d <= bm and d <= bp)
    if not holds:
        raise InvariantViolation(f"degree bound failed: d={d}, bounds=({bm}, {bp})")
    return DegreeBoundReport(d, sm.mu_minus, sm.mu_plus, bm, bp, holds, tol)


@dataclass(frozen=True)
class ConvexityReport:
    kind: str  # convex | concave | affine | indefinite
    degree: int
    mu_minus: int
    mu_plus: int
    z_constant: bool
    witness: dict = field(default_factory=dict)
    tol: float = numerics.DEFAULT_TOL

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "degree": self.degree,
            "mu_minus": self.mu_minus,
            "mu_plus": self.mu_plus,
            "z_constant": self.z_constant,
            "witness": self.witness,
            "tol": self.tol,
        }


def classify_convexity(p: NcPoly, tol: float = numerics.DEFAULT_TOL) -> ConvexityReport:
    """Convex iff ``mu_-(Z(0)) = 0`` (then ``Z`` is constant and ``d <= 2``);
    concave symmetrically.  Polynomials of degree at most one are ``affine``."""
    _require_symmetric(p)
    d = p.degree
    Z = hessian_middle(p)
    if d <= 1:
        return ConvexityReport("affine", d, 0, 0, True, {}, tol)
    Z0 = Z.scalar()
    w, U = numerics.sym_eig(Z0)
    inn = numerics.inertia_from_eigenvalues(w, tol)
    const = Z.is_constant()
    labels = [entry_label(e) for e in Z.border]
    if inn.neg == 0 or inn.pos == 0:
        kind = "convex" if inn.neg == 0 else "concave"
        if not const or d > 2:
            raise InvariantViolation(f"{kind} middle matrix but d={d}, Z constant={const}")
        return ConvexityReport(kind, d, inn.neg, inn.pos, const, {}, tol)
    witness = {
        "border": labels,
        "negative_direction": U[:, 0].tolist(),
        "negative_eigenvalue": float(w[0]),
        "positive_direction": U[:, -1].tolist(),
        "positive_eigenvalue": float(w[-1]),
    }
    return ConvexityReport("indefinite", d, inn.neg, inn.pos, const, witness, tol)


@dataclass(frozen=True)
class SdsCertificate:
    supported: bool
    sigma_minus: int
    sigma_plus: int
    plus_terms: tuple[NcPoly, ...] = ()
    minus_terms: tuple[NcPoly, ...] = ()
    residual: float = float("nan")
    reason: str = ""

    def to_json(self) -> dict:
        return {
            "supported": self.supported,
            "sigma_minus": self.sigma_minus,
            "sigma_plus": self.sigma_plus,
            "plus_terms": [str(f) for f in self.plus_terms],
            "minus_terms": [str(f) for f in self.minus_terms],
            "residual": None if math.isnan(self.residual) else self.residual,
            "reason": self.reason,
        }


def sds_certificate(p: NcPoly, tol: float = numerics.DEFAULT_TOL) -> SdsCertificate:
    """Sum-and-difference-of-squares decomposition of ``p''`` when ``Z`` is constant."""
    _require_symmetric(p)
    Z = hessian_middle(p)
    Z0 = Z.scalar()
    w, U = numerics.sym_eig(Z0)
    inn = numerics.inertia_from_eigenvalues(w, tol)
    if not Z.is_constant():
        return SdsCertificate(False, inn.neg, inn.pos,
                              reason="middle matrix is not constant; the polynomial congruence "
                                     "needed for an SDS is not constructed here")
    thr = numerics.zero_threshold(w, tol)
    words = [border_word(e) for e in Z.border]
    plus, minus = [], []
    for k in range(len(w)):
        if abs(w[k]) <= thr:
            continue
        f = NcPoly(p.g, {words[r]: math.sqrt(abs(w[k])) * U[r, k] for r in range(len(words))})
        (plus if w[k] > 0 else minus).append(f)
    target = hessian(p)
    acc = NcPoly.zero(p.g)
    for f in plus:
        acc = acc + f.transpose() * f
    for f in minus:
        acc = acc - f.transpose() * f
    residual = (acc - target).max_abs_coeff()
    return SdsCertificate(True, len(minus), len(plus), tuple(plus), tuple(minus), residual)
