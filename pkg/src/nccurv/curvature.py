"""Curvature of an nc variety at a point ``(X, v)``.

All subspaces of the direction space of symmetric g-tuples are handled in
coordinates over :func:`nccurv.mateval.sym_tuple_basis`, which is
orthonormal for the trace inner product, so plain Euclidean linear algebra
on coordinate vectors is faithful.

The three quadratic forms used throughout are, for directions ``H``:

* ``A``: ``<p''(X)[H] v, v>``,
* ``Q``: ``|p'(X)[H] v|^2`` (Gram of the derivative map ``P``),
* ``E``: ``|V~(X)[H] v|^2`` (Gram of the extended border map).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import numerics
from .calculus import derivative, hessian, polarize
from .errors import InputError
from .freealg import H, K, NcPoly, reverse
from .mateval import Evaluator, MatrixPoint, SymTupleBasis, border_entries, direct_sum, sym_tuple_basis
from .middlematrix import hessian_middle

__all__ = [
    "TangentSpace",
    "CurvatureReport",
    "DecompositionReport",
    "RelaxedSearchConfig",
    "RelaxedSignature",
    "PointForms",
    "clamped_tangent",
    "full_rank_point",
    "form_gram",
    "c_pm",
    "e_pm",
    "relaxed_gram",
    "relaxed_signature",
    "subspace_decomposition",
    "direct_sum",
    "positivity_membership",
]


class PointForms:
    """Cached linear maps and Gram matrices at one point.

    ``Y(j, w)`` is the n x dim matrix whose column ``a`` is
    ``H_{a,j} w(X) v`` for the a-th basis tuple.
    """

    def __init__(self, point: MatrixPoint, basis: SymTupleBasis | None = None):
        self.point = point
        self.v = point.require_v()
        self.basis = basis or sym_tuple_basis(point.g, point.n)
        if (self.basis.g, self.basis.n) != (point.g, point.n):
            raise InputError("basis does not match the point's g and n")
        self.ev = Evaluator(point.X)
        self._Y: dict = {}

    @property
    def dim(self) -> int:
        return self.basis.dim

    def Y(self, j: int, w) -> np.ndarray:
        key = (j, w)
        out = self._Y.get(key)
        if out is None:
            u = self.ev.word_vec(w, self.v)
            out = np.einsum("akl,l->ka", self.basis.elements[:, j - 1], u)
            self._Y[key] = out
        return out

    def border_map(self, s: int) -> np.ndarray:
        """``H -> col(H_j w(X) v)`` over the border of length ``s``."""
        ents = border_entries(self.point.g, s)
        if not ents:
            return np.zeros((0, self.dim))
        return np.vstack([self.Y(j, w) for j, w in ents])

    def derivative_map(self, p: NcPoly) -> np.ndarray:
        """``H -> p'(X)[H] v`` as an n x dim matrix."""
        P = np.zeros((self.point.n, self.dim))
        for w, c in derivative(p, H).items():
            pos = next(i for i, (cls, _) in enumerate(w) if cls == H)
            P += c * (self.ev.word(w[:pos]) @ self.Y(w[pos][1], w[pos + 1:]))
        return P

    def gram(self, f: NcPoly) -> np.ndarray:
        """``G_ab = <B(H_a, H_b) v, v>`` for the polarization ``B`` of ``f``."""
        if K in f.letters_used() or not f.is_homogeneous_in(H, 2):
            raise InputError("form_gram expects a quadratic in h (letters x and h only)")
        G = np.zeros((self.dim, self.dim))
        for w, c in polarize(f).items():
            # exactly one h and one k: a l1 m l2 b
            pos = [i for i, (cls, _) in enumerate(w) if cls != 0]
            p1, p2 = pos
            a, m, b = w[:p1], w[p1 + 1:p2], w[p2 + 1:]
            M = self.Y(w[p1][1], reverse(a)).T @ self.ev.word(m) @ self.Y(w[p2][1], b)
            # h fills the first argument, k the second
            G += c * (M if w[p1][0] == H else M.T)
        return (G + G.T) / 2.0


def _forms(point: MatrixPoint, forms: PointForms | None) -> PointForms:
    if forms is not None:
        return forms
    if not isinstance(point, MatrixPoint):
        raise InputError("expected a MatrixPoint")
    return PointForms(point)


def _check_p(p: NcPoly, point: MatrixPoint):
    if p.g != point.g:
        raise InputError(f"polynomial has g={p.g} but point has g={point.g}")
    if p.letters_used() - {0}:
        raise InputError("expected a polynomial in x-letters only")


# -- tangent plane and full rank ---------------------------------------------

@dataclass(frozen=True, eq=False)
class TangentSpace:
    point: MatrixPoint
    coords: np.ndarray  # dim_full x dim_T, orthonormal columns
    full_dim: int
    residual: float
    tol: float

    @property
    def dim(self) -> int:
        return self.coords.shape[1]

    @property
    def codim(self) -> int:
        return self.full_dim - self.dim

    def elements(self, basis: SymTupleBasis | None = None) -> SymTupleBasis:
        basis = basis or sym_tuple_basis(self.point.g, self.point.n)
        return basis.combine(self.coords)

    def to_json(self) -> dict:
        return {
            "dim": self.dim,
            "codim": self.codim,
            "full_dim": self.full_dim,
            "residual": self.residual,
            "tol": self.tol,
        }


def clamped_tangent(p: NcPoly, point: MatrixPoint, tol: float = numerics.DEFAULT_TOL,
                    forms: PointForms | None = None) -> TangentSpace:
    """Orthonormal basis of ``{H : p'(X)[H] v = 0}``."""
    _check_p(p, point)
    F = _forms(point, forms)
    P = F.derivative_map(p)
    T = numerics.nullspace_orthonormal(P, tol)
    resid = float(np.max(np.abs(P @ T), initial=0.0))
    return TangentSpace(point, T, F.dim, resid, tol)


def full_rank_point(p: NcPoly, point: MatrixPoint, tol: float = numerics.DEFAULT_TOL,
                    forms: PointForms | None = None) -> bool:
    _check_p(p, point)
    F = _forms(point, forms)
    return numerics.rank(F.derivative_map(p), tol) == point.n


# -- quadratic forms -----------------------------------------------------------

def form_gram(f: NcPoly, point: MatrixPoint, basis=None, forms: PointForms | None = None) -> np.ndarray:
    """Gram matrix of ``H -> <f(X)[H] v, v>``.

    ``basis`` is either ``None`` (the full symmetric tuple basis), a
    coordinate matrix with orthonormal columns, or a :class:`TangentSpace`.
    """
    F = _forms(point, forms)
    if f.g != point.g:
        raise InputError(f"form has g={f.g} but point has g={point.g}")
    G = F.gram(f)
    T = _coords(basis, F.dim)
    return G if T is None else T.T @ G @ T


def _coords(basis, dim: int):
    if basis is None:
        return None
    if isinstance(basis, TangentSpace):
        return basis.coords
    T = np.asarray(basis, dtype=float)
    if T.ndim != 2 or T.shape[0] != dim:
        raise InputError(f"subspace coordinates must have {dim} rows")
    return T


@dataclass(frozen=True)
class CurvatureReport:
    c_minus: int
    c_plus: int
    full_rank: bool
    tangent_dim: int
    form_zero_dim: int
    n: int
    tol: float

    def to_json(self) -> dict:
        return {
            "c_minus": self.c_minus,
            "c_plus": self.c_plus,
            "full_rank": self.full_rank,
            "tangent_dim": self.tangent_dim,
            "form_zero_dim": self.form_zero_dim,
            "n": self.n,
            "tol": self.tol,
        }


def c_pm(p: NcPoly, point: MatrixPoint, tol: float = numerics.DEFAULT_TOL,
         forms: PointForms | None = None) -> CurvatureReport:
    """Signature of the Hessian form restricted to the clamped tangent plane.

    ``c_plus`` counts directions where ``<p''(X)[H] v, v>`` is positive.
    """
    _check_p(p, point)
    F = _forms(point, forms)
    P = F.derivative_map(p)
    T = numerics.nullspace_orthonormal(P, tol)
    full = numerics.rank(P, tol) == point.n
    G = T.T @ F.gram(hessian(p)) @ T
    inn = numerics.inertia(G, tol) if G.size else numerics.Inertia(0, 0, 0, tol)
    return CurvatureReport(inn.neg, inn.pos, full, T.shape[1], inn.zero, point.n, tol)


def e_pm(f: NcPoly, point: MatrixPoint, subspace=None, tol: float = numerics.DEFAULT_TOL,
         forms: PointForms | None = None) -> numerics.Inertia:
    """``(e_-, e_0, e_+)`` of ``<f(X)[H] v, v>`` on ``subspace`` (default: everything)."""
    G = form_gram(f, point, subspace, forms)
    if G.size == 0:
        return numerics.Inertia(0, 0, 0, tol)
    return numerics.inertia(G, tol)


def relaxed_gram(p: NcPoly, point: MatrixPoint, lam: float, delta: float,
                 forms: PointForms | None = None, parts=None) -> np.ndarray:
    """Gram over all directions of ``p'' + delta V~^T V~ + lam p'^T p'``."""
    A, Q, E = parts if parts is not None else relaxed_parts(p, point, forms)
    return A + lam * Q + delta * E


def relaxed_parts(p: NcPoly, point: MatrixPoint, forms: PointForms | None = None):
    """The Gram matrices ``(A, Q, E)`` over the full direction space."""
    _check_p(p, point)
    F = _forms(point, forms)
    A = F.gram(hessian(p))
    P = F.derivative_map(p)
    R = F.border_map(p.degree - 1)
    return A, P.T @ P, R.T @ R


def hessian_gram_via_middle(p: NcPoly, point: MatrixPoint, forms: PointForms | None = None) -> np.ndarray:
    """``A`` computed as ``R^T Z(X) R`` with ``R`` the border map (independent route)."""
    _check_p(p, point)
    F = _forms(point, forms)
    Z = hessian_middle(p)
    if Z.size == 0:
        return np.zeros((F.dim, F.dim))
    R = F.border_map(Z.s)
    return R.T @ Z.evaluate(point.X, F.ev) @ R


# -- relaxed signature search ---------------------------------------------------

@dataclass(frozen=True)
class RelaxedSearchConfig:
    delta_grid: tuple = tuple(10.0 ** -k for k in range(2, 9))
    lambda_grid: tuple = tuple(10.0 ** k for k in range(1, 9))
    negative: bool = False

    def __post_init__(self):
        if not self.delta_grid or len(self.lambda_grid) < 2:
            raise InputError("delta grid must be nonempty and lambda grid needs two values")
        if any(x <= 0 for x in self.delta_grid + self.lambda_grid):
            raise InputError("grid values are magnitudes and must be positive")


@dataclass(frozen=True)
class RelaxedSignature:
    delta: float | None
    lam: float | None
    e_minus: int | None
    e_zero: int | None
    e_plus: int | None
    c_minus: int
    c_plus: int
    matched: bool
    negative: bool
    diagnostics: tuple = ()
    tol: float = numerics.DEFAULT_TOL

    def to_json(self) -> dict:
        return {
            "delta": self.delta,
            "lambda": self.lam,
            "e_minus": self.e_minus,
            "e_zero": self.e_zero,
            "e_plus": self.e_plus,
            "c_minus": self.c_minus,
            "c_plus": self.c_plus,
            "matched": self.matched,
            "variant": "negative" if self.negative else "positive",
            "tol": self.tol,
        }


def relaxed_signature(p: NcPoly, point: MatrixPoint, cfg: RelaxedSearchConfig | None = None,
                      tol: float = numerics.DEFAULT_TOL, forms: PointForms | None = None) -> RelaxedSignature:
    """Search decade grids for ``(delta, lambda)`` at which the relaxed form's
    inertia over all directions is stable from ``lambda`` to the next grid value
    and its negative count equals ``c_-`` (positive count equals ``c_+`` in the
    negative variant, where both parameters are negated).

    ``delta`` is the outer loop: for each ``delta`` the ``lambda`` grid is
    scanned.  A stable inertia that does not match is recorded in the
    diagnostics and the scan moves on.
    """
    cfg = cfg or RelaxedSearchConfig()
    F = _forms(point, forms)
    cur = c_pm(p, point, tol, F)
    parts = relaxed_parts(p, point, F)
    sign = -1.0 if cfg.negative else 1.0
    target = cur.c_plus if cfg.negative else cur.c_minus
    diags = []
    A, _, E = parts
    for dlt in cfg.delta_grid:
        prev = None
        # lambda * Q is semidefinite and only inflates the radius; measure zero against the rest
        scale = float(np.linalg.norm(A + sign * dlt * E, 2)) if A.size else 0.0
        for lam in cfg.lambda_grid:
            G = relaxed_gram(p, point, sign * lam, sign * dlt, parts=parts)
            inn = numerics.inertia_at_scale(G, scale, tol)
            if prev is not None and prev[1].as_tuple() == inn.as_tuple():
                got = inn.pos if cfg.negative else inn.neg
                if got == target:
                    return RelaxedSignature(sign * dlt, sign * prev[0], inn.neg, inn.zero, inn.pos,
                                            cur.c_minus, cur.c_plus, True, cfg.negative,
                                            tuple(diags), tol)
                diags.append(f"stable but unequal at delta={sign * dlt:g}, lambda={sign * prev[0]:g}: "
                             f"inertia {inn.as_tuple()}, target {target}")
            prev = (lam, inn)
    diags.append("grid exhausted")
    return RelaxedSignature(None, None, None, None, None, cur.c_minus, cur.c_plus, False,
                            cfg.negative, tuple(diags), tol)


# -- decomposition ---------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class DecompositionReport:
    dim_N: int
    dim_N_perp: int
    dim_M: int
    dim_L: int
    dim_M_minus: int
    dim_M_plus: int
    A: np.ndarray  # Gram matrices in an orthonormal basis of N-perp
    Q: np.ndarray
    E: np.ndarray
    bases: dict = field(default_factory=dict)
    checks: dict = field(default_factory=dict)
    tol: float = numerics.DEFAULT_TOL

    def to_json(self, with_grams: bool = False) -> dict:
        out = {
            "dim_N": self.dim_N,
            "dim_N_perp": self.dim_N_perp,
            "dim_M": self.dim_M,
            "dim_L": self.dim_L,
            "dim_M_minus": self.dim_M_minus,
            "dim_M_plus": self.dim_M_plus,
            "checks": self.checks,
            "tol": self.tol,
        }
        if with_grams:
            out.update(A=self.A.tolist(), Q=self.Q.tolist(), E=self.E.tolist())
        return out


def _min_eig(G) -> float:
    return float(np.linalg.eigvalsh(G)[0]) if G.size else float("inf")


def subspace_decomposition(p: NcPoly, point: MatrixPoint, tol: float = numerics.DEFAULT_TOL,
                           forms: PointForms | None = None) -> DecompositionReport:
    """Split the direction space as ``N + M + L`` and ``M = M_- + M_+``.

    ``N`` is the kernel of the extended border map, ``M`` the part of the
    tangent plane orthogonal to ``N`` and ``L`` the rest of ``N``-perp.
    ``M_-`` is spanned by the negative eigenvectors of ``A`` compressed to
    ``M``; ``M_+`` is its orthogonal complement in ``M`` (zero directions
    of ``A`` included).
    """
    _check_p(p, point)
    F = _forms(point, forms)
    dim = F.dim
    A, Q, E = relaxed_parts(p, point, F)
    Rmap = F.border_map(p.degree - 1) if p.degree >= 1 else np.zeros((0, dim))
    Nb = numerics.nullspace_orthonormal(Rmap, tol) if Rmap.size else np.eye(dim)
    Np = numerics.orthogonal_complement(Nb, dim, tol)
    P = F.derivative_map(p)
    if Np.shape[1]:
        Mc = numerics.nullspace_orthonormal(P @ Np, tol)
        Lc = numerics.orthogonal_complement(Mc, Np.shape[1], tol)
    else:
        Mc = Lc = np.zeros((0, 0))
    Mb, Lb = Np @ Mc, Np @ Lc
    AM = Mb.T @ A @ Mb
    if AM.size:
        _, U1, _, _ = numerics.spectral_subspaces(AM, tol)
    else:
        U1 = np.zeros((0, 0))
    Mm = Mb @ U1 if U1.size else np.zeros((dim, 0))
    Mp = Mb @ numerics.orthogonal_complement(U1, Mb.shape[1], tol) if Mb.shape[1] else np.zeros((dim, 0))
    An, Qn, En = Np.T @ A @ Np, Np.T @ Q @ Np, Np.T @ E @ Np
    scale = max(1.0, float(np.max(np.abs(Q), initial=0.0)))
    checks = {
        "dims_sum": Nb.shape[1] + Mb.shape[1] + Lb.shape[1] == dim,
        "Q_zero_on_M": float(np.max(np.abs(Mb.T @ Q @ Mb), initial=0.0)) <= tol * scale,
        "Q_pos_def_on_L": Lb.shape[1] == 0 or _min_eig(Lb.T @ Q @ Lb) > tol * scale,
        "E_pos_def_on_N_perp": Np.shape[1] == 0 or _min_eig(En) > tol * max(1.0, float(np.max(np.abs(E), initial=0.0))),
        "A_zero_on_N": float(np.max(np.abs(A @ Nb), initial=0.0)) <= tol * max(1.0, float(np.max(np.abs(A), initial=0.0))),
    }
    bases = {"N": Nb, "N_perp": Np, "M": Mb, "L": Lb, "M_minus": Mm, "M_plus": Mp}
    return DecompositionReport(Nb.shape[1], Np.shape[1], Mb.shape[1], Lb.shape[1], Mm.shape[1],
                               Mp.shape[1], An, Qn, En, bases, checks, tol)


# -- positivity domain -----------------------------------------------------------

@dataclass(frozen=True, eq=False)
class MembershipReport:
    label: str  # interior | boundary | exterior | disconnected-positive
    min_eigenvalue: float
    kernel: np.ndarray | None
    path_steps: int
    path_failure_t: float | None
    tol: float

    def to_json(self) -> dict:
        return {
            "label": self.label,
            "min_eigenvalue": self.min_eigenvalue,
            "kernel": None if self.kernel is None else self.kernel.T.tolist(),
            "path_steps": self.path_steps,
            "path_failure_t": self.path_failure_t,
            "semidecision": True,
            "tol": self.tol,
        }


def positivity_membership(p: NcPoly, X, path_steps: int = 64, tol: float = numerics.DEFAULT_TOL) -> MembershipReport:
    """Locate ``X`` relative to the component of 0 where ``p`` is positive definite.

    The path test samples ``p(tX)`` at ``path_steps`` evenly spaced ``t`` in
    ``[0, 1]``; it is a sampled check, not a proof of connectivity.
    """
    from .mateval import evaluate

    if path_steps < 2:
        raise InputError("path_steps must be at least 2")
    if not p.is_symmetric():
        raise InputError("polynomial is not symmetric")
    if p.constant_term() <= 0:
        raise InputError("p(0) is not positive definite")
    Xs = tuple(np.asarray(M, dtype=float) for M in (X.X if isinstance(X, MatrixPoint) else X))
    w, U = numerics.sym_eig(evaluate(p, Xs))
    thr = numerics.zero_threshold(w, tol)
    lo = float(w[0])
    if abs(lo) <= thr:
        return MembershipReport("boundary", lo, U[:, np.abs(w) <= thr], path_steps, None, tol)
    if lo < 0:
        return MembershipReport("exterior", lo, None, path_steps, None, tol)
    for t in np.linspace(0.0, 1.0, path_steps):
        wt, _ = numerics.sym_eig(evaluate(p, tuple(t * M for M in Xs)))
        if wt[0] <= numerics.zero_threshold(wt, tol):
            return MembershipReport("disconnected-positive", lo, None, path_steps, float(t), tol)
    return MembershipReport("interior", lo, None, path_steps, None, tol)
