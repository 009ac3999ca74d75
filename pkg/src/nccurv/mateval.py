"""Evaluation of nc polynomials on tuples of real symmetric matrices."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import InputError
from .freealg import CLASS_NAMES, H, K, X, NcPoly, Word, words_of_length

SYMMETRY_TOL = 1e-12


def _check_sym(M, name: str) -> np.ndarray:
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise InputError(f"{name} must be square, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise InputError(f"{name} has non-finite entries")
    if np.max(np.abs(M - M.T), initial=0.0) > SYMMETRY_TOL * max(1.0, np.max(np.abs(M), initial=0.0)):
        raise InputError(f"{name} is not symmetric")
    return (M + M.T) / 2.0


def _as_tuple(Ms, name: str) -> tuple[np.ndarray, ...]:
    if isinstance(Ms, np.ndarray) and Ms.ndim == 2:
        Ms = [Ms]
    return tuple(_check_sym(M, f"{name}[{j}]") for j, M in enumerate(Ms))


@dataclass(frozen=True, eq=False)
class MatrixPoint:
    """A g-tuple of symmetric n x n matrices, optionally with a vector ``v``."""

    X: tuple[np.ndarray, ...]
    v: np.ndarray | None = None

    def __post_init__(self):
        Xs = _as_tuple(self.X, "X")
        if not Xs:
            raise InputError("a point needs at least one matrix")
        n = Xs[0].shape[0]
        if any(M.shape != (n, n) for M in Xs):
            raise InputError("all matrices of a point must have the same size")
        object.__setattr__(self, "X", Xs)
        if self.v is not None:
            v = np.asarray(self.v, dtype=float).reshape(-1)
            if v.shape != (n,):
                raise InputError(f"v must have length {n}")
            if not np.all(np.isfinite(v)):
                raise InputError("v has non-finite entries")
            object.__setattr__(self, "v", v)

    @property
    def g(self) -> int:
        return len(self.X)

    @property
    def n(self) -> int:
        return self.X[0].shape[0]

    def require_v(self) -> np.ndarray:
        if self.v is None or not np.any(self.v):
            raise InputError("this computation needs a nonzero vector v")
        return self.v

    def with_v(self, v) -> "MatrixPoint":
        return MatrixPoint(self.X, v)

    def to_json(self) -> dict:
        out = {"g": self.g, "n": self.n, "X": [M.tolist() for M in self.X]}
        if self.v is not None:
            out["v"] = self.v.tolist()
        return out

    @classmethod
    def from_json(cls, data: dict) -> "MatrixPoint":
        try:
            g, n = int(data["g"]), int(data["n"])
            Xs = [np.asarray(M, dtype=float) for M in data["X"]]
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"malformed point: {exc}") from exc
        if len(Xs) != g:
            raise InputError(f"point declares g={g} but has {len(Xs)} matrices")
        if any(M.shape != (n, n) for M in Xs):
            raise InputError(f"point declares n={n} but matrix shapes differ")
        return cls(tuple(Xs), data.get("v"))


def load_point(path) -> MatrixPoint:
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read point file {path}: {exc}") from exc
    return MatrixPoint.from_json(data)


def direct_sum(points) -> MatrixPoint:
    """Block-diagonal ``X`` with stacked ``v``; repetitions allowed."""
    points = list(points)
    if not points:
        raise InputError("direct sum of an empty family")
    g = points[0].g
    if any(pt.g != g for pt in points):
        raise InputError("direct sum needs points with the same g")
    N = sum(pt.n for pt in points)
    Xs = []
    for j in range(g):
        M = np.zeros((N, N))
        off = 0
        for pt in points:
            M[off:off + pt.n, off:off + pt.n] = pt.X[j]
            off += pt.n
        Xs.append(M)
    if all(pt.v is not None for pt in points):
        v = np.concatenate([pt.v for pt in points])
    else:
        v = None
    return MatrixPoint(tuple(Xs), v)


class Evaluator:
    """Memoized evaluation of words at fixed letter assignments.

    ``X``, ``H`` and ``K`` are tuples of n x n matrices (``H`` and ``K``
    optional).  Word matrices and word-times-vector products are cached
    per instance, so one evaluator should serve one point.
    """

    def __init__(self, X, H=None, K=None):
        self.mats = {CLASS_NAMES.index("x"): tuple(X)}
        if H is not None:
            self.mats[1] = tuple(H)
        if K is not None:
            self.mats[2] = tuple(K)
        self.n = self.mats[0][0].shape[0]
        self._wm: dict[Word, np.ndarray] = {}
        self._wv: dict[tuple[Word, int], np.ndarray] = {}
        self._vecs: list[np.ndarray] = []

    def letter(self, a) -> np.ndarray:
        cls, i = a
        try:
            return self.mats[cls][i - 1]
        except KeyError:
            raise InputError(f"no assignment for letter class {CLASS_NAMES[cls]!r}") from None
        except IndexError:
            raise InputError(f"no assignment for letter {CLASS_NAMES[cls]}{i}") from None

    def word(self, w: Word) -> np.ndarray:
        if not w:
            return np.eye(self.n)
        M = self._wm.get(w)
        if M is None:
            M = self.letter(w[0]) if len(w) == 1 else self.letter(w[0]) @ self.word(w[1:])
            self._wm[w] = M
        return M

    def _vec_id(self, v: np.ndarray) -> int:
        for i, u in enumerate(self._vecs):
            if u is v:
                return i
        self._vecs.append(v)
        return len(self._vecs) - 1

    def word_vec(self, w: Word, v: np.ndarray) -> np.ndarray:
        """``w(X) v`` computed right to left with suffix reuse."""
        key = (w, self._vec_id(v))
        out = self._wv.get(key)
        if out is None:
            out = v if not w else self.letter(w[0]) @ self.word_vec(w[1:], v)
            self._wv[key] = out
        return out

    def poly(self, p: NcPoly) -> np.ndarray:
        out = np.zeros((self.n, self.n))
        for w, c in p.items():
            out += c * self.word(w)
        return out


def evaluate(p: NcPoly, X, H=None, K=None) -> np.ndarray:
    """``p(X)[H][K]`` as an n x n matrix; the constant term becomes ``c I``."""
    Xs = _as_tuple(X, "X")
    need = p.letters_used()
    if H is None and 1 in need:
        raise InputError("polynomial uses h-letters but no H was given")
    if K is None and 2 in need:
        raise InputError("polynomial uses k-letters but no K was given")
    Hs = _as_tuple(H, "H") if H is not None else None
    Ks = _as_tuple(K, "K") if K is not None else None
    n = Xs[0].shape[0]
    for Ms in (Xs, Hs, Ks):
        if Ms is not None and any(M.shape != (n, n) for M in Ms):
            raise InputError("dimension mismatch between letter assignments")
    return Evaluator(Xs, Hs, Ks).poly(p)


# -- border vectors -----------------------------------------------------------

def border_entries(g: int, s: int) -> list[tuple[int, Word]]:
    """Entries ``h_j w`` of the border vector ``col(V_0, ..., V_s)``.

    Ordered by word length, then by ``j``, then graded-lex in ``w``.
    """
    out = []
    for k in range(s + 1):
        ws = words_of_length(g, k)
        for j in range(1, g + 1):
            out.extend((j, w) for w in ws)
    return out


def border_word(entry: tuple[int, Word]) -> Word:
    j, w = entry
    return ((H, j),) + w


def alpha(g: int, t: int) -> int:
    """Number of words of length at most ``t`` in ``g`` letters."""
    if t < 0:
        return 0
    return sum(g ** i for i in range(t + 1))


def border_vector(X, Hs, v, s: int, ev: Evaluator | None = None) -> np.ndarray:
    """Stacked ``R_s(H) = col(H_j w(X) v)`` over the border entries."""
    Xs = _as_tuple(X, "X")
    Hs = _as_tuple(Hs, "H")
    v = np.asarray(v, dtype=float)
    n = Xs[0].shape[0]
    if len(Hs) != len(Xs) or any(M.shape != (n, n) for M in Hs) or v.shape != (n,):
        raise InputError("dimension mismatch")
    ev = ev or Evaluator(Xs)
    parts = [Hs[j - 1] @ ev.word_vec(w, v) for j, w in border_entries(len(Xs), s)]
    return np.concatenate(parts) if parts else np.zeros(0)


# -- symmetric tuple basis ----------------------------------------------------

@dataclass(frozen=True, eq=False)
class SymTupleBasis:
    """Ordered family of g-tuples of symmetric matrices, stored as an array
    of shape ``(dim, g, n, n)``."""

    elements: np.ndarray
    labels: tuple = ()

    @property
    def dim(self) -> int:
        return self.elements.shape[0]

    @property
    def g(self) -> int:
        return self.elements.shape[1]

    @property
    def n(self) -> int:
        return self.elements.shape[2]

    def combine(self, coords: np.ndarray) -> "SymTupleBasis":
        """Basis whose elements are the columns of ``coords`` in this basis."""
        coords = np.asarray(coords, dtype=float).reshape(self.dim, -1)
        return SymTupleBasis(np.einsum("ab,ajkl->bjkl", coords, self.elements))

    def element(self, a: int) -> tuple[np.ndarray, ...]:
        return tuple(self.elements[a])

    def coordinates(self, Hs) -> np.ndarray:
        """Trace inner products of ``Hs`` with every element."""
        Hs = np.asarray(Hs, dtype=float).reshape(self.g, self.n, self.n)
        return np.einsum("ajkl,jkl->a", self.elements, Hs)

    def gram(self) -> np.ndarray:
        E = self.elements.reshape(self.dim, -1)
        return E @ E.T


def trace_inner(Hs, Ks) -> float:
    """``<H, K> = sum_j trace(K_j H_j)``."""
    return float(sum(np.trace(Kj @ Hj) for Hj, Kj in zip(Hs, Ks)))


def sym_tuple_basis(g: int, n: int) -> SymTupleBasis:
    """Normalized symmetrized elementary matrices ``S_ik`` in each slot.

    Order: slot ``j`` major, then ``(i, k)`` with ``i <= k`` row-major.
    """
    if g < 1 or n < 1:
        raise InputError("g and n must be positive")
    N = g * n * (n + 1) // 2
    E = np.zeros((N, g, n, n))
    labels = []
    a = 0
    r2 = 1.0 / math.sqrt(2.0)
    for j in range(g):
        for i in range(n):
            for k in range(i, n):
                if i == k:
                    E[a, j, i, i] = 1.0
                else:
                    E[a, j, i, k] = E[a, j, k, i] = r2
                labels.append((j + 1, i + 1, k + 1))
                a += 1
    return SymTupleBasis(E, tuple(labels))


def border_blocks(point: MatrixPoint, basis: SymTupleBasis, s: int, ev: Evaluator | None = None):
    """For each border entry ``(j, w)`` the n x dim matrix with columns
    ``H_a,j w(X) v`` over basis elements ``H_a``.

    Returns ``(entries, blocks)`` where ``blocks`` maps entry -> matrix.
    """
    v = point.require_v()
    ev = ev or Evaluator(point.X)
    entries = border_entries(point.g, s)
    blocks = {}
    for j, w in entries:
        u = ev.word_vec(w, v)
        blocks[(j, w)] = np.einsum("akl,l->ka", basis.elements[:, j - 1], u)
    return entries, blocks


def border_map(point: MatrixPoint, basis: SymTupleBasis, s: int, ev: Evaluator | None = None) -> np.ndarray:
    """Matrix of ``H -> R_s(H)`` in basis coordinates (``n g alpha_s x dim``)."""
    entries, blocks = border_blocks(point, basis, s, ev)
    if not entries:
        return np.zeros((0, basis.dim))
    return np.vstack([blocks[e] for e in entries])
