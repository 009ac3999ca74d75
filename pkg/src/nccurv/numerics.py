"""Dense real symmetric linear algebra with auditable tolerances.

Every threshold is relative: a quantity counts as zero when its magnitude is
at most ``tol * max(1, scale)`` where ``scale`` is the spectral radius (or
largest singular value) of the matrix at hand.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContractViolation, InputError

DEFAULT_TOL = 1e-8


@dataclass(frozen=True)
class Inertia:
    neg: int
    zero: int
    pos: int
    tol: float

    @property
    def n(self) -> int:
        return self.neg + self.zero + self.pos

    def as_tuple(self) -> tuple[int, int, int]:
        return (self.neg, self.zero, self.pos)

    def scaled(self, k: int) -> tuple[int, int, int]:
        return (k * self.neg, k * self.zero, k * self.pos)


def as_symmetric(A) -> np.ndarray:
    """Return ``A`` as a float array, symmetrized exactly."""
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise InputError(f"expected a square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise InputError("matrix has non-finite entries")
    return (A + A.T) / 2.0


def _scale(x: float) -> float:
    return max(1.0, float(x))


def jacobi_eig(A, max_sweeps: int = 60) -> tuple[np.ndarray, np.ndarray]:
    """Cyclic Jacobi eigensolver, run until the off-diagonal mass is at
    machine precision relative to the Frobenius norm."""
    A = as_symmetric(A).copy()
    n = A.shape[0]
    V = np.eye(n)
    if n < 2:
        return np.diag(A).copy(), V
    total = np.linalg.norm(A)
    if total == 0.0:
        return np.zeros(n), V
    eps = np.finfo(float).eps
    for _ in range(max_sweeps):
        off = np.sqrt(max(np.sum(A * A) - np.sum(np.diag(A) ** 2), 0.0))
        if off <= eps * total:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if abs(apq) <= eps * eps * total:
                    continue
                theta = (A[q, q] - A[p, p]) / (2.0 * apq)
                t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0)) if theta != 0 else 1.0
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                ap = A[:, p].copy()
                aq = A[:, q].copy()
                A[:, p] = c * ap - s * aq
                A[:, q] = s * ap + c * aq
                rp = A[p, :].copy()
                rq = A[q, :].copy()
                A[p, :] = c * rp - s * rq
                A[q, :] = s * rp + c * rq
                A[p, q] = A[q, p] = 0.0
                vp = V[:, p].copy()
                vq = V[:, q].copy()
                V[:, p] = c * vp - s * vq
                V[:, q] = s * vp + c * vq
    w = np.diag(A).copy()
    order = np.argsort(w, kind="stable")
    return w[order], V[:, order]


def sym_eig(A, method: str = "lapack") -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (ascending) and orthonormal eigenvectors of a symmetric matrix.

    ``method="jacobi"`` uses the in-house cyclic Jacobi solver; the default
    defers to LAPACK through :func:`numpy.linalg.eigh`.
    """
    A = as_symmetric(A)
    if A.shape[0] == 0:
        return np.zeros(0), np.zeros((0, 0))
    if method == "jacobi":
        return jacobi_eig(A)
    if method != "lapack":
        raise InputError(f"unknown eigensolver {method!r}")
    w, V = np.linalg.eigh(A)
    return w, V


def zero_threshold(w: np.ndarray, tol: float) -> float:
    radius = float(np.max(np.abs(w))) if w.size else 0.0
    return tol * _scale(radius)


def inertia(A, tol: float = DEFAULT_TOL) -> Inertia:
    """Count negative, zero and positive eigenvalues of ``A``."""
    if tol < 0:
        raise InputError("tol must be nonnegative")
    w, _ = sym_eig(A)
    return inertia_from_eigenvalues(w, tol)


def inertia_at_scale(A, scale: float, tol: float = DEFAULT_TOL) -> Inertia:
    """Inertia with the zero threshold taken relative to ``scale`` rather than
    to the spectral radius of ``A``, floored at the floating-point resolution
    of ``A``.

    Used when ``A`` is a small form plus a large positive semidefinite penalty:
    the penalty inflates the radius without changing which eigenvalues near
    zero are meaningful.
    """
    if tol < 0:
        raise InputError("tol must be nonnegative")
    w, _ = sym_eig(A)
    radius = float(np.max(np.abs(w))) if w.size else 0.0
    thr = max(tol * _scale(scale), 64 * np.finfo(float).eps * radius)
    neg = int(np.sum(w < -thr))
    pos = int(np.sum(w > thr))
    return Inertia(neg, int(w.size) - neg - pos, pos, tol)


def inertia_from_eigenvalues(w: np.ndarray, tol: float = DEFAULT_TOL) -> Inertia:
    thr = zero_threshold(w, tol)
    neg = int(np.sum(w < -thr))
    pos = int(np.sum(w > thr))
    return Inertia(neg, int(w.size) - neg - pos, pos, tol)


def spectral_subspaces(A, tol: float = DEFAULT_TOL):
    """Split an eigenbasis of ``A`` into (negative, positive, zero) blocks.

    Returns ``(w, U1, U2, U3)`` with ``A U_i = U_i D_i`` and
    ``D_1 < 0``, ``D_2 > 0``, ``D_3 = 0`` up to the tolerance.
    """
    w, U = sym_eig(A)
    thr = zero_threshold(w, tol)
    neg = w < -thr
    pos = w > thr
    zero = ~(neg | pos)
    return w, U[:, neg], U[:, pos], U[:, zero]


def _svd(M):
    M = np.asarray(M, dtype=float)
    if M.ndim != 2:
        raise InputError(f"expected a 2-d array, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise InputError("matrix has non-finite entries")
    if min(M.shape) == 0:
        return np.zeros((M.shape[0], 0)), np.zeros(0), np.eye(M.shape[1])
    U, s, Vt = np.linalg.svd(M, full_matrices=True)
    return U, s, Vt.T


def rank(M, tol: float = DEFAULT_TOL) -> int:
    _, s, _ = _svd(M)
    if s.size == 0:
        return 0
    return int(np.sum(s > tol * _scale(s[0])))


def nullspace_orthonormal(M, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Orthonormal columns spanning the numerical kernel of ``M``."""
    _, s, V = _svd(M)
    r = int(np.sum(s > tol * _scale(s[0]))) if s.size else 0
    return V[:, r:].copy()


def range_orthonormal(M, tol: float = DEFAULT_TOL) -> np.ndarray:
    U, s, _ = _svd(M)
    r = int(np.sum(s > tol * _scale(s[0]))) if s.size else 0
    return U[:, :r].copy()


def orthogonal_complement(B: np.ndarray, dim: int, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Orthonormal basis of the complement of span(B) inside R^dim."""
    B = np.asarray(B, dtype=float).reshape(dim, -1)
    if B.shape[1] == 0:
        return np.eye(dim)
    return nullspace_orthonormal(B.T, tol)


def principal_angles(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Principal angles (radians, ascending) between column spans."""
    qa = range_orthonormal(A)
    qb = range_orthonormal(B)
    if qa.shape[1] == 0 or qb.shape[1] == 0:
        return np.zeros(0)
    s = np.linalg.svd(qa.T @ qb, compute_uv=False)
    s = np.clip(s, -1.0, 1.0)
    # arcsin of the complementary projection is accurate for small angles
    k = min(qa.shape[1], qb.shape[1])
    if qa.shape[1] >= qb.shape[1]:
        resid = qb - qa @ (qa.T @ qb)
    else:
        resid = qa - qb @ (qb.T @ qa)
    sr = np.linalg.svd(resid, compute_uv=False)[:k]
    angles = np.arcsin(np.clip(np.sort(sr), 0.0, 1.0))
    return angles


def complementary_nonneg_subspace(A, U, tol: float = DEFAULT_TOL, rng=None) -> np.ndarray:
    """Complement of a maximal strictly negative subspace on which the form
    ``<Av, v>`` is nonnegative.

    ``U`` holds a basis of the negative subspace in its columns. The result
    is ``span{U2 M22 + U3 M32, U3 M33}`` in the eigenbasis split
    ``[U1 U2 U3]`` (negative, positive, zero); the mixing blocks are the
    identity and zero unless ``rng`` is given, in which case they are random
    (M22, M33 invertible).
    """
    A = as_symmetric(A)
    n = A.shape[0]
    U = np.asarray(U, dtype=float).reshape(n, -1)
    _, U1, U2, U3 = spectral_subspaces(A, tol)
    k1 = U1.shape[1]
    if U.shape[1] != k1:
        raise ContractViolation(
            f"negative subspace has dimension {U.shape[1]} but A has {k1} negative eigenvalues"
        )
    if k1:
        M11 = U1.T @ U
        if rank(M11, tol) < k1:
            raise ContractViolation("M11 is singular: U is not strictly negative for A")
    k2, k3 = U2.shape[1], U3.shape[1]
    if rng is None:
        M22, M32, M33 = np.eye(k2), np.zeros((k3, k2)), np.eye(k3)
    else:
        M22 = np.eye(k2) + 0.3 * rng.standard_normal((k2, k2)) / max(1, k2)
        M32 = rng.standard_normal((k3, k2))
        M33 = np.eye(k3) + 0.3 * rng.standard_normal((k3, k3)) / max(1, k3)
    V = np.hstack([U2 @ M22 + U3 @ M32, U3 @ M33]) if (k2 + k3) else np.zeros((n, 0))
    return V
