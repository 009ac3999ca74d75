"""Directional derivatives and Hessians of nc polynomials."""

from __future__ import annotations

from .errors import InputError
from .freealg import H, K, X, NcPoly, Word


def _replace_one(w: Word, src: int, dst: int):
    """Yield every word obtained from ``w`` by turning one ``src``-class
    letter into the ``dst``-class letter with the same index."""
    for pos, (cls, i) in enumerate(w):
        if cls == src:
            yield w[:pos] + ((dst, i),) + w[pos + 1:], 1.0


def derivative(p: NcPoly, direction: int = H) -> NcPoly:
    """One differentiation step: the coefficient of ``t`` in ``p(x + t d)``.

    Only x-letters are differentiated; letters of other classes already
    present in ``p`` are constants.
    """
    return p.map_words(lambda w: _replace_one(w, X, direction))


def directional_derivative(p: NcPoly, order: int = 1) -> NcPoly:
    """``p^(order)(x)[h]`` by iterating the first-derivative recipe."""
    if order < 1:
        raise InputError("order must be at least 1")
    out = p
    for _ in range(order):
        out = derivative(out, H)
    return out


def hessian(p: NcPoly) -> NcPoly:
    return directional_derivative(p, 2)


def mixed_hessian(p: NcPoly) -> NcPoly:
    """``p''(x)[h][k]``: the derivative of ``p'(x)[h]`` in direction ``k``."""
    return derivative(derivative(p, H), K)


def polarize(f: NcPoly) -> NcPoly:
    """Symmetric bilinear form ``B(h, k)`` of a quadratic ``f`` with ``B(h, h) = f``.

    Each monomial ``a h_i m h_j b`` becomes ``(a k_i m h_j b + a h_i m k_j b) / 2``.
    """
    if not f.is_homogeneous_in(H, 2):
        raise InputError("polarize expects a polynomial homogeneous of degree 2 in h")
    return f.map_words(lambda w: ((w2, 0.5) for w2, _ in _replace_one(w, H, K)))


def substitute_k_by_h(f: NcPoly) -> NcPoly:
    return f.map_words(lambda w: [(tuple((H, i) if c == K else (c, i) for c, i in w), 1.0)])
