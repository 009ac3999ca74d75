"""Seeded generators shared by the property tests."""

import numpy as np

from nccurv.freealg import NcPoly
from nccurv.mateval import MatrixPoint


def random_sym_poly(rng, g, d, terms=4, coeff=3):
    """Symmetric polynomial with integer coefficients and degree exactly ``d``."""
    while True:
        acc = {}
        lengths = [d] + list(rng.integers(0, d + 1, size=terms - 1))
        for L in lengths:
            w = tuple((0, int(i)) for i in rng.integers(1, g + 1, size=int(L)))
            c = int(rng.integers(1, coeff + 1)) * int(rng.choice([-1, 1]))
            acc[w] = acc.get(w, 0) + c
        q = NcPoly(g, acc)
        p = q + q.transpose()
        if p.degree == d:
            return p


def goe(rng, n):
    A = rng.standard_normal((n, n))
    return (A + A.T) / np.sqrt(2 * n)


def random_point(rng, g, n, with_v=True):
    X = tuple(goe(rng, n) for _ in range(g))
    v = rng.standard_normal(n) if with_v else None
    return MatrixPoint(X, v)


def instance(seed, gmax=3, dmax=5, nmax=4, dmin=2):
    """(p, point) for one seeded property-test instance."""
    rng = np.random.default_rng(seed)
    g = int(rng.integers(1, gmax + 1))
    d = int(rng.integers(dmin, dmax + 1))
    n = int(rng.integers(1, nmax + 1))
    p = random_sym_poly(rng, g, d)
    return p, random_point(rng, g, n), rng
