import math
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from gen import instance, random_point, random_sym_poly
from nccurv import numerics
from nccurv.calculus import hessian
from nccurv.curvature import (
    PointForms,
    RelaxedSearchConfig,
    c_pm,
    clamped_tangent,
    e_pm,
    form_gram,
    full_rank_point,
    hessian_gram_via_middle,
    positivity_membership,
    relaxed_gram,
    relaxed_parts,
    relaxed_signature,
    subspace_decomposition,
)
from nccurv.errors import InputError
from nccurv.freealg import parse
from nccurv.mateval import MatrixPoint, alpha, direct_sum, load_point
from nccurv.middlematrix import hessian_middle, relaxed_middle, scalar_middle
from nccurv.variety import sample_variety_point

POINTS = Path(__file__).resolve().parents[1] / "points"
X3 = parse("x1^3", 1)


def cube3(beta=0.5, gamma=0.3):
    return MatrixPoint((np.diag([1.0, -1.0, -1.0]),), [1.0, beta, gamma])


def cube5(a=2.0, e=1.0):
    return MatrixPoint((np.diag([1.0, 1.0, -1.0, -1.0, -1.0]),), [a, 0, 0, 0, e])


def flat(mats):
    return np.column_stack([np.asarray(M, dtype=float).ravel() for M in mats])


# -- worked examples -------------------------------------------------------------

def test_cube_signature_at_three_point():
    rep = c_pm(X3, cube3())
    assert (rep.c_minus, rep.c_plus, rep.tangent_dim) == (0, 2, 3)
    assert rep.full_rank


def test_cube_tangent_matches_hand_computed_basis():
    b, c = 0.5, 0.3
    displayed = [
        [[b * b, -3 * b, 0], [-3 * b, 1, 0], [0, 0, 0]],
        [[2 * b * c, -3 * c, -3 * b], [-3 * c, 0, 1], [-3 * b, 1, 0]],
        [[c * c, 0, -3 * c], [0, 0, 0], [-3 * c, 0, 1]],
    ]
    T = clamped_tangent(X3, cube3(b, c))
    got = flat(T.elements().elements[:, 0])
    assert T.dim == 3
    assert np.max(numerics.principal_angles(got, flat(displayed))) < 1e-8


def test_cube_three_point_file():
    pt = load_point(POINTS / "cube_n3.json")
    assert (c_pm(X3, pt).c_minus, c_pm(X3, pt).c_plus) == (0, 2)


def test_cube_five_point_signature_and_direct_sum():
    pt = load_point(POINTS / "cube_n5.json")
    rep = c_pm(X3, pt)
    assert (rep.c_minus, rep.c_plus) == (1, 3)
    two = c_pm(X3, direct_sum([pt, pt]))
    assert (two.c_minus, two.c_plus) == (3, 6)


@pytest.mark.parametrize("a, e", [(2.0, 1.0), (3.0, 0.5), (1.5, 1.2)])
def test_strictness_witness(a, e):
    pt = cube5(a, e)
    one = c_pm(X3, pt)
    assert one.c_minus == 1
    assert c_pm(X3, direct_sum([pt, pt])).c_minus == 3 > 2 * one.c_minus


def test_cube_five_point_decomposition():
    rep = subspace_decomposition(X3, cube5())
    dims = (rep.dim_N, rep.dim_M, rep.dim_L, rep.dim_M_minus, rep.dim_M_plus)
    assert dims == (6, 4, 5, 1, 3)
    assert rep.dim_N_perp == 9
    assert all(rep.checks.values())


def test_decomposition_A_on_M_matches_signature():
    pt = cube5()
    rep = subspace_decomposition(X3, pt)
    M = rep.bases["M"]
    A = relaxed_parts(X3, pt)[0]
    inn = numerics.inertia(M.T @ A @ M)
    cur = c_pm(X3, pt)
    assert (inn.neg, inn.pos) == (cur.c_minus, cur.c_plus)


def test_decomposition_of_linear_poly():
    rep = subspace_decomposition(parse("x1", 1), cube3())
    assert rep.dim_M_minus == 0


def test_circle_point_tangent():
    pt = load_point(POINTS / "circle.json")
    T = clamped_tangent(parse("1 - x1^2", 1), pt)
    assert T.dim == 1
    E = T.elements().elements[0, 0]
    assert np.allclose(np.abs(E), [[0, 1 / math.sqrt(2)], [1 / math.sqrt(2), 0]])
    rep = c_pm(parse("1 - x1^2", 1), pt)
    assert (rep.c_minus, rep.c_plus) == (1, 0)


def test_tangent_of_linear_poly_is_annihilator_of_v():
    pt = cube3()
    T = clamped_tangent(parse("x1", 1), pt)
    assert T.codim == 3
    for H in T.elements().elements[:, 0]:
        assert np.allclose(H @ pt.v, 0)


def test_full_rank_examples():
    assert full_rank_point(X3, MatrixPoint((np.diag([1.0, 2.0]),), [1.0, 1.0]))
    assert full_rank_point(parse("x1", 1), MatrixPoint((np.zeros((2, 2)),), [1.0, 0.0]))
    assert not full_rank_point(parse("x1^2", 1), MatrixPoint((np.zeros((2, 2)),), [1.0, 0.3]))


def test_form_gram_examples():
    pt = MatrixPoint((np.array([[0.7]]),), [1.0])
    assert np.allclose(form_gram(hessian(parse("x1^2", 1)), pt), [[2.0]])
    G = form_gram(hessian(X3), cube3(), clamped_tangent(X3, cube3()))
    assert numerics.inertia(G).as_tuple() == (0, 1, 2)
    zero = parse("0", 1, "xh")
    assert not form_gram(zero, cube3()).any()


def test_form_gram_rejects_non_quadratic():
    with pytest.raises(InputError):
        form_gram(parse("h1*x1", 1, "xh"), cube3())


def test_e_pm_examples():
    pt = cube3()
    assert e_pm(hessian(parse("x1^2", 1)), pt).neg == 0
    assert e_pm(hessian(X3), pt, np.zeros((6, 0))).as_tuple() == (0, 0, 0)
    inn = e_pm(hessian(X3), pt, clamped_tangent(X3, pt))
    assert (inn.neg, inn.pos) == (0, 2)


def test_linear_poly_has_zero_signature():
    rep = c_pm(parse("x1 + 2", 1), cube3())
    assert (rep.c_minus, rep.c_plus) == (0, 0)


def test_relaxed_search_on_cube_five_point():
    sig = relaxed_signature(X3, cube5())
    assert sig.matched and sig.e_minus == 1
    assert sig.delta > 0 and sig.lam > 0


def test_relaxed_search_negative_variant_on_cube_three_point():
    sig = relaxed_signature(X3, cube3(), RelaxedSearchConfig(negative=True))
    assert sig.matched and sig.e_plus == 2
    assert sig.delta < 0 and sig.lam < 0


def test_relaxed_form_of_convex_poly_has_no_negatives():
    p = parse("x1^2 + x2^2", 2)
    rng = np.random.default_rng(3)
    pt = random_point(rng, 2, 3)
    parts = relaxed_parts(p, pt)
    for dlt in (1e-2, 1e-5):
        for lam in (1.0, 1e4):
            assert numerics.inertia(relaxed_gram(p, pt, lam, dlt, parts=parts)).neg == 0


def test_relaxed_search_config_validation():
    with pytest.raises(InputError):
        RelaxedSearchConfig(delta_grid=())
    with pytest.raises(InputError):
        RelaxedSearchConfig(lambda_grid=(1.0,))
    with pytest.raises(InputError):
        RelaxedSearchConfig(delta_grid=(-1.0,))


def test_exhausted_grid_is_reported():
    cfg = RelaxedSearchConfig(delta_grid=(1e3,), lambda_grid=(1e-8, 1e-7))
    sig = relaxed_signature(X3, cube5(), cfg)
    assert not sig.matched
    assert sig.diagnostics[-1] == "grid exhausted"


@pytest.mark.parametrize(
    "X, label",
    [([[0.0]], "interior"), ([[1.0]], "boundary"), ([[2.0]], "exterior")],
)
def test_membership_examples(X, label):
    rep = positivity_membership(parse("1 - x1^2", 1), [np.array(X)])
    assert rep.label == label
    if label == "boundary":
        assert rep.kernel.shape == (1, 1)


def test_membership_disconnected_positive():
    p = parse("(1 - x1^2)*(4 - x1^2)", 1)
    assert positivity_membership(p, [np.array([[3.0]])]).label == "disconnected-positive"


def test_membership_needs_positive_origin():
    with pytest.raises(InputError):
        positivity_membership(parse("x1^2 - 1", 1), [np.eye(2)])


# -- properties --------------------------------------------------------------------

@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**6))
def test_signature_matches_oracle(seed):
    p, pt, _ = instance(seed, gmax=2, dmax=4, nmax=3)
    ref = oracles.c_pm(oracles.poly_callable(p.terms), pt.X, pt.v, p.degree)
    rep = c_pm(p, pt)
    assert (rep.c_minus, rep.c_plus) == ref


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**6))
def test_hessian_gram_matches_oracle_and_middle_route(seed):
    p, pt, _ = instance(seed, gmax=2, dmax=4, nmax=3)
    A = form_gram(hessian(p), pt)
    ref = oracles.hessian_gram(oracles.poly_callable(p.terms), pt.X, pt.v, p.degree)
    scale = max(1.0, np.abs(ref).max())
    assert np.allclose(A, ref, atol=1e-7 * scale)
    assert np.allclose(hessian_gram_via_middle(p, pt), A, atol=1e-10 * scale)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**6), st.floats(0.2, 5.0), st.booleans())
def test_signature_invariance(seed, a, flip):
    p, pt, rng = instance(seed, nmax=3)
    base = c_pm(p, pt)
    scaled = c_pm(p, MatrixPoint(pt.X, (-a if flip else a) * pt.v))
    Q, _ = np.linalg.qr(rng.standard_normal((pt.n, pt.n)))
    conj = c_pm(p, MatrixPoint(tuple(Q.T @ X @ Q for X in pt.X), Q.T @ pt.v))
    assert (scaled.c_minus, scaled.c_plus) == (base.c_minus, base.c_plus)
    assert (conj.c_minus, conj.c_plus) == (base.c_minus, base.c_plus)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10**6), st.integers(2, 3))
def test_superadditivity_under_direct_sums(seed, k):
    p, pt, _ = instance(seed, gmax=2, dmax=4, nmax=2)
    one = c_pm(p, pt)
    many = c_pm(p, direct_sum([pt] * k))
    assert many.c_minus >= k * one.c_minus and many.c_plus >= k * one.c_plus


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10**6))
def test_direct_sum_of_full_rank_points_is_full_rank(seed):
    rng = np.random.default_rng(seed)
    p = random_sym_poly(rng, 1, 3)
    pts = [random_point(rng, 1, int(rng.integers(1, 4))) for _ in range(2)]
    if all(full_rank_point(p, q) for q in pts):
        assert full_rank_point(p, direct_sum(pts))


def _negative_and_complement(G, rng):
    _, U1, _, _ = numerics.spectral_subspaces(G)
    n = G.shape[0]
    k = U1.shape[1]
    # a different maximal strictly negative subspace: tilt U1 slightly
    S = U1 + 0.05 * (np.eye(n) - U1 @ U1.T) @ rng.standard_normal((n, k)) if k else U1
    return S, numerics.complementary_nonneg_subspace(G, S, rng=rng)


def _dim_image(R, B):
    return numerics.rank(R @ B) if B.shape[1] else 0


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**6), st.booleans())
def test_negative_subspace_inequalities(seed, relaxed):
    p, pt, rng = instance(seed, gmax=2, dmax=4, nmax=3)
    F = PointForms(pt)
    if relaxed:
        lam, dlt = 1.0, 1e-3
        Z = relaxed_middle(p, lam, dlt)
        G = relaxed_gram(p, pt, lam, dlt, F)
    else:
        Z = hessian_middle(p)
        G = F.gram(hessian(p))
    R = F.border_map(Z.s)
    Zx = Z.evaluate(pt.X, F.ev)
    assert np.allclose(R.T @ Zx @ R, G, atol=1e-9 * max(1.0, np.abs(G).max()))
    mu = numerics.inertia(Zx)
    S, C = _negative_and_complement(G, rng)
    total = R.shape[0]
    dimRH, dimRG = _dim_image(R, S), _dim_image(R, C)
    assert total - dimRG >= mu.neg >= dimRH >= S.shape[1]
    assert total - dimRH >= mu.pos + mu.zero >= dimRG
    # complementary pair: codim of an image against the whole image
    codim_all = total - numerics.rank(R)
    assert total - dimRH <= codim_all + (F.dim - S.shape[1])
    assert total - dimRG <= codim_all + S.shape[1]


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**6), st.floats(0.1, 100.0))
def test_relaxed_negative_count_sandwich(seed, lam):
    p, pt, _ = instance(seed, gmax=2, dmax=4, nmax=3)
    F = PointForms(pt)
    mu = scalar_middle(hessian_middle(p)).mu_minus
    dlt = 1e-7
    Zx = relaxed_middle(p, lam, dlt).evaluate(pt.X, F.ev)
    assert numerics.inertia(Zx).neg == pt.n * mu
    neg = numerics.inertia(relaxed_gram(p, pt, lam, dlt, F)).neg
    R = F.border_map(p.degree - 1)
    codim = R.shape[0] - numerics.rank(R)
    assert neg <= pt.n * mu <= neg + codim


def test_relaxed_hessian_of_cube_is_never_negative_definite_at_n4():
    rng = np.random.default_rng(11)
    n = 4
    assert n > 2 * alpha(1, 1) - 1
    for _ in range(10):
        pt = random_point(rng, 1, n)
        parts = relaxed_parts(X3, pt)
        dim = parts[0].shape[0]
        assert subspace_decomposition(X3, pt).dim_N > 0
        for dlt in (1e-2, 1e-5, 1e-8):
            for lam in (1.0, 1e2, 1e4, 1e8):
                assert numerics.inertia(relaxed_gram(X3, pt, lam, dlt, parts=parts)).neg < dim


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10**6))
def test_relaxed_form_is_nonpositive_where_form_is(seed):
    rng = np.random.default_rng(seed)
    p = parse("1 - x1^2 - x2^2", 2)
    pt = sample_variety_point(p, int(rng.integers(2, 4)), rng)
    assert c_pm(p, pt).c_plus == 0
    sig = relaxed_signature(p, pt, RelaxedSearchConfig(negative=True))
    assert sig.matched and sig.e_plus == 0


def test_relaxed_search_keeps_small_negative_directions():
    # the tangent form has an eigenvalue near -4e-4 while lambda * Q reaches 1e5
    p, pt, _ = instance(15)
    sig = relaxed_signature(p, pt)
    assert sig.c_minus == 9
    assert sig.matched and sig.e_minus == 9
