import itertools
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import leibniz_det
from listrec.certificates import (
    CoefficientArray,
    TreeCertificate,
    build_R_matrix,
    certificate_count,
    check_good_up_to_B,
    collapse_points,
    enumerate_certificates,
    eval_certificate,
    labelled_trees,
    proof_count_bound,
    random_certificate,
    sampled_goodness,
    specialization_sanity,
    sz_experiment,
    sz_failure_bound,
    union_vanishing_bound,
    vanishing_probability,
    wilson_interval,
)
from listrec.errors import BudgetExceeded, ColorOutOfRange, PreconditionFailed
from listrec.field import FieldCtx
from listrec.rng import stream


def brute_certificate_count(B, m, d):
    """Ordered d-tuples of colored labelled trees with disjoint color sets."""
    total = 0
    for w in range(2, B + 1):
        colored = []
        # one labelled tree per Pruefer sequence
        for _ in itertools.product(range(w), repeat=max(w - 2, 0)):
            for cols in itertools.product(range(m), repeat=w - 1):
                colored.append(frozenset(cols))
        for combo in itertools.product(colored, repeat=d):
            if all(not (a & b) for a, b in itertools.combinations(combo, 2)):
                total += 1
    return total


def test_prufer_counts_cayley():
    for w in range(2, 7):
        trees = {tuple(t) for t in labelled_trees(w)}
        assert len(trees) == w ** (w - 2)
        assert all(len(t) == w - 1 for t in trees)


@pytest.mark.parametrize("B,m,d", [(2, 1, 1), (3, 2, 1), (3, 3, 2), (4, 3, 2), (3, 4, 1), (3, 4, 2), (2, 5, 3)])
def test_certificate_count_matches_brute_force(B, m, d):
    assert certificate_count(B, m, d) == brute_certificate_count(B, m, d)


def test_certificate_count_examples():
    assert certificate_count(3, 2, 1) == 14
    assert certificate_count(4, 3, 2) == 10920
    assert certificate_count(3, 1, 2) == 0
    assert certificate_count(4, 3, 2) <= proof_count_bound(4, 3, 2)


@pytest.mark.parametrize("B,m,d", [(3, 2, 1), (3, 3, 2), (4, 3, 1)])
def test_enumeration_distinct_and_complete(B, m, d):
    certs = list(enumerate_certificates(B, m, d))
    assert len(certs) == len(set(certs)) == certificate_count(B, m, d)


def test_enumeration_budget():
    with pytest.raises(BudgetExceeded):
        enumerate_certificates(5, 6, 2, budget=1000)


def test_certificate_validation():
    with pytest.raises(PreconditionFailed):
        TreeCertificate(3, (((0, 1, 0),),))
    with pytest.raises(PreconditionFailed):
        TreeCertificate(3, (((0, 1, 0), (1, 2, 1)), ((0, 2, 1), (1, 2, 2))))
    with pytest.raises(PreconditionFailed):
        TreeCertificate(3, (((0, 1, 0), (0, 1, 1)),))
    c = TreeCertificate(3, (((1, 0, 0), (2, 1, 1)),))
    assert c.trees == (((0, 1, 0), (1, 2, 1)),)
    assert TreeCertificate.from_json(c.to_json()) == c


def test_color_out_of_range():
    c = TreeCertificate(2, (((0, 1, 3),),))
    with pytest.raises(ColorOutOfRange):
        eval_certificate(c, CoefficientArray(FieldCtx(5), ((1,), (2,))))


def test_r_matrix_small_example():
    # d = 1, path 0-1-2 with colors 0, 1; base vertex 2 has no column
    c = TreeCertificate(3, (((0, 1, 0), (1, 2, 1)),))
    co = CoefficientArray(FieldCtx(7), ((2,), (3,)))
    assert build_R_matrix(c, co).to_rows() == [[2, 5], [0, 3]]
    assert eval_certificate(c, co) == 6


certs = st.integers(0, 10**6).map(lambda s: random_certificate(stream(s, "cert")))


@given(certs, st.sampled_from([5, 101, 10**9 + 7]), st.integers(0, 10**6))
def test_det_matches_leibniz(cert, p, seed):
    m = max(cert.colors()) + 1
    co = CoefficientArray.random(m, cert.d, FieldCtx(p), seed)
    R = build_R_matrix(cert, co)
    assert R.rows == R.cols == (cert.w - 1) * cert.d
    if R.rows <= 7:
        assert eval_certificate(cert, co) == leibniz_det(R.to_rows(), p)


@given(certs, st.sampled_from([101, 10**9 + 7]))
def test_specialization_is_unimodular(cert, p):
    assert specialization_sanity(cert, FieldCtx(p)) in (1, p - 1)


@given(certs, st.integers(0, 10**6))
def test_collapse(cert, seed):
    p = 101
    ctx = FieldCtx(p)
    m = max(cert.colors()) + 1
    rng = stream(seed, "collapse")
    co = CoefficientArray.random(m, cert.d, ctx, rng)
    q = tuple(int(x) for x in rng.integers(0, p, cert.d))
    assert collapse_points(cert, co, [q] * cert.w) == (True, True)
    if eval_certificate(cert, co):
        pts = {tuple(int(x) for x in rng.integers(0, p, cert.d)) for _ in range(cert.w)}
        if len(pts) == cert.w:
            assert collapse_points(cert, co, sorted(pts))[0] is False


@pytest.mark.parametrize("seed", range(12))
def test_consistency_iff_singular_exhaustive(seed):
    """Nonconstant consistent points exist exactly when det R = 0."""
    p = 3
    ctx = FieldCtx(p)
    rng = stream(seed, "exhaustive")
    cert = random_certificate(rng, w_max=3, d_max=2, m_max=4)
    m = max(cert.colors()) + 1
    co = CoefficientArray.random(m, cert.d, ctx, rng)
    points = list(itertools.product(range(p), repeat=cert.d))
    nonconstant = any(
        collapse_points(cert, co, cfg) == (True, False)
        for cfg in itertools.product(points, repeat=cert.w)
    )
    assert nonconstant == (eval_certificate(cert, co) == 0)


def test_collapse_needs_w_points():
    c = TreeCertificate(2, (((0, 1, 0),),))
    with pytest.raises(PreconditionFailed):
        collapse_points(c, CoefficientArray(FieldCtx(5), ((1,),)), [(0,)])


@given(
    st.sampled_from([3, 5, 7]),
    st.integers(1, 2),
    st.integers(1, 5),
    st.integers(2, 4),
    st.integers(0, 10**6),
)
def test_goodness_routes_agree(p, d, m, B, seed):
    co = CoefficientArray.random(m, d, FieldCtx(p), seed)
    try:
        a = check_good_up_to_B(co, B, budget=30_000, method="enumerate")
    except BudgetExceeded:
        return
    b = check_good_up_to_B(co, B, method="points")
    assert a.good == b.good and a.exact and b.exact
    for res in (a, b):
        if not res.good:
            assert res.failing.w <= B
            assert eval_certificate(res.failing, co) == 0


def test_goodness_examples():
    ctx = FieldCtx(5)
    # d = 1: good up to 2 iff every coefficient is nonzero
    assert check_good_up_to_B(CoefficientArray(ctx, ((1,), (3,))), 2).good
    assert not check_good_up_to_B(CoefficientArray(ctx, ((1,), (0,))), 2).good
    # fewer colors than trees: vacuous
    assert check_good_up_to_B(CoefficientArray(ctx, ((1, 2),)), 3).method == "vacuous"
    # proportional rows in d = 2 give a singular two-vertex certificate
    res = check_good_up_to_B(CoefficientArray(ctx, ((1, 2), (2, 4))), 2)
    assert not res.good and res.failing.w == 2
    with pytest.raises(PreconditionFailed):
        check_good_up_to_B(CoefficientArray(ctx, ((1,),)), 1)


def test_goodness_budget():
    co = CoefficientArray.random(8, 2, FieldCtx(101), 0)
    with pytest.raises(BudgetExceeded):
        check_good_up_to_B(co, 6, budget=100)


def test_sampled_goodness_is_not_exact():
    co = CoefficientArray.random(4, 1, FieldCtx(101), 3)
    res = sampled_goodness(co, 3, 50, seed=1)
    assert res.exact is False and res.checked <= 50


def test_vanishing_probability_examples():
    # d = 1: det is +- the product of edge coefficients
    single = TreeCertificate(2, (((0, 1, 0),),))
    assert vanishing_probability(single, 5) == Fraction(1, 5)
    two = TreeCertificate(3, (((0, 1, 0), (1, 2, 1)),))
    assert vanishing_probability(two, 5) == 1 - Fraction(4, 5) ** 2
    same = TreeCertificate(3, (((0, 1, 0), (1, 2, 0)),))
    assert vanishing_probability(same, 5) == Fraction(1, 5)


def test_union_bound_small():
    # B=2, m=2, d=1: two single-edge certificates
    assert union_vanishing_bound(2, 2, 1, 7) == Fraction(2, 7)


def test_sz_bound_and_interval():
    b = sz_failure_bound(3, 4, 1, 101)
    assert b.exact == Fraction(9 * 36**3, 101) and b.capped == 1.0
    lo, hi = wilson_interval(0, 100)
    assert lo == 0.0 and 0 < hi < 0.05
    lo, hi = wilson_interval(50, 100)
    assert lo < 0.5 < hi


def test_sz_experiment_deterministic():
    a = sz_experiment(2, 3, 1, 7, 50, seed=2)
    b = sz_experiment(2, 3, 1, 7, 50, seed=2)
    assert a.to_json() == b.to_json()
    # d = 1, B = 2: not good iff some coefficient vanishes
    rng = stream(2, "sz_experiment")
    expected = 0
    for _ in range(50):
        rows = CoefficientArray.random(3, 1, FieldCtx(7), rng).rows
        expected += any(r[0] == 0 for r in rows)
    assert a.failures == expected
