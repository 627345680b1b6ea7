import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from aniharnack.calculus import (
    PointJet,
    as_symmetric,
    conjugate,
    extremal_residual,
    lower_order,
    parse_matrix,
    pi_laplacian,
    pucci,
)
from aniharnack.errors import UsageError
from aniharnack.exponents import ExponentData, make

import oracles

finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)


@st.composite
def sym_matrix(draw, n=None):
    n = n or draw(st.integers(1, 4))
    A = draw(arrays(float, (n, n), elements=finite))
    return (A + A.T) / 2


@st.composite
def ellipticity(draw):
    lam = draw(st.floats(0.1, 3.0))
    return lam, lam * draw(st.floats(1.0, 5.0))


def test_pucci_examples():
    assert pucci("plus", np.eye(3), 1, 2) == 6
    assert pucci("minus", np.eye(3), 1, 2) == 3
    M = np.diag([2.0, -1.0])
    assert pucci("plus", M, 1, 2) == 3
    assert pucci("minus", M, 1, 2) == 0
    assert pucci("plus", np.zeros((3, 3)), 1, 2) == 0
    assert pucci("minus", np.zeros((3, 3)), 1, 2) == 0


def test_pucci_rejects_bad_input():
    with pytest.raises(UsageError):
        pucci("up", np.eye(2), 1, 1)
    with pytest.raises(UsageError):
        pucci("plus", np.eye(2), 2, 1)
    with pytest.raises(UsageError):
        pucci("plus", [[1, 2], [0, 1]], 1, 1)
    with pytest.raises(UsageError):
        as_symmetric(np.ones((2, 3)))


@given(sym_matrix(), ellipticity())
def test_pucci_matches_bruteforce(M, le):
    lam, Lam = le
    for sign in ("plus", "minus"):
        assert pucci(sign, M, lam, Lam) == pytest.approx(oracles.pucci_bruteforce(sign, M, lam, Lam), abs=1e-9)


@given(sym_matrix(), ellipticity())
def test_pucci_reflection(M, le):
    lam, Lam = le
    assert pucci("minus", -M, lam, Lam) == pytest.approx(-pucci("plus", M, lam, Lam), abs=1e-10)


@given(st.integers(1, 4).flatmap(lambda n: st.tuples(sym_matrix(n), sym_matrix(n))), ellipticity())
def test_pucci_sub_superadditivity(MN, le):
    M, N = MN
    lam, Lam = le
    mm, mn = pucci("minus", M, lam, Lam), pucci("minus", N, lam, Lam)
    both = pucci("minus", M + N, lam, Lam)
    assert mm + mn <= both + 1e-10
    assert both <= mm + pucci("plus", N, lam, Lam) + 1e-10


def test_conjugate_examples():
    jet = PointJet([3.0, -1.0], [[1.0, 2.0], [2.0, 5.0]])
    assert np.array_equal(conjugate(jet, (2, 2)), jet.hessian)
    assert np.allclose(conjugate(PointJet([2.0, 5.0], np.eye(2)), (4, 2)), np.diag([4.0, 1.0]))
    X = conjugate(PointJet([0.0, 1.0], np.ones((2, 2))), (4, 4))
    assert np.array_equal(X, np.array([[0.0, 0.0], [0.0, 1.0]]))


@given(st.integers(1, 4).flatmap(lambda n: st.tuples(
    arrays(float, (n,), elements=finite),
    arrays(float, (n, n), elements=finite),
    st.lists(st.floats(2.0, 6.0), min_size=n, max_size=n))))
def test_conjugate_preserves_psd(data):
    g, B, p = data
    H = B @ B.T
    X = conjugate(PointJet(g, H), sorted(p))
    assert np.array_equal(X, X.T)
    assert np.linalg.eigvalsh(X).min() >= -1e-9 * max(1.0, np.abs(X).max())


def test_extremal_residual_examples():
    n = 3
    e = make((2,) * n)
    x = np.array([0.3, -1.2, 2.0])
    jet = PointJet(2 * x, 2 * np.eye(n))
    assert extremal_residual(jet, e, "super") == pytest.approx(2 * n)
    zero = PointJet(np.zeros(n), np.zeros((n, n)))
    assert extremal_residual(zero, e, "super") == 0
    e2 = ExponentData((2.0, 3.0), 1.0, 1.0, mu=0.5, c0=0.25)
    jet2 = PointJet([1.0, -2.0], [[1.0, 0.0], [0.0, -1.0]])
    # lower order: |1|^1 + |2|^2 = 5
    assert lower_order(jet2, e2.p) == 5
    assert extremal_residual(jet2, e2, "super") == pytest.approx(1 - 2 - 0.5 * 5 - 0.25)
    assert extremal_residual(jet2, e2, "sub") == pytest.approx(1 - 2 + 0.5 * 5 + 0.25)
    with pytest.raises(UsageError):
        extremal_residual(jet2, e2, "both")


@given(st.integers(1, 4).flatmap(lambda n: st.tuples(
    arrays(float, (n,), elements=finite),
    sym_matrix(n),
    st.lists(st.floats(2.0, 6.0), min_size=n, max_size=n))), st.floats(0.1, 4.0))
def test_equal_ellipticity_is_scaled_pi_laplacian(data, lam):
    g, H, p = data
    e = ExponentData(tuple(sorted(p)), lam, lam)
    jet = PointJet(g, H)
    assert extremal_residual(jet, e, "super") == pytest.approx(lam * pi_laplacian(jet, e.p), rel=1e-12, abs=1e-9)


def test_pi_laplacian_examples():
    assert pi_laplacian(PointJet([1.0, 1.0], 2 * np.eye(2)), (2, 2)) == 4
    assert pi_laplacian(PointJet([2.0, 7.0], 2 * np.eye(2)), (4, 2)) == 10


def test_parse_matrix():
    assert np.array_equal(parse_matrix("2,0;0,-1"), np.diag([2.0, -1.0]))
    with pytest.raises(UsageError):
        parse_matrix("1,2;3,4")
    with pytest.raises(UsageError):
        parse_matrix("a")


def test_jet_shape_check():
    with pytest.raises(UsageError):
        PointJet([1.0, 2.0], np.eye(3))
