from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bdspaces.linalg import (
    ONE,
    ZERO,
    CoordVector,
    Q,
    RatMatrix,
    SparseFunctional,
    WindowError,
    combine,
    format_rational,
    l1_norm,
    op_norm_l1,
    op_norm_linf,
    pair,
    parse_rational,
    unitriangular_inverse,
)

rationals = st.fractions(min_value=-5, max_value=5, max_denominator=12).map(Q)


def functionals(max_id=8):
    return st.dictionaries(st.integers(0, max_id - 1), rationals, max_size=max_id).map(SparseFunctional)


def vectors(size=8):
    return st.lists(rationals, min_size=size, max_size=size).map(lambda c: CoordVector(1, c))


def test_parse_and_format():
    assert parse_rational("3/6") == Q(Fraction(1, 2))
    assert parse_rational(" -4 ") == Q(-4)
    assert format_rational(Q("6/4")) == "3/2"
    assert format_rational(Q(5)) == "5"
    for bad in ("1/0", "1.5", "a/b", "", "1//2"):
        with pytest.raises(ValueError):
            parse_rational(bad)
    with pytest.raises(TypeError):
        Q(0.5)
    with pytest.raises(TypeError):
        Q(True)


def test_sparse_functional_drops_zeros():
    f = SparseFunctional({0: ONE, 3: Q("1/2")})
    g = SparseFunctional({3: Q("1/2")})
    assert (f - g) == SparseFunctional.unit(0)
    assert len(f - f) == 0
    assert l1_norm(f) == Q("3/2")
    assert f.max_id() == 3
    assert SparseFunctional.from_list(f.to_list()) == f


def test_pair_requires_window():
    x = CoordVector(1, [ONE, ONE])
    assert pair(x, SparseFunctional({0: Q(2), 1: Q(-1)})) == ONE
    with pytest.raises(WindowError):
        pair(x, SparseFunctional.unit(5))


def test_unitriangular_inverse_small():
    m = RatMatrix.from_dense([[1, Q("-1/2"), 0], [0, 1, Q("-1/2")], [0, 0, 1]])
    inv = unitriangular_inverse(m)
    assert inv.to_dense() == [[1, Q("1/2"), Q("1/4")], [0, 1, Q("1/2")], [0, 0, 1]]
    with pytest.raises(ValueError):
        unitriangular_inverse(RatMatrix.from_dense([[1, 0], [1, 1]]))


def test_norms_of_known_matrix():
    m = RatMatrix.from_dense([[1, -2], [Q("1/2"), 3]])
    assert op_norm_l1(m) == 5
    assert op_norm_linf(m) == Q("7/2")
    assert op_norm_l1(RatMatrix.zeros(0, 0)) == ZERO


@given(functionals(), functionals(), rationals)
def test_functional_arithmetic_is_linear(f, g, s):
    assert (f + g) - g == f
    assert f * s + g * s == (f + g) * s
    assert combine([(s, f), (ONE, g)]) == f * s + g


@given(vectors(), functionals(), functionals(), rationals)
def test_pair_is_bilinear(x, f, g, s):
    assert pair(x, f + g * s) == pair(x, f) + s * pair(x, g)
    assert abs(pair(x, f)) <= x.sup_norm() * f.norm()


@settings(max_examples=50)
@given(st.lists(st.lists(rationals, min_size=5, max_size=5), min_size=5, max_size=5))
def test_l1_and_linf_norms_are_dual(rows):
    m = RatMatrix.from_dense(rows)
    assert op_norm_l1(m) == op_norm_linf(m.transpose())
    # the l1 norm is attained on a unit vector
    best = max(m.apply(SparseFunctional.unit(j)).norm() for j in range(5))
    assert best == op_norm_l1(m)


@settings(max_examples=50)
@given(st.data())
def test_unitriangular_inverse_is_exact(data):
    n = data.draw(st.integers(1, 7))
    rows = [[ONE if i == j else (data.draw(rationals) if i < j else ZERO) for j in range(n)] for i in range(n)]
    m = RatMatrix.from_dense(rows)
    inv = unitriangular_inverse(m)
    assert m @ inv == RatMatrix.identity(n)
    assert inv @ m == RatMatrix.identity(n)
