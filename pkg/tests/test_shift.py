import pytest
from hypothesis import given
from hypothesis import strategies as st

from bdspaces import shift
from bdspaces.linalg import Q, SparseFunctional

rationals = st.fractions(min_value=-3, max_value=3, max_denominator=8).map(Q)
seqs = st.lists(rationals, min_size=1, max_size=40).map(lambda c: shift.SeqVector(tuple(c)))


def test_ones_count_and_rank():
    assert [shift.ones_count(n) for n in range(8)] == [0, 1, 1, 2, 1, 2, 2, 3]
    assert [shift.r2_rank(n) for n in (0, 1, 2, 3, 4, 7, 8)] == [1, 2, 3, 3, 4, 4, 5]


def test_y0_prefix():
    assert shift.y0(8).coords == tuple(Q(x) for x in ("1", "1/2", "1/2", "1/4", "1/2", "1/4", "1/4", "1/8"))
    with pytest.raises(ValueError):
        shift.y_lambda(1, 4)


def test_dstar_listing():
    sp = shift.build_r2(3)
    assert [sp.dstar(n) for n in range(4)] == [
        SparseFunctional.unit(0),
        SparseFunctional({0: Q("-1/2"), 1: Q(1)}),
        SparseFunctional({0: Q("-1/2"), 2: Q(1)}),
        SparseFunctional({1: Q("-1/2"), 3: Q(1)}),
    ]


def test_shift_operators_small():
    x = shift.SeqVector((Q(1), Q(2)))
    assert shift.sigma_op(x).coords == (0, 1, 2)
    assert shift.tau_op(x).coords == (1, 0, 2, 0)
    assert shift.beta_op(x).coords == (0, 1, 0, 2, 0)
    assert shift.sigma_power(x, 3, 4).coords == (0, 0, 0, 1)


@given(seqs)
def test_tau_sigma_commutation(x):
    assert shift.commutation_holds(x)


@given(seqs)
def test_beta_is_sigma_tau(x):
    assert shift.beta_op(x).agrees(shift.sigma_op(shift.tau_op(x)))


@given(st.integers(0, 5000))
def test_word_for_reproduces_index(n):
    m, l = shift.word_for(n)
    # sigma^m tau^l sends the unit mass at 0 to position m
    assert m == n and l == n.bit_length()


def test_steps_at_rank_eight():
    sp = shift.build_r2(8)
    rep = shift.verify_steps(sp)
    assert rep.ok and len([c for c in rep.checks if c.id.startswith("step-")]) >= 8
    five = rep.get("step-5").witness
    assert five["exceptions_confirmed"] == [0, 1, 3, 7, 15, 31]
    assert five["exceptions_beyond_window"] == [63]
    with pytest.raises(ValueError):
        shift.verify_steps(sp, steps=[9])


def test_reachability_and_certificates():
    sp = shift.build_r2(9)
    assert shift.reachability(sp).ok
    rep = shift.c0_certificate(sp)
    assert rep.ok
    assert rep.get("inverse-bound").witness["norm_T_inverse"] == Q(511) / 256
    assert shift.projection_report(sp).ok


def test_d0_matches_y0(r2_12):
    d = shift.DTable(r2_12)
    assert d(0).coords == shift.y0(2048).coords
