import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from bdspaces.engine import (
    BudgetExceeded,
    ConstructionError,
    EngineConfig,
    Trivial,
    Type0,
    Type1,
    Type2,
    basis_constant_bound,
    basis_projection_norms,
    biorthogonal_vector,
    build_space,
    change_of_basis,
    check_c0_collapse,
    check_core,
    extend_vector,
    extend_vector_via_projection,
    extension_norm,
    projection_matrix,
    unit_vector,
)
from bdspaces.linalg import ONE, ZERO, CoordVector, Q, RatMatrix, SparseFunctional, WindowError, op_norm_l1, pair

THETA = Q("1/3")


def _fixed_provider(space, n):
    if n == 0:
        return [(("a",), Trivial()), (("b",), Trivial())]
    if n == 1:
        return [(("c",), Type0(-1, ONE, 1)), (("d",), Type1(0, THETA, SparseFunctional({0: Q("1/2"), 1: Q("-1/2")})))]
    return [(("e",), Type2(1, Q("1/2"), 1, 1, THETA, SparseFunctional.unit(3)))]


@pytest.fixture(scope="module")
def small():
    return build_space(EngineConfig(THETA, 3, _fixed_provider))


def test_small_space_tables(small):
    assert small.offsets == [0, 2, 4, 5]
    assert small.cstar[2] == SparseFunctional.unit(1, -1)
    assert small.cstar[3] == SparseFunctional({0: Q("1/6"), 1: Q("-1/6")})
    # c*_e = 1/2 e*_b + 1/3 (I - P*_(0,1]) e*_d, and P*_(0,1] e*_d = c*_d
    expected = SparseFunctional({1: Q("1/2") + THETA / 6, 3: THETA, 0: -THETA / 6})
    assert small.cstar[4] == expected
    assert small.id_of(("e",)) == 4


def test_projection_matrix_values(small):
    p = projection_matrix(small, 1, 3)
    assert p.column(0) == SparseFunctional.unit(0)
    assert p.column(2) == small.cstar[2]
    with pytest.raises(ValueError):
        projection_matrix(small, 3, 2)


def test_biorthogonal_vectors(small):
    for g in range(5):
        d = biorthogonal_vector(small, g, 3)
        assert [pair(d, small.dstar(h)) for h in range(5)] == [ONE if h == g else ZERO for h in range(5)]
    with pytest.raises(WindowError):
        biorthogonal_vector(small, 4, 2)


def test_budget_and_validation_errors():
    with pytest.raises(BudgetExceeded):
        build_space(EngineConfig(THETA, 3, _fixed_provider, element_budget=3))

    def bad_beta(space, n):
        return [(0, Trivial())] if n == 0 else [(1, Type1(0, Q("1/2"), SparseFunctional.unit(0)))]

    with pytest.raises(ConstructionError, match="exceeds theta"):
        build_space(EngineConfig(THETA, 2, bad_beta))

    def bad_support(space, n):
        return [(0, Trivial())] if n == 0 else [(n, Type1(0, THETA, SparseFunctional.unit(n)))]

    with pytest.raises(ConstructionError, match="not in Gamma"):
        build_space(EngineConfig(THETA, 2, bad_support))

    def duplicate(space, n):
        return [(0, Trivial()), (0, Trivial())]

    with pytest.raises(ConstructionError, match="duplicate"):
        build_space(EngineConfig(THETA, 1, duplicate))

    with pytest.raises(ValueError):
        EngineConfig(Q("1/2"), 1, duplicate)


def test_basis_constant_bound():
    assert basis_constant_bound(THETA) == 3
    assert basis_constant_bound(None) is None


def test_c0_collapse_certificate(small):
    rep = check_c0_collapse(small, 3)
    assert rep.ok
    w = rep.get("identity-distance").witness
    assert w["norm_I_minus_T"] == op_norm_l1(RatMatrix(5, 5, {g: small.cstar[g] for g in range(5)}))


# -- random admissible constructions ---------------------------------------

rationals = st.fractions(min_value=-1, max_value=1, max_denominator=6).map(Q)


@st.composite
def random_spaces(draw):
    ranks = draw(st.integers(2, 4))
    plan = [[("t", 0)] * draw(st.integers(1, 2))]
    for n in range(1, ranks):
        plan.append([draw(st.tuples(st.sampled_from("012"), st.integers(0, 10**6))) for _ in range(draw(st.integers(1, 3)))])
    seed = draw(st.integers(0, 10**6))
    return plan, seed


def _provider_from(plan, seed):
    import random

    def provider(space, n):
        rng = random.Random(f"{seed}:{n}")
        out = []
        size_n = space.size(n)
        for i, (kind, salt) in enumerate(plan[n]):
            if n == 0:
                out.append(((n, i), Trivial()))
                continue
            xi = rng.randrange(size_n)
            alpha = Q(rng.randint(0, 4)) / 4
            p = rng.randrange(0, n)
            ids = list(range(space.size(p), size_n))
            support = rng.sample(ids, min(len(ids), rng.randint(0, 2)))
            coeff = {h: Q(rng.choice((1, -1))) / (len(support) + rng.randint(0, 2)) for h in support}
            b = SparseFunctional(coeff)
            beta = Q(rng.randint(1, 3)) / 9
            if kind == "0":
                desc = Type0(rng.choice((1, -1)), alpha, xi)
            elif kind == "1":
                desc = Type1(p, beta, b)
            else:
                if n < 2:
                    desc = Type1(p, beta, b)
                else:
                    p2 = rng.randrange(1, n)
                    xi2 = rng.randrange(space.size(p2))
                    ids2 = list(range(space.size(p2), size_n))
                    b2 = SparseFunctional({h: Q("1/2") for h in rng.sample(ids2, min(2, len(ids2)))})
                    desc = Type2(rng.choice((1, -1)), max(alpha, Q("1/4")), xi2, p2, beta, b2)
            out.append(((n, i, salt), desc))
        return out

    return provider


@settings(max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(random_spaces())
def test_random_spaces_satisfy_core_identities(case):
    plan, seed = case
    space = build_space(EngineConfig(THETA, len(plan), _provider_from(plan, seed)))
    N = space.max_rank
    assert check_core(space, N).ok
    T = change_of_basis(space, N)
    assert all(T.entry(g, g) == ONE for g in range(space.size(N)))
    M = space.M
    assert all(v <= M for _, v in basis_projection_norms(space, N))
    for q in range(1, N + 1):
        assert extension_norm(space, q, N) <= M
        u = CoordVector(q, [Q((g * 7) % 5 - 2) / 3 for g in range(space.size(q))])
        assert extend_vector(space, u, N) == extend_vector_via_projection(space, u, N)
        assert extend_vector(space, u, N).sup_norm() <= M * u.sup_norm()


def test_unit_vector_window(small):
    assert unit_vector(small, 1, 1).coords == (ZERO, ONE)
    with pytest.raises(WindowError):
        unit_vector(small, 3, 1)
