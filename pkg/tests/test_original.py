import pytest

from bdspaces import original as orig
from bdspaces.engine import BudgetExceeded, Type0, Type2, biorthogonal_vector, unit_vector
from bdspaces.linalg import ONE, CoordVector, Q, SparseFunctional, WindowError, pair


def _count_delta(sizes, n):
    # |Delta_{n+1}| = 4 |Gamma_n| sum_{k=1}^{n-1} |Gamma_k|, written out independently
    return 4 * sizes[n] * sum(sizes[1:n])


def test_gamma_sizes_match_counting_formula():
    sizes = [0, 1]
    for n in range(1, 6):
        sizes.append(sizes[n] + _count_delta(sizes, n))
    assert sizes == [0, 1, 1, 5, 45, 1305, 272745]
    assert orig.gamma_sizes(6) == sizes


def test_enumeration_matches_sizes(orig_params):
    keys = orig.enumerate_gamma(orig_params[0], 4)
    assert len(keys) == 45
    assert keys[0] == orig.SINGLETON
    assert all(len(k) == 6 and k[0] in (3, 4) for k in keys[1:])


def test_parameters():
    assert orig.OrigParams(Q(1), Q("1/3")).lam == 3
    assert orig.OrigParams(Q("3/4"), Q("2/5")).lam == Q("15/4")
    assert orig.OrigParams(Q(1), Q("1/3"), Q(4)).lam == 4
    with pytest.raises(ValueError):
        orig.OrigParams(Q(1), Q("1/2"))
    with pytest.raises(ValueError):
        orig.OrigParams(Q("3/4"), Q("2/5"), Q(5))
    with pytest.raises(ValueError):
        orig.OrigParams(Q(1), Q("1/3"), Q(2))


def test_tau_of_cases(orig_5, orig_params):
    p, sp = orig_params[0], orig_5[0]
    low = sp.keys[sp.offsets[2]]
    assert isinstance(orig.tau_of(p, sp, low), Type0)
    high = next(k for k in sp.keys[sp.offsets[3] : sp.offsets[4]] if sp.rank(k[3]) > k[1])
    desc = orig.tau_of(p, sp, high)
    assert isinstance(desc, Type2) and desc.beta == p.b
    with pytest.raises(ValueError):
        orig.tau_of(p, sp, orig.SINGLETON)


def test_budget_precheck(orig_params):
    with pytest.raises(BudgetExceeded):
        orig.build_original(orig_params[0], 6, budget=1000)


def test_u_n_and_j_m(orig_5, orig_params):
    p, sp = orig_params[0], orig_5[0]
    maps = orig.ExtensionMaps(p, sp, 4)
    x = CoordVector(3, [Q(g % 3 - 1) for g in range(sp.size(3))])
    y = orig.j_m(p, sp, x, 4, maps)
    assert y.coords[: sp.size(3)] == x.coords
    u = orig.u_n(p, sp, x, maps)
    assert u.coords == y.coords[sp.size(3) :]
    assert x.sup_norm() <= y.sup_norm() <= p.lam * x.sup_norm()
    with pytest.raises(WindowError):
        maps.j(5, x)


def test_cross_check_and_bounds_at_rank_four(orig_params):
    for p in orig_params:
        sp = orig.build_original(p, 4)
        assert orig.cross_check(p, sp).ok
        rep = orig.bounds_report(p, sp, 4)
        assert rep.ok


def test_basis_projection_maxima_frozen(orig_5, orig_params):
    # computed once from the exhaustive norm scan and frozen
    for sp, p, expected in zip(orig_5, orig_params, (Q("17/9"), Q("173/100"))):
        rep = orig.bounds_report(p, sp, 5)
        assert rep.get("basis-projections").witness["max_norm"] == expected


def test_basic_operator_properties(orig_5):
    sp = orig_5[0]
    bases = orig.canonical_bases(sp, [2, 3])
    assert sp.keys[bases[3]] == (4, 1, 0, 0, -1, -1)
    for n, base in bases.items():
        op = orig.basic_operator(sp, base, 5)
        assert orig.verify_basic_operator(sp, op, 5).ok
        assert orig.commutes_with_projections(sp, op, 4)
        assert sorted(op.F) == list(range(sp.size(5)))
        # S is an isometry on d-vectors: ||S d_g|| = ||d_g||
        for g in range(sp.size(3)):
            d = biorthogonal_vector(sp, g, 5)
            assert op.apply(d).sup_norm() == d.sup_norm()


def test_separation_value(orig_5, orig_params):
    sp, p = orig_5[0], orig_params[0]
    bases = orig.canonical_bases(sp, [2, 3])
    ops = {n: orig.basic_operator(sp, bases[n]) for n in bases}
    w = orig.separation(sp, ops[3], ops[2], p.lam)
    assert w["value"] == Q("1/2") and w["dstar_norm"] == 2
    assert w["Sn_fixes_d"] and w["Sm_flips_d"] and w["holds"]
    with pytest.raises(ValueError):
        orig.separation(sp, ops[2], ops[3], p.lam)


def test_nonseparability_witness_rank_six(orig_6, orig_params):
    sp, p = orig_6, orig_params[0]
    bases = orig.canonical_bases(sp, [2, 3, 4, 5])
    ops = {n: orig.basic_operator(sp, bases[n]) for n in bases}
    w = orig.nonseparability_witness(sp, ops, (2, 3, 4), (2, 3, 5), p.lam)
    assert (w["k"], w["pairing"], w["pairing_tilde"], w["difference"]) == (3, 0, -1, Q("1/2"))
    T = orig.ComposedIsometry([ops[2], ops[3], ops[4]])
    assert orig.stabilization(sp, T, 5)
    with pytest.raises(ValueError):
        orig.ComposedIsometry([ops[3], ops[2]])


def test_composed_isometry_matrix_is_adjoint(orig_5):
    sp = orig_5[0]
    bases = orig.canonical_bases(sp, [2, 3])
    T = orig.ComposedIsometry([orig.basic_operator(sp, bases[n], 4) for n in (2, 3)])
    size = sp.size(4)
    M = T.matrix(size)
    for g in (0, 3, 20, size - 1):
        x = unit_vector(sp, g, 4)
        Tx = T.apply(x)
        for t in range(0, size, 7):
            assert Tx[t] == pair(x, M.column(t))
