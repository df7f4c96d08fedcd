"""Named verification suites for each space, as used by ``bdspaces verify``."""

from __future__ import annotations

from typing import Callable, Iterable, Optional

from . import ah as ahmod
from . import original as orig
from . import shift
from .config import Built
from .engine import biorthogonal_vector, check_core
from .linalg import Q, SparseFunctional
from .report import Report, timed

CORE_WINDOW = 5
CALKIN_LAMBDAS = ("1/2", "-1/3", "1/5")


class UnknownSuite(KeyError):
    pass


def _core(b: Built, **_) -> Report:
    return check_core(b.space, min(b.space.max_rank, CORE_WINDOW))


# -- r2 --------------------------------------------------------------------


def _r2_steps(b: Built, steps: Optional[Iterable[int]] = None, **_) -> Report:
    return shift.verify_steps(b.space, steps=range(1, 9) if steps is None else steps)


def _r2_reach(b: Built, **_) -> Report:
    return shift.reachability(b.space)


def _r2_c0(b: Built, **_) -> Report:
    return shift.c0_certificate(b.space)


def _r2_proj(b: Built, **_) -> Report:
    return shift.projection_report(b.space, min(b.space.max_rank, 10))


# -- original --------------------------------------------------------------


def _orig_bounds(b: Built, **_) -> Report:
    N = min(b.space.max_rank, 5)
    return orig.bounds_report(b.space.params, b.space, N)


def _orig_cross(b: Built, **_) -> Report:
    return orig.cross_check(b.space.params, b.space, min(b.space.max_rank, 5))


def _ops(space, ranks):
    bases = orig.canonical_bases(space, ranks)
    return {n: orig.basic_operator(space, bases[n]) for n in ranks}


def _orig_operators(b: Built, **_) -> Report:
    sp = b.space
    rep = Report("original-basic-operators")
    ranks = [n for n in (2, 3) if n < sp.max_rank]
    if not ranks:
        rep.skip("basic-operators", "basic operators need a base in Delta_{n+1} below the top rank", "space too small")
        return rep
    N = min(sp.max_rank, 5)
    for n, op in _ops(sp, ranks).items():
        rep.extend(orig.verify_basic_operator(sp, op, N), prefix=f"S{n}:")
        rep.add(f"S{n}:commutes-with-projections", "P*_(0,j] S* = S* P*_(0,j]", orig.commutes_with_projections(sp, op, min(N, 4)))
    return rep


def _orig_separation(b: Built, **_) -> Report:
    sp = b.space
    rep = Report("original-separation")
    lam = sp.params.lam
    if sp.max_rank < 4:
        rep.skip("separation", "||S_n - S_m|| >= 1/(2 lambda)", "needs max_rank >= 4")
        return rep
    ops = _ops(sp, [n for n in (2, 3, 4, 5) if n < sp.max_rank])
    w = orig.separation(sp, ops[3], ops[2], lam)
    rep.add(
        "separation",
        "||S_n - S_m|| >= 1/(2 lambda), witnessed by d_gamma and d*_gamma / ||d*_gamma||",
        w["holds"] and w["value_is_inverse_norm"],
        **w,
    )
    if 5 in ops:
        T = orig.ComposedIsometry([ops[2], ops[3], ops[4]])
        rep.add("stabilization", "T*_{1,L} x* = T*_{1,l} x* for x* supported below rank n_{l+1}", orig.stabilization(sp, T, min(sp.max_rank, 5)))
        w = orig.nonseparability_witness(sp, ops, (2, 3, 4), (2, 3, 5), lam)
        rep.add("nonseparability", "prefixes differing at the third term are 1/(2 lambda) apart", w["holds"], **w)
    else:
        rep.skip("nonseparability", "prefixes differing at the third term are 1/(2 lambda) apart", "needs max_rank >= 6")
    return rep


# -- AH spaces -------------------------------------------------------------


def _ah(b: Built):
    if b.ah is None:
        raise ValueError("not an AH space")
    return b.ah


def _ah_table(b: Built, **_) -> Report:
    return ahmod.check_operator_table(_ah(b))


def _ah_nil(b: Built, **_) -> Report:
    return ahmod.check_nilpotency(_ah(b))


def _ah_comm(b: Built, **_) -> Report:
    return ahmod.check_commutation(_ah(b))


def _ah_analysis(b: Built, **_) -> Report:
    return ahmod.check_analysis(_ah(b))


def _ah_sigma(b: Built, **_) -> Report:
    return ahmod.check_sigma_lemmas(_ah(b))


def _ah_S(b: Built, **_) -> Report:
    ah = _ah(b)
    N = min(ah.space.max_rank, 4)
    rep = ahmod.check_S(ah, N)
    if ah.params.infinite:
        rep.add("S-shifts-trivial-chain", "S^j d_{(n+1,0)} = d_{(n+1,j)} for j <= n", ahmod.shift_on_trivial_chain(ah, N))
    else:
        rep.add("S-power-zero", "S^k = 0", ahmod.check_S_power_zero(ah, N))
    return rep


def _ah_calkin(b: Built, **_) -> Report:
    ah = _ah(b)
    lams = CALKIN_LAMBDAS if ah.params.infinite else CALKIN_LAMBDAS[: ah.params.kind]
    return ahmod.calkin_witnesses(ah, lams)


def toy_audits(ah: "ahmod.AHSpace") -> Report:
    """RIS averaging and exact-pair audits on a small block sequence of d-vectors.

    x_1 and x_2 are d-vectors of ranks 2 and 4; the chain uses weight 1/m_2
    on the partition q = (1, 3, 5) with b*_i = 0.
    """
    rep = Report("ah-audits")
    sp = ah.space
    if sp.max_rank < 5 or not ah.params.toy_mode:
        rep.skip("audits", "toy-mode inequality audits", "need toy mode and max_rank >= 5")
        return rep
    N = sp.max_rank
    xs = [biorthogonal_vector(sp, sp.ids_of_rank(2)[0], N), biorthogonal_vector(sp, sp.ids_of_rank(4)[0], N)]
    C = max(x.sup_norm() for x in xs)
    rep.extend(ahmod.ris_audit(ah, xs, C, [1, 3], 1), prefix="ris:")
    try:
        _, eta, pair_rep = ahmod.build_exact_pair(ah, xs, (1, 3, 5), [SparseFunctional(), SparseFunctional()], 1, C)
        rep.extend(pair_rep, prefix="exact-pair:")
    except ahmod.ConstructionError as exc:
        rep.skip("exact-pair", "exact pair from the successor chain", str(exc))
    return rep


def _ah_audits(b: Built, **_) -> Report:
    return toy_audits(_ah(b))


SUITES: dict[str, dict[str, Callable[..., Report]]] = {
    "r2": {"core": _core, "steps": _r2_steps, "reachability": _r2_reach, "c0": _r2_c0, "projections": _r2_proj},
    "original": {
        "core": _core,
        "bounds": _orig_bounds,
        "cross-check": _orig_cross,
        "basic-operators": _orig_operators,
        "separation": _orig_separation,
    },
    "ah": {
        "core": _core,
        "operator-table": _ah_table,
        "nilpotency": _ah_nil,
        "commutation": _ah_comm,
        "analysis": _ah_analysis,
        "sigma": _ah_sigma,
        "S": _ah_S,
        "calkin": _ah_calkin,
        "audits": _ah_audits,
    },
}


def suites_for(space: str) -> dict[str, Callable[..., Report]]:
    return SUITES["ah" if space in ("xk", "xinf") else space]


def run_suites(b: Built, names: Optional[Iterable[str]] = None, steps: Optional[Iterable[int]] = None) -> list[Report]:
    table = suites_for(b.cfg.space)
    names = list(table) if not names else list(names)
    for n in names:
        if n not in table:
            raise UnknownSuite(f"unknown suite {n!r} for {b.cfg.space}; choose from {', '.join(table)}")
    reports = []
    for n in names:
        rep = Report(n)
        with timed(rep):
            inner = table[n](b, steps=steps)
        inner.suite, inner.elapsed_ms = n, rep.elapsed_ms
        reports.append(inner)
    return reports
