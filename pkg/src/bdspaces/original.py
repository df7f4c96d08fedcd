"""The original Bourgain-Delbaen spaces X_{a,b}.

Elements of Delta_{n+1} are tuples (n+1, k, xi, eta, eps, eps') with
1 <= k < n, xi in Gamma_k, eta in Gamma_n and signs eps, eps'.  Gamma_1 is a
single element and Delta_2 is empty.

Two independent descriptions are implemented: the tau-map translation that
feeds the generic engine, and the direct recursion of extension maps
u_n / i_{m,n} / j_m.  ``cross_check`` compares the two.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

from .engine import (
    BDSpace,
    BudgetExceeded,
    EngineConfig,
    Trivial,
    Type0,
    Type2,
    basis_projection_norms,
    biorthogonal_vector,
    build_space,
)
from .linalg import (
    ONE,
    ZERO,
    CoordVector,
    Q,
    RatMatrix,
    Rational,
    SparseFunctional,
    WindowError,
    combine,
    pair,
)
from .report import Report

SINGLETON = (1,)
DEFAULT_BUDGET = 400_000


@dataclass(frozen=True)
class OrigParams:
    a: Rational
    b: Rational
    lam: Optional[Rational] = None

    def __post_init__(self):
        a, b = Q(self.a), Q(self.b)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        half = Q("1/2")
        if a == ONE:
            if not ZERO < b < half:
                raise ValueError(f"case a = 1 needs 0 < b < 1/2, got b = {b}")
            lam = ONE / (1 - 2 * b) if self.lam is None else Q(self.lam)
            if not (lam > ONE and 1 + 2 * b * lam <= lam):
                raise ValueError(f"case a = 1 needs lambda > 1 and 1 + 2 b lambda <= lambda, got {lam}")
        else:
            if not (ZERO < b < half < a < ONE and a + b > ONE):
                raise ValueError(f"need 0 < b < 1/2 < a < 1 and a + b > 1, got a = {a}, b = {b}")
            lam = a / (1 - 2 * b)
            if self.lam is not None and Q(self.lam) != lam:
                raise ValueError(f"for a < 1, lambda is a/(1-2b) = {lam}, not {self.lam}")
        object.__setattr__(self, "lam", lam)

    @property
    def case(self) -> int:
        return 2 if self.a == ONE else 1


def delta_size(space_sizes: Sequence[int], n: int) -> int:
    """|Delta_{n+1}| = 4 |Gamma_n| sum_{k<n} |Gamma_k| given sizes[r] = |Gamma_r|."""
    if n == 0:
        return 1
    return 4 * space_sizes[n] * sum(space_sizes[k] for k in range(1, n))


def gamma_sizes(N: int) -> list[int]:
    """[|Gamma_0|, ..., |Gamma_N|] from the counting recursion alone."""
    sizes = [0]
    for n in range(N):
        sizes.append(sizes[-1] + delta_size(sizes, n))
    return sizes


def tau_of(params: OrigParams, space: BDSpace, key: tuple):
    """Descriptor for a tuple (n+1, l, xi, eta, eps, eps') relative to the built Gamma_n."""
    if len(key) != 6:
        raise ValueError(f"malformed element {key!r}; the singleton has no tau")
    r, l, xi, eta, eps, eps2 = key
    if eps not in (1, -1) or eps2 not in (1, -1) or not 1 <= l < r - 1:
        raise ValueError(f"malformed element {key!r}")
    if space.rank(eta) <= l:
        return Type0(eps, params.a, xi)
    return Type2(eps, params.a, xi, l, params.b, SparseFunctional.unit(eta, eps2))


def _tuples(space: BDSpace, n: int):
    """Elements of Delta_{n+1} in canonical (sorted) order."""
    size_n = space.size(n)
    for k in range(1, n):
        for xi in range(space.size(k)):
            for eta in range(size_n):
                for eps in (-1, 1):
                    for eps2 in (-1, 1):
                        yield (n + 1, k, xi, eta, eps, eps2)


def make_provider(params: OrigParams, budget: Optional[int]):
    def provider(space: BDSpace, n: int):
        if n == 0:
            return [(SINGLETON, Trivial())]
        sizes = space.offsets
        need = len(space) + delta_size(sizes, n)
        if budget is not None and need > budget:
            raise BudgetExceeded(f"Gamma_{n + 1} has {need} elements; element budget is {budget}")
        return ((key, tau_of(params, space, key)) for key in _tuples(space, n))

    return provider


def build_original(params: OrigParams, N: int, budget: Optional[int] = DEFAULT_BUDGET, jobs: int = 1) -> BDSpace:
    if N < 1:
        raise ValueError("max_rank must be a positive integer")
    cfg = EngineConfig(params.b, N, make_provider(params, budget), budget, jobs)
    space = build_space(cfg, label=f"original a={params.a} b={params.b}")
    space.params = params
    return space


def enumerate_gamma(params: OrigParams, N: int, budget: Optional[int] = DEFAULT_BUDGET) -> list[tuple]:
    """Gamma_N as the list of element tuples in id order."""
    return list(build_original(params, N, budget).keys)


# -- the direct recursion u_n / i_{m,n} ------------------------------------


class ExtensionMaps:
    """The maps i_{k,n} built from u_n without using the engine's projections.

    ``rows[k][n][h]`` is row h of i_{k,n} (a functional on Gamma_k) for h in Gamma_n.
    Only the tuple data and rank sizes of ``space`` are read.
    """

    def __init__(self, params: OrigParams, space: BDSpace, N: Optional[int] = None):
        self.params = params
        self.space = space
        self.N = space.max_rank if N is None else N
        if self.N > space.max_rank:
            raise WindowError(f"rank {self.N} exceeds the built rank {space.max_rank}")
        self.u_rows: dict[int, list[SparseFunctional]] = {}
        self.rows: dict[int, dict[int, list[SparseFunctional]]] = {k: {} for k in range(1, self.N + 1)}
        for k in range(1, self.N + 1):
            self.rows[k][k] = [SparseFunctional.unit(h) for h in range(space.size(k))]
        for n in range(1, self.N):
            self._extend(n)

    def _extend(self, n: int) -> None:
        sp, a, b = self.space, self.params.a, self.params.b
        u = []
        for h in sp.ids_of_rank(n + 1):
            key = sp.keys[h]
            if len(key) == 1:
                u.append(SparseFunctional())
                continue
            _, k, xi, eta, eps, eps2 = key
            # eps a x(xi) + eps' b [x(eta) - (i_{k,n} pi_k x)(eta)]
            row = SparseFunctional.unit(xi, eps * a).axpy(eps2 * b, SparseFunctional.unit(eta) - self.rows[k][n][eta])
            u.append(row)
        self.u_rows[n] = u
        for k in range(1, n + 1):
            prev = self.rows[k][n]
            self.rows[k][n + 1] = prev + [combine((v, prev[t]) for t, v in row.items()) for row in u]

    def u_matrix(self, n: int) -> RatMatrix:
        """u_n as a matrix from l_inf(Gamma_n) to l_inf(Delta_{n+1}), one row per element."""
        return _rows_to_matrix(self.u_rows[n], self.space.size(n))

    def i_matrix(self, m: int, n: int) -> RatMatrix:
        """i_{m,n}: l_inf(Gamma_m) -> l_inf(Gamma_n), m <= n."""
        if not 1 <= m <= n <= self.N:
            raise WindowError(f"need 1 <= m <= n <= {self.N}, got m={m}, n={n}")
        return _rows_to_matrix(self.rows[m][n], self.space.size(m))

    def i_norm(self, m: int, n: int) -> Rational:
        return max((r.norm() for r in self.rows[m][n]), default=ZERO)

    def apply_u(self, n: int, x: CoordVector) -> CoordVector:
        if x.window != n or len(x) != self.space.size(n):
            raise WindowError(f"u_{n} needs a vector on exactly Gamma_{n}")
        return CoordVector._wrap(n + 1, tuple(pair(x, row) for row in self.u_rows[n]))

    def j(self, m: int, x: CoordVector, N: Optional[int] = None) -> CoordVector:
        """j_m x = i_{m,N} x."""
        N = self.N if N is None else N
        if m > N:
            raise WindowError(f"j_{m} cannot map into the smaller rank {N}")
        if x.window != m or len(x) != self.space.size(m):
            raise WindowError(f"j_{m} needs a vector on exactly Gamma_{m}")
        return CoordVector._wrap(N, tuple(pair(x, row) for row in self.rows[m][N]))

    def istar_e(self, h: int) -> SparseFunctional:
        """i*_n e*_h for h in Delta_{n+1}: row h of i_{n,n+1}."""
        r = self.space.rank(h)
        return self.rows[r - 1][r][h] if r > 1 else SparseFunctional()


def _rows_to_matrix(rows: list[SparseFunctional], n_cols: int) -> RatMatrix:
    cols: dict[int, dict] = {}
    for i, row in enumerate(rows):
        for j, v in row.items():
            cols.setdefault(j, {})[i] = v
    return RatMatrix(len(rows), n_cols, {j: SparseFunctional._wrap(d) for j, d in cols.items()})


def u_n(params: OrigParams, space: BDSpace, x: CoordVector, maps: Optional[ExtensionMaps] = None) -> CoordVector:
    """(u_n x)(gamma) on Delta_{n+1} for x on Gamma_n."""
    maps = maps or ExtensionMaps(params, space, min(x.window + 1, space.max_rank))
    return maps.apply_u(x.window, x)


def j_m(params: OrigParams, space: BDSpace, x: CoordVector, N: int, maps: Optional[ExtensionMaps] = None) -> CoordVector:
    maps = maps or ExtensionMaps(params, space, N)
    return maps.j(x.window, x, N)


def cross_check(params: OrigParams, space: BDSpace, N: Optional[int] = None, maps: Optional[ExtensionMaps] = None) -> Report:
    """Compare the engine's c*_g with i*_n e*_g from the u_n recursion, for every g of rank <= N."""
    N = space.max_rank if N is None else N
    maps = maps or ExtensionMaps(params, space, N)
    rep = Report("original-cross-check")
    mismatches = []
    for h in range(space.size(N)):
        if space.cstar[h] != maps.istar_e(h):
            mismatches.append({"id": h, "element": list(space.keys[h]), "engine": space.cstar[h], "direct": maps.istar_e(h)})
    rep.add(
        "cstar-equals-istar",
        "tau-map translation: engine c*_g coincides with i*_n e*_g",
        not mismatches,
        checked=space.size(N),
        mismatches=mismatches[:5],
        mismatch_count=len(mismatches),
    )
    return rep


def bounds_report(params: OrigParams, space: BDSpace, N: int, maps: Optional[ExtensionMaps] = None) -> Report:
    """Basis projection norms, ||i_{m,n}|| and ||d_g|| on Gamma_N, all against lambda."""
    maps = maps or ExtensionMaps(params, space, N)
    lam = params.lam
    rep = Report("original-bounds")
    norms = basis_projection_norms(space, N)
    worst = max(v for _, v in norms)
    rep.add("basis-projections", "basis constant of (d*) is at most lambda", worst <= lam, max_norm=worst, bound=lam, count=len(norms))
    worst_i = ZERO
    for m in range(1, N + 1):
        for n in range(m, N + 1):
            v = maps.i_norm(m, n)
            worst_i = max(worst_i, v)
            if not ONE <= v <= lam:
                rep.add(f"i-norm-{m}-{n}", "||x|| <= ||i_{m,n} x|| <= lambda ||x||", False, norm=v, bound=lam)
    rep.add("extension-norms", "||x|| <= ||i_{m,n} x|| <= lambda ||x||", True, max_norm=worst_i, bound=lam)
    bad = []
    for g in range(space.size(N)):
        if biorthogonal_vector(space, g, N).sup_norm() != ONE:
            bad.append(g)
    rep.add("normalized-basis", "the basis (d_g) is normalized", not bad, checked=space.size(N), offenders=bad[:5])
    return rep


# -- basic operators -------------------------------------------------------


@dataclass
class BasicOperator:
    """Isometry S of rank n with base gamma in Delta_{n+1}.

    ``F`` is the underlying rank-preserving bijection on Gamma_N and
    ``sign[t]`` is -1 exactly for t in {gamma, twin}, so S* e*_t = sign[t] e*_{F(t)}.
    """

    base: int
    twin: int
    rank: int
    window: int
    F: list[int]
    sign: list[int]
    _inv: Optional[list[int]] = field(default=None, repr=False)

    @property
    def F_inv(self) -> list[int]:
        if self._inv is None:
            inv = [0] * len(self.F)
            for t, ft in enumerate(self.F):
                inv[ft] = t
            self._inv = inv
        return self._inv

    def star_apply(self, f: SparseFunctional) -> SparseFunctional:
        """S* f on l1(Gamma_N)."""
        F, s, n = self.F, self.sign, len(self.F)
        out = {}
        for t, v in f.items():
            if t >= n:
                raise WindowError(f"gamma id {t} outside the operator window {self.window}")
            out[F[t]] = s[t] * v
        return SparseFunctional._wrap(out)

    def apply(self, x: CoordVector) -> CoordVector:
        """S x on the window: (S x)(t) = <x, S* e*_t> = sign[t] x(F(t))."""
        if len(x) != len(self.F):
            raise WindowError(f"vector window {x.window} does not match operator window {self.window}")
        c = x.coords
        return CoordVector._wrap(x.window, tuple(self.sign[t] * c[ft] for t, ft in enumerate(self.F)))

    def matrix(self) -> RatMatrix:
        n = len(self.F)
        return RatMatrix(n, n, {t: SparseFunctional.unit(self.F[t], self.sign[t]) for t in range(n)})


def basic_operator(space: BDSpace, base: int, N: Optional[int] = None) -> BasicOperator:
    """Build F and S* for the base element, following the rank recursion for F."""
    N = space.max_rank if N is None else N
    key = space.keys[base]
    r = space.rank(base)
    if len(key) != 6 or r < 3:
        raise ValueError("the base of a basic operator must lie in Delta_{n+1} with n >= 2")
    if r > N:
        raise WindowError(f"base has rank {r} beyond the window {N}")
    twin = space.index[key[:4] + (-key[4], -key[5])]
    special = {base, twin}
    size = space.size(N)
    F = list(range(size))
    F[base], F[twin] = twin, base
    index, keys, ranks = space.index, space.keys, space.ranks
    for t in range(space.size(r), size):
        rr, l, th, ph, e1, e2 = keys[t]
        s_th = -1 if th in special else 1
        if ranks[ph] <= l:
            image = (rr, l, F[th], ph, e1 * s_th, e2)
        else:
            s_ph = -1 if ph in special else 1
            if s_th == -1 and s_ph == -1:
                raise AssertionError(f"element {keys[t]!r} has both theta and phi in the base pair")
            image = (rr, l, F[th], F[ph], e1 * s_th, e2 * s_ph)
        F[t] = index[image]
    sign = [1] * size
    sign[base] = sign[twin] = -1
    return BasicOperator(base, twin, r - 1, N, F, sign)


def verify_basic_operator(space: BDSpace, op: BasicOperator, N: Optional[int] = None) -> Report:
    """Check S* d*_t = +-d*_{F(t)}, rank preservation, bijectivity and commutation with P*_(0,j]."""
    N = op.window if N is None else N
    size = space.size(N)
    rep = Report("basic-operator")
    rep.add("bijection", "F is a bijection of Gamma_N", sorted(op.F[:size]) == list(range(size)))
    rep.add("rank-preserving", "F preserves rank", all(space.ranks[op.F[t]] == space.ranks[t] for t in range(size)))
    fixed = all(op.F[t] == t for t in range(space.size(op.rank + 1)) if t not in (op.base, op.twin))
    rep.add("fixes-low-ranks", "F fixes Gamma_{n+1} apart from swapping base and twin", fixed and op.F[op.base] == op.twin)
    bad = []
    for t in range(size):
        lhs = op.star_apply(space.dstar(t))
        rhs = space.dstar(op.F[t]) * op.sign[t]
        if lhs != rhs:
            bad.append(t)
            if len(bad) >= 5:
                break
    rep.add("dstar-action", "S* d*_t = d*_{F(t)}, with a sign change exactly on the base pair", not bad, offenders=bad)
    e_gamma = op.star_apply(space.estar(op.base))
    rep.add("base-image", "S* e*_gamma = -e*_{twin}", e_gamma == SparseFunctional.unit(op.twin, -1))
    return rep


def commutes_with_projections(space: BDSpace, op: BasicOperator, N: Optional[int] = None, ids=None) -> bool:
    """P*_(0,j] S* = S* P*_(0,j] on each e*_t (all t in Gamma_N unless ``ids`` given), every j <= N."""
    N = op.window if N is None else N
    ids = range(space.size(N)) if ids is None else ids
    for t in ids:
        e = space.estar(t)
        for j in range(1, N + 1):
            if space.project(op.star_apply(e), j) != op.star_apply(space.project(e, j)):
                return False
    return True


def separation(space: BDSpace, Sn: BasicOperator, Sm: BasicOperator, lam: Rational, N: Optional[int] = None) -> dict:
    """Witness |<(S_n - S_m) d_gamma, d*_gamma / ||d*_gamma||>| with gamma = base(S_m)."""
    if not Sm.rank < Sn.rank:
        raise ValueError(f"need rank(S_m) < rank(S_n), got {Sm.rank} and {Sn.rank}")
    N = min(Sn.window, Sm.window) if N is None else N
    gamma = Sm.base
    d = biorthogonal_vector(space, gamma, N)
    diff = Sn.apply(d) - Sm.apply(d)
    dstar = space.dstar(gamma)
    norm = dstar.norm()
    value = abs(pair(diff, dstar)) / norm
    twin_vec = biorthogonal_vector(space, Sm.twin, N)
    return {
        "gamma": gamma,
        "value": value,
        "dstar_norm": norm,
        "lower_bound": ONE / (2 * lam),
        "Sn_fixes_d": Sn.apply(d) == d,
        "Sm_flips_d": Sm.apply(d) == twin_vec * -1,
        "value_is_inverse_norm": value == ONE / norm,
        "holds": value >= ONE / (2 * lam) and norm <= 1 + lam <= 2 * lam,
    }


class ComposedIsometry:
    """Finite prefix T*_{1,L} = S*_{n_L} o ... o S*_{n_1} on l1(Gamma_N)."""

    def __init__(self, ops: Sequence[BasicOperator]):
        ranks = [op.rank for op in ops]
        if not ranks or ranks[0] < 2 or any(x >= y for x, y in zip(ranks, ranks[1:])):
            raise ValueError(f"prefix ranks must be strictly increasing from at least 2, got {ranks}")
        self.ops = list(ops)
        self.ranks = ranks

    def star_apply(self, f: SparseFunctional, upto: Optional[int] = None) -> SparseFunctional:
        for op in self.ops[:upto]:
            f = op.star_apply(f)
        return f

    def apply(self, x: CoordVector) -> CoordVector:
        """T x with (T x)(t) = <x, T* e*_t>; the adjoint reverses the order of the factors."""
        for op in reversed(self.ops):
            x = op.apply(x)
        return x

    def matrix(self, size: int) -> RatMatrix:
        return RatMatrix(size, size, {t: self.star_apply(SparseFunctional.unit(t)) for t in range(size)})


def canonical_bases(space: BDSpace, ranks: Sequence[int]) -> dict[int, int]:
    """The fixed base gamma_n in Delta_{n+1} used for S_n: the first element of that rank."""
    return {n: space.offsets[n] for n in ranks}


def stabilization(space: BDSpace, T: ComposedIsometry, N: int) -> bool:
    """For x* supported in Gamma_{n_{l+1}}, only the first l factors act: T*_{1,L} x* = T*_{1,l} x*."""
    for l in range(len(T.ops)):
        bound = min(T.ranks[l], N)
        for t in range(space.size(bound)):
            f = SparseFunctional.unit(t)
            if T.star_apply(f) != T.star_apply(f, l):
                return False
    return True


def nonseparability_witness(space: BDSpace, ops: dict[int, BasicOperator], seq: Sequence[int], seq_tilde: Sequence[int], lam: Rational, N: Optional[int] = None) -> dict:
    """Evaluate the pair (theta, tau) separating two composed isometries.

    ``ops`` maps each rank n to its basic operator S_n.  The sequences agree
    before index k and satisfy seq_tilde[k] < seq[k].
    """
    k = next(i for i, (x, y) in enumerate(zip(seq, seq_tilde)) if x != y)
    if k < 2:
        raise ValueError("the prefixes must share their first two terms")
    if not seq_tilde[k] < seq[k]:
        seq, seq_tilde = seq_tilde, seq
    T = ComposedIsometry([ops[n] for n in seq])
    Tt = ComposedIsometry([ops[n] for n in seq_tilde])
    S_k = ops[seq_tilde[k]]
    tau = S_k.base
    for n in reversed(seq_tilde[:k]):
        tau = ops[n].F_inv[tau]
    theta = S_k.F[S_k.base]
    N = min(op.window for op in T.ops + Tt.ops) if N is None else N
    d_theta = biorthogonal_vector(space, theta, N)
    dstar = space.dstar(tau)
    norm = dstar.norm()
    a = pair(T.apply(d_theta), dstar)
    b = pair(Tt.apply(d_theta), dstar)
    return {
        "k": k + 1,
        "tau": tau,
        "theta": theta,
        "pairing": a,
        "pairing_tilde": b,
        "dstar_norm": norm,
        "difference": abs(a - b) / norm,
        "lower_bound": ONE / (2 * lam),
        "holds": a == 0 and b == -1 and abs(a - b) / norm >= ONE / (2 * lam),
    }
