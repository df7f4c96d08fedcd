"""Argyros-Haydon style spaces X_k (nilpotent shift, k >= 2) and X_inf at finite rank.

Elements are coded by hashable keys:

* ``("base", j)``: the rank-1 elements, 0 <= j < k (only j = 0 for X_inf)
* ``("age1", r, p, w, b)``: age 1, weight 1/m_w, c* = m_w^-1 P*_(p,inf) b*
* ``("succ", r, xi, w, b)``: successor of xi, c* = e*_xi + m_w^-1 P*_(rank xi,inf) b*
* ``("triv", r, j)``: the X_inf elements with c* = 0, 0 <= j < r

``b`` is a tuple of (gamma id, coefficient) pairs sorted by id.  The
functionals b* are drawn from a documented sub-family of the full nets (see
``NetSpec``); the family is closed under G, so every per-element identity is
checked on a G-invariant set.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .engine import (
    BDSpace,
    BudgetExceeded,
    ConstructionError,
    Trivial,
    Type1,
    Type2,
    biorthogonal_vector,
)
from .linalg import ONE, ZERO, CoordVector, Q, Rational, SparseFunctional, WindowError, combine, pair
from .report import Report

INF = "inf"


# -- parameters ------------------------------------------------------------


def _log2_bounds(a: int, k: int) -> tuple[Rational, Rational]:
    """Rational bounds lo <= log2(a) < hi from the bit length of a^k."""
    bits = (a**k).bit_length()
    return Q(bits - 1) / k, Q(bits) / k


def _is_power_of_two(a: int) -> bool:
    return a > 0 and a & (a - 1) == 0


def growth_condition(m_next: int, n_prev: int, n_next: int) -> bool:
    """Exact test of n_next >= (16 n_prev)^(log2 m_next)."""
    base = 16 * n_prev
    if _is_power_of_two(m_next):
        return n_next >= base ** (m_next.bit_length() - 1)
    if _is_power_of_two(base):
        # (2^t)^log2(m) = m^t
        return n_next >= m_next ** (base.bit_length() - 1)
    # log2(m) * log2(base) versus log2(n_next), refined until the intervals separate
    k = 8
    while k <= 1 << 14:
        lm, hm = _log2_bounds(m_next, k)
        lb, hb = _log2_bounds(base, k)
        ln, hn = _log2_bounds(n_next, k)
        if hm * hb <= ln:
            return True
        if lm * lb >= hn:
            return False
        k *= 4
    raise ValueError(f"could not decide n >= (16*{n_prev})^log2({m_next}) at the available precision")


def assumption_violations(m_seq: Sequence[int], n_seq: Sequence[int]) -> list[str]:
    out = []
    if not m_seq or not n_seq:
        return ["m_seq and n_seq must be non-empty"]
    if m_seq[0] < 4:
        out.append(f"m_1 = {m_seq[0]} < 4")
    for j in range(len(m_seq) - 1):
        if m_seq[j + 1] != m_seq[j] ** 2:
            out.append(f"m_{j + 2} = {m_seq[j + 1]} is not m_{j + 1}^2")
    if n_seq[0] < m_seq[0] ** 2:
        out.append(f"n_1 = {n_seq[0]} < m_1^2")
    for j in range(min(len(m_seq), len(n_seq)) - 1):
        if not growth_condition(m_seq[j + 1], n_seq[j], n_seq[j + 1]):
            out.append(f"n_{j + 2} < (16 n_{j + 1})^(log2 m_{j + 2})")
    return out


@dataclass(frozen=True)
class NetSpec:
    """The finite sub-family of b* functionals used at every rank.

    Coefficients are multiples of 1/denominator_bound, supports have at most
    ``support_cap`` points and l1 norm is at most 1.  ``mode`` is
    "exhaustive" or "sampled"; sampled mode keeps ``count`` draws per group
    using a generator seeded from (seed, rank, group).  b* = 0 is kept in every
    group when ``include_zero`` is set.
    """

    denominator_bound: int = 1
    support_cap: int = 1
    mode: str = "sampled"
    seed: int = 0
    count: int = 2
    include_zero: bool = True

    def __post_init__(self):
        if self.denominator_bound < 1 or self.support_cap < 0 or self.count < 0:
            raise ValueError("denominator_bound >= 1, support_cap >= 0 and count >= 0 are required")
        if self.mode not in ("exhaustive", "sampled"):
            raise ValueError(f"unknown net mode {self.mode!r}")


@dataclass(frozen=True)
class AHParams:
    """``kind`` is an integer k >= 2 for X_k or "inf" for X_inf."""

    kind: object
    m_seq: tuple
    n_seq: tuple
    toy_mode: bool = True
    max_rank: int = 4
    net: NetSpec = field(default_factory=NetSpec)
    element_budget: Optional[int] = 200_000

    def __post_init__(self):
        object.__setattr__(self, "m_seq", tuple(int(m) for m in self.m_seq))
        object.__setattr__(self, "n_seq", tuple(int(n) for n in self.n_seq))
        if self.kind != INF and not (isinstance(self.kind, int) and self.kind >= 2):
            raise ValueError(f"kind must be an integer k >= 2 or 'inf', got {self.kind!r}")
        if self.max_rank < 1:
            raise ValueError("max_rank must be a positive integer")
        for name, seq in (("m_seq", self.m_seq), ("n_seq", self.n_seq)):
            if any(x < 1 for x in seq) or any(a >= b for a, b in zip(seq, seq[1:])):
                raise ValueError(f"{name} must be a strictly increasing list of positive integers")
        if len(self.m_seq) < self.max_rank or len(self.n_seq) < self.max_rank:
            raise ValueError(f"weights up to index {self.max_rank} are needed; extend m_seq and n_seq")
        if not self.toy_mode:
            bad = assumption_violations(self.m_seq, self.n_seq)
            if bad:
                raise ValueError("sequences violate the growth assumption: " + "; ".join(bad))

    @property
    def infinite(self) -> bool:
        return self.kind == INF

    def m(self, j: int) -> int:
        return self.m_seq[j - 1]

    def n(self, j: int) -> int:
        return self.n_seq[j - 1]

    def weight(self, j: int) -> Rational:
        return ONE / self.m(j)

    @property
    def chain_bound(self) -> Optional[int]:
        """Longest G^-j considered for Sigma: k - 1 for X_k, unbounded for X_inf."""
        return None if self.infinite else self.kind - 1


# -- the built object ------------------------------------------------------


def _btuple(f: SparseFunctional) -> tuple:
    return tuple(sorted(f.items()))


def _bfunc(b: tuple) -> SparseFunctional:
    return SparseFunctional._wrap(dict(b))


class AHSpace:
    """BD space plus the coding and operator tables built alongside it."""

    def __init__(self, params: AHParams):
        self.params = params
        top = ONE / params.m(1)
        self.space = BDSpace(top if top < Q("1/2") else None, label=f"ah kind={params.kind}")
        self.G: list[Optional[int]] = []
        self.sigma: list[int] = []
        self.Sigma: list[frozenset] = []
        self.age: list[int] = []
        self.widx: list[int] = []  # 0 for base and trivial elements
        self._next_sigma = params.max_rank + 1

    # -- per-element data --------------------------------------------------
    def key(self, g: int):
        return self.space.keys[g]

    def kind(self, g: int) -> str:
        return self.space.keys[g][0]

    def bstar(self, g: int) -> SparseFunctional:
        k = self.space.keys[g]
        return _bfunc(k[4]) if k[0] in ("age1", "succ") else SparseFunctional()

    def is_nontrivial(self, g: int) -> bool:
        return self.age[g] >= 1

    def weight(self, g: int) -> Rational:
        return ZERO if self.widx[g] == 0 else self.params.weight(self.widx[g])

    def __len__(self):
        return len(self.space)

    def tables(self) -> dict:
        """G, sigma, Sigma, age and weight index as JSON-ready lists."""
        return {
            "G": self.G,
            "sigma": self.sigma,
            "Sigma": [sorted(s) for s in self.Sigma],
            "age": self.age,
            "widx": self.widx,
        }

    @classmethod
    def from_tables(cls, params: AHParams, space: BDSpace, tables: dict) -> "AHSpace":
        ah = cls(params)
        ah.space = space
        ah.G = list(tables["G"])
        ah.sigma = list(tables["sigma"])
        ah.Sigma = [frozenset(s) for s in tables["Sigma"]]
        ah.age = list(tables["age"])
        ah.widx = list(tables["widx"])
        ah._next_sigma = max(ah.sigma, default=params.max_rank) + 1
        return ah

    # -- R* and S ----------------------------------------------------------
    def R_star(self, f: SparseFunctional) -> SparseFunctional:
        """R* e*_g = e*_{G(g)} or 0, extended linearly."""
        n = len(self.G)
        out: dict = {}
        for g, v in f.items():
            if not 0 <= g < n:
                raise KeyError(f"unknown gamma id {g}")
            h = self.G[g]
            if h is not None:
                s = out.get(h, ZERO) + v
                if s:
                    out[h] = s
                else:
                    out.pop(h)
        return SparseFunctional._wrap(out)

    def R_star_power(self, f: SparseFunctional, j: int) -> SparseFunctional:
        for _ in range(j):
            f = self.R_star(f)
        return f

    def S_apply(self, x: CoordVector) -> CoordVector:
        """(S x)(g) = <x, R* e*_g> = x(G(g)) when G(g) is defined, else 0."""
        size = self.space.size(x.window)
        if len(x) != size:
            raise WindowError(f"vector has {len(x)} ids but Gamma_{x.window} has {size}")
        c, G = x.coords, self.G
        return CoordVector._wrap(x.window, tuple(ZERO if G[g] is None else c[G[g]] for g in range(size)))

    def preimages(self, d: int) -> list[int]:
        return [g for g in self.space.ids_of_rank(self.space.rank(d)) if self.G[g] == d]

    def nilpotency_index(self, g: int) -> int:
        """Smallest l >= 1 with G^l(g) undefined."""
        l, h = 1, self.G[g]
        while h is not None:
            l, h = l + 1, self.G[h]
        return l


# -- construction ----------------------------------------------------------


def _rng(params: AHParams, rank: int, group) -> random.Random:
    return random.Random(f"{params.net.seed}:{rank}:{group!r}")


def _sample_bstar(rng: random.Random, ids: Sequence[int], net: NetSpec) -> tuple:
    if not ids or net.support_cap == 0:
        return ()
    size = rng.randint(1, min(net.support_cap, len(ids)))
    support = sorted(rng.sample(list(ids), size))
    budget = net.denominator_bound
    coeffs = []
    for i, g in enumerate(support):
        # leave at least one unit for each later support point
        room = budget - (len(support) - i - 1)
        if room < 1:
            break
        num = rng.randint(1, room)
        budget -= num
        coeffs.append((g, Q(num * rng.choice((1, -1))) / net.denominator_bound))
    return tuple(coeffs)


def _all_bstars(ids: Sequence[int], net: NetSpec):
    """Every b* of the family on ``ids`` in canonical order (including 0)."""
    D = net.denominator_bound
    yield ()
    for size in range(1, min(net.support_cap, len(ids)) + 1):
        for support in itertools.combinations(ids, size):
            for nums in itertools.product(range(1, D + 1), repeat=size):
                if sum(nums) > D:
                    continue
                for signs in itertools.product((1, -1), repeat=size):
                    yield tuple((g, Q(s * a) / D) for g, a, s in zip(support, nums, signs))


def _choose(params: AHParams, rank: int, group, candidates: list) -> list:
    net = params.net
    if net.mode == "exhaustive":
        return candidates
    rng = _rng(params, rank, group)
    picked = rng.sample(candidates, min(net.count, len(candidates)))
    if net.include_zero and () in candidates and () not in picked:
        picked.append(())
    return picked


def _even_family(params: AHParams, ah: AHSpace, rank: int, group, ids: Sequence[int]) -> list:
    net = params.net
    if net.mode == "exhaustive":
        return list(_all_bstars(ids, net))
    rng = _rng(params, rank, group)
    seen = {(): None} if net.include_zero else {}
    for _ in range(net.count):
        seen.setdefault(_sample_bstar(rng, ids, net), None)
    return list(seen)


def _odd_eta_ok(params: AHParams, ah: AHSpace, eta: int, j_odd: int, codes: Optional[frozenset]) -> bool:
    """weight(eta) = 1/m_{4i} < n_{j_odd}^-2, with i in ``codes`` when given."""
    w = ah.widx[eta]
    if w == 0 or w % 4:
        return False
    if codes is not None and w // 4 not in codes:
        return False
    return params.m(w) > params.n(j_odd) ** 2


def _candidates(params: AHParams, ah: AHSpace, n: int) -> dict:
    """Keys and descriptors for the generated part of Delta_{n+1} (before G-closure)."""
    sp = ah.space
    r = n + 1
    out = {}
    size_n = sp.size(n)
    for w in range(1, r + 1):
        for p in range(0, n):
            ids = range(sp.size(p), size_n)
            if w % 2 == 0:
                family = _even_family(params, ah, r, ("age1", p, w), ids)
            else:
                etas = [((h, ONE),) for h in ids if _odd_eta_ok(params, ah, h, w, None)]
                family = _choose(params, r, ("age1", p, w), [()] + etas)
            for b in family:
                out[("age1", r, p, w, b)] = None
    for xi in range(sp.size(1), size_n):
        p = sp.rank(xi)
        w = ah.widx[xi]
        if not ah.is_nontrivial(xi) or p > n - 1 or w > p or ah.age[xi] >= params.n(w):
            continue
        ids = range(sp.size(p), size_n)
        if w % 2 == 0:
            family = _even_family(params, ah, r, ("succ", xi), ids)
        else:
            etas = [((h, ONE),) for h in ids if _odd_eta_ok(params, ah, h, w, ah.Sigma[xi])]
            family = _choose(params, r, ("succ", xi), [()] + etas)
        for b in family:
            out[("succ", r, xi, w, b)] = None
    # witnesses (n+1, p = 0, weight 1/m_2, e*_j) for the Calkin computations
    if r >= 2:
        for j in range(1 if params.infinite else params.kind):
            out[("age1", r, 0, 2, ((j, ONE),))] = None
    if params.infinite:
        for j in range(r):
            out[("triv", r, j)] = None
    return out


def _G_key(ah: AHSpace, key):
    """G of a not-yet-inserted element of the current rank, as a key (or None)."""
    sp = ah.space
    tag = key[0]
    if tag == "triv":
        _, r, j = key
        return ("triv", r, j - 1) if j >= 1 else None
    if tag == "age1":
        _, r, p, w, b = key
        Rb = ah.R_star(_bfunc(b))
        if not sp.tail(Rb, p):
            return None
        return ("age1", r, p, w, _btuple(Rb))
    if tag == "succ":
        _, r, xi, w, b = key
        Rb = ah.R_star(_bfunc(b))
        Gxi = ah.G[xi]
        if Gxi is None:
            pr = sp.rank(xi)
            if not sp.tail(Rb, pr):
                return None
            return ("age1", r, pr, w, _btuple(Rb))
        return ("succ", r, Gxi, w, _btuple(Rb))
    raise ConstructionError(f"no G rule for {key!r}")


def _age_of(ah: AHSpace, key) -> int:
    if key[0] in ("base", "triv"):
        return 0
    if key[0] == "age1":
        return 1
    return 1 + ah.age[key[2]]


def _validate_element(params: AHParams, ah: AHSpace, key, n: int) -> None:
    """Weight, age, support and odd-weight rules for an element of Delta_{n+1}."""
    sp = ah.space

    def bad(msg):
        raise ConstructionError(f"element {key!r} rejected: {msg}")

    tag = key[0]
    if tag == "triv":
        if not params.infinite or not 0 <= key[2] <= n:
            bad("trivial elements (n+1, j) need X_inf and 0 <= j <= n")
        return
    if tag not in ("age1", "succ"):
        bad("unknown kind")
    _, r, p_or_xi, w, b = key
    if r != n + 1:
        bad(f"rank {r} does not match n+1 = {n + 1}")
    bf = _bfunc(b)
    if bf.norm() > ONE:
        bad("b* has l1 norm above 1")
    D = params.net.denominator_bound
    if any((v * D).denominator != 1 for _, v in b):
        bad(f"a coefficient of b* has denominator not dividing {D}")
    if tag == "age1":
        p = p_or_xi
        if not 0 <= p < n:
            bad(f"p = {p} outside 0 <= p < {n}")
        if not 1 <= w <= r:
            bad(f"weight index {w} outside 1..{r}")
    else:
        xi = p_or_xi
        if not 0 <= xi < sp.size(n - 1) if n >= 1 else True:
            bad("xi must have rank at most n - 1")
        p = sp.rank(xi)
        if not ah.is_nontrivial(xi) or ah.widx[xi] != w:
            bad("xi must be a non-trivial element of the same weight")
        if w > p:
            bad(f"weight index {w} exceeds rank xi = {p}")
        if ah.age[xi] >= params.n(w):
            bad(f"age xi = {ah.age[xi]} is not below n_{w} = {params.n(w)}")
    lo = sp.size(p)
    if any(not lo <= h < sp.size(n) for h, _ in b):
        bad(f"supp b* is not inside Gamma_{n} minus Gamma_{p}")
    if w % 2 == 1 and b:
        codes = ah.Sigma[p_or_xi] if tag == "succ" else None
        if len(b) != 1 or b[0][1] != ONE or not _odd_eta_ok(params, ah, b[0][0], w, codes):
            bad("odd-weight b* must be 0 or e*_eta with weight(eta) = 1/m_{4i} < n_w^-2 (i coded by Sigma(xi))")


def _descriptor(params: AHParams, ah: AHSpace, key):
    tag = key[0]
    if tag in ("base", "triv"):
        return Trivial()
    _, r, p_or_xi, w, b = key
    beta = params.weight(w)
    if tag == "age1":
        return Type1(p_or_xi, beta, _bfunc(b))
    return Type2(1, ONE, p_or_xi, ah.space.rank(p_or_xi), beta, _bfunc(b))


def build_ah_space(params: AHParams, jobs: int = 1) -> AHSpace:
    """Rank-by-rank construction of the space, G, sigma and Sigma."""
    ah = AHSpace(params)
    sp = ah.space
    budget = params.element_budget
    for n in range(params.max_rank):
        if n == 0:
            k = 1 if params.infinite else params.kind
            keys = {("base", j): None for j in range(k)}
            g_keys = {("base", j): (("base", j - 1) if j >= 1 else None) for j in range(k)}
        else:
            keys = _candidates(params, ah, n)
            g_keys = {}
            todo = list(keys)
            while todo:  # close under G inside the rank
                key = todo.pop()
                if key in g_keys:
                    continue
                gk = _G_key(ah, key)
                g_keys[key] = gk
                if gk is not None and gk not in keys:
                    keys[gk] = None
                    todo.append(gk)
                if budget is not None and len(sp) + len(keys) > budget:
                    raise BudgetExceeded(f"rank {n + 1} exceeds the element budget {budget}")
            for key in keys:
                _validate_element(params, ah, key, n)
        ages = {key: _age_of(ah, key) for key in keys}
        new = sp.add_rank(((key, _descriptor(params, ah, key)) for key in keys), jobs=jobs, budget=budget)
        for g in new:
            key = sp.keys[g]
            gk = g_keys[key]
            ah.G.append(None if gk is None else sp.index[gk])
            ah.age.append(ages[key])
            ah.widx.append(key[3] if key[0] in ("age1", "succ") else 0)
            ah.sigma.append(ah._next_sigma)
            ah._next_sigma += 1
        _fill_Sigma(ah, new)
    return ah


def _fill_Sigma(ah: AHSpace, ids: range) -> None:
    """Sigma(g) = {sigma(g)} union sigma(G^-j(g)) for 1 <= j (<= k-1 for X_k)."""
    bound = ah.params.chain_bound
    sets = {g: {ah.sigma[g]} for g in ids}
    for d in ids:
        j, h = 1, ah.G[d]
        while h is not None and (bound is None or j <= bound):
            sets[h].add(ah.sigma[d])
            j, h = j + 1, ah.G[h]
    for g in ids:
        ah.Sigma.append(frozenset(sets[g]))


# -- verification ----------------------------------------------------------


def check_operator_table(ah: AHSpace) -> Report:
    sp, p = ah.space, ah.params
    rep = Report("ah-operator-table")
    bad_shape = []
    for g in range(len(sp)):
        h = ah.G[g]
        if h is None:
            continue
        if sp.rank(h) != sp.rank(g) or ah.widx[h] != ah.widx[g] or ah.age[h] > ah.age[g]:
            bad_shape.append(g)
    rep.add("G-shape", "G preserves rank and weight and does not increase age", not bad_shape, checked=len(sp), offenders=bad_shape[:5])
    worst = max(ah.nilpotency_index(g) for g in range(len(sp)))
    if p.infinite:
        over = [g for g in range(len(sp)) if ah.nilpotency_index(g) > sp.rank(g)]
        rep.add("G-chain-length", "some G^l(g) is undefined with l <= rank g", not over, longest=worst, offenders=over[:5])
    else:
        rep.add("G-chain-length", "some G^l(g) is undefined with l <= k", worst <= p.kind, longest=worst, k=p.kind)
    d_bad = []
    for g in range(len(sp)):
        image = ah.R_star(sp.dstar(g))
        target = SparseFunctional() if ah.G[g] is None else sp.dstar(ah.G[g])
        if image != target:
            d_bad.append(g)
    rep.add("R-star-on-dstar", "R* d*_g = d*_{G(g)} or 0", not d_bad, offenders=d_bad[:5])
    return rep


def check_nilpotency(ah: AHSpace) -> Report:
    sp, p = ah.space, ah.params
    rep = Report("ah-nilpotency")
    size = len(sp)
    if p.infinite:
        bad = [g for g in range(size) if ah.R_star_power(sp.estar(g), sp.rank(g))]
        rep.add("R-star-rank-power", "(R*)^{rank g} e*_g = 0 and (R*)^{rank g} d*_g = 0", not bad and not [
            g for g in range(size) if ah.R_star_power(sp.dstar(g), sp.rank(g))
        ], offenders=bad[:5])
        chains = []
        for N in range(1, sp.max_rank):
            g = sp.index.get(("triv", N + 1, N))
            chains.append(g is not None and bool(ah.R_star_power(sp.estar(g), N)))
        rep.add("R-star-not-nilpotent", "(R*)^N e*_{(N+1,N)} is non-zero for each N below the top rank", all(chains), ranks=list(range(1, sp.max_rank)))
    else:
        k = p.kind
        bad = [g for g in range(size) if ah.R_star_power(sp.estar(g), k)]
        rep.add("R-star-k-zero", "(R*)^k = 0", not bad, k=k, offenders=bad[:5])
        witness = next((g for g in range(size) if ah.R_star_power(sp.estar(g), k - 1)), None)
        rep.add("R-star-k-minus-1-nonzero", "(R*)^{k-1} is non-zero", witness is not None, witness=witness)
    return rep


def check_commutation(ah: AHSpace, N: Optional[int] = None) -> Report:
    """R* P*_(0,q] = P*_(0,q] R* column by column, for every q <= N."""
    sp = ah.space
    N = sp.max_rank if N is None else N
    size = sp.size(N)
    bad = []
    for q in range(0, N + 1):
        for g in range(size):
            e = sp.estar(g)
            if ah.R_star(sp.project(e, q)) != sp.project(ah.R_star(e), q):
                bad.append({"q": q, "id": g})
                break
    rep = Report("ah-commutation")
    rep.add("R-star-commutes-with-projections", "P*_(0,q] R* = R* P*_(0,q] for every q", not bad, ranks=N, offenders=bad[:5])
    norm_bad = []
    for g in range(size):
        f = sp.dstar(g)
        img = ah.R_star(f)
        if img.norm() > f.norm():
            norm_bad.append(g)
    rep.add("R-star-contraction", "||R* x*|| <= ||x*||", not norm_bad, offenders=norm_bad[:5])
    return rep


def check_S(ah: AHSpace, N: Optional[int] = None, ids=None) -> Report:
    """S d_delta = sum of d_g over G(g) = delta, and <S x, x*> = <x, R* x*>."""
    sp = ah.space
    N = sp.max_rank if N is None else N
    ids = range(sp.size(N)) if ids is None else ids
    bad, dual_bad = [], []
    for d in ids:
        vec = biorthogonal_vector(sp, d, N)
        lhs = ah.S_apply(vec)
        rhs = CoordVector._wrap(N, (ZERO,) * sp.size(N))
        for g in ah.preimages(d):
            rhs = rhs + biorthogonal_vector(sp, g, N)
        if lhs != rhs:
            bad.append(d)
        for t in range(sp.size(N)):
            if pair(lhs, sp.estar(t)) != pair(vec, ah.R_star(sp.estar(t))):
                dual_bad.append(d)
                break
    rep = Report("ah-S")
    rep.add("S-on-basis", "S d_delta = sum over G(g) = delta of d_g", not bad, checked=len(ids), offenders=bad[:5])
    rep.add("S-dual", "<S x, x*> = <x, R* x*>", not dual_bad, offenders=dual_bad[:5])
    return rep


def check_S_power_zero(ah: AHSpace, N: Optional[int] = None) -> bool:
    """S^k x = 0 for every basis vector d_g on the window (X_k only)."""
    sp = ah.space
    N = sp.max_rank if N is None else N
    for g in range(sp.size(N)):
        x = biorthogonal_vector(sp, g, N)
        for _ in range(ah.params.kind):
            x = ah.S_apply(x)
        if any(x.coords):
            return False
    return True


def shift_on_trivial_chain(ah: AHSpace, N: Optional[int] = None) -> bool:
    """X_inf: S^j d_{(n+1,0)} = d_{(n+1,j)} for 0 <= j <= n."""
    sp = ah.space
    N = sp.max_rank if N is None else N
    for r in range(2, N + 1):
        x = biorthogonal_vector(sp, sp.index[("triv", r, 0)], N)
        for j in range(r):
            if x != biorthogonal_vector(sp, sp.index[("triv", r, j)], N):
                return False
            x = ah.S_apply(x)
    return True


@dataclass
class Analysis:
    p0: int
    chain: list  # (p_r, b*_r, xi_r) for r = 1..a
    weight: Rational


def evaluation_analysis(ah: AHSpace, g: int) -> Analysis:
    """Unfold the successor chain of a non-trivial element."""
    if not ah.is_nontrivial(g):
        raise ValueError(f"element {g} is trivial and has no analysis")
    sp = ah.space
    chain = []
    h = g
    while True:
        key = sp.keys[h]
        chain.append((sp.rank(h), ah.bstar(h), h))
        if key[0] == "age1":
            p0 = key[2]
            break
        h = key[2]
    chain.reverse()
    return Analysis(p0, chain, ah.weight(g))


def analysis_identities(ah: AHSpace, g: int) -> dict:
    """Re-verify the three evaluation-analysis identities for g exactly."""
    sp = ah.space
    an = evaluation_analysis(ah, g)
    ps = [an.p0] + [c[0] for c in an.chain]
    w = an.weight
    lhs = sp.estar(g)
    terms_inf, terms_open = [], []
    for r, (p_r, b, xi) in enumerate(an.chain, start=1):
        terms_inf.append((ONE, sp.dstar(xi)))
        terms_inf.append((w, sp.tail(b, ps[r - 1])))
        terms_open.append((ONE, sp.dstar(xi)))
        terms_open.append((w, sp.project(b, p_r - 1) - sp.project(b, ps[r - 1])))
    ok_inf = combine(terms_inf) == lhs
    ok_open = combine(terms_open) == lhs
    ok_partial = True
    for t in range(1, len(an.chain)):
        terms = [(ONE, sp.estar(an.chain[t - 1][2]))]
        for r in range(t + 1, len(an.chain) + 1):
            p_r, b, xi = an.chain[r - 1]
            terms.append((ONE, sp.dstar(xi)))
            terms.append((w, sp.tail(b, ps[r - 1])))
        ok_partial = ok_partial and combine(terms) == lhs
    increasing = all(a < b for a, b in zip(ps, ps[1:])) and ps[-1] == sp.rank(g)
    same_weight = all(ah.widx[c[2]] == ah.widx[g] for c in an.chain)
    supports = all(
        all(sp.size(ps[r - 1]) <= h < sp.size(ps[r] - 1) for h in an.chain[r - 1][1]) for r in range(1, len(an.chain) + 1)
    )
    return {
        "age": len(an.chain),
        "tail_form": ok_inf,
        "interval_form": ok_open,
        "partial_forms": ok_partial,
        "ranks_increase": increasing,
        "same_weight": same_weight,
        "supports": supports,
    }


def check_analysis(ah: AHSpace) -> Report:
    rep = Report("ah-analysis")
    bad = []
    count = 0
    for g in range(len(ah)):
        if not ah.is_nontrivial(g):
            continue
        count += 1
        res = analysis_identities(ah, g)
        if not all(v for k, v in res.items() if k != "age"):
            bad.append({"id": g, **res})
    rep.add("evaluation-analysis", "e*_g = sum d*_{xi_r} + m_j^-1 sum P*_(p_{r-1},inf) b*_r, with interval and partial forms", not bad, checked=count, failures=bad[:3])
    return rep


def check_sigma_lemmas(ah: AHSpace) -> Report:
    sp = ah.space
    size = len(sp)
    rep = Report("ah-sigma")
    rep.add("sigma-injective", "sigma is injective, exceeds rank and grows with rank", _sigma_assumptions(ah))
    sub = [g for g in range(size) if ah.G[g] is not None and not ah.Sigma[g] <= ah.Sigma[ah.G[g]]]
    rep.add("Sigma-grows-under-G", "Sigma(g) is contained in Sigma(G(g))", not sub, offenders=sub[:5])
    mono = []
    for r in range(2, sp.max_rank + 1):
        lo = min(min(ah.Sigma[g]) for g in sp.ids_of_rank(r))
        hi = max(max(ah.Sigma[g]) for g in range(sp.size(r - 1)))
        if not lo > hi:
            mono.append(r)
    rep.add("Sigma-rank-monotone", "rank g > rank g' implies Sigma(g) > Sigma(g')", not mono, offending_ranks=mono)
    inverse = {s: g for g, s in enumerate(ah.sigma)}
    bound = ah.params.chain_bound
    inter = []
    for d in range(size):
        for s in ah.Sigma[d]:
            g = inverse[s]
            if g == d:
                continue
            j, h = 1, ah.G[g]
            while h is not None and h != d and (bound is None or j < bound):
                j, h = j + 1, ah.G[h]
            if h != d:
                inter.append((g, d))
    rep.add("Sigma-intersection", "sigma(g) in Sigma(d) implies g = d or G^j(g) = d for some j >= 1", not inter, offenders=inter[:5])
    odd = odd_weight_monotonicity(ah)
    rep.add("odd-weight-monotone", "in an odd-weight analysis, later e*_eta carry strictly smaller weight", odd["ok"], **{k: v for k, v in odd.items() if k != "ok"})
    return rep


def _sigma_assumptions(ah: AHSpace) -> bool:
    sp = ah.space
    if len(set(ah.sigma)) != len(ah.sigma):
        return False
    if any(ah.sigma[g] <= sp.rank(g) for g in range(len(sp))):
        return False
    for r in range(2, sp.max_rank + 1):
        if min(ah.sigma[g] for g in sp.ids_of_rank(r)) <= max(ah.sigma[g] for g in range(sp.size(r - 1))):
            return False
    return True


def odd_weight_monotonicity(ah: AHSpace) -> dict:
    elements = pairs = 0
    bad = []
    for g in range(len(ah)):
        if not ah.is_nontrivial(g) or ah.widx[g] % 2 == 0:
            continue
        elements += 1
        an = evaluation_analysis(ah, g)
        etas = [next(iter(b)) if b else None for _, b, _ in an.chain]
        nz = [e for e in etas if e is not None]
        for i in range(len(nz)):
            for j in range(i + 1, len(nz)):
                pairs += 1
                if not ah.weight(nz[j]) < ah.weight(nz[i]):
                    bad.append((g, nz[i], nz[j]))
    return {"ok": not bad, "odd_elements": elements, "pairs_compared": pairs, "offenders": bad[:5]}


# -- RIS, exact pairs and Calkin witnesses ---------------------------------


def vector_range(ah: AHSpace, x: CoordVector) -> Optional[tuple[int, int]]:
    """Smallest rank interval carrying x in the decomposition M_n = span{d_g : rank g = n}."""
    sp = ah.space
    ranks = [sp.rank(g) for g in range(len(x)) if pair(x, sp.dstar(g))]
    return (min(ranks), max(ranks)) if ranks else None


def ris_audit(ah: AHSpace, xs: Sequence[CoordVector], C, j_seq: Sequence[int], j0: int) -> Report:
    """Certify the C-RIS conditions on the window and audit ||n^-1 sum x_k|| <= 10 C m_{j0}^-1."""
    C = Q(C)
    p = ah.params
    rep = Report("ah-ris")
    ranges = [vector_range(ah, x) for x in xs]
    block = all(r is not None for r in ranges) and all(a[1] < b[0] for a, b in zip(ranges, ranges[1:]))
    norm_ok = all(x.sup_norm() <= C for x in xs)
    j_ok = all(j_seq[k + 1] > ranges[k][1] for k in range(len(xs) - 1)) if block else False
    decay = True
    for k, x in enumerate(xs):
        for g in range(len(x)):
            i = ah.widx[g]
            if i and i < j_seq[k] and abs(x[g]) > C / p.m(i):
                decay = False
    certified = block and norm_ok and j_ok and decay
    rep.add("ris-certified", "C-RIS conditions hold on the window", certified, audit=True, block=block, norms=norm_ok, jumps=j_ok, decay=decay)
    n = len(xs)
    avg = xs[0]
    for x in xs[1:]:
        avg = avg + x
    avg = avg * (ONE / n)
    lhs = avg.sup_norm()
    rhs = 10 * C / p.m(j0)
    rep.add("ris-average", "||n^-1 sum x_k|| <= 10 C m_{j0}^-1", lhs <= rhs, audit=True, lhs=lhs, rhs=rhs, n=n, j0=j0, certified=certified)
    return rep


def build_exact_pair(ah: AHSpace, xs: Sequence[CoordVector], q: Sequence[int], bstars: Sequence[SparseFunctional], j: int, C=1):
    """Assemble (z, eta) from the successor chain zeta_i in Delta_{q_i} of weight 1/m_{2j}.

    Returns (z, eta, report).  Condition (3), condition (4) and the
    evaluation analysis of eta are assertions; the norm conditions (1),
    (2) and (5) are audits.
    """
    p, sp = ah.params, ah.space
    if not p.toy_mode:
        raise ValueError("exact pairs are only assembled in toy mode")
    if not (len(q) == len(xs) + 1 == len(bstars) + 1) or any(a >= b for a, b in zip(q, q[1:])):
        raise ValueError("need q_0 < ... < q_n with one x_i and one b*_i per interval")
    w = 2 * j
    N = xs[0].window
    if q[-1] > N:
        raise WindowError(f"q_n = {q[-1]} exceeds the vector window {N}")
    for i, x in enumerate(xs):
        ran = vector_range(ah, x)
        if ran is not None and not q[i] < ran[0] <= ran[1] < q[i + 1]:
            raise ValueError(f"ran x_{i + 1} = {ran} is not inside ({q[i]}, {q[i + 1]})")
        y = x
        for l in range(p.kind if not p.infinite else sp.max_rank):
            if pair(y, bstars[i]):
                raise ValueError(f"<b*_{i + 1}, S^{l} x_{i + 1}> is not zero")
            y = ah.S_apply(y)
    chain = []
    prev = None
    for i, b in enumerate(bstars):
        bt = _btuple(b)
        key = ("age1", q[1], q[0], w, bt) if i == 0 else ("succ", q[i + 1], prev, w, bt)
        if key not in sp.index:
            raise ConstructionError(f"chain element {key!r} is not in the built net")
        prev = sp.index[key]
        chain.append(prev)
    eta = chain[-1]
    n = len(xs)
    z = xs[0]
    for x in xs[1:]:
        z = z + x
    z = z * (Q(p.m(w)) / n)
    C16 = 16 * Q(C)
    rep = Report("ah-exact-pair")
    an = analysis_identities(ah, eta)
    chain_ok = evaluation_analysis(ah, eta).chain == [(sp.rank(c), bstars[i], c) for i, c in enumerate(chain)]
    rep.add("analysis", "eta has analysis (q_i, b*_i, zeta_i)", chain_ok and an["tail_form"] and an["interval_form"])
    rep.add("weight", "weight eta = 1/m_{2j}", ah.widx[eta] == w)
    values = []
    y = z
    for l in range(p.kind if not p.infinite else sp.max_rank):
        values.append(y[eta])
        y = ah.S_apply(y)
    rep.add("zero-at-eta", "z(eta) = 0 and S^l z(eta) = 0", all(v == 0 for v in values), values=values)
    lhs1 = z.sup_norm()
    rep.add("norm", "||z|| <= 16C", lhs1 <= C16, audit=True, lhs=lhs1, rhs=C16)
    lhs2 = max(abs(pair(z, sp.dstar(g))) for g in range(len(z)))
    rhs2 = C16 / p.m(w)
    rep.add("dstar-bound", "|<d*_xi, z>| <= 16C m_{2j}^-1", lhs2 <= rhs2, audit=True, lhs=lhs2, rhs=rhs2)
    worst = None
    for g in range(len(z)):
        i = ah.widx[g]
        if i == 0 or i == w:
            continue
        bound = C16 / p.m(i) if i < w else C16 / p.m(w)
        if abs(z[g]) > bound and worst is None:
            worst = {"id": g, "value": abs(z[g]), "bound": bound}
    rep.add("other-weights", "|z(eta')| <= 16C m_i^-1 (i < 2j) or 16C m_{2j}^-1 (i > 2j)", worst is None, audit=True, first_violation=worst)
    return z, eta, rep


def calkin_witnesses(ah: AHSpace, lams: Sequence) -> Report:
    """Finite witnesses for the non-compactness and l1-norm computations."""
    lams = [Q(v) for v in lams]
    sp, p = ah.space, ah.params
    rep = Report("ah-calkin")

    def T_star(f):
        out = []
        g = f
        for lam in lams:
            out.append((lam, g))
            g = ah.R_star(g)
        return combine(out)

    if p.infinite:
        N = len(lams) - 1
        key = ("triv", N + 1, N)
        if key not in sp.index:
            raise ConstructionError(f"witness element {key!r} is not built")
        value = T_star(sp.estar(sp.index[key])).norm()
        total = sum((abs(v) for v in lams), ZERO)
        rep.add("l1-norm", "||sum lambda_j (R*)^j e*_{(N+1,N)}|| = sum |lambda_j|", value == total, value=value, expected=total)
        pairs = []
        for n in range(1, sp.max_rank - N + 1):
            r = N + n
            if ("triv", r, N) not in sp.index:
                continue
            x = None
            for jdx, lam in enumerate(lams):
                if lam == 0:
                    continue
                v = biorthogonal_vector(sp, sp.index[("triv", r, N - jdx)], sp.max_rank) * (1 if lam > 0 else -1)
                x = v if x is None else x + v
            x = x * Q("1/6")
            Tx = None
            y = x
            for lam in lams:
                Tx = y * lam if Tx is None else Tx + y * lam
                y = ah.S_apply(y)
            pairs.append((n, pair(Tx, sp.dstar(sp.index[("triv", r, N)]))))
        expected = total / 6
        rep.add(
            "witness-pairing",
            "<d*_{(N+n,N)}, T x_n> = (1/6) sum |lambda_j| for x_n = (1/6) sum sign(lambda_j) d_{(N+n,N-j)}",
            bool(pairs) and all(v == expected for _, v in pairs),
            values=pairs,
            expected=expected,
        )
    else:
        k = p.kind
        for j in range(min(k, len(lams))):
            fam = [sp.index.get(("age1", r, 0, 2, ((j, ONE),))) for r in range(2, sp.max_rank + 1)]
            fam = [g for g in fam if g is not None]
            expected = 2 * sum((abs(v) for v in lams[: j + 1]), ZERO)
            dists = []
            for a, b in itertools.combinations(fam, 2):
                dists.append((T_star(sp.estar(a)) - T_star(sp.estar(b))).norm())
            ok = len(fam) >= 2 and all(d == expected for d in dists)
            ref = "||T* e*_{g_n} - T* e*_{g_m}|| = 2|lambda_0|" if j == 0 else f"same distance for the family with b* = e*_{j}: 2 sum_(i<={j}) |lambda_i|"
            rep.add(f"noncompact-family-{j}", ref, ok, family=fam, distances=sorted(set(dists)), expected=expected)
    return rep


def verify_all(ah: AHSpace) -> Report:
    """Every exact (non-audit) suite for a built space."""
    rep = Report(f"ah-{ah.params.kind}")
    for sub in (check_operator_table(ah), check_nilpotency(ah), check_commutation(ah), check_analysis(ah), check_sigma_lemmas(ah)):
        rep.extend(sub, prefix=sub.suite + ":")
    return rep
