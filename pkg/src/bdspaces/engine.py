"""Generic Bourgain-Delbaen constructor.

Given a provider that describes, rank by rank, the new elements of Delta_{n+1}
together with their tau descriptors, this module builds the functionals
c*_g and d*_g = e*_g - c*_g on l1(Gamma_N), the projections P*_(0,q], the
extension operators i_q and the biorthogonal vectors d_g, and certifies their
norm bounds exactly.

Element ids are assigned rank by rank; inside one rank the elements are
sorted by their key, so every id is a deterministic function of the provider.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Hashable, Iterable, Optional

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
    op_norm_l1,
    pair,
    unitriangular_inverse,
)
from .report import Report


class ConstructionError(ValueError):
    """A provider produced an element whose descriptor is not admissible."""


class BudgetExceeded(RuntimeError):
    """Building the next rank would exceed the configured element budget."""


@dataclass(frozen=True)
class Type0:
    """c* = eps * alpha * e*_xi."""

    eps: int
    alpha: Rational
    xi: int


@dataclass(frozen=True)
class Type1:
    """c* = beta * (I - P*_(0,p]) b*."""

    p: int
    beta: Rational
    bstar: SparseFunctional


@dataclass(frozen=True)
class Type2:
    """c* = eps * alpha * e*_xi + beta * (I - P*_(0,p]) b*."""

    eps: int
    alpha: Rational
    xi: int
    p: int
    beta: Rational
    bstar: SparseFunctional


@dataclass(frozen=True)
class Trivial:
    """c* = 0."""


TauDescriptor = Type0 | Type1 | Type2 | Trivial

# A provider receives the space finalized up to rank n and returns the
# elements of Delta_{n+1} as (key, descriptor) pairs.
TauProvider = Callable[["BDSpace", int], Iterable[tuple[Hashable, TauDescriptor]]]


@dataclass
class EngineConfig:
    theta: Optional[Rational]
    max_rank: int
    tau_provider: TauProvider
    element_budget: Optional[int] = None
    jobs: int = 1

    def __post_init__(self):
        if self.theta is not None:
            self.theta = Q(self.theta)
            if not (ZERO <= self.theta < Q("1/2")):
                raise ValueError(f"theta must satisfy 0 <= theta < 1/2, got {self.theta}")
        if self.max_rank < 1:
            raise ValueError("max_rank must be a positive integer")

    @property
    def M(self) -> Optional[Rational]:
        return basis_constant_bound(self.theta)


def basis_constant_bound(theta) -> Optional[Rational]:
    """M = (1 - 2 theta)^-1, or None when no admissible theta is declared."""
    if theta is None:
        return None
    return ONE / (1 - 2 * Q(theta))


class BDSpace:
    """Finalized construction state on Gamma_N.

    ``keys[g]``, ``ranks[g]``, ``taus[g]``, ``cstar[g]`` describe element id g.
    ``offsets[r]`` is |Gamma_r| (``offsets[0] == 0``), so the ids of rank r are
    ``range(offsets[r-1], offsets[r])``.
    """

    def __init__(self, theta: Optional[Rational] = None, label: str = ""):
        self.theta = None if theta is None else Q(theta)
        self.label = label
        self.keys: list = []
        self.ranks: list[int] = []
        self.taus: list[TauDescriptor] = []
        self.cstar: list[SparseFunctional] = []
        self.offsets: list[int] = [0]
        self.index: dict = {}
        self._proj: dict[tuple[int, int], SparseFunctional] = {}

    # -- shape ---------------------------------------------------------
    @property
    def max_rank(self) -> int:
        return len(self.offsets) - 1

    @property
    def M(self) -> Optional[Rational]:
        return basis_constant_bound(self.theta)

    def size(self, n: Optional[int] = None) -> int:
        """|Gamma_n| (all built elements when n is None)."""
        if n is None:
            return len(self.keys)
        if n < 0 or n > self.max_rank:
            raise WindowError(f"rank {n} outside the built range 0..{self.max_rank}")
        return self.offsets[n]

    def rank(self, g: int) -> int:
        return self.ranks[g]

    def ids_of_rank(self, r: int) -> range:
        return range(self.offsets[r - 1], self.offsets[r])

    def id_of(self, key) -> int:
        return self.index[key]

    def __len__(self):
        return len(self.keys)

    def __repr__(self):
        return f"BDSpace({self.label!r}, max_rank={self.max_rank}, |Gamma|={len(self)})"

    # -- functionals ---------------------------------------------------
    def estar(self, g: int) -> SparseFunctional:
        return SparseFunctional.unit(g)

    def dstar(self, g: int) -> SparseFunctional:
        return SparseFunctional.unit(g) - self.cstar[g]

    def proj_e(self, g: int, q: int) -> SparseFunctional:
        """P*_(0,q] e*_g.

        For rank(g) <= q this is e*_g; above q it equals P*_(0,q] c*_g because
        P*_(0,q] kills d*_g, and c*_g lives on strictly lower ranks.
        """
        if self.ranks[g] <= q:
            return SparseFunctional.unit(g)
        key = (g, q)
        hit = self._proj.get(key)
        if hit is None:
            hit = combine((v, self.proj_e(h, q)) for h, v in self.cstar[g].items())
            self._proj[key] = hit
        return hit

    def project(self, f: SparseFunctional, q: int) -> SparseFunctional:
        """P*_(0,q] f for a functional supported on the built ids."""
        if q <= 0:
            return SparseFunctional()
        n = len(self.keys)
        for g in f:
            if not 0 <= g < n:
                raise WindowError(f"gamma id {g} is not a built element")
        return combine((v, self.proj_e(g, q)) for g, v in f.items())

    def tail(self, f: SparseFunctional, q: int) -> SparseFunctional:
        """(I - P*_(0,q]) f, written P*_(q,inf) f."""
        return f - self.project(f, q)

    # -- construction --------------------------------------------------
    def _c_of(self, desc: TauDescriptor) -> SparseFunctional:
        if isinstance(desc, Trivial):
            return SparseFunctional()
        if isinstance(desc, Type0):
            return SparseFunctional.unit(desc.xi, desc.eps * desc.alpha)
        if isinstance(desc, Type1):
            return self.tail(desc.bstar, desc.p) * desc.beta
        if isinstance(desc, Type2):
            return SparseFunctional.unit(desc.xi, desc.eps * desc.alpha) + self.tail(desc.bstar, desc.p) * desc.beta
        raise ConstructionError(f"unknown descriptor {desc!r}")

    def _validate(self, key, desc: TauDescriptor, n: int) -> None:
        """Check ``desc`` for a new element of Delta_{n+1} against Gamma_n."""

        def bad(msg):
            raise ConstructionError(f"element {key!r} of rank {n + 1}: {msg}")

        size_n = self.offsets[n]
        if n == 0 and not isinstance(desc, Trivial):
            bad("elements of Delta_1 must have c* = 0")
        if isinstance(desc, Trivial):
            return
        if isinstance(desc, (Type0, Type2)):
            if desc.eps not in (1, -1):
                bad(f"eps must be +1 or -1, got {desc.eps}")
            if not 0 <= desc.xi < size_n:
                bad(f"xi={desc.xi} is not in Gamma_{n}")
        if isinstance(desc, Type0):
            if not ZERO <= desc.alpha <= ONE:
                bad(f"alpha={desc.alpha} outside [0,1]")
            return
        if isinstance(desc, Type2):
            if not ZERO < desc.alpha <= ONE:
                bad(f"alpha={desc.alpha} outside (0,1]")
            if not 1 <= desc.p < n:
                bad(f"p={desc.p} outside 1 <= p < {n}")
            if self.ranks[desc.xi] > desc.p:
                bad(f"xi={desc.xi} has rank {self.ranks[desc.xi]} > p={desc.p}")
        if isinstance(desc, Type1) and not 0 <= desc.p < n:
            bad(f"p={desc.p} outside 0 <= p < {n}")
        if not ZERO < desc.beta:
            bad(f"beta={desc.beta} must be positive")
        if self.theta is not None and desc.beta > self.theta:
            bad(f"beta={desc.beta} exceeds theta={self.theta}")
        if desc.bstar.norm() > ONE:
            bad(f"b* has l1 norm {desc.bstar.norm()} > 1")
        lo = self.offsets[desc.p]
        for h in desc.bstar:
            if not lo <= h < size_n:
                bad(f"b* coordinate {h} not in Gamma_{n} minus Gamma_{desc.p}")

    def add_rank(self, items: Iterable[tuple[Hashable, TauDescriptor]], jobs: int = 1, budget: Optional[int] = None) -> range:
        """Finalize Delta_{n+1} from (key, descriptor) pairs; returns the new ids."""
        n = self.max_rank
        batch = []
        seen = set()
        limit = None if budget is None else budget - len(self.keys)
        for key, desc in items:
            if key in seen or key in self.index:
                raise ConstructionError(f"duplicate element {key!r} at rank {n + 1}")
            seen.add(key)
            batch.append((key, desc))
            if limit is not None and len(batch) > limit:
                raise BudgetExceeded(
                    f"rank {n + 1} needs more than {limit} new elements; element budget {budget} exceeded"
                )
        batch.sort(key=lambda kd: kd[0])
        for key, desc in batch:
            self._validate(key, desc, n)
        descs = [d for _, d in batch]
        if jobs > 1 and len(descs) > 1:
            with ThreadPoolExecutor(max_workers=jobs) as pool:
                cs = list(pool.map(self._c_of, descs, chunksize=max(1, len(descs) // (4 * jobs))))
        else:
            cs = [self._c_of(d) for d in descs]
        start = len(self.keys)
        for i, (key, desc) in enumerate(batch):
            self.index[key] = start + i
            self.keys.append(key)
            self.ranks.append(n + 1)
            self.taus.append(desc)
            self.cstar.append(cs[i])
        self.offsets.append(len(self.keys))
        return range(start, len(self.keys))


def build_space(cfg: EngineConfig, label: str = "") -> BDSpace:
    """Run the rank recursion up to ``cfg.max_rank``."""
    space = BDSpace(cfg.theta, label)
    for n in range(cfg.max_rank):
        space.add_rank(cfg.tau_provider(space, n), jobs=cfg.jobs, budget=cfg.element_budget)
    return space


# -- matrices ----------------------------------------------------------


def _check_rank(space: BDSpace, n: int) -> None:
    if not 0 <= n <= space.max_rank:
        raise WindowError(f"rank {n} outside the built range 0..{space.max_rank}")


def projection_matrix(space: BDSpace, q: int, n: int) -> RatMatrix:
    """Matrix of P*_(0,q] on l1(Gamma_n) in the e* basis (column g = P*_(0,q] e*_g)."""
    _check_rank(space, n)
    if q > n:
        raise ValueError(f"projection rank q={q} exceeds window n={n}")
    size = space.size(n)
    return RatMatrix(size, size, {g: space.proj_e(g, q) for g in range(size)} if q > 0 else {})


def change_of_basis(space: BDSpace, n: int) -> RatMatrix:
    """T on l1(Gamma_n) with T e*_g = d*_g; unit diagonal, entries only at ids below the column."""
    _check_rank(space, n)
    size = space.size(n)
    return RatMatrix(size, size, {g: space.dstar(g) for g in range(size)})


def dstar_coordinates(space: BDSpace, n: int) -> RatMatrix:
    """T^-1: column g lists the coefficients of e*_g in the basis (d*_h)."""
    return unitriangular_inverse(change_of_basis(space, n))


def extension_norm(space: BDSpace, q: int, n: int) -> Rational:
    """||i_q||_{inf->inf} restricted to Gamma_n: the largest ||P*_(0,q] e*_h||_1 over h in Gamma_n."""
    _check_rank(space, n)
    return max((space.proj_e(h, q).norm() for h in range(space.size(n))), default=ZERO)


def basis_projection_norms(space: BDSpace, n: int) -> list[tuple[int, Rational]]:
    """Exact norms of the basis projections P*_m (m = 1..|Gamma_n|) on l1(Gamma_n).

    P*_m keeps the first m terms of the d*-expansion.  With e*_g = sum_h A[h,g] d*_h,
    the column P*_m e*_g is the partial sum over h < m; its l1 norm is tracked
    incrementally as m grows, and the operator norm is the max over columns.
    """
    _check_rank(space, n)
    size = space.size(n)
    if size == 0:
        return []
    A = dstar_coordinates(space, n)
    best = [ONE] * (size + 1)  # best[m] for m in 1..size; every P*_m fixes e*_0
    best[0] = ZERO
    dstars = [space.dstar(h) for h in range(size)]
    for g in range(size):
        coeffs = sorted(A.column(g).items())
        acc: dict = {}
        norm = ZERO
        prev_m = 1
        # value of ||P*_m e*_g|| for m in [prev_m, h] is `norm` before adding term h
        for h, a in coeffs:
            if h >= g:
                break
            for m in range(prev_m, h + 1):
                if norm > best[m]:
                    best[m] = norm
            for k, v in dstars[h].items():
                old = acc.get(k, ZERO)
                new = old + a * v
                norm += abs(new) - abs(old)
                if new:
                    acc[k] = new
                else:
                    acc.pop(k, None)
            prev_m = h + 1
        for m in range(prev_m, g + 1):
            if norm > best[m]:
                best[m] = norm
    return [(m, best[m]) for m in range(1, size + 1)]


# -- the l-infinity side -----------------------------------------------


def extend_vector(space: BDSpace, u: CoordVector, n: int) -> CoordVector:
    """i_q u on Gamma_n for u given on Gamma_q: coordinate h above rank q is <x, c*_h>."""
    q = u.window
    _check_rank(space, n)
    if len(u) != space.size(q):
        raise WindowError(f"vector has {len(u)} ids but Gamma_{q} has {space.size(q)}")
    if n < q:
        raise WindowError(f"cannot extend a rank-{q} vector down to rank {n}")
    coords = list(u.coords)
    cstar = space.cstar
    for h in range(space.size(q), space.size(n)):
        total = ZERO
        for k, v in cstar[h].items():
            total += coords[k] * v
        coords.append(total)
    return CoordVector._wrap(n, tuple(coords))


def extend_vector_via_projection(space: BDSpace, u: CoordVector, n: int) -> CoordVector:
    """Second route to i_q u: coordinate h is <u, P*_(0,q] e*_h>."""
    q = u.window
    size_q = space.size(q)
    coords = []
    for h in range(space.size(n)):
        f = space.proj_e(h, q)
        coords.append(sum((u.coords[k] * v for k, v in f.items()), ZERO))
    return CoordVector._wrap(n, tuple(coords))


def unit_vector(space: BDSpace, g: int, window: int) -> CoordVector:
    size = space.size(window)
    if not 0 <= g < size:
        raise WindowError(f"gamma id {g} not in Gamma_{window}")
    coords = [ZERO] * size
    coords[g] = ONE
    return CoordVector._wrap(window, tuple(coords))


def biorthogonal_vector(space: BDSpace, g: int, n: int) -> CoordVector:
    """Coordinates of d_g on Gamma_n: i_{rank g} applied to the unit vector at g."""
    r = space.rank(g)
    if r > n:
        raise WindowError(f"gamma id {g} has rank {r} > window {n}")
    return extend_vector(space, unit_vector(space, g, r), n)


def check_c0_collapse(space: BDSpace, n: int) -> Report:
    """Certify ||I - T|| <= max ||c*_g|| < 1 for T: e*_g -> d*_g on l1(Gamma_n)."""
    _check_rank(space, n)
    rep = Report("c0-collapse")
    size = space.size(n)
    theta_hat = max((space.cstar[g].norm() for g in range(size)), default=ZERO)
    diff = RatMatrix(size, size, {g: space.cstar[g] for g in range(size)})  # I - T
    dist = op_norm_l1(diff)
    ref = "small perturbations c* make (d*) equivalent to the unit vector basis (c0 collapse)"
    if theta_hat < ONE:
        rep.add("identity-distance", ref, dist <= theta_hat, norm_I_minus_T=dist, theta_hat=theta_hat)
        rep.add("inverse-bound", "Neumann series: ||T^-1|| <= 1/(1 - ||I - T||)", True, bound=ONE / (ONE - dist))
    else:
        check = rep.skip("identity-distance", ref, "max ||c*|| is not below 1; no certificate")
        check.witness.update(theta_hat=theta_hat, norm_I_minus_T=dist)
    return rep


def check_core(space: BDSpace, n: int) -> Report:
    """Biorthogonality, the exact inverse of the change of basis and projection nesting on Gamma_n."""
    _check_rank(space, n)
    rep = Report("core")
    size = space.size(n)
    bad = []
    for g in range(size):
        d = biorthogonal_vector(space, g, n)
        for h in range(size):
            if pair(d, space.dstar(h)) != (ONE if g == h else ZERO):
                bad.append((g, h))
                break
    rep.add("biorthogonality", "<d_g, d*_h> = delta_gh", not bad, window=n, checked=size, offenders=bad[:5])
    T = change_of_basis(space, n)
    shape = all(h <= g and (h < g or v == ONE) for g in range(size) for h, v in T.column(g).items())
    inv = unitriangular_inverse(T)
    rep.add("change-of-basis", "T is unitriangular and T T^-1 = T^-1 T = I", shape and T @ inv == RatMatrix.identity(size) and inv @ T == RatMatrix.identity(size), window=n)
    nest = []
    for q in range(n + 1):
        for r in range(n + 1):
            low = min(q, r)
            for g in range(size):
                if space.project(space.proj_e(g, r) if r > 0 else SparseFunctional(), q) != (space.proj_e(g, low) if low > 0 else SparseFunctional()):
                    nest.append((q, r, g))
                    break
    rep.add("projection-nesting", "P*_(0,q] P*_(0,r] = P*_(0,min(q,r)]", not nest, window=n, offenders=nest[:5])
    return rep
