"""The shift-invariant predual R_2 as a Bourgain-Delbaen space.

Gamma is N_0 with Delta_1 = {0} and Delta_n = {2^(n-2)+m : 0 <= m < 2^(n-2)}
for n >= 2 (ranks start at 1).  Each n >= 1 has the Type 0 descriptor
(+1, 1/2, m), so c*_n = e*_m / 2.  Sequences live in ``SeqVector`` objects
that carry the number of exactly known leading coordinates.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

from .engine import (
    BDSpace,
    EngineConfig,
    Trivial,
    Type0,
    basis_projection_norms,
    biorthogonal_vector,
    build_space,
    change_of_basis,
)
from .linalg import ONE, ZERO, Q, Rational, op_norm_l1, unitriangular_inverse
from .report import Report

HALF = Q("1/2")


def ones_count(n: int) -> int:
    """Number of ones in the binary expansion of n >= 0."""
    if n < 0:
        raise ValueError("ones_count needs n >= 0")
    return bin(n).count("1")


def r2_rank(n: int) -> int:
    """Rank of the integer n in the dyadic decomposition: 1 for n = 0, floor(log2 n) + 2 otherwise."""
    return 1 if n == 0 else n.bit_length() + 1


@dataclass(frozen=True)
class SeqVector:
    """The first ``depth`` coordinates of a vector in l_inf(N_0), all exactly known."""

    coords: tuple

    @property
    def depth(self) -> int:
        return len(self.coords)

    def __getitem__(self, n):
        return self.coords[n]

    def truncate(self, depth: int) -> "SeqVector":
        return SeqVector(self.coords[: max(0, depth)])

    def agrees(self, other: "SeqVector", window: Optional[int] = None) -> bool:
        """Equality on the common exactly known prefix (optionally capped at ``window``)."""
        w = min(self.depth, other.depth)
        if window is not None:
            w = min(w, window)
        return self.coords[:w] == other.coords[:w]

    def first_difference(self, other: "SeqVector", window: Optional[int] = None) -> Optional[int]:
        w = min(self.depth, other.depth)
        if window is not None:
            w = min(w, window)
        for n in range(w):
            if self.coords[n] != other.coords[n]:
                return n
        return None

    def __add__(self, other: "SeqVector") -> "SeqVector":
        w = min(self.depth, other.depth)
        return SeqVector(tuple(a + b for a, b in zip(self.coords[:w], other.coords[:w])))

    def __mul__(self, scalar) -> "SeqVector":
        s = Q(scalar)
        return SeqVector(tuple(s * a for a in self.coords))

    __rmul__ = __mul__

    @classmethod
    def zeros(cls, depth: int) -> "SeqVector":
        return cls((ZERO,) * depth)


def y_lambda(lam, depth: int) -> SeqVector:
    """x_0^lambda on N_0: coordinate n is lambda^(-b(n))."""
    lam = Q(lam)
    if abs(lam) <= 1:
        raise ValueError("need |lambda| > 1")
    if depth < 1:
        raise ValueError("depth must be positive")
    inv = ONE / lam
    return SeqVector(tuple(inv ** ones_count(n) for n in range(depth)))


def y0(depth: int) -> SeqVector:
    """y_0(n) = 2^(-b(n))."""
    return y_lambda(2, depth)


def sigma_op(x: SeqVector, limit: Optional[int] = None) -> SeqVector:
    """Right shift: (sigma x)(0) = 0 and (sigma x)(n) = x(n-1); depth grows by one."""
    out = SeqVector((ZERO,) + x.coords)
    return out if limit is None else out.truncate(limit)


def tau_op(x: SeqVector, limit: Optional[int] = None) -> SeqVector:
    """(tau x)(n) = x(n/2) for even n and 0 for odd n; known on 2*depth coordinates."""
    depth = 2 * x.depth if limit is None else min(2 * x.depth, limit)
    c = x.coords
    return SeqVector(tuple(c[n // 2] if n % 2 == 0 else ZERO for n in range(depth)))


def beta_op(x: SeqVector, limit: Optional[int] = None) -> SeqVector:
    """(beta x)(n) = x((n-1)/2) for odd n and 0 for even n; known on 2*depth + 1 coordinates."""
    depth = 2 * x.depth + 1 if limit is None else min(2 * x.depth + 1, limit)
    c = x.coords
    return SeqVector(tuple(c[(n - 1) // 2] if n % 2 == 1 else ZERO for n in range(depth)))


def sigma_power(x: SeqVector, m: int, limit: Optional[int] = None) -> SeqVector:
    out = SeqVector((ZERO,) * m + x.coords)
    return out if limit is None else out.truncate(limit)


def _provider(space: BDSpace, n: int):
    if n == 0:
        return [(0, Trivial())]
    start = 1 << (n - 1)
    return [(start + m, Type0(1, HALF, m)) for m in range(start)]


def build_r2(max_rank: int, jobs: int = 1) -> BDSpace:
    """R_2 up to rank N: Gamma_N = {0, ..., 2^(N-1) - 1} and element ids equal the integers."""
    if max_rank < 1:
        raise ValueError("max_rank must be a positive integer")
    # beta = 1/2 sits on the excluded boundary of the basis-constant bound, so no theta is set
    return build_space(EngineConfig(None, max_rank, _provider, None, jobs), label="r2")


class DTable:
    """Coordinates of every d_n on the window {0, ..., 2^(N-1) - 1}."""

    def __init__(self, space: BDSpace, N: Optional[int] = None):
        self.N = space.max_rank if N is None else N
        self.W = space.size(self.N)
        self.space = space
        self._d = [None] * self.W

    def __call__(self, n: int) -> SeqVector:
        v = self._d[n]
        if v is None:
            v = SeqVector(biorthogonal_vector(self.space, n, self.N).coords)
            self._d[n] = v
        return v

    def __len__(self):
        return self.W


def _record(rep: Report, id: str, ref: str, failures: list, window: int, checked: int, **extra):
    rep.add(id, ref, not failures, window=window, checked=checked, counterexamples=failures[:3], **extra)


def verify_steps(space: BDSpace, max_rank: Optional[int] = None, steps: Iterable[int] = range(1, 9), d: Optional[DTable] = None) -> Report:
    """Check the eight structural identities for the vectors d_n on the rank-N window.

    Every comparison uses only coordinates below W = 2^(N-1), where both
    sides are exactly known.
    """
    steps = sorted(set(steps))
    if any(s not in range(1, 9) for s in steps):
        raise ValueError(f"steps must lie in 1..8, got {steps}")
    d = d or DTable(space, max_rank)
    W = d.W
    rep = Report("r2-steps")
    for s in steps:
        _STEPS[s](rep, d, W)
    return rep


def _step1(rep, d, W):
    diff = d(0).first_difference(y0(W))
    fails = [] if diff is None else [{"n": diff, "d0": d(0)[diff], "y0": y0(W)[diff]}]
    _record(rep, "step-1", "d_0 = y_0", fails, W, W)


def _step2(rep, d, W):
    fails, count = [], 0
    for j in range((W - 1) // 2):
        dj = d(j)
        target = d(2 * j + 1)
        via_beta = beta_op(dj, W)
        via_shift = sigma_op(tau_op(dj), W)
        count += 1
        if not (target.agrees(via_beta) and target.agrees(via_shift) and via_beta.agrees(via_shift)):
            fails.append({"j": j, "n": target.first_difference(via_beta)})
    _record(rep, "step-2", "d_{2j+1} = beta d_j = sigma tau d_j", fails, W, count)


def _step3(rep, d, W):
    fails, count = [], 0
    for j in range(1, (W + 1) // 2):
        target = d(2 * j)
        image = tau_op(d(j), W)
        count += 1
        if not target.agrees(image):
            fails.append({"j": j, "n": target.first_difference(image)})
    _record(rep, "step-3", "d_{2j} = tau d_j for j >= 1", fails, W, count)


def _step4(rep, d, W):
    fails, count = [], 0
    j = 1
    while (1 << j) < W:
        base = d(1 << j)
        for m in range(1, 1 << j):
            n = (1 << j) + m
            if n >= W:
                break
            count += 1
            image = sigma_power(base, m, W)
            if not d(n).agrees(image):
                fails.append({"j": j, "m": m, "n": d(n).first_difference(image)})
        j += 1
    _record(rep, "step-4", "d_{2^j+m} = sigma^m d_{2^j} for j >= 1, 1 <= m < 2^j", fails, W, count)


def _step5(rep, d, W):
    exceptions = {(1 << j) - 1 for j in range(W.bit_length() + 1)}
    fails, count, visible, hidden = [], 0, [], []
    for n in range(W - 1):
        shifted = sigma_op(d(n), W)
        same = shifted.agrees(d(n + 1))
        count += 1
        if n in exceptions:
            # the two sides first differ at coordinate 2(n+1); only visible inside the window
            if 2 * (n + 1) < W:
                visible.append(n)
                if same:
                    fails.append({"n": n, "reason": "identity unexpectedly holds at an exceptional index"})
            else:
                hidden.append(n)
        elif not same:
            fails.append({"n": n, "coordinate": shifted.first_difference(d(n + 1))})
    _record(
        rep,
        "step-5",
        "sigma d_n = d_{n+1} exactly when n is not of the form 2^j - 1",
        fails,
        W,
        count,
        exceptions_confirmed=visible,
        exceptions_beyond_window=hidden,
    )


def _step6(rep, d, W):
    fails, count = [], 0
    d0 = d(0)
    supports = []
    j = 0
    while (1 << j) < W:
        p = 1 << j
        vec = d(p)
        supp = set()
        for n in range(W):
            q, r = divmod(n, p)
            expected = d0[(q - 1) // 2] if n and r == 0 and q % 2 == 1 else ZERO
            if vec[n] != expected:
                fails.append({"j": j, "n": n, "value": vec[n], "expected": expected})
                break
            if vec[n]:
                supp.add(n)
        supports.append(supp)
        count += 1
        j += 1
    overlaps = [(a, b) for a in range(len(supports)) for b in range(a + 1, len(supports)) if supports[a] & supports[b]]
    _record(rep, "step-6", "d_{2^j}(n) = d_0(l) if n = 2^j(2l+1), else 0", fails, W, count)
    rep.add("step-6-disjoint", "the vectors d_{2^j} have disjoint supports", not overlaps, window=W, overlaps=overlaps[:3])


def _step7(rep, d, W):
    fails, count = [], 0
    d0 = d(0)
    j = 1
    while (1 << j) - 1 < W:
        p = 1 << j
        vec = d(p - 1)
        for n in range(W):
            q, r = divmod(n + 1, p)
            expected = d0[q - 1] if r == 0 and q >= 1 else ZERO
            if vec[n] != expected:
                fails.append({"j": j, "n": n, "value": vec[n], "expected": expected})
                break
        count += 1
        j += 1
    _record(rep, "step-7", "d_{2^j-1}(n) = d_0(k) if n = 2^j(k+1) - 1, else 0", fails, W, count)


def _step8(rep, d, W):
    fails, count = [], 0
    j = 0
    while (1 << j) - 1 < W:
        left = sigma_op(d((1 << j) - 1), W)
        right = SeqVector.zeros(W)
        k = 0
        # terms with 2^(k+j) >= W vanish on the window, so the finite sum is exact there
        while (1 << (k + j)) < W:
            right = right + d(1 << (k + j)) * (HALF**k)
            k += 1
        count += 1
        if not left.agrees(right):
            fails.append({"j": j, "n": left.first_difference(right)})
        j += 1
    _record(rep, "step-8", "sigma d_{2^j-1} = sum_k 2^-k d_{2^(k+j)}, truncated to 2^(k+j) < W", fails, W, count)


_STEPS = {1: _step1, 2: _step2, 3: _step3, 4: _step4, 5: _step5, 6: _step6, 7: _step7, 8: _step8}


def word_for(n: int) -> tuple[int, int]:
    """(m, l) with d_n = sigma^m tau^l d_0, read off from the odd/even recursion."""
    m, l = 0, 0
    bits = bin(n)[2:] if n else ""
    for bit in bits:
        # d_{2j} = tau d_j, d_{2j+1} = sigma tau d_j and tau sigma^m = sigma^(2m) tau
        m = 2 * m + int(bit)
        l += 1
    return m, l


def reachability(space: BDSpace, d: Optional[DTable] = None) -> Report:
    """Recompute every d_n as sigma^m tau^l y_0 and compare with the engine's d_n."""
    d = d or DTable(space)
    W = d.W
    base = y0(W)
    fails = []
    for n in range(W):
        m, l = word_for(n)
        x = base
        for _ in range(l):
            x = tau_op(x, W)
        x = sigma_power(x, m, W)
        if not d(n).agrees(x):
            fails.append({"n": n, "m": m, "l": l})
    rep = Report("r2-generators")
    _record(rep, "generated-by-shifts", "every d_n equals sigma^m tau^l d_0", fails, W, W)
    return rep


def commutation_holds(x: SeqVector) -> bool:
    """tau sigma x = sigma^2 tau x on the common known window."""
    return tau_op(sigma_op(x)).agrees(sigma_power(tau_op(x), 2))


def c0_certificate(space: BDSpace, max_rank: Optional[int] = None) -> Report:
    """||c*_n|| = 1/2, ||I - T|| = 1/2 and an exact ||T^-1|| for T: e*_n -> d*_n."""
    N = space.max_rank if max_rank is None else max_rank
    size = space.size(N)
    rep = Report("r2-c0")
    bad = [n for n in range(1, size) if space.cstar[n].norm() != HALF]
    rep.add("cstar-norms", "||c*_n|| = 1/2 for every n >= 1", not bad and not space.cstar[0], checked=size, offenders=bad[:5])
    T = change_of_basis(space, N)
    ident = type(T).identity(size)
    cols = (ident - T).column_norms()
    col_ok = cols[0] == ZERO and all(c == HALF for c in cols[1:])
    dist = op_norm_l1(ident - T)
    rep.add("identity-distance", "||I - T|| = 1/2 on the truncation", col_ok and dist == HALF, norm_I_minus_T=dist)
    inv = unitriangular_inverse(T)
    inv_norm = op_norm_l1(inv)
    neumann = ONE / (ONE - dist)
    product_ok = (T @ inv) == ident
    rep.add(
        "inverse-bound",
        "T is invertible with ||T^-1|| <= 1/(1 - ||I - T||) = 2",
        product_ok and inv_norm <= neumann,
        norm_T_inverse=inv_norm,
        bound=neumann,
    )
    return rep


def projection_report(space: BDSpace, max_rank: Optional[int] = None) -> Report:
    """Exhaustive basis-projection norms (the formula bound does not apply at beta = 1/2)."""
    N = space.max_rank if max_rank is None else max_rank
    norms = basis_projection_norms(space, N)
    worst = max(v for _, v in norms)
    rep = Report("r2-projections")
    rep.add("basis-projections", "basis projections are uniformly bounded on the truncation", worst <= 2, max_norm=worst, count=len(norms))
    return rep
