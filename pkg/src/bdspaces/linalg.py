"""Exact rational linear algebra on the two sides of the l1 / l-infinity duality.

Scalars are ``gmpy2.mpq`` values.  Functionals on the l1 side are sparse maps
from integer ids to nonzero rationals; vectors on the l-infinity side are dense
tuples of rationals over a finite window of ids ``0 .. size-1``.
"""

from __future__ import annotations

import re
from fractions import Fraction
from typing import Iterable, Iterator, Mapping

from gmpy2 import mpq

Rational = type(mpq())

ZERO = mpq(0)
ONE = mpq(1)

_RATIONAL_RE = re.compile(r"^\s*(-?\d+)\s*(?:/\s*(\d+)\s*)?$")


def Q(value) -> Rational:
    """Coerce an int, Fraction, mpq or ``"p/q"`` string to an exact rational."""
    if isinstance(value, Rational):
        return value
    if isinstance(value, bool):
        raise TypeError("booleans are not rationals")
    if isinstance(value, int):
        return mpq(value)
    if isinstance(value, Fraction):
        return mpq(value.numerator, value.denominator)
    if isinstance(value, str):
        return parse_rational(value)
    raise TypeError(f"cannot convert {type(value).__name__} to an exact rational")


def parse_rational(text: str) -> Rational:
    m = _RATIONAL_RE.match(text)
    if m is None:
        raise ValueError(f"malformed rational {text!r}; expected 'p' or 'p/q'")
    num = int(m.group(1))
    den = int(m.group(2)) if m.group(2) is not None else 1
    if den == 0:
        raise ValueError(f"zero denominator in {text!r}")
    return mpq(num, den)


def format_rational(q) -> str:
    """``"p/q"`` in lowest terms, or ``"p"`` when the denominator is 1."""
    q = Q(q)
    if q.denominator == 1:
        return str(q.numerator)
    return f"{q.numerator}/{q.denominator}"


class WindowError(ValueError):
    """A functional reaches outside the window of a truncated vector."""


class SparseFunctional(Mapping):
    """Finitely supported element of l1 keyed by integer id.

    Zero coefficients are never stored, so two functionals are equal exactly
    when their normalized maps are equal.  Instances are treated as immutable.
    """

    __slots__ = ("_d",)

    def __init__(self, entries: Mapping | Iterable | None = None):
        d = {}
        if entries is not None:
            items = entries.items() if isinstance(entries, Mapping) else entries
            for k, v in items:
                v = Q(v)
                if v:
                    d[int(k)] = d.get(int(k), ZERO) + v
                    if not d[int(k)]:
                        del d[int(k)]
        self._d = d

    @classmethod
    def _wrap(cls, d: dict) -> "SparseFunctional":
        # caller guarantees ints -> nonzero mpq
        f = cls.__new__(cls)
        f._d = d
        return f

    @classmethod
    def unit(cls, gid: int, coeff=ONE) -> "SparseFunctional":
        coeff = Q(coeff)
        return cls._wrap({gid: coeff} if coeff else {})

    def __getitem__(self, gid):
        return self._d[gid]

    def get(self, gid, default=ZERO):
        return self._d.get(gid, default)

    def __iter__(self) -> Iterator[int]:
        return iter(self._d)

    def __len__(self) -> int:
        return len(self._d)

    def __contains__(self, gid) -> bool:
        return gid in self._d

    def items(self):
        return self._d.items()

    def support(self) -> list[int]:
        return sorted(self._d)

    def max_id(self) -> int:
        return max(self._d) if self._d else -1

    def norm(self) -> Rational:
        return sum((abs(v) for v in self._d.values()), ZERO)

    def __eq__(self, other):
        if isinstance(other, SparseFunctional):
            return self._d == other._d
        if isinstance(other, Mapping):
            return self._d == SparseFunctional(other)._d
        return NotImplemented

    __hash__ = None

    def __repr__(self):
        body = ", ".join(f"{k}: {format_rational(v)}" for k, v in sorted(self._d.items()))
        return f"SparseFunctional({{{body}}})"

    def __neg__(self):
        return SparseFunctional._wrap({k: -v for k, v in self._d.items()})

    def __add__(self, other: "SparseFunctional"):
        return self.axpy(ONE, other)

    def __sub__(self, other: "SparseFunctional"):
        return self.axpy(-ONE, other)

    def __mul__(self, scalar):
        s = Q(scalar)
        if not s:
            return SparseFunctional._wrap({})
        return SparseFunctional._wrap({k: s * v for k, v in self._d.items()})

    __rmul__ = __mul__

    def axpy(self, scalar, other: "SparseFunctional") -> "SparseFunctional":
        """Return ``self + scalar * other``."""
        s = Q(scalar)
        d = dict(self._d)
        if s:
            for k, v in other._d.items():
                nv = d.get(k, ZERO) + s * v
                if nv:
                    d[k] = nv
                else:
                    d.pop(k, None)
        return SparseFunctional._wrap(d)

    def restrict(self, ids) -> "SparseFunctional":
        """Keep only the coordinates whose id satisfies ``ids`` (a container or predicate)."""
        keep = ids if callable(ids) else ids.__contains__
        return SparseFunctional._wrap({k: v for k, v in self._d.items() if keep(k)})

    def to_list(self) -> list[list]:
        return [[k, format_rational(v)] for k, v in sorted(self._d.items())]

    @classmethod
    def from_list(cls, pairs) -> "SparseFunctional":
        return cls((int(k), parse_rational(v)) for k, v in pairs)


def combine(terms: Iterable[tuple]) -> SparseFunctional:
    """Sum of ``coeff * functional`` over ``(coeff, functional)`` pairs."""
    d: dict = {}
    for coeff, f in terms:
        c = Q(coeff)
        if not c:
            continue
        for k, v in f.items():
            d[k] = d.get(k, ZERO) + c * v
    return SparseFunctional._wrap({k: v for k, v in d.items() if v})


def l1_norm(f: SparseFunctional) -> Rational:
    return f.norm()


class CoordVector:
    """Dense coordinates of an l-infinity vector on the window of ids below ``size``.

    ``window`` is the rank N of the window Gamma_N that the ids cover.
    """

    __slots__ = ("window", "coords")

    def __init__(self, window: int, coords: Iterable):
        self.window = int(window)
        self.coords = tuple(Q(c) for c in coords)

    @classmethod
    def _wrap(cls, window: int, coords: tuple) -> "CoordVector":
        v = cls.__new__(cls)
        v.window = window
        v.coords = coords
        return v

    def __len__(self):
        return len(self.coords)

    def __getitem__(self, gid):
        return self.coords[gid]

    def __eq__(self, other):
        if not isinstance(other, CoordVector):
            return NotImplemented
        return self.window == other.window and self.coords == other.coords

    __hash__ = None

    def __repr__(self):
        return f"CoordVector(window={self.window}, size={len(self.coords)})"

    def sup_norm(self) -> Rational:
        return max((abs(c) for c in self.coords), default=ZERO)

    def __add__(self, other: "CoordVector"):
        _same_window(self, other)
        return CoordVector._wrap(self.window, tuple(a + b for a, b in zip(self.coords, other.coords)))

    def __sub__(self, other: "CoordVector"):
        _same_window(self, other)
        return CoordVector._wrap(self.window, tuple(a - b for a, b in zip(self.coords, other.coords)))

    def __mul__(self, scalar):
        s = Q(scalar)
        return CoordVector._wrap(self.window, tuple(s * c for c in self.coords))

    __rmul__ = __mul__

    def restrict(self, size: int, window: int) -> "CoordVector":
        if size > len(self.coords):
            raise WindowError(f"cannot restrict a window of {len(self.coords)} ids to {size}")
        return CoordVector._wrap(window, self.coords[:size])

    def to_list(self) -> list[str]:
        return [format_rational(c) for c in self.coords]


def _same_window(x: CoordVector, y: CoordVector):
    if x.window != y.window or len(x.coords) != len(y.coords):
        raise WindowError(f"window mismatch: rank {x.window} ({len(x)} ids) vs rank {y.window} ({len(y)} ids)")


def pair(x: CoordVector, f: SparseFunctional) -> Rational:
    """The duality pairing <x, f> = sum of x(g) f(g); f must live inside x's window."""
    coords = x.coords
    n = len(coords)
    total = ZERO
    for k, v in f.items():
        if k >= n or k < 0:
            raise WindowError(f"gamma id {k} lies outside the window of rank {x.window} ({n} ids)")
        total += coords[k] * v
    return total


class RatMatrix:
    """Sparse exact matrix stored by columns; column j is a SparseFunctional of row ids.

    As an l1 -> l1 map it sends e*_j to column j.  Its transpose acts on
    l-infinity coordinate vectors.
    """

    __slots__ = ("n_rows", "n_cols", "cols")

    def __init__(self, n_rows: int, n_cols: int, cols: Mapping[int, SparseFunctional] | None = None):
        self.n_rows = int(n_rows)
        self.n_cols = int(n_cols)
        self.cols = {}
        for j, col in (cols or {}).items():
            if not 0 <= j < self.n_cols:
                raise IndexError(f"column {j} out of range {self.n_cols}")
            if col and col.max_id() >= self.n_rows:
                raise IndexError(f"column {j} has row {col.max_id()} outside {self.n_rows} rows")
            if len(col):
                self.cols[j] = col

    @classmethod
    def identity(cls, n: int) -> "RatMatrix":
        return cls(n, n, {j: SparseFunctional.unit(j) for j in range(n)})

    @classmethod
    def zeros(cls, n_rows: int, n_cols: int) -> "RatMatrix":
        return cls(n_rows, n_cols)

    @classmethod
    def from_dense(cls, rows) -> "RatMatrix":
        rows = [list(r) for r in rows]
        n_rows = len(rows)
        n_cols = len(rows[0]) if rows else 0
        cols = {j: SparseFunctional((i, rows[i][j]) for i in range(n_rows)) for j in range(n_cols)}
        return cls(n_rows, n_cols, cols)

    def column(self, j: int) -> SparseFunctional:
        if not 0 <= j < self.n_cols:
            raise IndexError(f"column {j} out of range {self.n_cols}")
        return self.cols.get(j, _EMPTY)

    def entry(self, i: int, j: int) -> Rational:
        return self.column(j).get(i)

    def to_dense(self) -> list[list]:
        out = [[ZERO] * self.n_cols for _ in range(self.n_rows)]
        for j, col in self.cols.items():
            for i, v in col.items():
                out[i][j] = v
        return out

    def apply(self, f: SparseFunctional) -> SparseFunctional:
        """l1-side action: sum over j of f(j) * column j."""
        for j in f:
            if not 0 <= j < self.n_cols:
                raise WindowError(f"gamma id {j} lies outside the {self.n_cols} matrix columns")
        return combine((v, self.cols.get(j, _EMPTY)) for j, v in f.items())

    def transpose_apply(self, x: CoordVector, window: int | None = None) -> CoordVector:
        """l-infinity-side action of the transpose: coordinate j is <x, column j>."""
        if len(x) != self.n_rows:
            raise WindowError(f"vector has {len(x)} ids, matrix has {self.n_rows} rows")
        coords = tuple(pair(x, self.cols[j]) if j in self.cols else ZERO for j in range(self.n_cols))
        return CoordVector._wrap(x.window if window is None else window, coords)

    def __matmul__(self, other: "RatMatrix") -> "RatMatrix":
        if self.n_cols != other.n_rows:
            raise ValueError(f"shape mismatch {self.n_rows}x{self.n_cols} @ {other.n_rows}x{other.n_cols}")
        return RatMatrix(self.n_rows, other.n_cols, {j: self.apply(c) for j, c in other.cols.items()})

    def __sub__(self, other: "RatMatrix") -> "RatMatrix":
        self._check_shape(other)
        keys = set(self.cols) | set(other.cols)
        return RatMatrix(self.n_rows, self.n_cols, {j: self.column(j) - other.column(j) for j in keys})

    def __add__(self, other: "RatMatrix") -> "RatMatrix":
        self._check_shape(other)
        keys = set(self.cols) | set(other.cols)
        return RatMatrix(self.n_rows, self.n_cols, {j: self.column(j) + other.column(j) for j in keys})

    def scale(self, s) -> "RatMatrix":
        return RatMatrix(self.n_rows, self.n_cols, {j: c * s for j, c in self.cols.items()})

    def _check_shape(self, other):
        if (self.n_rows, self.n_cols) != (other.n_rows, other.n_cols):
            raise ValueError("shape mismatch")

    def __eq__(self, other):
        if not isinstance(other, RatMatrix):
            return NotImplemented
        return (self.n_rows, self.n_cols) == (other.n_rows, other.n_cols) and self.cols == other.cols

    __hash__ = None

    def __repr__(self):
        return f"RatMatrix({self.n_rows}x{self.n_cols}, nnz={sum(len(c) for c in self.cols.values())})"

    def column_norms(self) -> list:
        return [self.cols[j].norm() if j in self.cols else ZERO for j in range(self.n_cols)]

    def row_norms(self) -> list:
        sums = [ZERO] * self.n_rows
        for col in self.cols.values():
            for i, v in col.items():
                sums[i] += abs(v)
        return sums

    def transpose(self) -> "RatMatrix":
        cols: dict = {}
        for j, col in self.cols.items():
            for i, v in col.items():
                cols.setdefault(i, {})[j] = v
        return RatMatrix(self.n_cols, self.n_rows, {i: SparseFunctional._wrap(d) for i, d in cols.items()})


_EMPTY = SparseFunctional()


def op_norm_l1(m: RatMatrix) -> Rational:
    """Exact l1 -> l1 operator norm: the largest column l1 norm (0 for an empty matrix)."""
    return max((c.norm() for c in m.cols.values()), default=ZERO)


def op_norm_linf(m: RatMatrix) -> Rational:
    """Exact l-infinity -> l-infinity norm of the matrix acting on columns vectors: largest row sum."""
    return max(m.row_norms(), default=ZERO)


def unitriangular_inverse(m: RatMatrix) -> RatMatrix:
    """Exact inverse of an upper unitriangular matrix (unit diagonal, row i <= column j).

    Column j of the inverse is solved by back substitution, so the cost is
    proportional to the fill-in rather than to a dense elimination.
    """
    n = m.n_cols
    if m.n_rows != n:
        raise ValueError("matrix is not square")
    for j in range(n):
        col = m.column(j)
        if col.get(j) != ONE or any(i > j for i in col):
            raise ValueError(f"column {j} is not unitriangular")
    inv_cols: dict[int, SparseFunctional] = {}
    for j in range(n):
        # M x = e_j  =>  x_j = 1, x_i = -sum_{i<k<=j} M[i,k] x_k, solved top-down via columns
        x: dict = {j: ONE}
        pending = {i: -v for i, v in m.column(j).items() if i != j}
        while pending:
            i = max(pending)
            v = pending.pop(i)
            if not v:
                continue
            x[i] = v
            for r, w in m.column(i).items():
                if r != i:
                    pending[r] = pending.get(r, ZERO) - w * v
        inv_cols[j] = SparseFunctional._wrap({k: v for k, v in x.items() if v})
    return RatMatrix(n, n, inv_cols)
