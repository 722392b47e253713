"""Exact arithmetic and dense linear algebra over a prime field F_p.

Field elements are plain Python ``int`` residues in ``[0, p)``; a
:class:`FieldCtx` carries the modulus and normalizes results.  Python integers
are arbitrary precision, so products of residues below ``2**62`` never
overflow.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import BadDims, DivisionByZero, NonSquare, NotPrime, ZeroForm

P_LIMIT = 1 << 62

# Deterministic for every n < 3.3e24, which covers the whole supported range.
_MR_WITNESSES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)


def is_prime(n: int) -> bool:
    """Deterministic Miller-Rabin primality test."""
    if n < 2:
        return False
    for q in _MR_WITNESSES:
        if n % q == 0:
            return n == q
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in _MR_WITNESSES:
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


@dataclass(frozen=True)
class FieldCtx:
    """The prime field F_p.

    >>> F = FieldCtx(7)
    >>> F.inv(2), F.add(3, 5)
    (4, 1)
    """

    p: int

    def __post_init__(self):
        p = self.p
        if not isinstance(p, int) or isinstance(p, bool):
            raise NotPrime(f"modulus must be an int, got {p!r}")
        if not 2 <= p < P_LIMIT:
            raise NotPrime(f"modulus {p} outside [2, 2^62)")
        if not is_prime(p):
            raise NotPrime(f"{p} is not prime")

    def __call__(self, x: int) -> int:
        return int(x) % self.p

    def add(self, a: int, b: int) -> int:
        return (a + b) % self.p

    def sub(self, a: int, b: int) -> int:
        return (a - b) % self.p

    def mul(self, a: int, b: int) -> int:
        return a * b % self.p

    def neg(self, a: int) -> int:
        return -a % self.p

    def inv(self, a: int) -> int:
        a %= self.p
        if a == 0:
            raise DivisionByZero(f"0 has no inverse mod {self.p}")
        return pow(a, -1, self.p)

    def dot(self, u: Sequence[int], v: Sequence[int]) -> int:
        return sum(x * y for x, y in zip(u, v)) % self.p


@dataclass(frozen=True)
class Matrix:
    """Dense row-major matrix of residues."""

    rows: int
    cols: int
    entries: tuple

    def __post_init__(self):
        if len(self.entries) != self.rows * self.cols:
            raise BadDims(
                f"{len(self.entries)} entries for a {self.rows}x{self.cols} matrix"
            )

    @classmethod
    def from_rows(cls, rows: Iterable[Sequence[int]], ctx: FieldCtx, cols: int | None = None):
        rows = [list(r) for r in rows]
        if cols is None:
            cols = len(rows[0]) if rows else 0
        if any(len(r) != cols for r in rows):
            raise BadDims("ragged rows")
        return cls(len(rows), cols, tuple(ctx(x) for r in rows for x in r))

    @classmethod
    def zeros(cls, rows: int, cols: int):
        return cls(rows, cols, (0,) * (rows * cols))

    @classmethod
    def identity(cls, k: int):
        return cls(k, k, tuple(int(i == j) for i in range(k) for j in range(k)))

    def __getitem__(self, ij):
        i, j = ij
        return self.entries[i * self.cols + j]

    def row(self, i: int) -> tuple:
        return self.entries[i * self.cols:(i + 1) * self.cols]

    def to_rows(self) -> list[list[int]]:
        return [list(self.row(i)) for i in range(self.rows)]


def _as_rows(m) -> list[list[int]]:
    if isinstance(m, Matrix):
        return m.to_rows()
    return [list(r) for r in m]


def row_reduce(m, ctx: FieldCtx) -> tuple[list[list[int]], list[int]]:
    """Reduced row echelon form; returns ``(rref_rows, pivot_columns)``."""
    p = ctx.p
    a = [[x % p for x in r] for r in _as_rows(m)]
    nrows = len(a)
    ncols = len(a[0]) if a else 0
    pivots = []
    r = 0
    for c in range(ncols):
        if r == nrows:
            break
        piv = next((i for i in range(r, nrows) if a[i][c]), None)
        if piv is None:
            continue
        a[r], a[piv] = a[piv], a[r]
        inv = pow(a[r][c], -1, p)
        a[r] = [x * inv % p for x in a[r]]
        for i in range(nrows):
            if i != r and a[i][c]:
                f = a[i][c]
                ri = a[r]
                a[i] = [(x - f * y) % p for x, y in zip(a[i], ri)]
        pivots.append(c)
        r += 1
    return a, pivots


def mat_rank(m, ctx: FieldCtx) -> int:
    """Rank over F_p by Gaussian elimination."""
    p = ctx.p
    a = [[x % p for x in r] for r in _as_rows(m)]
    rank = 0
    ncols = len(a[0]) if a else 0
    for c in range(ncols):
        piv = next((i for i in range(rank, len(a)) if a[i][c]), None)
        if piv is None:
            continue
        a[rank], a[piv] = a[piv], a[rank]
        inv = pow(a[rank][c], -1, p)
        pr = a[rank]
        for i in range(rank + 1, len(a)):
            if a[i][c]:
                f = a[i][c] * inv % p
                a[i] = [(x - f * y) % p for x, y in zip(a[i], pr)]
        rank += 1
        if rank == len(a):
            break
    return rank


def det_mod_p(m, ctx: FieldCtx) -> int:
    """Determinant over F_p by elimination with pivot inverses."""
    a = _as_rows(m)
    n = len(a)
    if any(len(r) != n for r in a):
        raise NonSquare(f"determinant of a non-square {n}x{len(a[0]) if a else 0} matrix")
    p = ctx.p
    a = [[x % p for x in r] for r in a]
    det = 1
    for c in range(n):
        piv = next((i for i in range(c, n) if a[i][c]), None)
        if piv is None:
            return 0
        if piv != c:
            a[c], a[piv] = a[piv], a[c]
            det = -det
        pc = a[c]
        det = det * pc[c] % p
        inv = pow(pc[c], -1, p)
        for i in range(c + 1, n):
            ai = a[i]
            if ai[c]:
                f = ai[c] * inv % p
                for j in range(c + 1, n):
                    ai[j] = (ai[j] - f * pc[j]) % p
    return det % p


def mat_vec(m, v: Sequence[int], ctx: FieldCtx) -> list[int]:
    rows = _as_rows(m)
    if rows and len(rows[0]) != len(v):
        raise BadDims(f"vector of length {len(v)} against {len(rows[0])} columns")
    return [ctx.dot(r, v) for r in rows]


def projective_normalize(v: Sequence[int], ctx: FieldCtx) -> tuple:
    """Scale ``v`` so its first nonzero coordinate is 1."""
    v = [ctx(x) for x in v]
    for x in v:
        if x:
            inv = ctx.inv(x)
            return tuple(y * inv % ctx.p for y in v)
    raise ZeroForm("zero vector has no projective representative")


def kernel_line(form: Sequence[int], ctx: FieldCtx) -> tuple:
    """Normalized spanning vector of the kernel of a nonzero form on F_p^2."""
    if len(form) != 2:
        raise BadDims("kernel_line expects a length-2 form")
    a, b = ctx(form[0]), ctx(form[1])
    if a == 0 and b == 0:
        raise ZeroForm("zero form has a two-dimensional kernel")
    # (b, -a) is annihilated by (a, b).
    return projective_normalize((b, -a), ctx)
