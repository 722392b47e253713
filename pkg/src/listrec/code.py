"""Linear codes of fixed dimension given by an n x d generator matrix.

Row ``i`` of the generator matrix is the coordinate form lambda_i, so the
codeword of a message ``t`` is ``(lambda_1(t), ..., lambda_n(t))``.  Messages,
not codewords, are the identity of a code point throughout the package.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .errors import BadDims, BudgetExceeded, DimMismatch, Exhausted, PreconditionFailed
from .field import FieldCtx, Matrix, mat_rank
from .rng import as_rng

# Largest modulus for which the vectorized evaluators stay inside int64.
NUMPY_P_LIMIT = 1 << 31


@dataclass(frozen=True)
class GeneratorMatrix:
    n: int
    d: int
    m: Matrix
    ctx: FieldCtx

    def __post_init__(self):
        if not 1 <= self.d <= self.n:
            raise BadDims(f"need 1 <= d <= n, got n={self.n}, d={self.d}")
        if (self.m.rows, self.m.cols) != (self.n, self.d):
            raise BadDims(f"matrix is {self.m.rows}x{self.m.cols}, expected {self.n}x{self.d}")

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[int]], p: int):
        ctx = FieldCtx(p)
        m = Matrix.from_rows(rows, ctx)
        return cls(m.rows, m.cols, m, ctx)

    @property
    def p(self) -> int:
        return self.ctx.p

    @property
    def rows(self) -> list[tuple]:
        return [self.m.row(i) for i in range(self.n)]

    def form(self, i: int) -> tuple:
        return self.m.row(i)

    def rank(self) -> int:
        return mat_rank(self.m, self.ctx)

    def to_json(self) -> dict:
        return {"p": self.p, "n": self.n, "d": self.d, "rows": self.m.to_rows()}

    @classmethod
    def from_json(cls, obj: dict):
        g = cls.from_rows(obj["rows"], obj["p"])
        if (g.n, g.d) != (obj["n"], obj["d"]):
            raise BadDims(f"declared {obj['n']}x{obj['d']} but rows are {g.n}x{g.d}")
        return g

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)


@dataclass(frozen=True)
class Codeword:
    coords: tuple
    message: tuple


def sample_random_matrix(n: int, d: int, ctx: FieldCtx, seed) -> GeneratorMatrix:
    """n x d matrix with independent uniform entries."""
    if d < 1 or d > n:
        raise BadDims(f"need 1 <= d <= n, got n={n}, d={d}")
    rng = as_rng(seed, "sample_random_matrix")
    raw = rng.integers(0, ctx.p, size=n * d, dtype=np.int64)
    m = Matrix(n, d, tuple(int(x) for x in raw))
    return GeneratorMatrix(n, d, m, ctx)


def condition_full_rank(n: int, d: int, ctx: FieldCtx, seed, max_tries: int = 1000):
    """Resample until the matrix has rank d.

    Returns ``(generator, tries)``.  Conditioned on full rank, the column span
    is uniform over d-dimensional subspaces of F_p^n.
    """
    rng = as_rng(seed, "condition_full_rank")
    for tries in range(1, max_tries + 1):
        g = sample_random_matrix(n, d, ctx, rng)
        if g.rank() == d:
            return g, tries
    raise Exhausted(f"no rank-{d} sample in {max_tries} tries")


def encode(g: GeneratorMatrix, t: Sequence[int]) -> Codeword:
    if len(t) != g.d:
        raise DimMismatch(f"message of length {len(t)} for dimension {g.d}")
    t = tuple(g.ctx(x) for x in t)
    coords = tuple(g.ctx.dot(g.form(i), t) for i in range(g.n))
    return Codeword(coords, t)


def message_count(g: GeneratorMatrix) -> int:
    return g.p ** g.d


def check_message_budget(g: GeneratorMatrix, cap: int) -> int:
    total = message_count(g)
    if total > cap:
        raise BudgetExceeded(f"{total} messages exceed cap {cap}", total, cap)
    return total


def enumerate_messages(g: GeneratorMatrix, cap: int) -> Iterator[tuple]:
    """All p^d messages in lexicographic order."""
    check_message_budget(g, cap)
    return itertools.product(range(g.p), repeat=g.d)


def message_from_index(idx: int, p: int, d: int) -> tuple:
    digits = []
    for _ in range(d):
        idx, r = divmod(idx, p)
        digits.append(r)
    return tuple(reversed(digits))


def message_index(t: Sequence[int], p: int) -> int:
    idx = 0
    for x in t:
        idx = idx * p + x
    return idx


def message_digits(start: int, stop: int, p: int, d: int) -> np.ndarray:
    """Messages with lexicographic indices in [start, stop) as a (k, d) array."""
    if p >= NUMPY_P_LIMIT:
        raise PreconditionFailed("vectorized enumeration needs p < 2^31")
    idx = np.arange(start, stop, dtype=np.int64)
    out = np.empty((idx.size, d), dtype=np.int64)
    for j in range(d - 1, -1, -1):
        out[:, j] = idx % p
        idx //= p
    return out


def coordinate_values(g: GeneratorMatrix, digits: np.ndarray) -> np.ndarray:
    """(k, n) array of codeword coordinates for a (k, d) block of messages."""
    p = g.p
    rows = np.array(g.m.to_rows(), dtype=np.int64)
    out = np.zeros((digits.shape[0], g.n), dtype=np.int64)
    for j in range(g.d):
        # each term < 2^62 and the running sum stays below 2^31 after reduction
        out = (out + np.outer(digits[:, j], rows[:, j]) % p) % p
    return out
