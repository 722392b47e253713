"""List recoverability as executable predicates.

A code is (alpha, ell, L)-list recoverable when, for every choice of lists
S_1..S_n of exactly ``ell`` symbols, at most L codewords miss no more than
floor(alpha * n) of their lists.  Lists of size at most ``ell`` behave the
same (any short list can be padded with unused symbols), but the types here
enforce the exact size.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .code import (
    NUMPY_P_LIMIT,
    GeneratorMatrix,
    check_message_budget,
    coordinate_values,
    message_digits,
    message_from_index,
)
from .errors import BadDims, BudgetExceeded, PreconditionFailed
from .rng import as_rng

DEFAULT_MESSAGE_CAP = 10**7
WITNESS_CAP = 10**6
_CHUNK = 1 << 17


def bad_allowance(alpha, n: int) -> int:
    """floor(alpha * n), computed exactly."""
    return math.floor(Fraction(alpha) * n)


@dataclass(frozen=True)
class ListFamily:
    p: int
    ell: int
    lists: tuple

    def __post_init__(self):
        lists = tuple(tuple(sorted(set(int(x) for x in s))) for s in self.lists)
        object.__setattr__(self, "lists", lists)
        for i, s in enumerate(lists):
            if len(s) != self.ell:
                raise BadDims(f"list {i} has {len(s)} elements, expected {self.ell}")
            if s and not (0 <= s[0] and s[-1] < self.p):
                raise BadDims(f"list {i} has values outside [0, {self.p})")

    @property
    def n(self) -> int:
        return len(self.lists)

    @classmethod
    def padded(cls, p: int, ell: int, lists: Sequence):
        """Fill each list up to ``ell`` with the smallest residues it lacks."""
        if ell > p:
            raise PreconditionFailed(f"list size {ell} exceeds field size {p}")
        out = []
        for s in lists:
            s = set(int(x) % p for x in s)
            if len(s) > ell:
                raise BadDims(f"list of size {len(s)} exceeds ell={ell}")
            v = 0
            while len(s) < ell:
                if v not in s:
                    s.add(v)
                v += 1
            out.append(s)
        return cls(p, ell, tuple(out))

    def to_json(self) -> dict:
        return {"p": self.p, "ell": self.ell, "lists": [list(s) for s in self.lists]}

    @classmethod
    def from_json(cls, obj: dict):
        return cls(obj["p"], obj["ell"], tuple(obj["lists"]))


@dataclass
class RecoveryReport:
    count: int
    witnesses: list
    alpha: Fraction
    threshold_L: float | None = None
    lists: ListFamily | None = None
    truncated: bool = False

    def exceeds(self) -> bool:
        return self.threshold_L is not None and self.count > self.threshold_L

    def to_json(self, max_witnesses: int | None = None) -> dict:
        ws = self.witnesses if max_witnesses is None else self.witnesses[:max_witnesses]
        out = {
            "count": self.count,
            "alpha": str(self.alpha),
            "threshold": None if self.threshold_L is None else str(self.threshold_L),
            "exceeds_threshold": self.exceeds(),
            "witnesses": [{"message": list(m), "bad": list(b)} for m, b in ws],
            "witnesses_truncated": self.truncated or len(ws) < len(self.witnesses),
        }
        if self.lists is not None:
            out["lists"] = self.lists.to_json()
        return out


def _check_family(g: GeneratorMatrix, fam: ListFamily):
    if fam.n != g.n:
        raise BadDims(f"{fam.n} lists for block length {g.n}")
    if fam.p != g.p:
        raise BadDims(f"lists over F_{fam.p} for a code over F_{g.p}")


def count_near_codewords(
    g: GeneratorMatrix,
    fam: ListFamily,
    alpha,
    cap: int = DEFAULT_MESSAGE_CAP,
    threshold_L=None,
    witness_cap: int = WITNESS_CAP,
) -> RecoveryReport:
    """Count messages whose codeword misses at most floor(alpha*n) lists."""
    _check_family(g, fam)
    total = check_message_budget(g, cap)
    alpha = Fraction(alpha)
    k = bad_allowance(alpha, g.n)
    count = 0
    witnesses = []
    if g.p < NUMPY_P_LIMIT:
        members = [np.array(s, dtype=np.int64) for s in fam.lists]
        for start in range(0, total, _CHUNK):
            stop = min(total, start + _CHUNK)
            digits = message_digits(start, stop, g.p, g.d)
            vals = coordinate_values(g, digits)
            miss = np.zeros(vals.shape, dtype=bool)
            for i in range(g.n):
                miss[:, i] = ~np.isin(vals[:, i], members[i])
            nbad = miss.sum(axis=1)
            ok = np.flatnonzero(nbad <= k)
            count += int(ok.size)
            room = witness_cap - len(witnesses)
            for r in ok[:max(room, 0)]:
                witnesses.append(
                    (tuple(int(x) for x in digits[r]), tuple(int(i) for i in np.flatnonzero(miss[r])))
                )
    else:
        sets = [set(s) for s in fam.lists]
        rows = g.rows
        p = g.p
        for idx in range(total):
            t = message_from_index(idx, p, g.d)
            bad = tuple(
                i for i in range(g.n) if sum(a * b for a, b in zip(rows[i], t)) % p not in sets[i]
            )
            if len(bad) <= k:
                count += 1
                if len(witnesses) < witness_cap:
                    witnesses.append((t, bad))
    return RecoveryReport(
        count, witnesses, alpha, threshold_L, fam, truncated=count > len(witnesses)
    )


# -- exact adversary ---------------------------------------------------------


def _all_values(g: GeneratorMatrix, cap: int) -> np.ndarray:
    total = check_message_budget(g, cap)
    if g.p < NUMPY_P_LIMIT:
        return coordinate_values(g, message_digits(0, total, g.p, g.d))
    rows = g.rows
    out = np.empty((total, g.n), dtype=object)
    for idx in range(total):
        t = message_from_index(idx, g.p, g.d)
        for i in range(g.n):
            out[idx, i] = sum(a * b for a, b in zip(rows[i], t)) % g.p
    return out


def _fiber_masks(vals: np.ndarray) -> list[dict]:
    """Per coordinate: value -> bitmask of message indices in that fiber."""
    fibers = []
    for i in range(vals.shape[1]):
        fib = {}
        for idx, v in enumerate(vals[:, i].tolist()):
            fib[v] = fib.get(v, 0) | (1 << idx)
        fibers.append(fib)
    return fibers


class _Search:
    """Branch and bound over list families.

    A node fixes S_1..S_{i-1} and tracks, for each b <= k, the bitmask of
    messages that have missed exactly b lists so far.  The bound counts how
    many surviving messages could still collect the hits they need from the
    remaining coordinates, each of which can supply at most the total size of
    its ``ell`` largest surviving fibers.
    """

    def __init__(self, fibers, n, ell, k, node_budget):
        self.fibers = fibers
        self.n = n
        self.ell = ell
        self.k = k
        self.node_budget = node_budget
        self.nodes = 0
        self.best = -1
        self.best_choice = None

    def _caps(self, i, alive):
        caps = 0
        for j in range(i, self.n):
            sizes = sorted(
                ((m & alive).bit_count() for m in self.fibers[j].values()), reverse=True
            )
            caps += sum(sizes[: self.ell])
        return caps

    def _bound(self, i, levels):
        remaining = self.n - i
        hits = self._caps(i, _union(levels))
        total = 0
        for b, mask in enumerate(levels):
            c = mask.bit_count()
            need = max(0, remaining - (self.k - b))
            if need == 0:
                total += c
            else:
                take = min(c, hits // need)
                total += take
                hits -= take * need
        return total

    def run(self, i, levels, choice):
        self.nodes += 1
        if self.nodes > self.node_budget:
            raise BudgetExceeded(
                f"exact adversary search exceeded {self.node_budget} nodes",
                None,
                self.node_budget,
            )
        alive = _union(levels)
        if i == self.n:
            c = alive.bit_count()
            if c > self.best:
                self.best = c
                self.best_choice = list(choice)
            return
        if self._bound(i, levels) <= self.best:
            return
        fib = self.fibers[i]
        live = [(v, m) for v, m in fib.items() if m & alive]
        if len(live) <= self.ell:
            opts = [tuple(live)]
        else:
            opts = list(itertools.combinations(live, self.ell))
        scored = []
        for opt in opts:
            inmask = 0
            for _, m in opt:
                inmask |= m
            key = tuple((lv & inmask).bit_count() for lv in levels)
            scored.append((key, opt, inmask))
        scored.sort(key=lambda s: s[0], reverse=True)
        for _, opt, inmask in scored:
            new = [levels[0] & inmask]
            for b in range(1, len(levels)):
                new.append((levels[b] & inmask) | (levels[b - 1] & ~inmask))
            choice.append(tuple(v for v, _ in opt))
            self.run(i + 1, new, choice)
            choice.pop()


def _union(levels):
    out = 0
    for m in levels:
        out |= m
    return out


def max_near_codewords(
    g: GeneratorMatrix, alpha, ell: int, cap: int = 10**4, node_budget: int = 10**6
) -> tuple[int, ListFamily]:
    """Exact maximum, over all list families, of the near-codeword count."""
    if not 1 <= ell <= g.p:
        raise PreconditionFailed(f"need 1 <= ell <= p, got ell={ell}")
    vals = _all_values(g, cap)
    k = bad_allowance(alpha, g.n)
    total = vals.shape[0]
    if k >= g.n:
        # every codeword qualifies whatever the lists are
        return total, ListFamily.padded(g.p, ell, [()] * g.n)
    fibers = _fiber_masks(vals)
    search = _Search(fibers, g.n, ell, k, node_budget)
    levels = [(1 << total) - 1] + [0] * k
    search.run(0, levels, [])
    fam = ListFamily.padded(g.p, ell, search.best_choice)
    return search.best, fam


def is_list_recoverable_bruteforce(
    g: GeneratorMatrix,
    alpha,
    ell: int,
    L,
    cap: int = 10**4,
    node_budget: int = 10**6,
) -> tuple[bool, ListFamily]:
    """Decide (alpha, ell, L)-list recoverability exactly.

    List values are restricted to symbols some codeword actually takes in that
    coordinate; other symbols capture nothing and only serve as padding.
    Returns the verdict and a family attaining the maximum count.
    """
    best, fam = max_near_codewords(g, alpha, ell, cap, node_budget)
    return best <= L, fam


def naive_max_near_codewords(g: GeneratorMatrix, alpha, ell: int, cap: int = 10**3) -> int:
    """Reference maximum by trying every family (tiny instances only)."""
    vals = _all_values(g, cap)
    k = bad_allowance(alpha, g.n)
    per_coord = []
    for i in range(g.n):
        image = sorted(set(vals[:, i].tolist()))
        if len(image) <= ell:
            per_coord.append([tuple(image)])
        else:
            per_coord.append(list(itertools.combinations(image, ell)))
    best = 0
    for fam in itertools.product(*per_coord):
        c = 0
        for row in vals.tolist():
            bad = sum(1 for i, v in enumerate(row) if v not in fam[i])
            c += bad <= k
        best = max(best, c)
    return best


# -- randomized adversary ----------------------------------------------------


def popular_lists(g: GeneratorMatrix, messages: Sequence[Sequence[int]], ell: int) -> ListFamily:
    """For each coordinate, the ``ell`` most frequent values over ``messages``."""
    lists = []
    for i in range(g.n):
        form = g.form(i)
        counts = Counter(g.ctx.dot(form, t) for t in messages)
        top = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))[:ell]
        lists.append([v for v, _ in top])
    return ListFamily.padded(g.p, ell, lists)


def random_message_subset(g: GeneratorMatrix, size: int, rng) -> list[tuple]:
    total = g.p ** g.d
    size = min(size, total)
    if total < 1 << 20:
        idx = rng.choice(total, size=size, replace=False)
        return [message_from_index(int(x), g.p, g.d) for x in sorted(idx.tolist())]
    seen = set()
    while len(seen) < size:
        t = tuple(int(x) for x in rng.integers(0, g.p, size=g.d, dtype=np.int64))
        seen.add(t)
    return sorted(seen)


def random_attack_search(
    g: GeneratorMatrix,
    alpha,
    ell: int,
    trials: int,
    seed,
    L: int | None = None,
    candidates: Sequence[ListFamily] = (),
    cap: int = DEFAULT_MESSAGE_CAP,
) -> RecoveryReport:
    """Best family found by sampling message subsets and taking popular values.

    Each trial draws ``L + 1`` random messages (``ell + 1`` when L is not
    given) and lets every list hold the ``ell`` most common coordinate values
    among them.  ``candidates`` are scored first and compete on equal terms.
    """
    rng = as_rng(seed, "random_attack_search")
    size = (L if L is not None else ell) + 1
    best = RecoveryReport(0, [], Fraction(alpha), L)
    for fam in candidates:
        rep = count_near_codewords(g, fam, alpha, cap, L)
        if rep.count > best.count:
            best = rep
    for _ in range(trials):
        msgs = random_message_subset(g, size, rng)
        fam = popular_lists(g, msgs, ell)
        rep = count_near_codewords(g, fam, alpha, cap, L)
        if rep.count > best.count:
            best = rep
    return best


# -- hand-off to the graph pipeline ------------------------------------------


@dataclass
class PipelineInput:
    messages: list
    table: list = field(default_factory=list)

    @property
    def sizes(self) -> list[int]:
        return [len(t) for t in self.table]


def membership_table(g: GeneratorMatrix, messages: Sequence, fam: ListFamily) -> PipelineInput:
    """A_i = indices of messages whose coordinate i lands in S_i."""
    _check_family(g, fam)
    sets = [set(s) for s in fam.lists]
    table = []
    for i in range(g.n):
        form = g.form(i)
        table.append([a for a, t in enumerate(messages) if g.ctx.dot(form, t) in sets[i]])
    return PipelineInput(list(messages), table)


def violating_set_to_pipeline_input(
    report: RecoveryReport, g: GeneratorMatrix, fam: ListFamily
) -> PipelineInput:
    if not report.witnesses:
        raise PreconditionFailed("report has no witnesses")
    return membership_table(g, [m for m, _ in report.witnesses], fam)
