"""Tree certificates, their R-matrices, and goodness of coefficient arrays.

A tree certificate on ``w`` vertices is a tuple of d colored spanning trees of
``0..w-1`` whose color sets are pairwise disjoint.  Given linear forms
lambda_c(z) = sum_j alpha[c][j] z_j, the certificate's edge equations

    lambda_{color(e)}(q_u - q_v) = 0        for every edge e = (u, v)

form a square system R Q = 0 in the differences Q = (q_s - q_{w-1}), with no
column for the base vertex ``w-1``.  A coefficient array is *good up to B*
when every certificate with at most B vertices has det R != 0.

Conventions: edges are stored as ``(u, v, color)`` with ``u < v`` and oriented
u -> v; R rows are ordered by (tree, edge); column ``(s, j)`` sits at index
``s * d + j``.
"""

from __future__ import annotations

import itertools
import math
from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, NamedTuple, Sequence

from .code import message_from_index
from .errors import BudgetExceeded, ColorOutOfRange, PreconditionFailed
from .field import FieldCtx, Matrix, det_mod_p
from .graphs import spanning_tree
from .rng import as_rng

POINT_SEARCH_LIMIT = 1 << 12
DEFAULT_ENUM_BUDGET = 20_000


# -- data types --------------------------------------------------------------


def _spans(w: int, tree) -> bool:
    parent = list(range(w))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for u, v, _ in tree:
        ru, rv = find(u), find(v)
        if ru == rv:
            return False
        parent[ru] = rv
    return len({find(x) for x in range(w)}) == 1


@dataclass(frozen=True)
class TreeCertificate:
    w: int
    trees: tuple

    def __post_init__(self):
        if self.w < 2:
            raise PreconditionFailed("a certificate needs w >= 2")
        trees = tuple(
            tuple(sorted((min(u, v), max(u, v), int(c)) for u, v, c in t)) for t in self.trees
        )
        object.__setattr__(self, "trees", trees)
        for r, t in enumerate(trees):
            if len(t) != self.w - 1 or not all(0 <= u < v < self.w for u, v, _ in t):
                raise PreconditionFailed(f"tree {r} is not a spanning tree of [{self.w}]")
            if not _spans(self.w, t):
                raise PreconditionFailed(f"tree {r} is not a spanning tree of [{self.w}]")
        sets = self.color_sets()
        for a, b in itertools.combinations(range(len(sets)), 2):
            if sets[a] & sets[b]:
                raise PreconditionFailed(f"trees {a} and {b} share a color")

    @property
    def d(self) -> int:
        return len(self.trees)

    def color_sets(self) -> list[frozenset]:
        return [frozenset(c for *_, c in t) for t in self.trees]

    def colors(self) -> set:
        return {c for t in self.trees for *_, c in t}

    def to_json(self) -> dict:
        return {"w": self.w, "trees": [[list(e) for e in t] for t in self.trees]}

    @classmethod
    def from_json(cls, obj: dict):
        return cls(obj["w"], tuple(tuple(tuple(e) for e in t) for t in obj["trees"]))


@dataclass(frozen=True)
class CoefficientArray:
    """alpha[c][j] for colors c in [m] and coordinates j in [d]."""

    ctx: FieldCtx
    rows: tuple

    def __post_init__(self):
        rows = tuple(tuple(self.ctx(x) for x in r) for r in self.rows)
        object.__setattr__(self, "rows", rows)
        if len({len(r) for r in rows}) > 1:
            raise PreconditionFailed("ragged coefficient array")

    @property
    def m(self) -> int:
        return len(self.rows)

    @property
    def d(self) -> int:
        return len(self.rows[0]) if self.rows else 0

    @classmethod
    def from_generator(cls, g):
        return cls(g.ctx, tuple(g.rows))

    @classmethod
    def random(cls, m: int, d: int, ctx: FieldCtx, seed):
        rng = as_rng(seed, "CoefficientArray.random")
        raw = rng.integers(0, ctx.p, size=(m, d), dtype="int64").tolist()
        return cls(ctx, tuple(tuple(r) for r in raw))


# -- R matrix ----------------------------------------------------------------


def build_R_matrix(cert: TreeCertificate, coeffs: CoefficientArray) -> Matrix:
    d = cert.d
    if coeffs.d != d:
        raise PreconditionFailed(f"{d} trees but coefficients have d={coeffs.d}")
    top = max(cert.colors())
    if top >= coeffs.m:
        raise ColorOutOfRange(f"color {top} outside the {coeffs.m} available forms")
    size = d * (cert.w - 1)
    base = cert.w - 1
    p = coeffs.ctx.p
    rows = []
    for tree in cert.trees:
        for u, v, c in tree:
            row = [0] * size
            a = coeffs.rows[c]
            if u != base:
                for j in range(d):
                    row[u * d + j] = a[j]
            if v != base:
                for j in range(d):
                    row[v * d + j] = -a[j] % p
            rows.append(row)
    return Matrix(size, size, tuple(x for r in rows for x in r))


def eval_certificate(cert: TreeCertificate, coeffs: CoefficientArray) -> int:
    return det_mod_p(build_R_matrix(cert, coeffs), coeffs.ctx)


def specialization_coeffs(cert: TreeCertificate, ctx: FieldCtx, m: int | None = None) -> CoefficientArray:
    """alpha[c][r] = 1 for colors c of tree r, everything else 0."""
    m = max(cert.colors()) + 1 if m is None else m
    rows = [[0] * cert.d for _ in range(m)]
    for r, cs in enumerate(cert.color_sets()):
        for c in cs:
            rows[c][r] = 1
    return CoefficientArray(ctx, tuple(tuple(r) for r in rows))


def specialization_sanity(cert: TreeCertificate, ctx: FieldCtx) -> int:
    """det R under the block-diagonal specialization; always 1 or p - 1."""
    return eval_certificate(cert, specialization_coeffs(cert, ctx))


def collapse_points(cert: TreeCertificate, coeffs: CoefficientArray, points: Sequence[Sequence[int]]):
    """(edge equations all hold, all points equal)."""
    if len(points) != cert.w:
        raise PreconditionFailed(f"{len(points)} points for a certificate on {cert.w} vertices")
    ctx = coeffs.ctx
    pts = [tuple(ctx(x) for x in q) for q in points]
    consistent = all(
        ctx.dot(coeffs.rows[c], [a - b for a, b in zip(pts[u], pts[v])]) == 0
        for t in cert.trees
        for u, v, c in t
    )
    return consistent, len(set(pts)) == 1


# -- enumeration -------------------------------------------------------------


def prufer_to_edges(seq: Sequence[int], w: int) -> list[tuple]:
    """Edges (u < v) of the labelled tree on 0..w-1 with Pruefer code ``seq``."""
    if w == 2:
        return [(0, 1)]
    degree = [1] * w
    for x in seq:
        degree[x] += 1
    edges = []
    for x in seq:
        leaf = min(i for i in range(w) if degree[i] == 1)
        edges.append((min(leaf, x), max(leaf, x)))
        degree[leaf] -= 1
        degree[x] -= 1
    u, v = [i for i in range(w) if degree[i] == 1]
    edges.append((u, v))
    return sorted(edges)


def labelled_trees(w: int) -> Iterator[list]:
    for seq in itertools.product(range(w), repeat=max(w - 2, 0)):
        yield prufer_to_edges(seq, w)


def _surjections(k: int, s: int) -> int:
    return sum((-1) ** i * math.comb(s, i) * (s - i) ** k for i in range(s + 1))


def certificate_count(B: int, m: int, d: int) -> int:
    """Exact number of certificates with 2 <= w <= B (no enumeration)."""
    total = 0
    for w in range(2, B + 1):
        per_size = [w ** (w - 2) * _surjections(w - 1, s) for s in range(m + 1)]
        for sizes in itertools.product(range(1, min(m, w - 1) + 1), repeat=d):
            used = sum(sizes)
            if used > m:
                continue
            ways = math.factorial(m) // math.factorial(m - used)
            for s in sizes:
                ways //= math.factorial(s)
            prod = 1
            for s in sizes:
                prod *= per_size[s]
            total += ways * prod
    return total


def proof_count_bound(B: int, m: int, d: int) -> int:
    """The crude overcount B (B^2 m)^(dB)."""
    return B * (B * B * m) ** (d * B)


def _colored_trees_by_mask(w: int, m: int) -> dict[int, list]:
    out = defaultdict(list)
    for edges in labelled_trees(w):
        for colors in itertools.product(range(m), repeat=w - 1):
            mask = 0
            for c in colors:
                mask |= 1 << c
            out[mask].append(tuple((u, v, c) for (u, v), c in zip(edges, colors)))
    return out


def enumerate_certificates(B: int, m: int, d: int, budget: int = 10**6) -> Iterator[TreeCertificate]:
    """Every certificate with 2 <= w <= B, each once, ordered by w."""
    total = certificate_count(B, m, d)
    if total > budget:
        raise BudgetExceeded(
            f"{total} certificates exceed budget {budget} (crude bound {proof_count_bound(B, m, d):.3e})",
            total,
            budget,
        )
    return _enumerate(B, m, d)


def _enumerate(B, m, d):
    for w in range(2, B + 1):
        by_mask = _colored_trees_by_mask(w, m)
        masks = sorted(by_mask)

        def rec(r, used, chosen):
            if r == d:
                for combo in itertools.product(*(by_mask[x] for x in chosen)):
                    yield TreeCertificate(w, combo)
                return
            for mk in masks:
                if not mk & used:
                    chosen.append(mk)
                    yield from rec(r + 1, used | mk, chosen)
                    chosen.pop()

        yield from rec(0, 0, [])


def random_certificate(rng, w_max: int = 6, d_max: int = 3, m_max: int = 10) -> TreeCertificate:
    """Random certificate: w, d, m uniform, Pruefer trees, colors from disjoint pools."""
    w = int(rng.integers(2, w_max + 1))
    d = int(rng.integers(1, d_max + 1))
    m = int(rng.integers(d, m_max + 1))
    while True:
        owner = rng.integers(-1, d, size=m)
        pools = [[c for c in range(m) if owner[c] == r] for r in range(d)]
        if all(pools):
            break
    trees = []
    for r in range(d):
        seq = rng.integers(0, w, size=max(w - 2, 0)).tolist()
        edges = prufer_to_edges(seq, w)
        trees.append(tuple((u, v, pools[r][int(rng.integers(len(pools[r])))]) for u, v in edges))
    return TreeCertificate(w, tuple(trees))


# -- goodness ----------------------------------------------------------------


@dataclass
class GoodnessResult:
    good: bool
    failing: TreeCertificate | None
    B: int
    method: str
    exact: bool
    checked: int

    def to_json(self) -> dict:
        return {
            "good": self.good,
            "B": self.B,
            "method": self.method,
            "exact": self.exact,
            "checked": self.checked,
            "failing_certificate": None if self.failing is None else self.failing.to_json(),
        }


def _goodness_by_enumeration(coeffs, B, budget) -> GoodnessResult:
    checked = 0
    for cert in enumerate_certificates(B, coeffs.m, coeffs.d, budget):
        checked += 1
        if eval_certificate(cert, coeffs) == 0:
            return GoodnessResult(False, cert, B, "enumerate", True, checked)
    return GoodnessResult(True, None, B, "enumerate", True, checked)


def _set_partitions(k: int, d: int) -> Iterator[list]:
    """Partitions of range(k) into exactly d nonempty blocks."""

    def rec(i, assign, used):
        if i == k:
            if used == d:
                yield [[j for j in range(k) if assign[j] == r] for r in range(d)]
            return
        if k - i < d - used:
            return
        for r in range(min(used + 1, d)):
            assign.append(r)
            yield from rec(i + 1, assign, max(used, r + 1))
            assign.pop()

    yield from rec(0, [], 0)


def _connected_within(mask: int, adj: list) -> bool:
    start = mask & -mask
    seen = start
    frontier = start
    while frontier:
        x = frontier.bit_length() - 1
        frontier ^= 1 << x
        new = adj[x] & mask & ~seen
        seen |= new
        frontier |= new
    return seen == mask


def _goodness_by_points(coeffs: CoefficientArray, B: int, node_budget: int) -> GoodnessResult:
    """Search point configurations instead of certificates.

    det R = 0 for some certificate on w <= B vertices exactly when there are
    distinct points Q in F_p^d, 2 <= |Q| <= B, and a split of the colors into
    d groups such that, for every group, Q is connected by the relation
    "lambda_c(x) = lambda_c(y) for some c in the group".  (Repeated points in
    a certificate solution are joined by every color, so they can be merged,
    and extra colors only add edges, so every color may be assigned.)  By
    translation it suffices to search sets containing the origin.
    """
    ctx, m, d = coeffs.ctx, coeffs.m, coeffs.d
    p = ctx.p
    N = p**d
    pts = [message_from_index(x, p, d) for x in range(N)]
    vals = [[ctx.dot(coeffs.rows[c], q) for q in pts] for c in range(m)]
    fibers = []
    for c in range(m):
        fib = defaultdict(int)
        for x, v in enumerate(vals[c]):
            fib[v] |= 1 << x
        fibers.append(fib)
    adj_cache = {}

    def adjacency(group):
        key = tuple(group)
        if key not in adj_cache:
            adj = []
            for x in range(N):
                a = 0
                for c in group:
                    a |= fibers[c][vals[c][x]]
                adj.append(a & ~(1 << x))
            adj_cache[key] = adj
        return adj_cache[key]

    def component_size(adj):
        full = (1 << N) - 1
        seen, frontier = 1, 1
        while frontier:
            x = frontier.bit_length() - 1
            frontier ^= 1 << x
            new = adj[x] & full & ~seen
            seen |= new
            frontier |= new
        return seen.bit_count()

    nodes = 0
    for groups in _set_partitions(m, d):
        adjs = [adjacency(gp) for gp in groups]
        order = sorted(range(d), key=lambda r: component_size(adjs[r]))
        pivot = adjs[order[0]]
        others = [adjs[r] for r in order[1:]]
        # connected sets containing vertex 0, each generated once
        stack = [(1, pivot[0], 1)]
        while stack:
            S, cand, forbidden = stack.pop()
            nodes += 1
            if nodes > node_budget:
                raise BudgetExceeded(f"point search exceeded {node_budget} nodes", None, node_budget)
            if S != 1 and all(_connected_within(S, a) for a in others):
                cert = _certificate_from_points(S, groups, vals, pts)
                if eval_certificate(cert, coeffs) != 0:
                    raise AssertionError("point witness produced a nonsingular certificate")
                return GoodnessResult(False, cert, B, "points", True, nodes)
            if S.bit_count() == B:
                continue
            while cand:
                v = cand & -cand
                cand ^= v
                newS = S | v
                vi = v.bit_length() - 1
                newcand = (cand | pivot[vi]) & ~newS & ~forbidden
                stack.append((newS, newcand, forbidden))
                forbidden |= v
    return GoodnessResult(True, None, B, "points", True, nodes)


def _certificate_from_points(S: int, groups, vals, pts) -> TreeCertificate:
    Q = [x for x in range(S.bit_length()) if S >> x & 1]
    w = len(Q)
    trees = []
    for group in groups:
        edges = [
            (a, b, c)
            for a, b in itertools.combinations(range(w), 2)
            for c in group
            if vals[c][Q[a]] == vals[c][Q[b]]
        ]
        trees.append(tuple(spanning_tree(w, edges)))
    return TreeCertificate(w, tuple(trees))


def check_good_up_to_B(
    coeffs: CoefficientArray,
    B: int,
    budget: int = DEFAULT_ENUM_BUDGET,
    method: str = "auto",
    node_budget: int = 2 * 10**6,
) -> GoodnessResult:
    """Exact goodness check.

    ``method="enumerate"`` evaluates every certificate; ``"points"`` runs the
    equivalent point-configuration search (needs p^d <= 4096); ``"auto"``
    enumerates when the certificate count fits ``budget`` and otherwise
    searches points.
    """
    if B < 2:
        raise PreconditionFailed("B must be at least 2")
    if coeffs.m < coeffs.d:
        # fewer colors than trees: no certificate exists
        return GoodnessResult(True, None, B, "vacuous", True, 0)
    if method == "auto":
        if certificate_count(B, coeffs.m, coeffs.d) <= budget:
            method = "enumerate"
        elif coeffs.ctx.p ** coeffs.d <= POINT_SEARCH_LIMIT:
            method = "points"
        else:
            raise BudgetExceeded(
                f"certificate count {certificate_count(B, coeffs.m, coeffs.d)} exceeds budget {budget}",
                certificate_count(B, coeffs.m, coeffs.d),
                budget,
            )
    if method == "enumerate":
        return _goodness_by_enumeration(coeffs, B, budget)
    if method == "points":
        if coeffs.ctx.p ** coeffs.d > POINT_SEARCH_LIMIT:
            raise BudgetExceeded("point search needs p^d <= 4096", coeffs.ctx.p ** coeffs.d, POINT_SEARCH_LIMIT)
        return _goodness_by_points(coeffs, B, node_budget)
    raise PreconditionFailed(f"unknown method {method!r}")


def sampled_goodness(coeffs: CoefficientArray, B: int, samples: int, seed) -> GoodnessResult:
    """Partial check on random certificates; ``exact`` is always False."""
    rng = as_rng(seed, "sampled_goodness")
    for k in range(1, samples + 1):
        while True:
            cert = random_certificate(rng, B, coeffs.d, coeffs.m)
            if cert.d == coeffs.d:
                break
        if eval_certificate(cert, coeffs) == 0:
            return GoodnessResult(False, cert, B, "sampled", False, k)
    return GoodnessResult(True, None, B, "sampled", False, samples)


# -- Schwartz-Zippel ---------------------------------------------------------


class SZBound(NamedTuple):
    exact: Fraction
    capped: float


def sz_failure_bound(B: int, m: int, d: int, p: int) -> SZBound:
    """d B^2 (B^2 m)^(dB) / p, exactly and capped at 1."""
    exact = Fraction(d * B * B * (B * B * m) ** (d * B), p)
    return SZBound(exact, min(1.0, float(exact)))


def wilson_interval(k: int, n: int, z: float = 1.96) -> tuple[float, float]:
    if n == 0:
        return 0.0, 1.0
    phat = k / n
    denom = 1 + z * z / n
    centre = (phat + z * z / (2 * n)) / denom
    half = z * math.sqrt(phat * (1 - phat) / n + z * z / (4 * n * n)) / denom
    return max(0.0, centre - half), min(1.0, centre + half)


def _relabel_colors(cert: TreeCertificate) -> TreeCertificate:
    order = {}
    for t in cert.trees:
        for *_, c in t:
            order.setdefault(c, len(order))
    return TreeCertificate(cert.w, tuple(tuple((u, v, order[c]) for u, v, c in t) for t in cert.trees))


def vanishing_probability(cert: TreeCertificate, p: int, limit: int = 10**6) -> Fraction:
    """Pr[det R = 0] for uniform coefficients, by exhausting the used colors."""
    cert = _relabel_colors(cert)
    k = len(cert.colors())
    d = cert.d
    total = p ** (d * k)
    if total > limit:
        raise BudgetExceeded(f"{total} coefficient assignments exceed {limit}", total, limit)
    ctx = FieldCtx(p)
    zeros = 0
    for flat in itertools.product(range(p), repeat=d * k):
        rows = tuple(tuple(flat[c * d:(c + 1) * d]) for c in range(k))
        zeros += eval_certificate(cert, CoefficientArray(ctx, rows)) == 0
    return Fraction(zeros, total)


def union_vanishing_bound(B: int, m: int, d: int, p: int, budget: int = 10**6) -> Fraction:
    """Sum over all certificates of their exact vanishing probabilities."""
    cache = {}
    total = Fraction(0)
    for cert in enumerate_certificates(B, m, d, budget):
        key = _relabel_colors(cert)
        if key not in cache:
            cache[key] = vanishing_probability(key, p)
        total += cache[key]
    return total


@dataclass
class SZReport:
    B: int
    m: int
    d: int
    p: int
    trials: int
    failures: int
    interval: tuple
    bound: SZBound
    method: str
    rows: list

    @property
    def frequency(self) -> float:
        return self.failures / self.trials if self.trials else 0.0

    def to_json(self, include_rows: bool = True) -> dict:
        out = {
            "B": self.B,
            "m": self.m,
            "d": self.d,
            "p": self.p,
            "trials": self.trials,
            "failures": self.failures,
            "frequency": self.frequency,
            "wilson_95": list(self.interval),
            "bound": str(self.bound.exact),
            "bound_capped": self.bound.capped,
            "method": self.method,
        }
        if include_rows:
            out["rows"] = self.rows
        return out


def sz_experiment(
    B: int,
    m: int,
    d: int,
    p: int,
    trials: int,
    seed,
    budget: int = 10**6,
    method: str = "auto",
) -> SZReport:
    """Fraction of uniformly random coefficient arrays that are not good up to B."""
    ctx = FieldCtx(p)
    rng = as_rng(seed, "sz_experiment")
    certs = None
    if method in ("auto", "enumerate") and certificate_count(B, m, d) <= budget:
        certs = list(enumerate_certificates(B, m, d, budget))
        method = "enumerate"
    failures = 0
    rows = []
    for trial in range(trials):
        coeffs = CoefficientArray.random(m, d, ctx, rng)
        if certs is not None:
            failing = next((c for c in certs if eval_certificate(c, coeffs) == 0), None)
        else:
            res = check_good_up_to_B(coeffs, B, budget, method="points")
            failing = res.failing
            method = "points"
        good = failing is None
        failures += not good
        row = {"trial": trial, "good": good}
        if not good:
            row["failing_certificate"] = failing.to_json()
        rows.append(row)
    return SZReport(
        B, m, d, p, trials, failures, wilson_interval(failures, trials), sz_failure_bound(B, m, d, p), method, rows
    )
