"""Edge-colored multigraphs whose color classes are matchings.

Vertices are ``0..w-1`` and colors ``0..m-1``.  Edges are ``(u, v, color)``
triples with ``u != v``; parallel edges are allowed and densities count them
with multiplicity.
"""

from __future__ import annotations

import itertools
import math
from collections import defaultdict, deque
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import BadCut, BadT, BudgetExceeded, NotFound, PreconditionFailed, TooSmall
from .params import tree_budget
from .rng import as_rng

EXACT_DENSITY_LIMIT = 20
EXACT_EXPANSION_LIMIT = 20


@dataclass(frozen=True)
class ColoredMultigraph:
    w: int
    m: int
    edges: tuple

    def __post_init__(self):
        edges = tuple((int(u), int(v), int(c)) for u, v, c in self.edges)
        object.__setattr__(self, "edges", edges)
        for u, v, c in edges:
            if u == v:
                raise PreconditionFailed(f"loop at vertex {u}")
            if not (0 <= u < self.w and 0 <= v < self.w):
                raise PreconditionFailed(f"edge ({u}, {v}) outside [0, {self.w})")
            if not 0 <= c < self.m:
                raise PreconditionFailed(f"color {c} outside [0, {self.m})")

    def color_classes(self) -> dict[int, list]:
        out = defaultdict(list)
        for u, v, c in self.edges:
            out[c].append((u, v))
        return dict(out)

    def is_matching_family(self) -> bool:
        for es in self.color_classes().values():
            seen = set()
            for u, v in es:
                if u in seen or v in seen:
                    return False
                seen.update((u, v))
        return True

    def induced(self, W: Sequence[int]) -> "ColoredMultigraph":
        """G[W] relabelled to 0..|W|-1 in the order of ``W``."""
        pos = {v: i for i, v in enumerate(W)}
        es = tuple((pos[u], pos[v], c) for u, v, c in self.edges if u in pos and v in pos)
        return ColoredMultigraph(len(W), self.m, es)

    def to_json(self) -> dict:
        return {"w": self.w, "m": self.m, "edges": [list(e) for e in self.edges]}

    @classmethod
    def from_json(cls, obj: dict):
        return cls(obj["w"], obj["m"], tuple(tuple(e) for e in obj["edges"]))


@dataclass(frozen=True)
class MatchingFamily:
    """Per-color matchings on ``w`` vertices (color i = coordinate i)."""

    w: int
    matchings: tuple

    def __post_init__(self):
        for c, es in enumerate(self.matchings):
            seen = set()
            for u, v in es:
                if u == v or u in seen or v in seen:
                    raise PreconditionFailed(f"color {c} is not a matching")
                seen.update((u, v))

    @property
    def m(self) -> int:
        return len(self.matchings)

    def sizes(self) -> list[int]:
        return [len(es) for es in self.matchings]

    def to_graph(self, colors: Iterable[int] | None = None) -> ColoredMultigraph:
        keep = range(self.m) if colors is None else sorted(colors)
        es = tuple((u, v, c) for c in keep for u, v in self.matchings[c])
        return ColoredMultigraph(self.w, self.m, es)


@dataclass
class DisjointTreeBundle:
    W: tuple
    trees: list
    color_sets: list
    attempts: int = 0
    method: str = "random"
    block_size: int = 0

    def to_json(self) -> dict:
        return {
            "W": list(self.W),
            "trees": [[list(e) for e in t] for t in self.trees],
            "color_sets": [list(s) for s in self.color_sets],
            "attempts": self.attempts,
            "method": self.method,
            "block_size": self.block_size,
        }


# -- components --------------------------------------------------------------


class _DSU:
    def __init__(self, n):
        self.parent = list(range(n))
        self.count = n

    def find(self, x):
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[ra] = rb
            self.count -= 1


def cc_count(h: ColoredMultigraph, colors: Iterable[int] | None = None) -> int:
    """Components of H[I] on all w vertices, isolated vertices included."""
    keep = None if colors is None else set(colors)
    dsu = _DSU(h.w)
    for u, v, c in h.edges:
        if keep is None or c in keep:
            dsu.union(u, v)
    return dsu.count


def _connects(w: int, edges: Iterable) -> bool:
    dsu = _DSU(w)
    for u, v, *_ in edges:
        dsu.union(u, v)
        if dsu.count == 1:
            return True
    return dsu.count == 1


def spanning_tree(w: int, edges: Sequence) -> list:
    """BFS spanning tree from vertex 0; neighbours visited in (vertex, color) order."""
    adj = defaultdict(list)
    for u, v, c in edges:
        adj[u].append((v, c))
        adj[v].append((u, c))
    for k in adj:
        adj[k].sort()
    seen = {0}
    tree = []
    q = deque([0])
    while q:
        x = q.popleft()
        for y, c in adj[x]:
            if y not in seen:
                seen.add(y)
                tree.append((min(x, y), max(x, y), c))
                q.append(y)
    if len(seen) != w:
        raise NotFound("edges do not span")
    return sorted(tree)


# -- fibers ------------------------------------------------------------------


def fibers_to_matchings(A: Sequence, g, fam) -> MatchingFamily:
    """Pair the points of each A_i inside the fibers of lambda_i.

    Vertices are positions in ``A``.  Within a fiber the points are paired in
    index order, so at most one point per fiber stays unmatched and
    |M_i| >= (a_i - ell)_+ / 2.
    """
    A = [tuple(a) for a in A]
    if len(set(A)) != len(A):
        raise PreconditionFailed("A must consist of distinct messages")
    sets = [set(s) for s in fam.lists]
    matchings = []
    for i in range(g.n):
        form = g.form(i)
        fibers = defaultdict(list)
        for idx, a in enumerate(A):
            val = g.ctx.dot(form, a)
            if val in sets[i]:
                fibers[val].append(idx)
        es = []
        for val in sorted(fibers):
            pts = fibers[val]
            es.extend((pts[j], pts[j + 1]) for j in range(0, len(pts) - 1, 2))
        matchings.append(tuple(es))
    return MatchingFamily(len(A), tuple(matchings))


# -- cuts and expansion ------------------------------------------------------


def colors_crossing_cut(h: ColoredMultigraph, A: Iterable[int]) -> set:
    A = set(A)
    if not A or len(A) >= h.w or not A <= set(range(h.w)):
        raise BadCut(f"cut side must be a nonempty proper subset of the {h.w} vertices")
    return {c for u, v, c in h.edges if (u in A) != (v in A)}


def _subset_bits(w: int) -> np.ndarray:
    masks = np.arange(1 << w, dtype=np.int64)
    return ((masks[:, None] >> np.arange(w, dtype=np.int64)) & 1).astype(bool)


def _mask_tuple(mask: int) -> tuple:
    return tuple(i for i in range(mask.bit_length()) if mask >> i & 1)


def _cut_crossings(h: ColoredMultigraph):
    """(bits, crossing-color counts) for every vertex subset."""
    bits = _subset_bits(h.w)
    crossing = np.zeros(bits.shape[0], dtype=np.int64)
    for c, es in h.color_classes().items():
        hit = np.zeros(bits.shape[0], dtype=bool)
        for u, v in es:
            hit |= bits[:, u] ^ bits[:, v]
        crossing += hit
    return bits, crossing


def verify_expansion(h: ColoredMultigraph, gamma: float):
    """Every nonempty A with |A| <= w/2 sees >= gamma m ln(w/|A|) crossing colors.

    Returns ``(ok, first violating cut or None)``.
    """
    if h.w > EXACT_EXPANSION_LIMIT:
        raise BudgetExceeded(f"{h.w} vertices exceed the exact cut limit", h.w, EXACT_EXPANSION_LIMIT)
    if gamma <= 0:
        return True, None
    bits, crossing = _cut_crossings(h)
    size = bits.sum(axis=1)
    valid = (size >= 1) & (2 * size <= h.w)
    need = np.zeros(size.shape)
    need[valid] = gamma * h.m * np.log(h.w / size[valid])
    bad = np.flatnonzero(valid & (crossing < need))
    if bad.size:
        return False, _mask_tuple(int(bad[0]))
    return True, None


def certified_gamma(h: ColoredMultigraph) -> float:
    """Largest gamma for which :func:`verify_expansion` holds."""
    if h.w > EXACT_EXPANSION_LIMIT:
        raise BudgetExceeded(f"{h.w} vertices exceed the exact cut limit", h.w, EXACT_EXPANSION_LIMIT)
    bits, crossing = _cut_crossings(h)
    size = bits.sum(axis=1)
    valid = (size >= 1) & (2 * size <= h.w)
    return float((crossing[valid] / (h.m * np.log(h.w / size[valid]))).min())


def random_color_connectivity_trial(h: ColoredMultigraph, T: int, seed) -> bool:
    """Is H[I] connected for a uniformly random T-subset I of the colors?"""
    if not 0 <= T <= h.m:
        raise BadT(f"T={T} must lie in [0, {h.m}]")
    rng = as_rng(seed, "random_color_connectivity_trial")
    I = set(rng.choice(h.m, size=T, replace=False).tolist())
    return cc_count(h, I) == 1


# -- density -----------------------------------------------------------------


@dataclass(frozen=True)
class DensityResult:
    W: tuple
    rho: float
    exact: bool


def density(h: ColoredMultigraph, U: Iterable[int]) -> float:
    """e(U) / (|U| ln |U|), zero for a single vertex."""
    U = set(U)
    if len(U) < 2:
        return 0.0
    e = sum(1 for u, v, _ in h.edges if u in U and v in U)
    return e / (len(U) * math.log(len(U)))


def max_density_subgraph(h: ColoredMultigraph) -> DensityResult:
    """Vertex set of size >= 2 maximizing e(U) / (|U| ln |U|).

    Exact by subset enumeration up to 20 vertices, ties going to the
    lexicographically smallest set.  Larger graphs use greedy peeling of a
    minimum-degree vertex, keeping the best prefix, and are flagged inexact.
    """
    w = h.w
    if w < 2:
        raise TooSmall("density maximization needs at least 2 vertices")
    if w > EXACT_DENSITY_LIMIT:
        return _peel_density(h)
    mult = defaultdict(int)
    for u, v, _ in h.edges:
        mult[(min(u, v), max(u, v))] += 1
    bits = _subset_bits(w)
    e = np.zeros(bits.shape[0], dtype=np.int64)
    for (u, v), k in mult.items():
        e += k * (bits[:, u] & bits[:, v])
    size = bits.sum(axis=1)
    rho = np.full(bits.shape[0], -1.0)
    big = size >= 2
    rho[big] = e[big] / (size[big] * np.log(size[big]))
    best = float(rho.max())
    if best <= 0:
        return DensityResult((0, 1), 0.0, True)
    tol = 1e-12 * best
    cands = np.flatnonzero(rho >= best - tol)
    W = min(_mask_tuple(int(c)) for c in cands)
    return DensityResult(W, density(h, W), True)


def _peel_density(h: ColoredMultigraph) -> DensityResult:
    alive = set(range(h.w))
    deg = defaultdict(int)
    for u, v, _ in h.edges:
        deg[u] += 1
        deg[v] += 1
    best = (density(h, alive), tuple(sorted(alive)))
    edges = list(h.edges)
    while len(alive) > 2:
        x = min(alive, key=lambda v: (deg[v], v))
        alive.remove(x)
        for u, v, _ in edges:
            if x in (u, v):
                other = v if u == x else u
                if other in alive:
                    deg[other] -= 1
        edges = [e for e in edges if x not in e[:2]]
        r = density(h, alive)
        if r > best[0]:
            best = (r, tuple(sorted(alive)))
    return DensityResult(best[1], best[0], False)


# -- disjoint spanning trees -------------------------------------------------


def _as_graph(g) -> ColoredMultigraph:
    if isinstance(g, MatchingFamily):
        return g.to_graph()
    return g


def _bundle(H: ColoredMultigraph, W, groups, attempts, method, block) -> DisjointTreeBundle:
    trees, color_sets = [], []
    for grp in groups:
        grp = set(grp)
        local = spanning_tree(H.w, [e for e in H.edges if e[2] in grp])
        tree = sorted((W[u], W[v], c) for u, v, c in local)
        trees.append(tree)
        color_sets.append(tuple(sorted({c for *_, c in tree})))
    return DisjointTreeBundle(tuple(W), trees, color_sets, attempts, method, block)


def _exhaustive_groups(H: ColoredMultigraph, d: int):
    """Split the colors present in H into d groups that each connect H."""
    present = sorted({c for *_, c in H.edges})
    by_color = defaultdict(list)
    for e in H.edges:
        by_color[e[2]].append(e)
    k = len(present)
    if k < d:
        return None
    # restricted growth strings enumerate each unordered partition once
    def rec(i, assign, used):
        if i == k:
            if used < d:
                return None
            groups = [[present[j] for j in range(k) if assign[j] == r] for r in range(d)]
            if all(_connects(H.w, [e for c in grp for e in by_color[c]]) for grp in groups):
                return groups
            return None
        if k - i < d - used:
            return None
        for r in range(min(used + 1, d)):
            assign.append(r)
            out = rec(i + 1, assign, max(used, r + 1))
            assign.pop()
            if out is not None:
                return out
        return None

    return rec(0, [], 0)


def find_disjoint_spanning_trees(
    g,
    d: int,
    seed,
    retries: int = 50,
    beta=None,
    exhaustive: bool = True,
) -> DisjointTreeBundle:
    """d spanning trees of G[W] with pairwise disjoint color sets.

    W maximizes the density e(U)/(|U| ln |U|).  Each attempt cuts a random
    permutation of the colors into d consecutive blocks and succeeds when every
    block connects G[W].  The block size is T(b) when ``beta`` is given and
    d*T(b) fits in the palette, otherwise floor(m/d).  Small instances fall
    back to trying every split of the colors.
    """
    G = _as_graph(g)
    if not G.is_matching_family():
        raise PreconditionFailed("every color class must be a matching")
    if d < 1:
        raise PreconditionFailed("d must be positive")
    if G.w < 2:
        raise NotFound("fewer than two vertices")
    rng = as_rng(seed, "find_disjoint_spanning_trees")
    W = max_density_subgraph(G).W
    H = G.induced(W)
    m = G.m
    block = m // d
    if beta is not None:
        T = tree_budget(G.w, beta, d)
        if d * T <= m:
            block = T
    if block >= 1:
        by_color = defaultdict(list)
        for e in H.edges:
            by_color[e[2]].append(e)
        for attempt in range(1, retries + 1):
            perm = rng.permutation(m).tolist()
            blocks = [perm[r * block:(r + 1) * block] for r in range(d)]
            if all(_connects(H.w, [e for c in blk for e in by_color[c]]) for blk in blocks):
                return _bundle(H, W, blocks, attempt, "random", block)
    if exhaustive and len(W) <= 8 and m <= 12:
        groups = _exhaustive_groups(H, d)
        if groups is not None:
            return _bundle(H, W, groups, retries, "exhaustive", block)
    raise NotFound(f"no {d} color-disjoint spanning trees on W={W} after {retries} attempts")


def check_bundle(bundle: DisjointTreeBundle, g) -> list[str]:
    """Problems with a bundle (empty list when it is valid for ``g``)."""
    G = _as_graph(g)
    problems = []
    avail = defaultdict(int)
    for u, v, c in G.edges:
        avail[(min(u, v), max(u, v), c)] += 1
    Wset = set(bundle.W)
    for r, tree in enumerate(bundle.trees):
        if len(tree) != len(bundle.W) - 1:
            problems.append(f"tree {r} has {len(tree)} edges")
        local = {v: i for i, v in enumerate(bundle.W)}
        if not all(u in Wset and v in Wset for u, v, _ in tree):
            problems.append(f"tree {r} leaves W")
            continue
        if not _connects(len(bundle.W), [(local[u], local[v]) for u, v, _ in tree]):
            problems.append(f"tree {r} does not span W")
        for u, v, c in tree:
            if avail[(min(u, v), max(u, v), c)] == 0:
                problems.append(f"tree {r} uses missing edge {(u, v, c)}")
    for a, b in itertools.combinations(range(len(bundle.color_sets)), 2):
        if set(bundle.color_sets[a]) & set(bundle.color_sets[b]):
            problems.append(f"trees {a} and {b} share colors")
    return problems
