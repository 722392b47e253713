"""Explicit lists defeating list recovery for any code of dimension >= 2.

Inside a two-dimensional subcode every nonzero coordinate form has one of r
kernel lines U_1..U_r.  A box {sum_j a_j s_j u_j : 0 <= a_j < t_j} with
u_j in U_j has at most P / t_j distinct values in a coordinate whose kernel is
U_j, while the box itself has P points.  Picking t_2 = ... = t_r = T and
t_1 = floor(K ell / T^(r-1)) + 1 makes every projection fit in a list of size
ell while P > K ell.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .code import NUMPY_P_LIMIT, GeneratorMatrix, encode
from .errors import BudgetExceeded, DegenerateCode, DimTooSmall, Exhausted, PreconditionFailed
from .field import FieldCtx, kernel_line, mat_rank
from .params import derive_params, lower_bound_params
from .recovery import ListFamily, count_near_codewords
from .rng import as_rng

HASH_LIMIT = 10**7
ZERO_FORM = -1


@dataclass
class AttackPlan:
    subcode_basis: tuple
    kernels: list
    kernel_of: list
    side_lengths: list
    scalars: list
    box: list
    lists: ListFamily
    ell: int
    K: Fraction
    T: int
    scalar_tries: int = 1

    @property
    def r(self) -> int:
        return len(self.kernels)

    @property
    def P(self) -> int:
        return math.prod(self.side_lengths)

    def to_json(self, include_box: bool = True) -> dict:
        out = {
            "subcode_basis": [list(b) for b in self.subcode_basis],
            "kernels": [list(u) for u in self.kernels],
            "kernel_of_coordinate": self.kernel_of,
            "side_lengths": self.side_lengths,
            "P": self.P,
            "scalars": self.scalars,
            "scalar_tries": self.scalar_tries,
            "ell": self.ell,
            "K": str(self.K),
            "T": self.T,
            "lists": self.lists.to_json(),
        }
        if include_box:
            out["box"] = [list(a) for a in self.box]
        return out


def pick_2d_subcode(g: GeneratorMatrix, seed=0) -> tuple:
    """Two standard basis messages whose codewords are independent.

    For a full-rank code this is (e_1, e_2).  ``seed`` is accepted for
    interface symmetry; the choice is deterministic.
    """
    if g.d < 2:
        raise DimTooSmall("a two-dimensional subcode needs d >= 2")
    cols = [[g.form(i)[j] for i in range(g.n)] for j in range(g.d)]
    for j1, j2 in itertools.combinations(range(g.d), 2):
        if mat_rank([cols[j1], cols[j2]], g.ctx) == 2:
            e1 = tuple(int(k == j1) for k in range(g.d))
            e2 = tuple(int(k == j2) for k in range(g.d))
            return e1, e2
    raise DimTooSmall("the code has rank below 2")


def restricted_forms(g: GeneratorMatrix, basis) -> list[tuple]:
    """lambda_i on the subcode, in coordinates of ``basis``."""
    b1, b2 = basis
    return [(encode(g, b1).coords[i], encode(g, b2).coords[i]) for i in range(g.n)]


def distinct_kernels(forms: Sequence[Sequence[int]], ctx: FieldCtx):
    """Distinct kernel lines of the nonzero forms, in order of first appearance.

    Returns ``(kernels, kernel_of)``; zero forms map to ``ZERO_FORM``.
    """
    kernels = []
    index = {}
    kernel_of = []
    for f in forms:
        if ctx(f[0]) == 0 and ctx(f[1]) == 0:
            kernel_of.append(ZERO_FORM)
            continue
        u = kernel_line(f, ctx)
        if u not in index:
            index[u] = len(kernels)
            kernels.append(u)
        kernel_of.append(index[u])
    if len(kernels) < 2:
        raise DegenerateCode(f"only {len(kernels)} kernel line(s); the forms do not span the dual")
    return kernels, kernel_of


def side_lengths(K, ell: int, T: int, r: int) -> tuple[list[int], int]:
    """t_1 = floor(K ell / T^(r-1)) + 1, t_2..t_r = T, and P = prod t_j."""
    K = Fraction(K)
    if r < 2:
        raise PreconditionFailed(f"r={r} must be at least 2")
    if ell < T ** (r - 1):
        raise PreconditionFailed(f"ell={ell} < T^(r-1)={T ** (r - 1)}")
    t1 = math.floor(K * ell / T ** (r - 1)) + 1
    ts = [t1] + [T] * (r - 1)
    P = math.prod(ts)
    checks = {
        "P > K*ell": P > K * ell,
        "P/t_1 <= ell": P // t1 <= ell,
        "P/t_j <= ell": r < 2 or P // T <= ell,
        "P <= (K+1)*ell": P <= (K + 1) * ell,
    }
    failed = [name for name, ok in checks.items() if not ok]
    if failed:
        raise PreconditionFailed("side lengths violate " + ", ".join(failed))
    return ts, P


def box_points(us, ts, scalars, ctx: FieldCtx) -> np.ndarray | list:
    """All box sums as encoded integers x*p + y (numpy) or tuples (large p)."""
    p = ctx.p
    gens = [((s * u[0]) % p, (s * u[1]) % p) for u, s in zip(us, scalars)]
    if p < NUMPY_P_LIMIT:
        xs = np.zeros(1, dtype=np.int64)
        ys = np.zeros(1, dtype=np.int64)
        for (gx, gy), t in zip(gens, ts):
            a = np.arange(t, dtype=np.int64)
            xs = ((xs[:, None] + a[None, :] * gx) % p).ravel()
            ys = ((ys[:, None] + a[None, :] * gy) % p).ravel()
        return xs * p + ys
    pts = [(0, 0)]
    for (gx, gy), t in zip(gens, ts):
        pts = [((x + a * gx) % p, (y + a * gy) % p) for x, y in pts for a in range(t)]
    return pts


def box_is_injective(us, ts, scalars, ctx: FieldCtx) -> bool:
    P = math.prod(ts)
    if P <= HASH_LIMIT:
        pts = box_points(us, ts, scalars, ctx)
        distinct = np.unique(pts).size if isinstance(pts, np.ndarray) else len(set(pts))
        return distinct == P
    grid = math.prod(2 * t - 1 for t in ts)
    if grid > HASH_LIMIT:
        raise BudgetExceeded(f"box of size {P} too large to verify", P, HASH_LIMIT)
    p = ctx.p
    vecs = [((s * u[0]) % p, (s * u[1]) % p) for u, s in zip(us, scalars)]
    for delta in itertools.product(*(range(-(t - 1), t) for t in ts)):
        if any(delta):
            x = sum(dj * v[0] for dj, v in zip(delta, vecs)) % p
            y = sum(dj * v[1] for dj, v in zip(delta, vecs)) % p
            if x == 0 and y == 0:
                return False
    return True


def choose_scalars(us, ts, ctx: FieldCtx, seed, max_tries: int = 64) -> tuple[list[int], int]:
    """Random nonzero scalars making the box map injective; returns (scalars, tries)."""
    if any(t >= ctx.p for t in ts):
        raise PreconditionFailed("every side length must be below p")
    rng = as_rng(seed, "choose_scalars")
    for tries in range(1, max_tries + 1):
        scalars = [int(x) for x in rng.integers(1, ctx.p, size=len(us), dtype=np.int64)]
        if box_is_injective(us, ts, scalars, ctx):
            return scalars, tries
    raise Exhausted(f"no injective scaling in {max_tries} tries")


def _box_coefficients(us, ts, scalars, ctx):
    p = ctx.p
    gens = [((s * u[0]) % p, (s * u[1]) % p) for u, s in zip(us, scalars)]
    out = []
    for a in itertools.product(*(range(t) for t in ts)):
        x = sum(aj * g[0] for aj, g in zip(a, gens)) % p
        y = sum(aj * g[1] for aj, g in zip(a, gens)) % p
        out.append((x, y))
    return out


def build_attack(
    g: GeneratorMatrix,
    alpha,
    epsilon,
    ell: int,
    seed,
    T: int | None = None,
    strict: bool = True,
    max_tries: int = 64,
) -> AttackPlan:
    """Lists of size ell capturing more than K*ell codewords with no bad coordinate.

    ``alpha`` only enters through K = (1 + epsilon) / (1 - alpha).  With
    ``strict`` the instance must satisfy ell >= T^n, ell <= p and p >= f(n);
    otherwise only the conditions the construction itself needs are checked.
    """
    params = derive_params(alpha, epsilon, g.d)
    K = params.K
    if strict:
        lb = lower_bound_params(alpha, epsilon, g.n)
        T = lb.T if T is None else T
        problems = []
        if ell < T ** g.n:
            problems.append(f"ell={ell} < T^n={T ** g.n}")
        if ell > g.p:
            problems.append(f"ell={ell} > p={g.p}")
        if g.p < lb.f:
            problems.append(f"p={g.p} < f(n)={lb.f}")
        if problems:
            raise PreconditionFailed("; ".join(problems))
    elif T is None:
        T = math.floor(K) + 3
    if ell > g.p:
        raise PreconditionFailed(f"ell={ell} > p={g.p}")
    rng = as_rng(seed, "build_attack")
    basis = pick_2d_subcode(g, rng)
    forms = restricted_forms(g, basis)
    kernels, kernel_of = distinct_kernels(forms, g.ctx)
    ts, P = side_lengths(K, ell, T, len(kernels))
    scalars, tries = choose_scalars(kernels, ts, g.ctx, rng, max_tries)
    plane = _box_coefficients(kernels, ts, scalars, g.ctx)
    b1, b2 = basis
    box = [tuple((x * a + y * b) % g.p for a, b in zip(b1, b2)) for x, y in plane]
    images = []
    for i in range(g.n):
        form = g.form(i)
        images.append({g.ctx.dot(form, t) for t in box})
    lists = ListFamily.padded(g.p, ell, images)
    return AttackPlan(basis, kernels, kernel_of, ts, scalars, box, lists, ell, K, T, tries)


def verify_attack(g: GeneratorMatrix, plan: AttackPlan, alpha, cap: int = 10**7) -> bool:
    """Does the plan's list family capture more than K*ell near-codewords?"""
    rep = count_near_codewords(g, plan.lists, alpha, cap)
    return rep.count > plan.K * plan.ell
