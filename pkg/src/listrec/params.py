"""Derived constants and threshold functions.

Logarithms are natural throughout.  The one deliberate exception is the
lower-bound exponent ``delta = log2(T)``, which is base 2 by definition.
Exact quantities are ``Fraction`` or ``int``; ``f(N)`` values are big integers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .errors import OutOfRange, ScanFailed

LN2 = math.log(2.0)


def parse_rational(x) -> Fraction:
    """Exact rational from ``"a/b"``, an int or a Fraction.  Floats are refused."""
    if isinstance(x, float):
        raise OutOfRange(f"floats are not accepted for exact parameters: {x!r}")
    if isinstance(x, str) and ("e" in x.lower() or "." in x):
        raise OutOfRange(f"write {x!r} as a fraction a/b")
    try:
        return Fraction(x)
    except (ValueError, ZeroDivisionError) as exc:
        raise OutOfRange(f"cannot parse rational {x!r}") from exc


@dataclass(frozen=True)
class RecoveryParams:
    alpha: Fraction
    epsilon: Fraction
    d: int
    K: Fraction
    mu: Fraction
    beta: Fraction
    theta: Fraction

    def to_json(self) -> dict:
        out = {}
        for name in ("alpha", "epsilon", "K", "mu", "beta", "theta"):
            v = getattr(self, name)
            out[name] = str(v)
            out[name + "_float"] = float(v)
        out["d"] = self.d
        return out


def derive_params(alpha, epsilon, d: int, strict: bool = True) -> RecoveryParams:
    """K, mu, beta, theta for error fraction alpha and slack epsilon.

    With ``strict=False`` the boundary alpha = 0 is admitted; every constant
    stays well defined there.
    """
    alpha, epsilon = parse_rational(alpha), parse_rational(epsilon)
    lo_ok = alpha > 0 if strict else alpha >= 0
    if not (lo_ok and alpha < 1):
        raise OutOfRange(f"alpha={alpha} must lie in (0, 1)")
    if not 0 < epsilon < 1:
        raise OutOfRange(f"epsilon={epsilon} must lie in (0, 1)")
    if d < 1:
        raise OutOfRange(f"d={d} must be a positive integer")
    K = (1 + epsilon) / (1 - alpha)
    mu = (1 - alpha) * epsilon / (2 * (1 + epsilon))
    return RecoveryParams(alpha, epsilon, d, K, mu, mu / 2, mu / (1 - mu))


def lambda_fn(b: float) -> float:
    """max(1, ln b * ln ln 4b)."""
    if b < 2:
        raise OutOfRange(f"Lambda needs b >= 2, got {b}")
    return max(1.0, math.log(b) * math.log(math.log(4 * b)))


def lambda_from_log(log_b: float) -> float:
    """Lambda evaluated from ln b, for arguments too large for a float."""
    return max(1.0, log_b * math.log(math.log(4.0) + log_b))


def tree_budget(s: int, beta, d: int) -> int:
    """T(s) = ceil((4 ln s / beta)(ln ln 4s + ln 2d + 1))."""
    if s < 2 or d < 1 or beta <= 0:
        raise OutOfRange(f"tree_budget needs s >= 2, d >= 1, beta > 0 (got {s}, {d}, {beta})")
    beta = float(beta)
    return math.ceil(4 * math.log(s) / beta * (math.log(math.log(4 * s)) + math.log(2 * d) + 1))


def _tree_budget_array(s: np.ndarray, beta: float, d: int) -> np.ndarray:
    ls = np.log(s)
    return np.ceil(4 * ls / beta * (np.log(np.log(4 * s)) + math.log(2 * d) + 1))


def _lambda_array(s: np.ndarray) -> np.ndarray:
    return np.maximum(1.0, np.log(s) * np.log(np.log(4 * s)))


@dataclass(frozen=True)
class CgrEstimate:
    value: int
    argmax: int
    s_max: int
    tail_decreasing: bool

    def to_json(self) -> dict:
        return {
            "C_gr": self.value,
            "argmax_s": self.argmax,
            "s_max": self.s_max,
            "tail_decreasing": self.tail_decreasing,
        }


@lru_cache(maxsize=64)
def _cgr_scan(beta: Fraction, d: int, s_max: int) -> CgrEstimate:
    s = np.arange(2, s_max + 1, dtype=np.float64)
    ratio = d * _tree_budget_array(s, float(beta), d) / _lambda_array(s)
    i = int(np.argmax(ratio))
    tail = ratio[s >= max(2, s_max // 10)]
    # ceil(T) makes the ratio jagged, so judge the tail by its trend
    tail_decreasing = bool(tail.size < 2 or tail[-1] < tail[0])
    value = max(d, math.ceil(float(ratio[i])))
    return CgrEstimate(value, int(s[i]), s_max, tail_decreasing)


def cgr_estimate(beta, d: int, s_max: int = 10**6) -> CgrEstimate:
    """Scanned constant with d*T(s) <= C_gr * Lambda(s) for 2 <= s <= s_max."""
    if s_max < 2:
        raise OutOfRange("s_max must be at least 2")
    return _cgr_scan(Fraction(beta), int(d), int(s_max))


def hypothesis_holds(n: int, B: int, params: RecoveryParams, C_gr: int) -> bool:
    """n >= (C_gr / theta) * Lambda(B)."""
    return n >= float(C_gr / params.theta) * lambda_fn(B)


# -- main theorem plan -------------------------------------------------------


def _log_box_bound(K: float, x: np.ndarray) -> np.ndarray:
    """ln(ceil(K 2^x) + 1), using an asymptotic form once 2^x overflows."""
    out = np.empty_like(x)
    small = x < 900
    xs = x[small]
    out[small] = np.log(np.ceil(K * np.exp2(xs)) + 1)
    out[~small] = math.log(K) + x[~small] * LN2
    return out


def _lambda_of_log(lb: np.ndarray) -> np.ndarray:
    return np.maximum(1.0, lb * np.log(math.log(4.0) + lb))


def c0_estimate(K, n_max: int, n_min: int = 3, grid: int = 400) -> float:
    """Smallest C0 with Lambda(ceil(K 2^x)+1) <= C0 (1 + x ln N) on a scan grid.

    The grid covers N in [n_min, n_max] (log spaced) and x in [0, N / ln N].
    """
    K = float(K)
    Ns = np.unique(np.geomspace(n_min, n_max, 60).astype(np.int64))
    best = 0.0
    for N in Ns:
        lnN = math.log(N)
        x = np.concatenate(([0.0], np.geomspace(1e-6, N / lnN, grid)))
        ratio = _lambda_of_log(_log_box_bound(K, x)) / (1 + x * lnN)
        best = max(best, float(ratio.max()))
    return best


@dataclass(frozen=True)
class MainThmPlan:
    params: RecoveryParams
    C_gr: int
    c: float
    C0: float
    delta: float
    n0: int
    scan_cap: int

    def log_B(self, N: int) -> float:
        return float(_log_box_bound(float(self.params.K), np.array([self.delta * N / math.log(N)]))[0])

    def B(self, N: int) -> int:
        """B_N = ceil(K 2^(delta N / ln N)) + 1 as an exact integer."""
        x = self.delta * N / math.log(N)
        K = self.params.K
        if x < 900:
            return math.ceil(K * Fraction(2.0 ** x)) + 1
        # 2^x = 2^floor(x) * 2^frac(x); the integer part is exact
        xi = math.floor(x)
        return math.ceil(K * (1 << xi) * Fraction(2.0 ** (x - xi))) + 1

    def f(self, N: int) -> int:
        """ceil(2 d B^2 (B^2 N)^(d B) / epsilon) as an exact integer."""
        B = self.B(N)
        d = self.params.d
        num = 2 * d * B * B * (B * B * N) ** (d * B)
        return math.ceil(Fraction(num) / self.params.epsilon)

    def to_json(self, sample_N=(20, 100)) -> dict:
        return {
            "params": self.params.to_json(),
            "C_gr": self.C_gr,
            "c": self.c,
            "C0_estimate": self.C0,
            "delta": self.delta,
            "n0": self.n0,
            "n0_scan_cap": self.scan_cap,
            "B_N": {str(N): self.B(N) for N in sample_N},
            "f_N": {str(N): f"{self.f(N):.6e}" for N in sample_N},
        }


def main_thm_plan(
    alpha,
    epsilon,
    d: int,
    c=None,
    C_gr: int | None = None,
    s_max: int = 10**6,
    scan_cap: int = 10**6,
) -> MainThmPlan:
    """delta, n0, B_N and f(N) for the main theorem at desk scale.

    ``c`` defaults to min(1, theta / (2 C0)) with C0 scanned over the same
    N range used for n0.
    """
    params = derive_params(alpha, epsilon, d)
    if C_gr is None:
        C_gr = cgr_estimate(params.beta, d, s_max).value
    C0 = c0_estimate(params.K, scan_cap)
    if c is None:
        c = min(1.0, float(params.theta) / (2 * C0))
    c = float(c)
    if not 0 < c <= 1:
        raise OutOfRange(f"c={c} must lie in (0, 1]")
    delta = c / C_gr
    N = np.arange(3, scan_cap + 1, dtype=np.float64)
    lb = _log_box_bound(float(params.K), delta * N / np.log(N))
    ok = N >= (C_gr / float(params.theta)) * _lambda_of_log(lb)
    if not ok[-1]:
        raise ScanFailed(f"threshold inequality fails at the scan cap N={scan_cap}")
    bad = np.flatnonzero(~ok)
    n0 = int(N[bad[-1] + 1]) if bad.size else 3
    return MainThmPlan(params, C_gr, c, C0, delta, n0, scan_cap)


# -- lower bound -------------------------------------------------------------


@dataclass(frozen=True)
class LowerBoundParams:
    K: Fraction
    T: int
    delta: float
    f: int

    def to_json(self) -> dict:
        return {"K": str(self.K), "T": self.T, "delta": self.delta, "f": self.f}


def lower_bound_params(alpha, epsilon, n: int) -> LowerBoundParams:
    """T = smallest integer above K + 2, delta = log2 T, f(n)."""
    params = derive_params(alpha, epsilon, 1)
    if n < 2:
        raise OutOfRange(f"n={n} must be at least 2")
    K = params.K
    T = math.floor(K) + 3
    f = math.ceil(max(Fraction(T) ** n, Fraction(2) ** (2 * n + 2) * (K + 1)))
    return LowerBoundParams(K, T, math.log2(T), f)
