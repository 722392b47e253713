"""End-to-end experiment: sample a code, certify goodness, hunt for violators.

Every candidate set A of messages is pushed through the contradiction
machine: fibers become matchings, heavy colors are kept, color-disjoint
spanning trees are extracted, and the resulting certificate is evaluated at
the points of A.  On a code that is good up to B this machine must never
produce a consistent bundle of distinct points with at most B vertices.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .certificates import CoefficientArray, TreeCertificate, check_good_up_to_B, collapse_points, eval_certificate
from .code import GeneratorMatrix, condition_full_rank
from .errors import BudgetExceeded, NotFound
from .field import FieldCtx
from .graphs import MatchingFamily, fibers_to_matchings, find_disjoint_spanning_trees
from .params import RecoveryParams, cgr_estimate, derive_params, hypothesis_holds, lambda_fn
from .recovery import (
    ListFamily,
    bad_allowance,
    count_near_codewords,
    max_near_codewords,
    popular_lists,
    random_attack_search,
    random_message_subset,
)
from .rng import as_rng, child_seed

CONSISTENT = "ConsistentWithTheorem"
COUNTEREXAMPLE = "CounterexampleFound"
INCONCLUSIVE = "Inconclusive"

DEFAULT_BUDGETS = {
    "message_cap": 10**6,
    "certificate_budget": 20_000,
    "goodness_node_budget": 2 * 10**6,
    "adversary_node_budget": 10**6,
    "attack_trials": 200,
    "candidate_sets": 1000,
    "tree_retries": 20,
    "cgr_s_max": 10**6,
}


@dataclass
class FilterResult:
    colors: list
    threshold: float
    total_edges: int
    chain_checked: bool
    chain_holds: bool | None

    def to_json(self) -> dict:
        return {
            "I": self.colors,
            "size": len(self.colors),
            "threshold_beta_b": self.threshold,
            "total_matching_edges": self.total_edges,
            "chain_checked": self.chain_checked,
            "chain_holds": self.chain_holds,
        }


def matching_color_filter(
    matchings: MatchingFamily,
    beta,
    b: int,
    mu=None,
    theta=None,
    genuine: bool = False,
) -> FilterResult:
    """I = {i : |M_i| >= beta * b}.

    For a genuine violator (|A| > K ell, every point missing at most alpha n
    lists) the matchings carry more than mu*n*b edges in total, which forces
    |I| > theta*n.  With ``genuine`` set both steps are checked.
    """
    beta = Fraction(beta)
    sizes = matchings.sizes()
    colors = [i for i, s in enumerate(sizes) if s >= beta * b]
    total = sum(sizes)
    holds = None
    if genuine:
        n = matchings.m
        mu = Fraction(mu) if mu is not None else 2 * beta
        theta = Fraction(theta) if theta is not None else mu / (1 - mu)
        holds = total > mu * n * b and len(colors) > theta * n
    return FilterResult(colors, float(beta * b), total, genuine, holds)


@dataclass
class MachineOutcome:
    """What the contradiction machine made of one candidate set."""

    size: int
    filtered: FilterResult
    bundle: dict | None = None
    certificate: TreeCertificate | None = None
    consistent: bool = False
    all_equal: bool = True
    det: int | None = None
    reason: str = ""

    @property
    def distinct_bundle(self) -> bool:
        return self.certificate is not None and self.consistent and not self.all_equal

    def to_json(self) -> dict:
        return {
            "size": self.size,
            "filter": self.filtered.to_json(),
            "bundle": self.bundle,
            "certificate": None if self.certificate is None else self.certificate.to_json(),
            "consistent": self.consistent,
            "all_points_equal": self.all_equal,
            "det": self.det,
            "reason": self.reason,
        }


def contradiction_machine(
    g: GeneratorMatrix,
    A: Sequence,
    fam: ListFamily,
    params: RecoveryParams,
    seed,
    retries: int = 20,
    genuine: bool = False,
) -> MachineOutcome:
    A = [tuple(a) for a in A]
    matchings = fibers_to_matchings(A, g, fam)
    filt = matching_color_filter(matchings, params.beta, len(A), params.mu, params.theta, genuine)
    out = MachineOutcome(len(A), filt)
    if len(filt.colors) < g.d:
        out.reason = "too few heavy colors"
        return out
    graph = matchings.to_graph(filt.colors)
    try:
        bundle = find_disjoint_spanning_trees(graph, g.d, seed, retries=retries, beta=params.beta)
    except NotFound:
        out.reason = "no disjoint spanning trees"
        return out
    local = {v: i for i, v in enumerate(bundle.W)}
    trees = tuple(tuple((local[u], local[v], c) for u, v, c in t) for t in bundle.trees)
    cert = TreeCertificate(len(bundle.W), trees)
    coeffs = CoefficientArray.from_generator(g)
    consistent, equal = collapse_points(cert, coeffs, [A[v] for v in bundle.W])
    out.bundle = bundle.to_json()
    out.certificate = cert
    out.consistent = consistent
    out.all_equal = equal
    out.det = eval_certificate(cert, coeffs)
    out.reason = "bundle extracted"
    return out


@dataclass
class PipelineReport:
    config: dict
    params: dict
    code: dict | None
    goodness: dict | None
    adversary: dict | None
    attacks_tried: int
    max_count_found: int
    violator: dict | None
    candidates: dict
    bundles_extracted: list
    verdict: str
    reasons: list = field(default_factory=list)

    @property
    def goodness_exact(self) -> bool:
        return bool(self.goodness and self.goodness.get("exact"))

    @property
    def good(self) -> bool | None:
        return None if self.goodness is None else self.goodness.get("good")

    def to_json(self) -> dict:
        return {
            "config": self.config,
            "params": self.params,
            "code": self.code,
            "goodness": self.goodness,
            "adversary": self.adversary,
            "attacks_tried": self.attacks_tried,
            "max_count_found": self.max_count_found,
            "violator": self.violator,
            "candidates": self.candidates,
            "bundles_extracted": self.bundles_extracted,
            "verdict": self.verdict,
            "reasons": self.reasons,
        }

    def csv_row(self) -> dict:
        c = self.config
        return {
            "alpha": c["alpha"],
            "epsilon": c["epsilon"],
            "d": c["d"],
            "n": c["n"],
            "p": c["p"],
            "ell": c["ell"],
            "seed": c["seed"],
            "B": self.params["B"],
            "hypothesis_holds": self.params["hypothesis_holds"],
            "good": self.good,
            "goodness_method": None if self.goodness is None else self.goodness["method"],
            "goodness_exact": self.goodness_exact,
            "adversary_exact": None if self.adversary is None else self.adversary["exact"],
            "max_count_found": self.max_count_found,
            "K_ell": self.params["K_ell"],
            "candidate_sets": self.candidates.get("tried", 0),
            "bundles": self.candidates.get("bundles", 0),
            "distinct_bundles": self.candidates.get("distinct_bundles", 0),
            "verdict": self.verdict,
        }


def _adversary(g, alpha, ell, L, seed, budgets):
    """Exact maximum when the search fits its budget, random search otherwise."""
    try:
        best, fam = max_near_codewords(
            g, alpha, ell, budgets["message_cap"], budgets["adversary_node_budget"]
        )
        rep = count_near_codewords(g, fam, alpha, budgets["message_cap"], L)
        return rep, True, 1
    except BudgetExceeded:
        trials = budgets["attack_trials"]
        rep = random_attack_search(g, alpha, ell, trials, seed, L=math.floor(L), cap=budgets["message_cap"])
        return rep, False, trials


def run_main_experiment(
    alpha,
    epsilon,
    d: int,
    n: int,
    p: int,
    ell: int,
    seed: int,
    budgets: dict | None = None,
) -> PipelineReport:
    """One experiment cell at B = floor(K ell) + 1."""
    budgets = {**DEFAULT_BUDGETS, **(budgets or {})}
    params = derive_params(alpha, epsilon, d, strict=False)
    ctx = FieldCtx(p)
    K = params.K
    L = K * ell
    B = math.floor(L) + 1
    cgr = cgr_estimate(params.beta, d, budgets["cgr_s_max"])
    holds = hypothesis_holds(n, B, params, cgr.value)
    config = {
        "alpha": str(params.alpha),
        "epsilon": str(params.epsilon),
        "d": d,
        "n": n,
        "p": p,
        "ell": ell,
        "seed": int(seed),
        "budgets": budgets,
    }
    pjson = {
        **params.to_json(),
        "B": B,
        "K_ell": str(L),
        "bad_allowance": bad_allowance(params.alpha, n),
        "C_gr": cgr.to_json(),
        "Lambda_B": lambda_fn(B),
        "hypothesis_rhs": float(cgr.value / params.theta) * lambda_fn(B),
        "hypothesis_holds": holds,
    }
    reasons = []
    if not holds:
        reasons.append("n is below (C_gr/theta) Lambda(B); the lemma's hypothesis fails")

    g, _ = condition_full_rank(n, d, ctx, as_rng(seed, "pipeline", "code"))
    coeffs = CoefficientArray.from_generator(g)
    try:
        good = check_good_up_to_B(
            coeffs, B, budgets["certificate_budget"], "auto", budgets["goodness_node_budget"]
        )
        gjson = good.to_json()
    except BudgetExceeded as exc:
        gjson = {"good": None, "B": B, "method": "budget_exceeded", "exact": False, "checked": 0,
                 "failing_certificate": None, "error": str(exc)}
    report = PipelineReport(config, pjson, g.to_json(), gjson, None, 0, 0, None,
                            {"tried": 0, "bundles": 0, "distinct_bundles": 0, "bundle_det_zero": 0}, [], CONSISTENT, reasons)

    degenerate = L + 1 > p**d
    machine_rng = as_rng(seed, "pipeline", "machine")
    distinct_on_good = False

    def record(outcome: MachineOutcome, source: str):
        nonlocal distinct_on_good
        if outcome.certificate is None:
            return
        entry = {"source": source, **outcome.to_json()}
        report.bundles_extracted.append(entry)
        if outcome.distinct_bundle and gjson["good"] and outcome.certificate.w <= B:
            distinct_on_good = True

    if degenerate:
        reasons.append("K ell + 1 exceeds p^d, so no list family can capture more than K ell codewords")
    else:
        rep, exact, tried = _adversary(g, params.alpha, ell, L, as_rng(seed, "pipeline", "adversary"), budgets)
        report.adversary = {"exact": exact, **rep.to_json(max_witnesses=B)}
        report.attacks_tried = tried
        report.max_count_found = rep.count
        if rep.count > L:
            A = [m for m, _ in rep.witnesses[:B]]
            outcome = contradiction_machine(
                g, A, rep.lists, params, child_seed(machine_rng), budgets["tree_retries"], genuine=True
            )
            report.violator = outcome.to_json()
            record(outcome, "violator")

    # random candidate sets, each with its most popular lists
    cand_rng = as_rng(seed, "pipeline", "candidates")
    stats = report.candidates
    hi = min(B, p**d)
    for _ in range(budgets["candidate_sets"] if hi >= 2 else 0):
        size = int(cand_rng.integers(2, hi + 1))
        A = random_message_subset(g, size, cand_rng)
        fam = popular_lists(g, A, ell)
        outcome = contradiction_machine(
            g, A, fam, params, child_seed(cand_rng), budgets["tree_retries"]
        )
        stats["tried"] += 1
        if outcome.certificate is not None:
            stats["bundles"] += 1
            stats["distinct_bundles"] += outcome.distinct_bundle
            stats["bundle_det_zero"] += outcome.det == 0
            if outcome.distinct_bundle and gjson["good"] and outcome.certificate.w <= B:
                distinct_on_good = True
                report.bundles_extracted.append({"source": "candidate", **outcome.to_json()})

    if not gjson["exact"]:
        report.verdict = INCONCLUSIVE
        reasons.append("goodness up to B was not verified exactly")
    elif distinct_on_good:
        report.verdict = COUNTEREXAMPLE
        reasons.append("a consistent distinct-point bundle appeared on a code good up to B")
    elif gjson["good"] and holds and report.max_count_found > L:
        verified = count_near_codewords(g, ListFamily.from_json(report.adversary["lists"]), params.alpha,
                                        budgets["message_cap"]).count
        if verified > L:
            report.verdict = COUNTEREXAMPLE
            reasons.append("a verified list family exceeds K ell on a good code")
    elif gjson["good"] and report.max_count_found > L:
        reasons.append("a list family exceeds K ell, which the theorem permits below its threshold n")
    elif not gjson["good"]:
        reasons.append("the code is not good up to B; the theorem makes no claim about it")
    return report


# -- grids -------------------------------------------------------------------


CSV_FIELDS = [
    "alpha", "epsilon", "d", "n", "p", "ell", "seed", "B", "hypothesis_holds", "good",
    "goodness_method", "goodness_exact", "adversary_exact", "max_count_found", "K_ell",
    "candidate_sets", "bundles", "distinct_bundles", "verdict",
]


def grid_cells(cfg: dict):
    """Expand a grid config into run_main_experiment keyword sets.

    ``alphas`` entries may be rationals or the string ``"1/n"``; cells with
    alpha outside [0, 1) are skipped.
    """
    for alpha_spec in cfg["alphas"]:
        for epsilon in cfg["epsilons"]:
            for d in _as_list(cfg["d"]):
                for n in _as_list(cfg["n"]):
                    if d > n:
                        continue
                    alpha = Fraction(1, n) if alpha_spec == "1/n" else Fraction(alpha_spec)
                    if not 0 <= alpha < 1:
                        continue
                    for p in _as_list(cfg["p"]):
                        for ell in cfg["ells"]:
                            if ell > p:
                                continue
                            for seed in cfg["seeds"]:
                                yield dict(alpha=alpha, epsilon=epsilon, d=d, n=n, p=p, ell=ell, seed=seed)


def _as_list(x):
    return list(x) if isinstance(x, (list, tuple)) else [x]


def run_grid(cfg: dict) -> list[PipelineReport]:
    budgets = cfg.get("budgets")
    return [run_main_experiment(**cell, budgets=budgets) for cell in grid_cells(cfg)]


def summary_csv(reports: Sequence[PipelineReport]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_FIELDS, lineterminator="\n")
    writer.writeheader()
    for r in reports:
        writer.writerow(r.csv_row())
    return buf.getvalue()
