"""Command line entry point.

Every subcommand writes one JSON document that embeds the package version and
the fully resolved configuration.  Exit codes: 0 success, 1 internal error or
a negative verdict, 2 budget exceeded, 3 precondition failure (including
malformed input).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from importlib import resources
from pathlib import Path

import jsonschema

from . import __version__
from .attack import build_attack, verify_attack
from .certificates import (
    CoefficientArray,
    TreeCertificate,
    build_R_matrix,
    check_good_up_to_B,
    collapse_points,
    eval_certificate,
    sampled_goodness,
    specialization_sanity,
    sz_experiment,
    union_vanishing_bound,
)
from .code import GeneratorMatrix, condition_full_rank, sample_random_matrix
from .errors import BudgetExceeded, PreconditionFailed
from .field import FieldCtx
from .graphs import (
    ColoredMultigraph,
    certified_gamma,
    check_bundle,
    find_disjoint_spanning_trees,
    max_density_subgraph,
)
from .params import cgr_estimate, derive_params, lower_bound_params, main_thm_plan, parse_rational
from .pipeline import DEFAULT_BUDGETS, run_grid, summary_csv
from .plotting import plot_experiment, plot_szlab
from .recovery import ListFamily, count_near_codewords, max_near_codewords

EXIT_OK, EXIT_FAIL, EXIT_BUDGET, EXIT_PRECONDITION = 0, 1, 2, 3


class InputError(PreconditionFailed):
    pass


# -- I/O ---------------------------------------------------------------------


def load_schema(name: str) -> dict:
    text = resources.files("listrec").joinpath("schemas", f"{name}.json").read_text()
    return json.loads(text)


def load_input(path: str, schema: str):
    try:
        obj = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    try:
        jsonschema.validate(obj, load_schema(schema))
    except jsonschema.ValidationError as exc:
        raise InputError(f"{path} does not match the {schema} schema: {exc.message}") from exc
    return obj


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def write_atomic(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def emit(args, result: dict) -> None:
    doc = {"version": __version__, "config": resolved_config(args), "result": result}
    text = dumps(doc)
    if args.out:
        write_atomic(args.out, text)
    else:
        sys.stdout.write(text)


def resolved_config(args) -> dict:
    # where artifacts land is not part of the computation
    skip = {"func", "out", "csv", "figure"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def sibling(path: str | None, explicit: str | None, suffix: str) -> str | None:
    if explicit:
        return explicit
    if path:
        return str(Path(path).with_suffix(suffix))
    return None


# -- subcommands -------------------------------------------------------------


def cmd_params(args) -> int:
    params = derive_params(args.alpha, args.epsilon, args.d)
    out = {"params": params.to_json(), "C_gr": cgr_estimate(params.beta, args.d, args.s_max).to_json()}
    if args.n is not None:
        out["lower_bound"] = lower_bound_params(args.alpha, args.epsilon, args.n).to_json()
    if args.plan:
        out["main_plan"] = main_thm_plan(args.alpha, args.epsilon, args.d, s_max=args.s_max).to_json()
    emit(args, out)
    return EXIT_OK


def cmd_sample(args) -> int:
    ctx = FieldCtx(args.p)
    if args.any_rank:
        g, tries = sample_random_matrix(args.n, args.d, ctx, args.seed), 1
    else:
        g, tries = condition_full_rank(args.n, args.d, ctx, args.seed, args.retries)
    emit(args, {"code": g.to_json(), "rank": g.rank(), "tries": tries})
    return EXIT_OK


def _coefficients(args) -> CoefficientArray:
    if args.coeffs:
        obj = load_input(args.coeffs, "coefficients")
        return CoefficientArray(FieldCtx(obj["p"]), tuple(tuple(r) for r in obj["rows"]))
    if args.code:
        return CoefficientArray.from_generator(GeneratorMatrix.from_json(load_input(args.code, "code")))
    raise InputError("give --code or --coeffs")


def cmd_check(args) -> int:
    coeffs = _coefficients(args)
    if args.sampled:
        if args.seed is None:
            raise InputError("--sampled needs --seed")
        res = sampled_goodness(coeffs, args.B, args.sampled, args.seed)
    else:
        res = check_good_up_to_B(coeffs, args.B, args.certificate_budget, args.method, args.node_budget)
    emit(args, {"goodness": res.to_json()})
    return EXIT_OK


def cmd_oracle(args) -> int:
    g = GeneratorMatrix.from_json(load_input(args.code, "code"))
    alpha = parse_rational(args.alpha)
    if args.lists:
        fam = ListFamily.from_json(load_input(args.lists, "lists"))
        L = parse_rational(args.L) if args.L else None
        rep = count_near_codewords(g, fam, alpha, args.message_cap, L)
        out = {"report": rep.to_json(max_witnesses=args.max_witnesses)}
    else:
        if args.ell is None:
            raise InputError("--ell is required without --lists")
        best, fam = max_near_codewords(g, alpha, args.ell, args.message_cap, args.node_budget)
        out = {"max_count": best, "lists": fam.to_json()}
        if args.L:
            out["recoverable"] = best <= parse_rational(args.L)
    emit(args, out)
    return EXIT_OK


def cmd_graph(args) -> int:
    h = ColoredMultigraph.from_json(load_input(args.graph, "graph"))
    dens = max_density_subgraph(h)
    out = {"density": {"W": list(dens.W), "rho": dens.rho, "exact": dens.exact}}
    if args.gamma:
        out["certified_gamma"] = certified_gamma(h)
    if args.d:
        if args.seed is None:
            raise InputError("--d needs --seed")
        beta = parse_rational(args.beta) if args.beta else None
        bundle = find_disjoint_spanning_trees(h, args.d, args.seed, args.retries, beta)
        out["bundle"] = bundle.to_json()
        out["bundle_problems"] = check_bundle(bundle, h)
    emit(args, out)
    return EXIT_OK


def cmd_certify(args) -> int:
    cert = TreeCertificate.from_json(load_input(args.cert, "certificate"))
    out = {"certificate": cert.to_json()}
    if args.sanity_p:
        out["specialization_det"] = specialization_sanity(cert, FieldCtx(args.sanity_p))
    if args.code or args.coeffs:
        coeffs = _coefficients(args)
        out["det"] = eval_certificate(cert, coeffs)
        if args.show_matrix:
            out["R"] = build_R_matrix(cert, coeffs).to_rows()
        if args.points:
            pts = load_input(args.points, "points")
            consistent, equal = collapse_points(cert, coeffs, pts)
            out["collapse"] = {"consistent": consistent, "all_equal": equal}
    emit(args, out)
    return EXIT_OK


def cmd_attack(args) -> int:
    g = GeneratorMatrix.from_json(load_input(args.code, "code"))
    plan = build_attack(g, args.alpha, args.epsilon, args.ell, args.seed, strict=not args.no_strict)
    ok = verify_attack(g, plan, args.alpha, args.message_cap)
    emit(args, {"plan": plan.to_json(include_box=args.include_box), "verified": ok})
    return EXIT_OK if ok else EXIT_FAIL


def cmd_experiment(args) -> int:
    cfg = load_input(args.config, "experiment")
    cfg["budgets"] = {**DEFAULT_BUDGETS, **cfg.get("budgets", {})}
    reports = run_grid(cfg)
    rows = [r.csv_row() for r in reports]
    verdicts = {}
    for r in reports:
        verdicts[r.verdict] = verdicts.get(r.verdict, 0) + 1
    emit(args, {"grid": cfg, "cells": [r.to_json() for r in reports], "verdict_counts": verdicts})
    csv_path = sibling(args.out, args.csv, ".csv")
    if csv_path:
        write_atomic(csv_path, summary_csv(reports))
    fig_path = sibling(args.out, args.figure, ".png")
    if fig_path and not args.no_figure:
        plot_experiment(rows, fig_path)
    return EXIT_OK


def cmd_szlab(args) -> int:
    rep = sz_experiment(args.B, args.m, args.d, args.p, args.trials, args.seed, args.certificate_budget)
    out = rep.to_json(include_rows=args.include_rows)
    if args.union:
        union = union_vanishing_bound(args.B, args.m, args.d, args.p, args.certificate_budget)
        out["union_bound"] = str(union)
        out["union_bound_float"] = float(union)
    emit(args, out)
    fig_path = sibling(args.out, args.figure, ".png")
    if fig_path and not args.no_figure:
        plot_szlab(out, fig_path)
    return EXIT_OK


# -- parser ------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    """Usage errors count as malformed input, not as a budget failure."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_PRECONDITION, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="listrec", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"listrec {__version__}")
    sub = ap.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)

    def add(name, func, help):
        sp = sub.add_parser(name, help=help)
        sp.set_defaults(func=func)
        sp.add_argument("--out", help="output JSON path (stdout when omitted)")
        return sp

    sp = add("params", cmd_params, "derived constants and thresholds")
    sp.add_argument("--alpha", required=True)
    sp.add_argument("--epsilon", required=True)
    sp.add_argument("--d", type=int, required=True)
    sp.add_argument("--n", type=int)
    sp.add_argument("--s-max", type=int, default=10**6)
    sp.add_argument("--plan", action="store_true", help="also scan delta, n0, B_N and f(N)")

    sp = add("sample", cmd_sample, "sample a generator matrix")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--d", type=int, required=True)
    sp.add_argument("--p", type=int, required=True)
    sp.add_argument("--seed", type=int, required=True)
    sp.add_argument("--retries", type=int, default=1000)
    sp.add_argument("--any-rank", action="store_true", help="skip full-rank conditioning")

    sp = add("check", cmd_check, "goodness up to B")
    sp.add_argument("--code")
    sp.add_argument("--coeffs")
    sp.add_argument("--B", type=int, required=True)
    sp.add_argument("--method", choices=["auto", "enumerate", "points"], default="auto")
    sp.add_argument("--certificate-budget", type=int, default=20_000)
    sp.add_argument("--node-budget", type=int, default=2 * 10**6)
    sp.add_argument("--sampled", type=int, default=0, help="check this many random certificates instead")
    sp.add_argument("--seed", type=int)

    sp = add("oracle", cmd_oracle, "count near-codewords or decide recoverability exactly")
    sp.add_argument("--code", required=True)
    sp.add_argument("--alpha", required=True)
    sp.add_argument("--lists")
    sp.add_argument("--ell", type=int)
    sp.add_argument("--L")
    sp.add_argument("--message-cap", type=int, default=10**7)
    sp.add_argument("--node-budget", type=int, default=10**6)
    sp.add_argument("--max-witnesses", type=int, default=100)

    sp = add("graph", cmd_graph, "densest subgraph, expansion and disjoint trees")
    sp.add_argument("--graph", required=True)
    sp.add_argument("--d", type=int)
    sp.add_argument("--beta")
    sp.add_argument("--seed", type=int)
    sp.add_argument("--retries", type=int, default=50)
    sp.add_argument("--gamma", action="store_true", help="certify the expansion constant")

    sp = add("certify", cmd_certify, "evaluate a tree certificate")
    sp.add_argument("--cert", required=True)
    sp.add_argument("--code")
    sp.add_argument("--coeffs")
    sp.add_argument("--points")
    sp.add_argument("--sanity-p", type=int)
    sp.add_argument("--show-matrix", action="store_true")

    sp = add("attack", cmd_attack, "explicit lower-bound lists for a code")
    sp.add_argument("--code", required=True)
    sp.add_argument("--alpha", required=True)
    sp.add_argument("--epsilon", required=True)
    sp.add_argument("--ell", type=int, required=True)
    sp.add_argument("--seed", type=int, required=True)
    sp.add_argument("--no-strict", action="store_true", help="skip the ell >= T^n and p >= f(n) checks")
    sp.add_argument("--include-box", action="store_true")
    sp.add_argument("--message-cap", type=int, default=10**7)

    sp = add("experiment", cmd_experiment, "run an experiment grid")
    sp.add_argument("--config", required=True)
    sp.add_argument("--csv")
    sp.add_argument("--figure")
    sp.add_argument("--no-figure", action="store_true")

    sp = add("szlab", cmd_szlab, "random coefficient arrays against the failure bound")
    sp.add_argument("--B", type=int, required=True)
    sp.add_argument("--m", type=int, required=True)
    sp.add_argument("--d", type=int, required=True)
    sp.add_argument("--p", type=int, required=True)
    sp.add_argument("--trials", type=int, default=2000)
    sp.add_argument("--seed", type=int, required=True)
    sp.add_argument("--certificate-budget", type=int, default=10**6)
    sp.add_argument("--union", action="store_true", help="also sum exact vanishing probabilities")
    sp.add_argument("--include-rows", action="store_true")
    sp.add_argument("--figure")
    sp.add_argument("--no-figure", action="store_true")
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except BudgetExceeded as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except PreconditionFailed as exc:
        print(f"precondition failed: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    except Exception as exc:  # noqa: BLE001
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
