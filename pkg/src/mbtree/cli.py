"""Command-line interface: ``mbtree <command> [options]``.

Exit status is 0 on success, 1 when a check or statistical test fails and 2
on invalid usage.  Rational parameters written as ``p/q`` select exact
arithmetic; decimals select floating point.
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from fractions import Fraction

import numpy as np

from . import laws, limits, measures, oracle
from .growth import ModelParams, grow
from .numerics import format_scalar, integer_partitions, to_scalar
from .streams import RngStream
from .trees import serialize

SEED_ENV = "MBTREE_SEED"


class UsageError(Exception):
    pass


def _scalar(text: str):
    try:
        return to_scalar(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from exc


def _seed(args) -> int:
    if args.seed is not None:
        seed = args.seed
    elif os.environ.get(SEED_ENV):
        try:
            seed = int(os.environ[SEED_ENV])
        except ValueError as exc:
            raise UsageError(f"{SEED_ENV} must be an integer") from exc
    else:
        seed = 0
    if not 0 <= seed < 2**64:
        raise UsageError("seed must be a 64-bit unsigned integer")
    return seed


def _params(args) -> ModelParams:
    try:
        return ModelParams(args.alpha, args.gamma)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _emit(text: str, path) -> None:
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _fmt(x) -> str:
    return format_scalar(Fraction(x) if isinstance(x, int) else x)


# ---------------------------------------------------------------------------
# commands


def cmd_grow(args) -> int:
    p = _params(args)
    if args.n < 1:
        raise UsageError("n must be at least 1")
    t = grow(args.n, p, RngStream(_seed(args)))
    _emit(serialize(t) + "\n", args.output)
    return 0


def cmd_split_table(args) -> int:
    p = _params(args)
    if args.n < 2:
        raise UsageError("n must be at least 2")
    dist = laws.split_distribution(p.alpha, p.gamma, args.n)
    if args.format == "json":
        body = {
            "n": args.n,
            "entries": {"+".join(map(str, k)): _fmt(v) for k, v in dist.entries.items()},
            "total": _fmt(dist.total),
        }
        _emit(json.dumps(body, indent=2) + "\n", args.output)
        return 0
    out = _Buffer()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["partition", "probability"])
    for parts, prob in dist.entries.items():
        writer.writerow(["+".join(map(str, parts)), _fmt(prob)])
    _emit(out.text, args.output)
    return 0


class _Buffer:
    def __init__(self):
        self.chunks = []

    def write(self, s):
        self.chunks.append(s)

    @property
    def text(self):
        return "".join(self.chunks)


def cmd_check_consistency(args) -> int:
    alpha, gamma = to_scalar(args.alpha), to_scalar(args.gamma)
    if alpha != 1:
        _params(args)
    elif not 0 < gamma < 1:
        raise UsageError("alpha = 1 needs 0 < gamma < 1")
    if args.n < 3:
        raise UsageError("n must be at least 3")
    rows = {}
    worst = 0
    for n in range(3, args.n + 1):
        r = laws.check_sampling_consistency(alpha, gamma, n)
        rows[str(n)] = _fmt(r)
        worst = max(worst, abs(r))
    exact = isinstance(worst, Fraction) or worst == 0
    ok = worst == 0 if exact else worst <= args.tol
    body = {"config": {"alpha": _fmt(alpha), "gamma": _fmt(gamma), "n": args.n}, "residuals": rows, "pass": bool(ok)}
    _emit(json.dumps(body, indent=2) + "\n", args.output)
    return 0 if ok else 1


def cmd_oracle(args) -> int:
    p = _params(args)
    if not p.exact:
        raise UsageError("oracle needs rational parameters such as 1/2")
    try:
        law = oracle.exact_law(p, args.n, bound=args.bound)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    checks = set(args.verify)
    if "all" in checks:
        checks = {"first-split", "markov", "spinal", "deletion"}
    residuals = {}
    body = {"config": {"alpha": _fmt(p.alpha), "gamma": _fmt(p.gamma), "n": args.n}}
    if args.n >= 2:
        if "first-split" in checks:
            marg = law.first_split_marginal()
            residuals["first_split"] = max(
                abs(marg.get(parts, 0) - laws.split_prob_seq(p.alpha, p.gamma, parts))
                for parts in integer_partitions(args.n, 2)
            )
        if "markov" in checks:
            residuals["markov_branching"] = oracle.verify_markov_branching(law)
        if "spinal" in checks and p.gamma > 0 and p.alpha < 1:
            sp = oracle.verify_spinal(law)
            residuals["spinal_composition"] = sp.composition
            residuals["spinal_bushes"] = sp.bushes
            residuals["spinal_joint"] = sp.joint
        if "deletion" in checks and args.n >= 3:
            smaller = oracle.exact_law(p, args.n - 1, bound=args.bound).shapes()
            deleted = oracle.deletion_shape_law(law)
            residuals["deletion"] = max(abs(deleted.get(k, 0) - smaller.get(k, 0)) for k in set(deleted) | set(smaller))
    if args.n >= 3:
        body["exchangeable"] = oracle.verify_exchangeability(law)
    body["law"] = {k: _fmt(v) for k, v in sorted(law.probs.items())}
    body["shapes"] = {k: _fmt(v) for k, v in sorted(law.shapes().items())}
    body["residuals"] = {k: _fmt(Fraction(v)) for k, v in residuals.items()}
    body["pass"] = all(v == 0 for v in residuals.values())
    _emit(json.dumps(body, indent=2) + "\n", args.output)
    return 0 if body["pass"] else 1


def cmd_crush_compare(args) -> int:
    alpha, c = to_scalar(args.alpha), to_scalar(args.c)
    if not (isinstance(alpha, Fraction) and isinstance(c, Fraction)):
        raise UsageError("crush-compare needs rational alpha and c")
    if not (0 <= alpha <= 1 and 0 <= c <= 1):
        raise UsageError("need 0 <= alpha <= 1 and 0 <= c <= 1")
    if args.n < 2:
        raise UsageError("n must be at least 2")
    gamma = alpha * (1 - c)
    try:
        crushed = oracle.exact_coloured_law(alpha, c, args.n, bound=args.bound)
        direct = oracle.exact_law(ModelParams(alpha, gamma), args.n, bound=args.bound)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    diff = oracle.law_difference(crushed, direct)
    body = {
        "config": {"alpha": _fmt(alpha), "c": _fmt(c), "gamma": _fmt(gamma), "n": args.n},
        "residuals": {"crushed_vs_direct": _fmt(diff)},
        "pass": diff == 0,
    }
    _emit(json.dumps(body, indent=2) + "\n", args.output)
    return 0 if diff == 0 else 1


def _mc(args, suite: str, **extra) -> int:
    cfg = limits.McConfig(
        suite=suite,
        alpha=float(args.alpha),
        n=args.n,
        replicates=args.replicates,
        seed=_seed(args),
        p_threshold=args.p_threshold,
        se_multiplier=args.se_multiplier,
        threads=args.threads,
        **extra,
    )
    try:
        cfg.validate()
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    report = limits.mc_suite(cfg)
    _emit(limits.report_json(report) + "\n", args.output)
    return 0 if report["pass"] else 1


def cmd_mc_crp(args) -> int:
    return _mc(args, "crp", theta=float(args.theta), ml_samples=args.ml_samples)


def cmd_mc_reduced(args) -> int:
    suite = "degree" if args.degrees else "reduced"
    return _mc(args, suite, gamma=float(args.gamma), k=args.k, shape=args.shape)


def cmd_mc_spine(args) -> int:
    alt = None if args.gamma_alt is None else float(args.gamma_alt)
    return _mc(args, "spine", gamma=float(args.gamma), gamma_alt=alt)


def _grid(args) -> np.ndarray:
    if args.x:
        return np.array([float(v) for v in args.x])
    try:
        lo, hi, num = args.grid.split(":")
        return np.linspace(float(lo), float(hi), int(num))
    except ValueError as exc:
        raise UsageError("--grid must look like start:stop:count") from exc


def cmd_density(args) -> int:
    xs = _grid(args)
    a = None if args.alpha is None else float(args.alpha)
    g = None if args.gamma is None else float(args.gamma)
    kind = args.kind
    try:
        if kind == "nu-sb":
            values = measures.nu_sb_density(a, g, xs[:, None])
        elif kind == "gem-star":
            theta = -a - g if args.theta is None else float(args.theta)
            values = measures.gem_star_density(a, theta, xs[:, None])
        elif kind == "binary":
            values = measures.binary_density(a, g, xs)
        elif kind == "alpha1":
            values = measures.alpha1_density(g, xs)
        else:
            values = measures.levy_density(a, g, xs)
    except (TypeError, ValueError) as exc:
        raise UsageError(str(exc)) from exc
    out = _Buffer()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["x", "value"])
    for x, v in zip(xs, np.atleast_1d(values)):
        writer.writerow([repr(float(x)), repr(float(v))])
    if kind == "alpha1":
        for atom in measures.ALPHA1_ATOMS:
            writer.writerow([f"atom@{atom.location!r}", repr(atom.mass)])
    _emit(out.text, args.output)
    return 0


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mbtree", description="Alpha-gamma trees: samplers, exact laws and checks.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, gamma=True, seed=False):
        p.add_argument("--alpha", type=_scalar, required=True)
        if gamma:
            p.add_argument("--gamma", type=_scalar, required=True)
        if seed:
            p.add_argument("--seed", type=int, default=None, help=f"defaults to ${SEED_ENV}, then 0")
        p.add_argument("--output", "-o", default=None, help="write to a file instead of stdout")

    p = sub.add_parser("grow", help="sample a tree and print it")
    common(p, seed=True)
    p.add_argument("--n", type=int, required=True)
    p.set_defaults(func=cmd_grow)

    p = sub.add_parser("split-table", help="first-split law as CSV")
    common(p)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.set_defaults(func=cmd_split_table)

    p = sub.add_parser("check-consistency", help="sampling-consistency residuals for 3..n")
    common(p)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--tol", type=float, default=1e-12)
    p.set_defaults(func=cmd_check_consistency)

    p = sub.add_parser("oracle", help="exact law of T_n and verification residuals")
    common(p)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--bound", type=int, default=oracle.DEFAULT_BOUND)
    p.add_argument(
        "--verify",
        nargs="+",
        default=["all"],
        choices=["all", "none", "first-split", "markov", "spinal", "deletion"],
    )
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("crush-compare", help="exact crushed coloured law vs alpha-gamma law")
    p.add_argument("--alpha", type=_scalar, required=True)
    p.add_argument("--c", type=_scalar, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--bound", type=int, default=oracle.DEFAULT_BOUND)
    p.add_argument("--output", "-o", default=None)
    p.set_defaults(func=cmd_crush_compare)

    def mc_common(p, n, reps):
        p.add_argument("--n", type=int, default=n)
        p.add_argument("--replicates", type=int, default=reps)
        p.add_argument("--p-threshold", type=float, default=1e-3)
        p.add_argument("--se-multiplier", type=float, default=3.0)
        p.add_argument("--threads", type=int, default=1, help="worker processes")

    p = sub.add_parser("mc-crp", help="block-count scaling and Mittag-Leffler moments")
    common(p, gamma=False, seed=True)
    p.add_argument("--theta", type=_scalar, required=True)
    p.add_argument("--ml-samples", type=int, default=100_000)
    mc_common(p, 10_000, 2000)
    p.set_defaults(func=cmd_mc_crp)

    p = sub.add_parser("mc-reduced", help="reduced-tree limit laws")
    common(p, seed=True)
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--shape", default=None, help="condition on this k-leaf shape code")
    p.add_argument("--degrees", action="store_true", help="run the branch-point degree suite instead")
    mc_common(p, 10_000, 1000)
    p.set_defaults(func=cmd_mc_reduced)

    p = sub.add_parser("mc-spine", help="spine subtree frequencies")
    common(p, seed=True)
    p.add_argument("--gamma-alt", type=_scalar, default=None, help="second gamma for a two-sample comparison")
    mc_common(p, 10_000, 1000)
    p.set_defaults(func=cmd_mc_spine)

    p = sub.add_parser("density", help="evaluate a density on a grid (CSV)")
    p.add_argument("--kind", required=True, choices=["nu-sb", "gem-star", "binary", "alpha1", "levy"])
    p.add_argument("--alpha", type=_scalar)
    p.add_argument("--gamma", type=_scalar)
    p.add_argument("--theta", type=_scalar)
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--grid", help="start:stop:count")
    group.add_argument("--x", nargs="+")
    p.add_argument("--output", "-o", default=None)
    p.set_defaults(func=cmd_density)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else 0
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"mbtree {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
