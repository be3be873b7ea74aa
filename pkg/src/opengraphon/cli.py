"""Command line interface: ``opengraphon <subcommand> ...``.

Graphons are given as JSON documents (``--graphon file.json``) or inline
(``--graphon '{"kind": "constant", "p": 0.5}'``).
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from ._errors import ContractViolation, DomainError
from ._rng import substream
from .bounds import (
    DEFAULT_EPSILON,
    exp_mu2_bound,
    large_enough_for,
    open_bound,
    replacement_bound,
)
from .graphon import (
    expected_graph,
    graphon_from_dict,
    inf_degree,
    sample_simple_graph,
)
from .harness import ExperimentSpec, SummaryFormatError, compare_bounds, run
from .spectral import (
    exp_mu2,
    exp_mu2_max,
    laplacian_spectrum,
    mu2,
    sbm_mu2_analytic,
    sbm_reduction,
)


def _graphon(text: str):
    path = Path(text)
    if path.suffix == ".json" or path.exists():
        with open(path) as fh:
            return graphon_from_dict(json.load(fh))
    return graphon_from_dict(json.loads(text))


def _emit(doc: dict, out: str | None) -> None:
    text = json.dumps(doc, indent=2)
    if out:
        Path(out).write_text(text + "\n")
    else:
        print(text)


def cmd_sample(args) -> None:
    g = sample_simple_graph(expected_graph(_graphon(args.graphon), args.n), substream(args.seed, 0, "topology"))
    iu, ju = np.nonzero(np.triu(g.adjacency, 1))
    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        w = csv.writer(fh)
        w.writerow(["i", "j"])
        for i, j in zip(iu + 1, ju + 1):
            w.writerow([int(i), int(j)])
    finally:
        if args.out:
            fh.close()


def cmd_spectrum(args) -> None:
    expected = expected_graph(_graphon(args.graphon), args.n)
    if args.expected:
        spec = laplacian_spectrum(expected)
    else:
        spec = laplacian_spectrum(sample_simple_graph(expected, substream(args.seed, 0, "topology")))
    if args.out:
        spec.to_csv(args.out)
    else:
        print("index,lambda,mu")
        for i, (lam, m) in enumerate(zip(spec.eigenvalues, spec.mu), start=1):
            print(f"{i},{float(lam)!r},{float(m)!r}")


def cmd_mu2_sbm(args) -> None:
    graphon = _graphon(args.graphon)
    red = sbm_reduction(graphon, args.n)
    doc = {
        "n": args.n,
        "block_sizes": red.block_sizes.tolist(),
        "degrees": red.degrees.tolist(),
        "delta_min": red.delta_min,
        "lambda2_reduced": float(red.laplacian_eigenvalues()[1]) if graphon.m > 1 else None,
        "mu2_bar": sbm_mu2_analytic(graphon, args.n),
        "inf_degree": inf_degree(graphon).value,
    }
    if args.check:
        doc["mu2_bar_dense"] = mu2(expected_graph(graphon, args.n))
    _emit(doc, args.out)


def cmd_exp_mu2(args) -> None:
    graphon = _graphon(args.graphon)
    if args.n_max is not None:
        est = exp_mu2_max(graphon, args.gamma, args.n, args.n_max, args.method, args.trials, args.seed)
    else:
        est = exp_mu2(
            expected_graph(graphon, args.n), args.gamma, args.method, args.trials,
            substream(args.seed, args.n, "estimate"),
        )
    _emit(est.to_dict(), args.out)


def cmd_bound(args) -> None:
    if args.formula == "thm1":
        report = replacement_bound(args.n, args.sigma2, args.gamma, args.e_term)
    elif args.formula == "thm2":
        report = open_bound(args.n_min, args.n_max, args.sigma2, args.gamma, args.e_term)
    else:
        check = large_enough_for(_graphon(args.graphon), args.n) if args.graphon else None
        report = exp_mu2_bound(args.mu2_bar, args.n, args.gamma, check)
    _emit(report.to_dict(), args.out)


def cmd_check_large_n(args) -> None:
    res = large_enough_for(_graphon(args.graphon), args.n, args.epsilon)
    _emit({"n": args.n, "epsilon": args.epsilon, **res._asdict(), "all": res.all}, args.out)


def _spec_from_args(args, kind: str | None) -> ExperimentSpec:
    with open(args.config) as fh:
        doc = json.load(fh)
    if kind is not None:
        if doc.get("kind", kind) != kind:
            raise ContractViolation(f"config describes a {doc['kind']!r} experiment, not {kind!r}")
        doc["kind"] = kind
    for key in ("seed", "trials", "out", "workers"):
        value = getattr(args, key, None)
        if value is not None:
            doc[key] = value
    return ExperimentSpec.from_dict(doc)


def cmd_simulate(args) -> None:
    kind = {"replacements": "replacements", "open": "open"}[args.system]
    manifest = run(_spec_from_args(args, kind))
    print(json.dumps(manifest.to_dict()["files"], indent=2))


def cmd_run(args) -> None:
    manifest = run(_spec_from_args(args, None))
    print(json.dumps(manifest.to_dict()["files"], indent=2))


def cmd_compare(args) -> None:
    rows = compare_bounds(args.summaries, args.out)
    if not args.out:
        w = csv.DictWriter(sys.stdout, fieldnames=list(rows[0]))
        w.writeheader()
        w.writerows(rows)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="opengraphon", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def graphon_arg(p, required=True):
        p.add_argument("--graphon", required=required, help="graphon JSON file or inline JSON")

    p = sub.add_parser("sample", help="sample one graph and emit its edge list")
    graphon_arg(p)
    p.add_argument("-n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("spectrum", help="Laplacian spectrum of a sampled or expected graph")
    graphon_arg(p)
    p.add_argument("-n", type=int, required=True)
    p.add_argument("--expected", action="store_true", help="use the expected graph")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("mu2-sbm", help="mu2 of the expected graph via the SBM reduction")
    graphon_arg(p)
    p.add_argument("-n", type=int, required=True)
    p.add_argument("--check", action="store_true", help="also run the dense eigensolver")
    p.add_argument("--out")
    p.set_defaults(func=cmd_mu2_sbm)

    p = sub.add_parser("exp-mu2", help="estimate E[exp(-2 gamma mu2)]")
    graphon_arg(p)
    p.add_argument("-n", type=int, required=True, help="size (lower end with --n-max)")
    p.add_argument("--n-max", type=int, help="maximize over sizes n..n-max")
    p.add_argument("--gamma", type=float, required=True)
    p.add_argument("--method", default="auto", choices=["auto", "exact", "monte-carlo", "mc"])
    p.add_argument("--trials", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_exp_mu2)

    p = sub.add_parser("bound", help="evaluate a closed-form bound")
    bsub = p.add_subparsers(dest="formula", required=True)
    b1 = bsub.add_parser("thm1", help="replacements at fixed size")
    b1.add_argument("-n", type=int, required=True)
    b2 = bsub.add_parser("thm2", help="arrivals and departures")
    b2.add_argument("--n-min", type=int, required=True)
    b2.add_argument("--n-max", type=int, required=True)
    for b in (b1, b2):
        b.add_argument("--sigma2", type=float, default=1.0)
        b.add_argument("--gamma", type=float, required=True)
        b.add_argument("--e-term", type=float, required=True)
        b.add_argument("--out")
    b3 = bsub.add_parser("thm3", help="upper bound on E[exp(-2 gamma mu2)]")
    b3.add_argument("--mu2-bar", type=float, required=True)
    b3.add_argument("-n", type=int, required=True)
    b3.add_argument("--gamma", type=float, required=True)
    graphon_arg(b3, required=False)
    b3.add_argument("--out")
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("check-large-n", help="check the size conditions of the E-term bound")
    graphon_arg(p)
    p.add_argument("-n", type=int, required=True)
    p.add_argument("--epsilon", type=float, default=DEFAULT_EPSILON)
    p.add_argument("--out")
    p.set_defaults(func=cmd_check_large_n)

    def sim_args(p):
        p.add_argument("--config", required=True, help="experiment spec JSON")
        p.add_argument("--seed", type=int)
        p.add_argument("--trials", type=int)
        p.add_argument("--out")
        p.add_argument("--workers", type=int)

    p = sub.add_parser("simulate", help="Monte Carlo simulation against the bound")
    p.add_argument("system", choices=["replacements", "open"])
    sim_args(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("run", help="run any experiment spec (incl. bound-sweep, oracle-check)")
    sim_args(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("compare", help="tabulate summaries: empirical vs bound")
    p.add_argument("summaries", nargs="*")
    p.add_argument("--out")
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    if args.command == "compare" and not args.summaries:
        parser.error("compare needs at least one summary file")
    try:
        args.func(args)
    except (ContractViolation, DomainError, SummaryFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
