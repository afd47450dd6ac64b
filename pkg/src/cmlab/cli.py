"""Command-line front end.

Exit codes: 0 on success, 1 on usage errors, 2 on runtime failures.  Vertex
ids in files and on the command line are 1-based, matching the serialized
formats.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
from pathlib import Path

from . import branching, degrees, explore, graph, lab


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse defaults to exit code 2
        raise _UsageError(message)


def _write(text: str, out: str | None):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _load_degrees(path: str) -> degrees.DegreeSequence:
    return degrees.DegreeSequence.from_text(Path(path).read_text())


def _build_parser() -> _Parser:
    p = _Parser(prog="cmlab", description="configuration-model critical-window laboratory")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen-degrees", help="power-law degree sequence")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--tau", type=float, required=True)
    g.add_argument("--cf", type=float, default=1.0)
    g.add_argument("--iid", action="store_true", help="i.i.d. sample instead of quantiles")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out")

    r = sub.add_parser("realize", help="pair half-edges into a multigraph")
    r.add_argument("--degrees", required=True)
    r.add_argument("--seed", type=int, required=True)
    r.add_argument("--simple", action="store_true", help="rejection-sample a simple graph")
    r.add_argument("--max-attempts", type=int, default=1000)
    r.add_argument("--out")

    pc = sub.add_parser("percolate", help="critical-window degree percolation")
    pc.add_argument("--degrees", required=True)
    pc.add_argument("--tau", type=float, required=True)
    pc.add_argument("--lambda", dest="lam", type=float, default=0.0)
    pc.add_argument("--seed", type=int, required=True)
    pc.add_argument("--out")

    e = sub.add_parser("explore", help="exploration-walk trace from a start vertex")
    e.add_argument("--graph", required=True)
    e.add_argument("--start", type=int, required=True, help="1-based vertex id")
    e.add_argument("--out")

    m = sub.add_parser("mass", help="lower-mass profile of a component")
    m.add_argument("--graph", required=True)
    m.add_argument("--rank", type=int, required=True, help="1-based component rank")
    m.add_argument("--deltas", required=True, help="comma-separated radii multipliers")
    m.add_argument("--tau", type=float, required=True)
    m.add_argument("--out")

    b = sub.add_parser("bp-height", help="height vs harmonic-sum check for the dominating law")
    b.add_argument("--degrees", required=True)
    b.add_argument("--tau", type=float, required=True)
    b.add_argument("--eps", type=float, required=True)
    b.add_argument("--trials", type=int, required=True)
    b.add_argument("--seed", type=int, required=True)
    b.add_argument("--i", type=int, default=0,
                   help="truncation index (default: the K_n cut)")
    b.add_argument("--out")

    c = sub.add_parser("check-assumptions", help="numeric assumption report")
    c.add_argument("--degrees", required=True)
    c.add_argument("--tau", type=float, required=True)
    c.add_argument("--k-probe", type=int, default=10)
    c.add_argument("--lambda", dest="lam", type=float, default=0.0)
    c.add_argument("--out")

    x = sub.add_parser("experiment", help="run a JSON-configured Monte Carlo study")
    x.add_argument("--config", required=True)
    x.add_argument("--out", help="overrides out_trials from the config")

    return p


def _run(args) -> int:
    if args.command == "gen-degrees":
        if args.iid:
            d = degrees.iid_powerlaw_sequence(args.n, args.tau, args.cf, seed=args.seed)
        else:
            d = degrees.powerlaw_quantile_sequence(args.n, args.tau, args.cf)
        _write(d.to_text(), args.out)
        return 0

    if args.command == "realize":
        d = _load_degrees(args.degrees)
        if args.simple:
            g = graph.sample_simple(d, seed=args.seed, max_attempts=args.max_attempts).graph
        else:
            g = graph.pair_half_edges(d, seed=args.seed)
        _write(g.to_text(), args.out)
        return 0

    if args.command == "percolate":
        d = _load_degrees(args.degrees)
        exp = degrees.exponents_from_tau(args.tau, args.lam)
        p = graph.critical_p(d, exp)
        outcome = graph.percolate_degrees(d, p, seed=args.seed)
        _write(outcome.sorted_degrees().to_text(), args.out)
        return 0

    if args.command == "explore":
        g = graph.HalfEdgeGraph.from_text(Path(args.graph).read_text())
        trace = explore.explore_component(g, args.start - 1)
        _write(explore.trace_to_csv(trace), args.out)
        return 0

    if args.command == "mass":
        g = graph.HalfEdgeGraph.from_text(Path(args.graph).read_text())
        exp = degrees.exponents_from_tau(args.tau)
        comps = explore.components(g)
        if args.rank > len(comps):
            raise ValueError(f"graph has only {len(comps)} components")
        deltas = [float(x) for x in args.deltas.split(",")]
        profile = explore.mass_profile(g, comps[args.rank - 1], deltas, exp)
        _write(explore.mass_profile_to_csv(profile), args.out)
        return 0

    if args.command == "bp-height":
        d = _load_degrees(args.degrees)
        exp = degrees.exponents_from_tau(args.tau)
        i = args.i if args.i >= 1 else degrees.kn_default(d.n, exp)
        law = branching.truncated_progeny_law(d, i, exp, args.eps)
        res = branching.height_harmonic_check(law, seed=args.seed, trials=args.trials)
        _write(lab.dumps_12g({
            "name": "height_harmonic", "truncation_index": i,
            "law_mean": law.mean, "trials": res.trials, "used": res.used,
            "excluded": res.excluded, "violations": res.violations,
            "max_ratio": res.max_ratio, "bound": 3.0,
            "flag": "pass" if res.violations == 0 else "fail",
        }) + "\n", args.out)
        return 0

    if args.command == "check-assumptions":
        d = _load_degrees(args.degrees)
        exp = degrees.exponents_from_tau(args.tau, args.lam)
        report = degrees.check_assumptions(d, exp, k_probe=min(args.k_probe, d.n))
        _write(report.to_json() + "\n", args.out)
        return 0

    if args.command == "experiment":
        spec = lab.ExperimentSpec.from_json(Path(args.config).read_text())
        if args.out:
            spec = dataclasses.replace(spec, out_trials=args.out)
        result = lab.run_experiment(spec)
        if not spec.out_trials:
            sys.stdout.write(result.trials_jsonl())
        if not spec.out_summary:
            sys.stdout.write(result.summary_json() + "\n")
        return 0

    raise _UsageError(f"unknown command {args.command!r}")


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    try:
        return _run(args)
    except (_UsageError,) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # runtime failure contract: exit 2
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
