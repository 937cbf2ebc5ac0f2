"""``oracleboost`` command line.

Exit status: 0 on success, 2 on a configuration or usage error, 1 when an
instrumented invariant was violated.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from ..errors import ConfigurationError, FeasibilityError, InputDomainError, InvariantError
from ..protolib import WORKLOADS
from ..querysets import is_blocky, nand_embed, read_grid, vc_dimension, verify_embedding
from .experiments import SUBPROTOCOLS, ExperimentConfig, compare_boosting, estimate_error
from .reports import render, to_csv, traces_jsonl


def _common(p: argparse.ArgumentParser, *, delta: bool = True) -> None:
    p.add_argument("--n", type=int, required=True, help="input bit length (vertex count for adj-tree)")
    p.add_argument("--k", type=int, default=1)
    if delta:
        p.add_argument("--delta", type=float, default=0.25)
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--dist", choices=("uniform", "worst", "fixed"), default="worst")
    p.add_argument("--distance", type=int, default=None, help="Hamming distance for --dist fixed")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--out", type=Path, default=None)
    p.add_argument("--timing", action="store_true", help="include wall-clock seconds (breaks byte-identical output)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="oracleboost", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("noisytree", help="Monte Carlo error and cost of a boosted protocol tree")
    p.add_argument("--workload", choices=WORKLOADS, default="hd1-bsearch")
    p.add_argument("--variant", choices=("noisy", "naive"), default="noisy")
    p.add_argument("--c-const", type=float, default=6.0)
    p.add_argument("--per-run", type=Path, default=None, help="write per-run walk statistics as CSV")
    _common(p)

    p = sub.add_parser("hdreduce", help="k-Hamming-Distance reduction experiment")
    p.add_argument("--schedule", choices=("t2", "t5"), default="t5")
    p.add_argument("--mode", choices=("rand", "randomized", "oracle"), default="randomized")
    p.add_argument("--trace", type=Path, default=None, help="write iteration traces as JSON lines")
    _common(p, delta=False)

    p = sub.add_parser("compare", help="naive versus noisy boosting cost")
    p.add_argument("--workload", choices=WORKLOADS, default="hd1-tensor")
    p.add_argument("--c-const", type=float, default=6.0)
    p.add_argument("--no-measure", action="store_true", help="skip the instrumented witness runs")
    _common(p)

    p = sub.add_parser("subproto", help="error and cost of a single subprotocol")
    p.add_argument("--proto", choices=SUBPROTOCOLS, default="hd1-once")
    p.add_argument("--buckets", type=int, default=16)
    _common(p)

    for name, text in (
        ("blocky", "test whether a 0/1 grid is an Equality matrix"),
        ("vc", "VC dimension of a 0/1 grid"),
        ("embed", "NAND-conjunction embedding of a 0/1 grid"),
    ):
        p = sub.add_parser(name, help=text)
        p.add_argument("grid", type=Path)
        p.add_argument("--out", type=Path, default=None)
    return parser


def _emit(text: str, out: Path | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        out.write_text(text)


def _run(args) -> int:
    cmd = args.command
    if cmd in ("blocky", "vc", "embed"):
        m = read_grid(args.grid)
        if cmd == "blocky":
            res = is_blocky(m)
            if res:
                lines = ["blocky: yes", "a: " + " ".join(map(str, res.witness.a.values)),
                         "b: " + " ".join(map(str, res.witness.b.values))]
            else:
                lines = ["blocky: no", f"conflict rows: {res.conflict[0]} {res.conflict[1]}"]
        elif cmd == "vc":
            lines = [f"vc: {vc_dimension(m)}"]
        else:
            v, w = nand_embed(m)
            lines = [f"v{x}: " + " ".join(map(str, row)) for x, row in enumerate(v)]
            lines += [f"w{y}: " + " ".join(map(str, row)) for y, row in enumerate(w)]
            lines.append("verified: " + ("yes" if verify_embedding(m, v, w) else "no"))
        _emit("\n".join(lines) + "\n", args.out)
        return 0

    if cmd == "compare":
        res = compare_boosting(args.workload, args.n, args.k, args.delta, args.c_const,
                               args.trials, args.seed, measure=not args.no_measure)
        _emit(render(res.to_dict(), args.format), args.out)
        return 0

    if cmd == "noisytree":
        cfg = ExperimentConfig(args.workload, args.n, args.k, args.variant, args.delta, args.c_const,
                               args.trials, args.seed, args.dist, args.distance)
    elif cmd == "hdreduce":
        cfg = ExperimentConfig("hdk", args.n, args.k, "hdreduce", trials=args.trials, seed=args.seed,
                               dist=args.dist, distance=args.distance, mode=args.mode, schedule=args.schedule)
    else:
        cfg = ExperimentConfig(args.proto, args.n, args.k, "subprotocol", args.delta, trials=args.trials,
                               seed=args.seed, dist=args.dist, distance=args.distance, buckets=args.buckets)
    per_run = cmd == "noisytree" and args.per_run is not None
    keep = cmd == "hdreduce" and args.trace is not None
    report = estimate_error(cfg, per_run=per_run, keep_traces=keep, timing=args.timing)
    _emit(render(report.to_dict(), args.format), args.out)
    if per_run:
        args.per_run.write_text(to_csv(report.per_run))
    if keep:
        args.trace.write_text(traces_jsonl(report.traces))
    if not report.ok:
        bad = ", ".join(f"{k}={v}" for k, v in report.violations.items() if v)
        print(f"invariant violations: {bad}", file=sys.stderr)
        return 1
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return _run(args)
    except (ConfigurationError, FeasibilityError, InputDomainError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except InvariantError as exc:
        print(f"invariant failure: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
