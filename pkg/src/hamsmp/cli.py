"""Command-line entry point: ``hamsmp run|estimate|sweep-cost|theory|verify``."""

from __future__ import annotations

import argparse
import json
import sys

from .core import STREAM_INSTANCE, CoinStream, gen_instance, hamming_distance
from .gap_test import DEFAULT_GAMMA
from .harness import (
    SCALING_CONSTANT,
    estimate_csv,
    estimate_error,
    sweep_cost,
    sweep_csv,
    theory_report,
    verify_distribution,
)
from .protocol import ProtocolConfig, run_protocol


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _config(args) -> ProtocolConfig:
    return ProtocolConfig(gamma=args.gamma, reps=args.reps, inner=args.inner)


def cmd_run(args) -> int:
    inst = gen_instance(args.n, args.k, CoinStream(args.seed, STREAM_INSTANCE), args.d)
    tr = run_protocol(inst.x, inst.y, args.d, _config(args), args.seed)
    truth = int(hamming_distance(inst.x, inst.y) > args.d)
    print(f"verdict={tr.final.name} truth={'GT' if truth else 'LE'} "
          f"r1={tr.r1.name} r2={tr.r2.name} branch={tr.branch} bits_per_party={tr.alice_bits}")
    print(tr.to_json(with_messages=args.messages))
    return 0


def cmd_estimate(args) -> int:
    report = estimate_error(args.n, args.d, args.k, args.trials, args.seed, _config(args),
                            subprotocol=args.subprotocol, workers=args.workers)
    sys.stdout.write(estimate_csv([report]))
    if report.bound is not None:
        status = "ok" if report.within_bound else "EXCEEDED"
        print(f"# bound {report.bound:.6f} {status}", file=sys.stderr)
    return 0 if report.within_bound else 1


def cmd_sweep(args) -> int:
    rows = sweep_cost(args.d_list, args.n, _config(args), args.seed)
    sys.stdout.write(sweep_csv(rows))
    ok = True
    if args.inner == "syndrome":
        ok = all(r.normalized <= SCALING_CONSTANT for r in rows if r.d >= 2)
    print(f"# constant gap-test cost per party: {rows[0].constant_bits if rows else 0} bits",
          file=sys.stderr)
    return 0 if ok else 1


def cmd_theory(args) -> int:
    report = theory_report(args.d, args.gamma)
    if args.csv:
        sys.stdout.write(report.to_csv())
    else:
        print(report.table())
    ok = report.chebyshev_total <= 1 / 8 and report.rows == tuple(sorted(report.rows, key=lambda r: r.k))
    return 0 if ok else 1


def cmd_verify(args) -> int:
    check = verify_distribution(args.d, args.k, args.gamma, args.trials, args.seed, args.n)
    print(json.dumps({
        "d": check.d, "k": check.k, "gamma": check.gamma, "trials": check.trials,
        "mean": check.mean, "alpha": check.alpha, "sigma": check.sigma,
        "lag1": check.lag1, "lag1_tol": check.lag1_tol, "passed": check.passed,
    }))
    return 0 if check.passed else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hamsmp", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def protocol_opts(p):
        p.add_argument("--gamma", type=int, default=DEFAULT_GAMMA)
        p.add_argument("--reps", type=int, default=1)
        p.add_argument("--inner", choices=("syndrome", "reference"), default="syndrome")

    p = sub.add_parser("run", help="one protocol execution on a random distance-k instance")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--messages", action="store_true", help="include both messages in the dump")
    protocol_opts(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("estimate", help="Monte Carlo error rate as a CSV row")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--trials", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--subprotocol", choices=("gap", "p1", "full"), default="full")
    p.add_argument("--workers", type=int, default=1)
    protocol_opts(p)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("sweep-cost", help="per-party communication across d")
    p.add_argument("--d-list", type=_int_list, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    protocol_opts(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("theory", help="closed-form bounds for the gap test")
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--gamma", type=int, default=DEFAULT_GAMMA)
    p.add_argument("--csv", action="store_true")
    p.set_defaults(func=cmd_theory)

    p = sub.add_parser("verify", help="check the disagreement-bit distribution")
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--gamma", type=int, default=DEFAULT_GAMMA)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n", type=int, default=4096)
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ValueError as exc:
        print(f"hamsmp: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
