"""Command-line interface: ``solve``, ``rate`` and ``verify``.

Exit status is 0 when the solver (or every acceptance check) succeeds, 2 when
it does not, and 1 on usage or I/O errors.
"""

from __future__ import annotations

import argparse
import json
import sys

from .acceptance import SUITES, run_suite
from .harness import ALGORITHMS, ProblemError, RunConfig, fit_rate, parse_problem, read_trace, run

EXIT_OK, EXIT_ERROR, EXIT_NONCONVERGED = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="pfhalpern", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("solve", help="solve a problem file")
    s.add_argument("--problem", required=True, help="JSON problem file")
    s.add_argument("--algorithm", required=True, choices=ALGORITHMS)
    s.add_argument("--eps", required=True, type=float)
    s.add_argument("--l0", type=float, help="initial Lipschitz guess (Halpern solvers)")
    s.add_argument("--a0", type=float, help="initial step size (eg)")
    s.add_argument("--eta", type=float, help="resolvent scaling (halpern-lipschitz-scaled)")
    s.add_argument("--max-iters", type=int)
    s.add_argument("--trace", help="write the iteration trace as CSV")
    s.add_argument("--seed", type=int, default=0, help="recorded in the report")

    r = sub.add_parser("rate", help="fit log residual against log k for a trace")
    r.add_argument("--trace", required=True)
    r.add_argument("--burn-in", type=float, default=0.2)

    v = sub.add_parser("verify", help="run an acceptance suite")
    v.add_argument("--suite", required=True, choices=sorted(SUITES))
    return p


def _solve(args) -> int:
    try:
        instance = parse_problem(args.problem)
        config = RunConfig(args.algorithm, args.eps, args.l0, args.a0, args.eta,
                           args.max_iters, args.trace, args.seed)
        report = run(instance, config)
    except (OSError, ProblemError, ValueError) as exc:
        print(f"pfhalpern: error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    out = report.summary()
    out["seed"] = config.seed
    out["status"] = report.info.get("status", "converged" if report.converged else "")
    print(json.dumps(out, indent=2))
    return EXIT_OK if report.converged else EXIT_NONCONVERGED


def _rate(args) -> int:
    try:
        slope, r2 = fit_rate(read_trace(args.trace), args.burn_in)
    except (OSError, ValueError) as exc:
        print(f"pfhalpern: error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    print(json.dumps({"slope": slope, "r_squared": r2}))
    return EXIT_OK


def _verify(args) -> int:
    results = run_suite(args.suite, echo=lambda line: print(line, flush=True))
    failed = [r.number for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} criteria passed")
    return EXIT_OK if not failed else EXIT_NONCONVERGED


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return {"solve": _solve, "rate": _rate, "verify": _verify}[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
