"""Command-line interface.

Three subcommands: ``check`` prints the contraction report for a network
document, ``solve`` computes the equilibrium at given prices, ``simulate``
runs a scenario and emits the trajectory as CSV or JSON. Data goes to
standard output (or --out); diagnostics go to standard error.

Exit codes: 0 success, 1 parse/schema/file error, 2 no convergence,
3 validation or usage error.
"""

from __future__ import annotations

import argparse
import sys
from typing import Optional, Sequence

from .documents import emit_trajectory, parse_network, parse_prices, parse_scenario
from .dynamics import simulate
from .errors import (
    NoConvergenceError,
    ParseError,
    ReflexnetError,
    SchemaError,
)
from .solver import SolverConfig, check_contraction, solve_equilibrium

EXIT_OK = 0
EXIT_DOCUMENT = 1
EXIT_NO_CONVERGENCE = 2
EXIT_INVALID = 3


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with code 2 on usage errors, which collides with the
    # no-convergence exit code; surface them as code 3 instead
    def error(self, message):
        raise _UsageError(message)


def _read(path: str) -> bytes:
    with open(path, "rb") as handle:
        return handle.read()


def _bool_word(flag: bool) -> str:
    return "true" if flag else "false"


def _cmd_check(args) -> int:
    network = parse_network(_read(args.network))
    report = check_contraction(network)
    print(
        f"guaranteed_unique: {_bool_word(report.guaranteed_unique)}, "
        f"worst_column_sum: {report.worst_column_sum}"
    )
    for claim in report.offending_claims:
        print(f"offending: {claim}")
    return EXIT_OK


def _cmd_solve(args) -> int:
    network = parse_network(_read(args.network))
    prices = parse_prices(_read(args.prices))
    config = SolverConfig(tolerance=args.tol, max_iterations=args.max_iter)
    state, diagnostics = solve_equilibrium(network, prices, config)
    for i, firm in enumerate(network.firms):
        parts = [f"{firm}: equity={state.equity[i]:.2f}"]
        for k in range(network.tranche_count(i)):
            parts.append(f"debt#{k + 1}={state.debt[i, k]:.2f}")
        print(" ".join(parts))
    print(
        f"iterations: {diagnostics.iterations}, "
        f"final_residual: {diagnostics.final_residual:.3g}, "
        f"contraction_estimate: {diagnostics.contraction_estimate:.6g}, "
        f"guaranteed_unique: {_bool_word(diagnostics.guaranteed_unique)}",
        file=sys.stderr,
    )
    return EXIT_OK


def _cmd_simulate(args) -> int:
    network = parse_network(_read(args.network))
    scenario = parse_scenario(_read(args.scenario), network)
    trajectory = simulate(network, scenario)
    payload = emit_trajectory(trajectory, args.format, round_2=args.round_2)
    if args.out:
        with open(args.out, "wb") as handle:
            handle.write(payload)
    else:
        sys.stdout.buffer.write(payload)
        sys.stdout.buffer.flush()
    print(f"classification: {trajectory.classification.value}", file=sys.stderr)
    if trajectory.halted:
        print("halted: divergence cutoff reached", file=sys.stderr)
    return EXIT_OK


def _build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="reflexnet",
        description=(
            "Value cross-owned firm networks and simulate their"
            " post-shock revaluation dynamics."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", help="print the contraction report for a network")
    p.add_argument("network", help="path to a *.network.json document")
    p.set_defaults(handler=_cmd_check)

    p = sub.add_parser("solve", help="solve the equilibrium at fixed prices")
    p.add_argument("network", help="path to a *.network.json document")
    p.add_argument("--prices", required=True, help="path to a {asset: price} JSON file")
    p.add_argument("--tol", type=float, default=1e-9, help="stopping tolerance")
    p.add_argument("--max-iter", type=int, default=10_000, help="iteration budget")
    p.set_defaults(handler=_cmd_solve)

    p = sub.add_parser("simulate", help="run a scenario and emit the trajectory")
    p.add_argument("network", help="path to a *.network.json document")
    p.add_argument("scenario", help="path to a *.scenario.json document")
    p.add_argument("--out", help="write the trajectory here instead of stdout")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--round-2", action="store_true", help="two-decimal display values")
    p.set_defaults(handler=_cmd_simulate)

    return parser


def run_cli(argv: Optional[Sequence[str]] = None) -> int:
    """Run one CLI invocation and return its exit code, never raising."""
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except SystemExit as exc:  # --help
        return int(exc.code or 0)

    try:
        return args.handler(args)
    except (ParseError, SchemaError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOCUMENT
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOCUMENT
    except NoConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        if exc.diagnostics is not None:
            print(
                f"iterations: {exc.diagnostics.iterations}, "
                f"final_residual: {exc.diagnostics.final_residual:.3g}",
                file=sys.stderr,
            )
        return EXIT_NO_CONVERGENCE
    except ReflexnetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except Exception as exc:  # pragma: no cover - safety net, never panic
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INVALID


def main() -> None:
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
