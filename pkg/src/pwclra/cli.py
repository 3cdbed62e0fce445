"""Command-line entry point: ``pwclra run|presets|overhead|complexity|report``.

Exit codes: 0 success, 2 configuration error, 3 runtime or numerical error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from .baselines import clra_overhead
from .calculators import complexity_estimate, pwclra_overhead
from .errors import ConfigurationError, PwclraError
from .scenario import PRESETS, dump_scenario, resolve_scenario

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _int_list(text: str) -> list[int]:
    try:
        return [int(t) for t in text.replace(",", " ").split()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected integers, got {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="pwclra", description="RIS channel-estimation simulation lab")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="run a scenario file or preset")
    run.add_argument("scenario", help="scenario file or preset name")
    run.add_argument("--out", help="CSV path (default: <scenario name>.csv)")
    run.add_argument("--trials", type=int, help="override the trial count")
    run.add_argument("--seed", type=int, help="override the base seed")
    run.add_argument("--parallel", type=int, default=1, metavar="JOBS")
    run.add_argument("--timing", action="store_true",
                     help="record runtime_seconds (makes the CSV non-reproducible)")
    run.add_argument("--report", action="store_true", help="also render the NMSE figure")

    pre = sub.add_parser("presets", help="list or show the built-in presets")
    pre_sub = pre.add_subparsers(dest="action", required=True, parser_class=_Parser)
    pre_sub.add_parser("list")
    show = pre_sub.add_parser("show")
    show.add_argument("name")

    ov = sub.add_parser("overhead", help="training-overhead calculator")
    ov.add_argument("--method", choices=("pwclra", "clra"), required=True)
    ov.add_argument("--q", type=int, help="pieces Q (pwclra)")
    ov.add_argument("--b-c", type=int, help="B_c (clra)")
    ov.add_argument("--b-r", type=int, help="B_r (clra)")
    ov.add_argument("--n", type=int, required=True)
    ov.add_argument("--n-rf", type=int, required=True)
    ov.add_argument("--m", type=int, required=True)
    ov.add_argument("--k", type=int)
    ov.add_argument("--l", type=int)
    ov.add_argument("--rank", type=int, help="rank estimate for the clra check")

    cx = sub.add_parser("complexity", help="complex-multiplication counts")
    cx.add_argument("--q", type=int, required=True)
    cx.add_argument("--n", type=int, required=True)
    cx.add_argument("--k", type=int, required=True)
    cx.add_argument("--l", type=int, required=True)
    cx.add_argument("--m-sub", type=int, required=True)
    cx.add_argument("--ranks", type=_int_list, required=True, help="e.g. 4,4,3,4")
    cx.add_argument("--t-max", type=int, default=10)

    rep = sub.add_parser("report", help="render the NMSE figure of a results CSV")
    rep.add_argument("csv")
    rep.add_argument("--out", help="image path (default: next to the CSV)")
    return p


def _cmd_run(args) -> int:
    from .runner import run_scenario, write_csv, write_metadata
    scenario = resolve_scenario(args.scenario)
    changes = {}
    if args.trials is not None:
        changes["trials"] = args.trials
    if args.seed is not None:
        changes["base_seed"] = args.seed
    if changes:
        scenario = scenario.with_(**changes)
    if args.parallel < 1:
        raise ConfigurationError("--parallel must be >= 1")
    out = Path(args.out or f"{scenario.name}.csv")
    rows = run_scenario(scenario, parallel=args.parallel, timing=args.timing)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_csv(rows, out)
    meta = write_metadata(scenario, out)
    print(f"wrote {len(rows)} rows to {out} (metadata {meta})")
    if args.report:
        from .plotting import plot_results
        print(f"wrote {plot_results(out)}")
    return EXIT_OK


def _cmd_presets(args) -> int:
    if args.action == "list":
        for name, sc in PRESETS.items():
            print(f"{name}: {len(sc.points())} points x {sc.trials} trials, "
                  f"methods {', '.join(sc.methods)}")
    else:
        if args.name not in PRESETS:
            raise ConfigurationError(f"unknown preset {args.name!r}")
        print(dump_scenario(PRESETS[args.name]), end="")
    return EXIT_OK


def _cmd_overhead(args) -> int:
    if args.method == "pwclra":
        if args.q is None:
            raise ConfigurationError("--q is required for --method pwclra")
        rep = pwclra_overhead(args.q, args.n, args.n_rf, args.m, args.k, args.l)
    else:
        if args.b_c is None or args.b_r is None:
            raise ConfigurationError("--b-c and --b-r are required for --method clra")
        rep = clra_overhead(args.b_c, args.b_r, args.n, args.n_rf, args.m, args.k, args.l,
                            args.rank)
    print("\n".join(rep.lines()))
    return EXIT_OK


def _cmd_complexity(args) -> int:
    c = complexity_estimate(args.q, args.n, args.k, args.l, args.m_sub, args.ranks, args.t_max)
    print(f"delta_d = {c.delta_d}")
    print(f"delta_a = {c.delta_a}")
    print(f"psi_subspace = {c.psi_subspace}")
    print(f"psi_inverse = {c.psi_inverse}")
    print(f"psi_joint = {c.psi_joint}")
    print(f"psi_total = {c.psi_total}")
    return EXIT_OK


def _cmd_report(args) -> int:
    from .plotting import plot_results
    print(f"wrote {plot_results(args.csv, args.out)}")
    return EXIT_OK


COMMANDS = {"run": _cmd_run, "presets": _cmd_presets, "overhead": _cmd_overhead,
            "complexity": _cmd_complexity, "report": _cmd_report}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (PwclraError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
