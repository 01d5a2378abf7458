"""Command-line interface: ``vkglab run | check | fit | report``.

Exit codes: 0 success, 1 failed check, 2 usage error, 3 runtime error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from .errors import ConfigError, UnknownQuantityError, VKGError

EXIT_OK, EXIT_CHECK, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def norm_column(quantity: str, norm_text: str) -> str:
    """Series name for a quantity and an L^p norm spec (L1, L2, Linf)."""
    from .spectral import parse_norm
    try:
        spec = parse_norm(norm_text)
    except ValueError as exc:
        raise UnknownQuantityError(str(exc)) from None
    if spec.kind != "L":
        raise UnknownQuantityError("archived series hold L^p norms only")
    p = "inf" if np.isinf(spec.p) else f"{spec.p:g}"
    return f"{quantity}_L{p}"


def parse_window(text: str) -> tuple[float, float]:
    try:
        a, b = (float(x) for x in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError("window must look like t0:t1") from None
    return a, b


def cmd_run(args) -> int:
    from .config import load_config
    from .run import run
    cfg = load_config(args.config)
    result = run(cfg, args.out)
    print(f"wrote {args.out} ({cfg.steps} steps, {result.wall_seconds:.1f} s)")
    return EXIT_OK


def cmd_check(args) -> int:
    from .checks import SUITES, results_csv
    if args.suite not in SUITES:
        print(f"unknown suite {args.suite!r}; choose from {', '.join(SUITES)}", file=sys.stderr)
        return EXIT_USAGE
    results = SUITES[args.suite]()
    sys.stdout.write(results_csv(results))
    return EXIT_OK if all(r.passed for r in results) else EXIT_CHECK


def cmd_fit(args) -> int:
    from .archive import Archive
    from .diagnostics import fit_decay_exponent
    from .report import series_period
    arc = Archive(args.archive)
    column = norm_column(args.quantity, args.norm)
    times, values = arc.series(column)
    period = series_period(args.quantity) if args.period is None else (args.period or None)
    rep = fit_decay_exponent(times, values, args.window, quantity=args.quantity, norm_name=args.norm,
                             period=period, t_wrap=arc.config.t_wrap)
    text = rep.to_csv()
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_report(args) -> int:
    from .report import write_report
    out = write_report(args.archive, args.out)
    print(f"wrote report to {out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="vkglab", description="Vlasov-Klein-Gordon numerical laboratory")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("run", help="integrate a configuration and write an archive")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("check", help="run a self-check suite")
    p.add_argument("suite")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("fit", help="fit a power-law decay exponent to an archived series")
    p.add_argument("--archive", required=True)
    p.add_argument("--quantity", required=True, help="rho, E, Eosc, Er or phi")
    p.add_argument("--norm", required=True, help="L1, L2 or Linf")
    p.add_argument("--window", required=True, type=parse_window, help="t0:t1")
    p.add_argument("--period", type=float, default=None,
                   help="averaging period (0 disables; default: 2 pi for field quantities)")
    p.add_argument("--output")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("report", help="write the bootstrap ledger and analysis tables")
    p.add_argument("--archive", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, UnknownQuantityError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (VKGError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
